#include "fgsm/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "binary_io.hpp"
#include "fgsm/error.hpp"

namespace fgsm {

namespace {

// Stream tags so the template, noise and split streams never alias.
constexpr std::uint64_t kTemplateStream = 0x7E3A11D5ULL;
constexpr std::uint64_t kNoiseStream = 0x9015E5EEULL;
constexpr std::uint64_t kBaseStream = 0xBA5E0001ULL;

// Half-ranges of the shared base image and of each class pattern.
constexpr double kBaseContrast = 0.25;
constexpr double kClassContrast = 0.1;

float sample_zero_padded(const Tensor& img, double x, double y, std::size_t ch) {
    const long h = static_cast<long>(img.shape()[0]), w = static_cast<long>(img.shape()[1]);
    const double fx = std::floor(x), fy = std::floor(y);
    const long x0 = static_cast<long>(fx), y0 = static_cast<long>(fy);
    const double wx = x - fx, wy = y - fy;
    auto px = [&](long yy, long xx) -> double {
        if (yy < 0 || xx < 0 || yy >= h || xx >= w) return 0.0;
        return img.at(static_cast<std::size_t>(yy), static_cast<std::size_t>(xx), ch);
    };
    return static_cast<float>((1 - wy) * ((1 - wx) * px(y0, x0) + wx * px(y0, x0 + 1)) +
                              wy * ((1 - wx) * px(y0 + 1, x0) + wx * px(y0 + 1, x0 + 1)));
}

} // namespace

void Dataset::validate() const {
    if (images.size() != labels.size())
        throw DataError("dataset has " + std::to_string(images.size()) + " images but " +
                        std::to_string(labels.size()) + " labels");
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (labels[i] >= class_names.size())
            throw DataError("sample " + std::to_string(i) + " has label " + std::to_string(labels[i]) +
                            " but only " + std::to_string(class_names.size()) + " classes");
        for (float v : images[i].values())
            if (!(v >= 0.0f && v <= 1.0f)) throw DataError("sample " + std::to_string(i) + " has a pixel outside [0, 1]");
    }
}

void AugmentConfig::validate() const {
    if (!(rotation_max_deg >= 0.0)) throw ArgumentError("rotation_max_deg must be >= 0");
    if (!(zoom_lo > 0.0 && zoom_lo <= zoom_hi)) throw ArgumentError("zoom range must satisfy 0 < lo <= hi");
    if (!(shift_max_frac >= 0.0 && shift_max_frac < 1.0)) throw ArgumentError("shift_max_frac must lie in [0, 1)");
}

AugmentParams draw_augment_params(const AugmentConfig& cfg, Rng& rng) {
    cfg.validate();
    // Every draw happens unconditionally so the stream length never depends on cfg.
    AugmentParams p;
    const bool flip = rng.bernoulli(0.5);
    p.flip = cfg.horizontal_flip && flip;
    p.rotation_deg = rng.uniform(-cfg.rotation_max_deg, cfg.rotation_max_deg);
    p.zoom = rng.uniform(cfg.zoom_lo, cfg.zoom_hi);
    p.shift_x = rng.uniform(-cfg.shift_max_frac, cfg.shift_max_frac);
    p.shift_y = rng.uniform(-cfg.shift_max_frac, cfg.shift_max_frac);
    return p;
}

Tensor apply_augment(const Tensor& image, const AugmentParams& p) {
    const auto& s = image.shape();
    if (s.rank() != 3) throw ShapeError("augment expects (h, w, c), got " + s.to_string());
    if (!(p.zoom > 0.0)) throw ArgumentError("zoom must be positive");
    const std::size_t h = s[0], w = s[1], c = s[2];
    const double cx = (static_cast<double>(w) - 1) / 2, cy = (static_cast<double>(h) - 1) / 2;
    const double theta = p.rotation_deg * std::numbers::pi / 180.0;
    const double cs = std::cos(theta), sn = std::sin(theta);

    Tensor out(s);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            // Invert shift, then zoom, then rotation, then flip.
            double qx = static_cast<double>(x) - p.shift_x * w;
            double qy = static_cast<double>(y) - p.shift_y * h;
            qx = cx + (qx - cx) / p.zoom;
            qy = cy + (qy - cy) / p.zoom;
            const double dx = qx - cx, dy = qy - cy;
            qx = cx + dx * cs - dy * sn;
            qy = cy + dx * sn + dy * cs;
            if (p.flip) qx = static_cast<double>(w) - 1 - qx;
            for (std::size_t ch = 0; ch < c; ++ch)
                out.at(y, x, ch) = std::clamp(sample_zero_padded(image, qx, qy, ch), 0.0f, 1.0f);
        }
    }
    return out;
}

Tensor augment(const Tensor& image, const AugmentConfig& cfg, Rng& rng) {
    return apply_augment(image, draw_augment_params(cfg, rng));
}

Dataset synth_dataset(std::size_t classes, std::size_t per_class, std::size_t dim, std::uint64_t seed) {
    if (classes < 2) throw ArgumentError("synth_dataset needs at least 2 classes");
    if (per_class < 1) throw ArgumentError("synth_dataset needs at least 1 sample per class");
    if (dim < 8) throw ArgumentError("synth_dataset image dim must be >= 8");
    constexpr std::size_t channels = 3;
    constexpr int waves = 3;

    // Low-frequency field scaled to [lo, hi] per channel.
    auto smooth_field = [&](Rng& rng, double lo, double hi) {
        Tensor field(Shape{dim, dim, channels});
        for (std::size_t ch = 0; ch < channels; ++ch) {
            double fx[waves], fy[waves], phase[waves], amp[waves];
            for (int i = 0; i < waves; ++i) {
                do {
                    fx[i] = static_cast<double>(rng.below(3));
                    fy[i] = static_cast<double>(rng.below(3));
                } while (fx[i] == 0 && fy[i] == 0);
                phase[i] = rng.uniform(0.0, 2 * std::numbers::pi);
                amp[i] = rng.uniform(0.5, 1.0);
            }
            std::vector<double> raw(dim * dim);
            for (std::size_t y = 0; y < dim; ++y)
                for (std::size_t x = 0; x < dim; ++x) {
                    double v = 0;
                    for (int i = 0; i < waves; ++i)
                        v += amp[i] * std::sin(2 * std::numbers::pi * (fx[i] * x + fy[i] * y) / dim + phase[i]);
                    raw[y * dim + x] = v;
                }
            const auto [mn, mx] = std::minmax_element(raw.begin(), raw.end());
            const double span = std::max(*mx - *mn, 1e-12);
            for (std::size_t p = 0; p < dim * dim; ++p)
                field[p * channels + ch] = static_cast<float>(lo + (hi - lo) * (raw[p] - *mn) / span);
        }
        return field;
    };

    // Classes share one base image and differ by a faint pattern, so class
    // evidence is spread thinly over many pixels.
    Rng base_rng(derive_seed(seed, kBaseStream));
    const Tensor base = smooth_field(base_rng, 0.5 - kBaseContrast, 0.5 + kBaseContrast);

    Dataset ds;
    for (std::size_t k = 0; k < classes; ++k) {
        ds.class_names.push_back("class_" + std::to_string(k));
        Rng trng(derive_seed(derive_seed(seed, kTemplateStream), k));
        Tensor tmpl = smooth_field(trng, -kClassContrast, kClassContrast);
        for (std::size_t i = 0; i < tmpl.size(); ++i) tmpl[i] += base[i];
        for (std::size_t i = 0; i < per_class; ++i) {
            Rng nrng(derive_seed(derive_seed(seed, kNoiseStream), k * per_class + i));
            Tensor img = tmpl;
            for (auto& v : img.values()) v = std::clamp(v + static_cast<float>(nrng.uniform(-0.1, 0.1)), 0.0f, 1.0f);
            ds.images.push_back(std::move(img));
            ds.labels.push_back(k);
        }
    }
    return ds;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(const Dataset& ds, double train_frac,
                                                                            std::uint64_t seed) {
    if (!(train_frac > 0.0 && train_frac < 1.0)) throw ArgumentError("train_frac must lie in (0, 1)");
    std::vector<std::vector<std::size_t>> by_class(ds.num_classes());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.labels[i] >= by_class.size()) throw DataError("label out of range in split");
        by_class[ds.labels[i]].push_back(i);
    }
    Rng rng(seed);
    std::vector<std::size_t> train, val;
    for (std::size_t k = 0; k < by_class.size(); ++k) {
        auto& idx = by_class[k];
        if (idx.empty()) continue;
        if (idx.size() < 2)
            throw ArgumentError("class " + ds.class_names[k] + " has fewer than 2 samples; cannot split");
        rng.shuffle(std::span(idx));
        const auto n = static_cast<long>(idx.size());
        const long n_train = std::clamp(std::lround(train_frac * static_cast<double>(n)), 1L, n - 1);
        train.insert(train.end(), idx.begin(), idx.begin() + n_train);
        val.insert(val.end(), idx.begin() + n_train, idx.end());
    }
    return {train, val};
}

Dataset subset(const Dataset& ds, const std::vector<std::size_t>& indices) {
    Dataset out;
    out.class_names = ds.class_names;
    out.images.reserve(indices.size());
    out.labels.reserve(indices.size());
    for (auto i : indices) {
        out.images.push_back(ds.images.at(i));
        out.labels.push_back(ds.labels.at(i));
    }
    return out;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double train_frac, std::uint64_t seed) {
    auto [train, val] = split_indices(ds, train_frac, seed);
    return {subset(ds, train), subset(ds, val)};
}

void save_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path + " for writing");
    detail::write_magic(out, "DSET");
    detail::write_u32(out, static_cast<std::uint32_t>(ds.size()));
    for (std::size_t i = 0; i < ds.size(); ++i) {
        detail::write_u32(out, static_cast<std::uint32_t>(ds.labels[i]));
        write_tensor(out, ds.images[i]);
    }
    if (!out) throw DataError("failed writing " + path);
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    Dataset ds;
    try {
        detail::expect_magic(in, "DSET");
        const auto count = detail::read_u32(in, "sample count");
        std::size_t max_label = 0;
        for (std::uint32_t i = 0; i < count; ++i) {
            const auto label = detail::read_u32(in, "sample label");
            ds.labels.push_back(label);
            ds.images.push_back(read_tensor(in));
            max_label = std::max<std::size_t>(max_label, label);
        }
        if (count > 0)
            for (std::size_t k = 0; k <= max_label; ++k) ds.class_names.push_back("class_" + std::to_string(k));
        ds.validate();
    } catch (const FormatError& e) {
        throw FormatError(path + ": " + e.what());
    } catch (const DataError& e) {
        throw FormatError(path + ": " + e.what());
    }
    return ds;
}

} // namespace fgsm
