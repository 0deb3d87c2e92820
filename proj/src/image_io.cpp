#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "fgsm/data.hpp"
#include "fgsm/error.hpp"

namespace fgsm {

namespace fs = std::filesystem;

namespace {

std::string lower_extension(const std::string& path) {
    std::string ext = fs::path(path).extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext;
}

// Next header token of a PNM file, skipping whitespace and '#' comments.
std::string pnm_token(std::istream& in) {
    std::string tok;
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            if (!tok.empty()) break;
        } else {
            tok.push_back(static_cast<char>(c));
        }
        c = in.get();
    }
    if (tok.empty()) throw FormatError("truncated PNM header");
    return tok;
}

std::size_t pnm_number(std::istream& in, const char* what) {
    const std::string tok = pnm_token(in);
    if (!std::all_of(tok.begin(), tok.end(), [](unsigned char c) { return std::isdigit(c); }) || tok.size() > 9)
        throw FormatError(std::string("bad PNM ") + what + " \"" + tok + "\"");
    return std::stoul(tok);
}

Tensor read_pnm(std::istream& in) {
    const std::string magic = pnm_token(in);
    std::size_t channels = 0;
    if (magic == "P6") channels = 3;
    else if (magic == "P5") channels = 1;
    else throw FormatError("unsupported image type \"" + magic + "\" (expected binary P5/P6)");
    const std::size_t width = pnm_number(in, "width");
    const std::size_t height = pnm_number(in, "height");
    const std::size_t maxval = pnm_number(in, "maxval");
    if (width == 0 || height == 0) throw FormatError("PNM image has zero extent");
    if (maxval == 0 || maxval > 65535) throw FormatError("PNM maxval out of range");
    // pnm_token consumed exactly one whitespace byte after maxval.
    const std::size_t bytes_per = maxval < 256 ? 1 : 2;
    std::vector<unsigned char> raw(width * height * channels * bytes_per);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) throw FormatError("truncated PNM pixel data");

    Tensor img(Shape{height, width, channels});
    const float scale = 1.0f / static_cast<float>(maxval);
    for (std::size_t i = 0; i < img.size(); ++i) {
        std::size_t v = bytes_per == 1 ? raw[i] : (std::size_t{raw[2 * i]} << 8) | raw[2 * i + 1];
        img[i] = std::min(static_cast<float>(v) * scale, 1.0f);
    }
    return img;
}

void write_pnm(const std::string& path, const Tensor& image, std::size_t channels) {
    const auto& s = image.shape();
    if (s.rank() != 3 || s[2] != channels)
        throw ShapeError(path + ": " + (channels == 3 ? "PPM" : "PGM") + " output needs " +
                         std::to_string(channels) + " channels, got " + s.to_string());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path + " for writing");
    out << (channels == 3 ? "P6" : "P5") << "\n" << s[1] << " " << s[0] << "\n255\n";
    std::vector<unsigned char> raw(image.size());
    for (std::size_t i = 0; i < image.size(); ++i)
        raw[i] = static_cast<unsigned char>(std::lround(std::clamp(image[i], 0.0f, 1.0f) * 255.0f));
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw DataError("failed writing " + path);
}

} // namespace

Tensor read_image(const std::string& path) {
    const std::string ext = lower_extension(path);
    if (ext == ".tnsr") {
        Tensor t = load_tensor(path);
        if (t.shape().rank() != 3) throw FormatError(path + ": image tensor must have rank 3");
        for (float v : t.values())
            if (!(v >= 0.0f && v <= 1.0f)) throw FormatError(path + ": image tensor values must lie in [0, 1]");
        return t;
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open image " + path);
    try {
        return read_pnm(in);
    } catch (const FormatError& e) {
        throw FormatError(path + ": " + e.what());
    }
}

void write_image(const std::string& path, const Tensor& image) {
    const std::string ext = lower_extension(path);
    if (ext == ".ppm") return write_pnm(path, image, 3);
    if (ext == ".pgm") return write_pnm(path, image, 1);
    if (ext == ".tnsr") return save_tensor(path, image);
    throw ArgumentError(path + ": unsupported image extension (use .ppm, .pgm or .tnsr)");
}

Tensor resize_image(const Tensor& image, std::size_t height, std::size_t width, std::size_t channels) {
    const auto& s = image.shape();
    if (s.rank() != 3) throw ShapeError("resize_image expects (h, w, c), got " + s.to_string());
    const std::size_t h = s[0], w = s[1], c = s[2];
    if (c != channels && !((c == 1 && channels == 3) || (c == 3 && channels == 1)))
        throw ShapeError("cannot convert " + std::to_string(c) + " channels to " + std::to_string(channels));

    Tensor converted(Shape{h, w, channels});
    for (std::size_t p = 0; p < h * w; ++p) {
        const float* src = image.data() + p * c;
        float* dst = converted.data() + p * channels;
        if (c == channels) std::copy(src, src + c, dst);
        else if (c == 1) std::fill(dst, dst + 3, src[0]);
        else dst[0] = std::clamp(0.299f * src[0] + 0.587f * src[1] + 0.114f * src[2], 0.0f, 1.0f);
    }
    if (h == height && w == width) return converted;

    Tensor out(Shape{height, width, channels});
    const double sy = static_cast<double>(h) / height, sx = static_cast<double>(w) / width;
    for (std::size_t y = 0; y < height; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(h - 1));
        const std::size_t y0 = static_cast<std::size_t>(fy), y1 = std::min(y0 + 1, h - 1);
        const double wy = fy - y0;
        for (std::size_t x = 0; x < width; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(w - 1));
            const std::size_t x0 = static_cast<std::size_t>(fx), x1 = std::min(x0 + 1, w - 1);
            const double wx = fx - x0;
            for (std::size_t ch = 0; ch < channels; ++ch) {
                const double v = (1 - wy) * ((1 - wx) * converted.at(y0, x0, ch) + wx * converted.at(y0, x1, ch)) +
                                 wy * ((1 - wx) * converted.at(y1, x0, ch) + wx * converted.at(y1, x1, ch));
                out.at(y, x, ch) = std::clamp(static_cast<float>(v), 0.0f, 1.0f);
            }
        }
    }
    return out;
}

Dataset load_image_dir(const std::string& root, const Shape& image_shape) {
    if (image_shape.rank() != 3) throw ShapeError("image shape must be (h, w, c), got " + image_shape.to_string());
    std::error_code ec;
    if (!fs::is_directory(root, ec)) throw DataError(root + " is not a directory");

    std::vector<fs::path> class_dirs;
    for (const auto& entry : fs::directory_iterator(root))
        if (entry.is_directory() && entry.path().filename().string().front() != '.')
            class_dirs.push_back(entry.path());
    if (class_dirs.empty()) throw DataError(root + " contains no class subdirectories");
    std::sort(class_dirs.begin(), class_dirs.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });

    Dataset ds;
    for (std::size_t label = 0; label < class_dirs.size(); ++label) {
        ds.class_names.push_back(class_dirs[label].filename().string());
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(class_dirs[label]))
            if (entry.is_regular_file() && entry.path().filename().string().front() != '.')
                files.push_back(entry.path());
        if (files.empty()) throw DataError("class directory " + class_dirs[label].string() + " has no images");
        std::sort(files.begin(), files.end());
        for (const auto& file : files) {
            ds.images.push_back(resize_image(read_image(file.string()), image_shape[0], image_shape[1], image_shape[2]));
            ds.labels.push_back(label);
        }
    }
    return ds;
}

} // namespace fgsm
