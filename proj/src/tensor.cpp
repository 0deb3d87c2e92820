#include "fgsm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "binary_io.hpp"
#include "fgsm/error.hpp"

namespace fgsm {

namespace {

void check_dims(const std::vector<std::size_t>& dims) {
    if (dims.empty()) throw ShapeError("shape must have at least one dimension");
    for (auto d : dims)
        if (d == 0) throw ShapeError("shape dimensions must be positive");
}

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
    if (t.shape().rank() != rank)
        throw ShapeError(std::string(what) + " expects rank " + std::to_string(rank) + ", got " +
                         t.shape().to_string());
}

// Leading zero padding for "same" mode; trailing padding is whatever remains.
std::size_t pad_before(std::size_t in, std::size_t out, std::size_t window, std::size_t stride,
                       Padding padding) {
    if (padding == Padding::valid) return 0;
    const std::size_t needed = (out - 1) * stride + window;
    return needed > in ? (needed - in) / 2 : 0;
}

} // namespace

Shape::Shape(std::initializer_list<std::size_t> dims) : dims_(dims) {
    check_dims(dims_);
}

Shape::Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
    check_dims(dims_);
}

std::size_t Shape::numel() const {
    return std::accumulate(dims_.begin(), dims_.end(), std::size_t{1}, std::multiplies<>());
}

std::string Shape::to_string() const {
    std::string s = "(";
    for (std::size_t i = 0; i < dims_.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(dims_[i]);
    }
    return s + ")";
}

Tensor::Tensor(Shape shape, float fill) : shape_(std::move(shape)), data_(shape_.numel(), fill) {}

Tensor::Tensor(Shape shape, std::vector<float> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_.numel())
        throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_.to_string());
}

Tensor Tensor::reshaped(Shape shape) const {
    if (shape.numel() != data_.size())
        throw ShapeError("cannot reshape " + shape_.to_string() + " to " + shape.to_string());
    return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

std::string to_string(Padding padding) {
    return padding == Padding::same ? "same" : "valid";
}

Padding padding_from_string(const std::string& name) {
    if (name == "same") return Padding::same;
    if (name == "valid") return Padding::valid;
    throw ArgumentError("unknown padding \"" + name + "\" (expected same|valid)");
}

std::size_t conv_output_extent(std::size_t in, std::size_t window, std::size_t stride, Padding padding) {
    if (stride == 0) throw ArgumentError("stride must be positive");
    if (padding == Padding::same) return (in + stride - 1) / stride;
    if (in < window)
        throw ShapeError("window " + std::to_string(window) + " larger than input extent " +
                         std::to_string(in));
    return (in - window) / stride + 1;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.shape().rank() != 2 || b.shape().rank() != 2 || a.shape()[1] != b.shape()[0])
        throw ShapeError("matmul shape mismatch: " + a.shape().to_string() + " x " +
                         b.shape().to_string());
    const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    Tensor out(Shape{m, n});
    for (std::size_t i = 0; i < m; ++i) {
        float* row = out.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const float av = a[i * k + p];
            const float* brow = b.data() + p * n;
            for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
        }
    }
    return out;
}

Tensor conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias, std::size_t stride,
              Padding padding) {
    require_rank(input, 3, "conv2d input");
    require_rank(kernels, 4, "conv2d kernels");
    const std::size_t h = input.shape()[0], w = input.shape()[1], cin = input.shape()[2];
    const std::size_t kh = kernels.shape()[0], kw = kernels.shape()[1], cout = kernels.shape()[3];
    if (kernels.shape()[2] != cin)
        throw ShapeError("conv2d channel mismatch: input " + input.shape().to_string() + ", kernels " +
                         kernels.shape().to_string());
    if (bias.size() != cout)
        throw ShapeError("conv2d bias " + bias.shape().to_string() + " does not match " +
                         std::to_string(cout) + " output channels");
    const std::size_t oh = conv_output_extent(h, kh, stride, padding);
    const std::size_t ow = conv_output_extent(w, kw, stride, padding);
    const std::size_t pt = pad_before(h, oh, kh, stride, padding);
    const std::size_t pl = pad_before(w, ow, kw, stride, padding);

    Tensor out(Shape{oh, ow, cout});
    for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
            float* acc = out.data() + (oy * ow + ox) * cout;
            std::copy(bias.data(), bias.data() + cout, acc);
            for (std::size_t ky = 0; ky < kh; ++ky) {
                const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) -
                                          static_cast<std::ptrdiff_t>(pt);
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                for (std::size_t kx = 0; kx < kw; ++kx) {
                    const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) -
                                              static_cast<std::ptrdiff_t>(pl);
                    if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                    const float* px = input.data() + (static_cast<std::size_t>(iy) * w +
                                                      static_cast<std::size_t>(ix)) * cin;
                    const float* kbase = kernels.data() + (ky * kw + kx) * cin * cout;
                    for (std::size_t ci = 0; ci < cin; ++ci) {
                        const float v = px[ci];
                        const float* krow = kbase + ci * cout;
                        for (std::size_t co = 0; co < cout; ++co) acc[co] += v * krow[co];
                    }
                }
            }
        }
    }
    return out;
}

Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernels, std::size_t stride,
                            Padding padding, const Tensor& grad_output) {
    require_rank(input, 3, "conv2d_backward input");
    require_rank(kernels, 4, "conv2d_backward kernels");
    const std::size_t h = input.shape()[0], w = input.shape()[1], cin = input.shape()[2];
    const std::size_t kh = kernels.shape()[0], kw = kernels.shape()[1], cout = kernels.shape()[3];
    if (kernels.shape()[2] != cin)
        throw ShapeError("conv2d_backward channel mismatch: input " + input.shape().to_string() +
                         ", kernels " + kernels.shape().to_string());
    const std::size_t oh = conv_output_extent(h, kh, stride, padding);
    const std::size_t ow = conv_output_extent(w, kw, stride, padding);
    if (grad_output.shape() != Shape{oh, ow, cout})
        throw ShapeError("conv2d_backward gradient shape " + grad_output.shape().to_string() +
                         " does not match output " + Shape{oh, ow, cout}.to_string());
    const std::size_t pt = pad_before(h, oh, kh, stride, padding);
    const std::size_t pl = pad_before(w, ow, kw, stride, padding);

    Conv2dGrads g{Tensor(input.shape()), Tensor(kernels.shape()), Tensor(Shape{cout})};
    for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
            const float* go = grad_output.data() + (oy * ow + ox) * cout;
            for (std::size_t co = 0; co < cout; ++co) g.bias[co] += go[co];
            for (std::size_t ky = 0; ky < kh; ++ky) {
                const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) -
                                          static_cast<std::ptrdiff_t>(pt);
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                for (std::size_t kx = 0; kx < kw; ++kx) {
                    const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) -
                                              static_cast<std::ptrdiff_t>(pl);
                    if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                    const std::size_t pix = (static_cast<std::size_t>(iy) * w +
                                             static_cast<std::size_t>(ix)) * cin;
                    const float* px = input.data() + pix;
                    float* gx = g.input.data() + pix;
                    const std::size_t kofs = (ky * kw + kx) * cin * cout;
                    const float* kbase = kernels.data() + kofs;
                    float* gkbase = g.kernels.data() + kofs;
                    for (std::size_t ci = 0; ci < cin; ++ci) {
                        const float v = px[ci];
                        const float* krow = kbase + ci * cout;
                        float* gkrow = gkbase + ci * cout;
                        float dot = 0.0f;
                        for (std::size_t co = 0; co < cout; ++co) {
                            gkrow[co] += v * go[co];
                            dot += krow[co] * go[co];
                        }
                        gx[ci] += dot;
                    }
                }
            }
        }
    }
    return g;
}

PoolResult maxpool2d_with_indices(const Tensor& input, std::size_t size, std::size_t stride) {
    require_rank(input, 3, "maxpool2d input");
    if (size == 0 || stride == 0) throw ArgumentError("maxpool2d size and stride must be positive");
    const std::size_t h = input.shape()[0], w = input.shape()[1], c = input.shape()[2];
    if (h < size || w < size)
        throw ShapeError("maxpool2d window " + std::to_string(size) + " larger than input " +
                         input.shape().to_string());
    const std::size_t oh = (h - size) / stride + 1;
    const std::size_t ow = (w - size) / stride + 1;

    PoolResult r{Tensor(Shape{oh, ow, c}), std::vector<std::uint32_t>(oh * ow * c)};
    for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
            for (std::size_t ch = 0; ch < c; ++ch) {
                std::size_t best = ((oy * stride) * w + ox * stride) * c + ch;
                for (std::size_t ky = 0; ky < size; ++ky) {
                    for (std::size_t kx = 0; kx < size; ++kx) {
                        const std::size_t idx = ((oy * stride + ky) * w + (ox * stride + kx)) * c + ch;
                        if (input[idx] > input[best]) best = idx;
                    }
                }
                const std::size_t o = (oy * ow + ox) * c + ch;
                r.output[o] = input[best];
                r.argmax[o] = static_cast<std::uint32_t>(best);
            }
        }
    }
    return r;
}

Tensor maxpool2d(const Tensor& input, std::size_t size, std::size_t stride) {
    return maxpool2d_with_indices(input, size, stride).output;
}

Tensor maxpool2d_backward(const Shape& input_shape, std::span<const std::uint32_t> argmax,
                          const Tensor& grad_output) {
    if (argmax.size() != grad_output.size())
        throw ShapeError("maxpool2d_backward index count does not match gradient " +
                         grad_output.shape().to_string());
    Tensor g(input_shape);
    for (std::size_t i = 0; i < argmax.size(); ++i) {
        if (argmax[i] >= g.size()) throw ShapeError("maxpool2d_backward index out of range");
        g[argmax[i]] += grad_output[i];
    }
    return g;
}

Tensor sign(const Tensor& t) {
    Tensor out(t.shape());
    for (std::size_t i = 0; i < t.size(); ++i)
        out[i] = t[i] > 0.0f ? 1.0f : (t[i] < 0.0f ? -1.0f : 0.0f);
    return out;
}

Tensor clip(const Tensor& t, float lo, float hi) {
    if (!(lo <= hi))
        throw ArgumentError("clip bounds inverted: lo=" + std::to_string(lo) + " hi=" + std::to_string(hi));
    Tensor out(t.shape());
    for (std::size_t i = 0; i < t.size(); ++i) out[i] = std::clamp(t[i], lo, hi);
    return out;
}

float max_abs_diff(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw ShapeError("max_abs_diff shape mismatch: " + a.shape().to_string() + " vs " +
                         b.shape().to_string());
    float m = 0.0f;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

void write_tensor(std::ostream& out, const Tensor& t) {
    if (t.shape().rank() > 255) throw ShapeError("tensor rank exceeds format limit");
    detail::write_magic(out, "TNSR");
    detail::write_u8(out, static_cast<std::uint8_t>(t.shape().rank()));
    for (auto d : t.shape().dims()) detail::write_u32(out, static_cast<std::uint32_t>(d));
    for (float v : t.values()) detail::write_f32(out, v);
}

Tensor read_tensor(std::istream& in) {
    detail::expect_magic(in, "TNSR");
    const std::uint8_t rank = detail::read_u8(in, "tensor rank");
    if (rank == 0) throw FormatError("tensor rank must be positive");
    std::vector<std::size_t> dims(rank);
    std::size_t count = 1;
    for (auto& d : dims) {
        d = detail::read_u32(in, "tensor dims");
        if (d == 0) throw FormatError("tensor dimension must be positive");
        count *= d;
        if (count > (std::size_t{1} << 31)) throw FormatError("tensor too large");
    }
    std::vector<float> data(count);
    for (auto& v : data) v = detail::read_f32(in, "tensor data");
    return Tensor(Shape(std::move(dims)), std::move(data));
}

void save_tensor(const std::string& path, const Tensor& t) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path + " for writing");
    write_tensor(out, t);
    if (!out) throw DataError("failed writing " + path);
}

Tensor load_tensor(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    try {
        return read_tensor(in);
    } catch (const FormatError& e) {
        throw FormatError(path + ": " + e.what());
    }
}

} // namespace fgsm
