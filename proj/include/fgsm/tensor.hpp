#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace fgsm {

/// Ordered list of positive dimensions. Images are (height, width, channels).
class Shape {
public:
    Shape() = default;
    Shape(std::initializer_list<std::size_t> dims);
    explicit Shape(std::vector<std::size_t> dims);

    std::size_t rank() const { return dims_.size(); }
    std::size_t operator[](std::size_t i) const { return dims_[i]; }
    const std::vector<std::size_t>& dims() const { return dims_; }

    /// Product of all dimensions.
    std::size_t numel() const;

    /// Renders as "(224, 224, 3)"; rank-1 shapes render as "(25088)".
    std::string to_string() const;

    friend bool operator==(const Shape&, const Shape&) = default;

private:
    std::vector<std::size_t> dims_;
};

/// Dense row-major float32 tensor.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, float fill = 0.0f);
    Tensor(Shape shape, std::vector<float> data);

    const Shape& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::span<float> values() { return data_; }
    std::span<const float> values() const { return data_; }
    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }

    float& operator[](std::size_t i) { return data_[i]; }
    float operator[](std::size_t i) const { return data_[i]; }

    // (y, x, c) access for rank-3 image tensors.
    float& at(std::size_t y, std::size_t x, std::size_t c) {
        return data_[(y * shape_[1] + x) * shape_[2] + c];
    }
    float at(std::size_t y, std::size_t x, std::size_t c) const {
        return data_[(y * shape_[1] + x) * shape_[2] + c];
    }

    /// Same data viewed under a new shape with equal element count.
    Tensor reshaped(Shape shape) const;

    bool all_finite() const;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Shape shape_;
    std::vector<float> data_;
};

enum class Padding { same, valid };

std::string to_string(Padding padding);
Padding padding_from_string(const std::string& name);

// Output spatial extent of a convolution/pooling window along one axis.
std::size_t conv_output_extent(std::size_t in, std::size_t window, std::size_t stride, Padding padding);

Tensor matmul(const Tensor& a, const Tensor& b);

/// Cross-correlation of an (h, w, cin) image with (kh, kw, cin, cout) kernels.
/// "same" zero-pads so the output extent is ceil(in / stride), splitting the
/// padding floor-before / ceil-after.
Tensor conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias, std::size_t stride,
              Padding padding);

struct Conv2dGrads {
    Tensor input;
    Tensor kernels;
    Tensor bias;
};

/// Gradients of a conv2d call given the gradient of its output.
Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernels, std::size_t stride,
                            Padding padding, const Tensor& grad_output);

struct PoolResult {
    Tensor output;
    // Flat input index chosen by each output element (first maximum on ties).
    std::vector<std::uint32_t> argmax;
};

Tensor maxpool2d(const Tensor& input, std::size_t size, std::size_t stride);
PoolResult maxpool2d_with_indices(const Tensor& input, std::size_t size, std::size_t stride);
Tensor maxpool2d_backward(const Shape& input_shape, std::span<const std::uint32_t> argmax,
                          const Tensor& grad_output);

/// Elementwise sign with sign(0) == 0.
Tensor sign(const Tensor& t);

Tensor clip(const Tensor& t, float lo, float hi);

/// Largest absolute elementwise difference; shapes must match.
float max_abs_diff(const Tensor& a, const Tensor& b);

// Binary "TNSR" encoding: magic, u8 rank, rank x u32 dims, f32 data, all little-endian.
void write_tensor(std::ostream& out, const Tensor& t);
Tensor read_tensor(std::istream& in);
void save_tensor(const std::string& path, const Tensor& t);
Tensor load_tensor(const std::string& path);

} // namespace fgsm
