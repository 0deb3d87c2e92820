#include "fgsm/nn.hpp"

#include <algorithm>
#include <cmath>

#include "fgsm/error.hpp"
#include "overloaded.hpp"

namespace fgsm {

namespace {

using detail::overloaded;

constexpr float kProbFloor = 1e-7f;

bool is_softmax_layer(const LayerSpec& layer) {
    if (std::holds_alternative<SoftmaxSpec>(layer)) return true;
    if (auto* d = std::get_if<DenseSpec>(&layer)) return d->activation == Activation::softmax;
    if (auto* c = std::get_if<Conv2DSpec>(&layer)) return c->activation == Activation::softmax;
    return false;
}

ShapeError layer_error(std::size_t index, const LayerSpec& layer, const std::string& why) {
    return ShapeError("layer " + std::to_string(index) + " (" + describe(layer) + "): " + why);
}

void relu_inplace(Tensor& t) {
    for (auto& v : t.values()) v = v > 0.0f ? v : 0.0f;
}

// Zero the gradient wherever the ReLU output was not strictly positive.
void relu_backward_inplace(Tensor& grad, const Tensor& output) {
    for (std::size_t i = 0; i < grad.size(); ++i)
        if (!(output[i] > 0.0f)) grad[i] = 0.0f;
}

Tensor dense_forward(const Tensor& x, const LayerParams& p) {
    const std::size_t in = p.weights.shape()[0], units = p.weights.shape()[1];
    Tensor y = matmul(x.reshaped(Shape{1, in}), p.weights);
    for (std::size_t j = 0; j < units; ++j) y[j] += p.bias[j];
    return y.reshaped(Shape{units});
}

Tensor glorot(const Shape& shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor t(shape);
    for (auto& v : t.values()) v = static_cast<float>(rng.uniform(-limit, limit));
    return t;
}

} // namespace

std::string to_string(Activation a) {
    switch (a) {
    case Activation::linear: return "linear";
    case Activation::relu: return "relu";
    case Activation::softmax: return "softmax";
    }
    return "linear";
}

Activation activation_from_string(const std::string& name) {
    if (name == "linear" || name.empty()) return Activation::linear;
    if (name == "relu") return Activation::relu;
    if (name == "softmax") return Activation::softmax;
    throw ArgumentError("unknown activation \"" + name + "\"");
}

std::string describe(const LayerSpec& layer) {
    auto act = [](Activation a) { return a == Activation::linear ? std::string() : " " + to_string(a); };
    return std::visit(
        overloaded{
            [&](const Conv2DSpec& c) {
                return "Conv2D " + std::to_string(c.filters) + "@" + std::to_string(c.kernel_size) + "x" +
                       std::to_string(c.kernel_size) + " /" + std::to_string(c.stride) + " " +
                       to_string(c.padding) + act(c.activation);
            },
            [](const MaxPoolSpec& m) {
                return "MaxPool " + std::to_string(m.size) + " /" + std::to_string(m.stride);
            },
            [](const FlattenSpec&) { return std::string("Flatten"); },
            [&](const DenseSpec& d) { return "Dense " + std::to_string(d.units) + act(d.activation); },
            [](const ReLUSpec&) { return std::string("ReLU"); },
            [](const DropoutSpec& d) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "Dropout %g", static_cast<double>(d.rate));
                return std::string(buf);
            },
            [](const SoftmaxSpec&) { return std::string("Softmax"); },
        },
        layer);
}

std::vector<Shape> infer_shapes(const std::vector<LayerSpec>& layers, const Shape& input_shape) {
    std::vector<Shape> shapes{input_shape};
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const Shape& in = shapes.back();
        const LayerSpec& layer = layers[i];
        Shape out = std::visit(
            overloaded{
                [&](const Conv2DSpec& c) {
                    if (in.rank() != 3) throw layer_error(i, layer, "expects (h, w, c) input, got " + in.to_string());
                    if (c.filters == 0 || c.kernel_size == 0 || c.stride == 0)
                        throw layer_error(i, layer, "filters, kernel size and stride must be positive");
                    if (c.padding == Padding::valid && (in[0] < c.kernel_size || in[1] < c.kernel_size))
                        throw layer_error(i, layer, "kernel larger than input " + in.to_string());
                    return Shape{conv_output_extent(in[0], c.kernel_size, c.stride, c.padding),
                                 conv_output_extent(in[1], c.kernel_size, c.stride, c.padding), c.filters};
                },
                [&](const MaxPoolSpec& m) {
                    if (in.rank() != 3) throw layer_error(i, layer, "expects (h, w, c) input, got " + in.to_string());
                    if (m.size == 0 || m.stride == 0) throw layer_error(i, layer, "size and stride must be positive");
                    if (in[0] < m.size || in[1] < m.size)
                        throw layer_error(i, layer, "window larger than input " + in.to_string());
                    return Shape{(in[0] - m.size) / m.stride + 1, (in[1] - m.size) / m.stride + 1, in[2]};
                },
                [&](const FlattenSpec&) { return Shape{in.numel()}; },
                [&](const DenseSpec& d) {
                    if (in.rank() != 1) throw layer_error(i, layer, "expects a flat input, got " + in.to_string());
                    if (d.units == 0) throw layer_error(i, layer, "units must be positive");
                    return Shape{d.units};
                },
                [&](const ReLUSpec&) { return in; },
                [&](const DropoutSpec& d) {
                    if (!(d.rate >= 0.0f && d.rate < 1.0f))
                        throw layer_error(i, layer, "dropout rate must lie in [0, 1)");
                    return in;
                },
                [&](const SoftmaxSpec&) {
                    if (in.rank() != 1) throw layer_error(i, layer, "expects a flat input, got " + in.to_string());
                    return in;
                },
            },
            layer);
        shapes.push_back(std::move(out));
    }
    return shapes;
}

std::vector<LayerSpec> vgg16_backbone() {
    std::vector<LayerSpec> layers;
    const std::size_t blocks[][2] = {{2, 64}, {2, 128}, {3, 256}, {3, 512}, {3, 512}};
    for (const auto& [convs, filters] : blocks) {
        for (std::size_t i = 0; i < convs; ++i)
            layers.emplace_back(Conv2DSpec{filters, 3, 1, Padding::same, Activation::relu});
        layers.emplace_back(MaxPoolSpec{2, 2});
    }
    return layers;
}

std::vector<LayerSpec> vgg16_head(std::size_t classes) {
    return {FlattenSpec{},
            DenseSpec{4096, Activation::relu},
            DropoutSpec{0.5f},
            DenseSpec{4096, Activation::relu},
            DropoutSpec{0.5f},
            DenseSpec{classes, Activation::softmax}};
}

std::vector<LayerSpec> small_config(std::size_t classes) {
    return {Conv2DSpec{8, 3, 1, Padding::same, Activation::linear},
            ReLUSpec{},
            MaxPoolSpec{2, 2},
            Conv2DSpec{16, 3, 1, Padding::same, Activation::linear},
            ReLUSpec{},
            MaxPoolSpec{2, 2},
            FlattenSpec{},
            DenseSpec{64, Activation::linear},
            ReLUSpec{},
            DropoutSpec{0.5f},
            DenseSpec{classes, Activation::linear},
            SoftmaxSpec{}};
}

Tensor softmax(const Tensor& logits) {
    if (logits.size() == 0) throw ArgumentError("softmax of an empty tensor");
    const float zmax = *std::max_element(logits.values().begin(), logits.values().end());
    Tensor out(logits.shape());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double e = std::exp(static_cast<double>(logits[i]) - zmax);
        out[i] = static_cast<float>(e);
        sum += e;
    }
    for (auto& v : out.values()) v = static_cast<float>(v / sum);
    return out;
}

float cross_entropy(const Tensor& probs, std::size_t label) {
    if (label >= probs.size())
        throw ArgumentError("label " + std::to_string(label) + " out of range for " +
                            std::to_string(probs.size()) + " classes");
    return -std::log(std::max(probs[label], kProbFloor));
}

std::size_t argmax(const Tensor& t) {
    if (t.size() == 0) throw ArgumentError("argmax of an empty tensor");
    std::size_t best = 0;
    for (std::size_t i = 1; i < t.size(); ++i)
        if (t[i] > t[best]) best = i;
    return best;
}

Network::Network(Shape input_shape, std::vector<LayerSpec> layers)
    : input_shape_(std::move(input_shape)), layers_(std::move(layers)) {
    if (layers_.empty()) throw ShapeError("network needs at least one layer");
    shapes_ = infer_shapes(layers_, input_shape_);
    for (std::size_t i = 0; i + 1 < layers_.size(); ++i)
        if (is_softmax_layer(layers_[i]))
            throw layer_error(i, layers_[i], "softmax is only supported as the final layer");
    if (!is_softmax_layer(layers_.back()) || shapes_.back().rank() != 1)
        throw layer_error(layers_.size() - 1, layers_.back(), "final layer must produce softmax probabilities");

    params_.resize(layers_.size());
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const Shape& in = shapes_[i];
        if (auto* c = std::get_if<Conv2DSpec>(&layers_[i])) {
            params_[i].weights = Tensor(Shape{c->kernel_size, c->kernel_size, in[2], c->filters});
            params_[i].bias = Tensor(Shape{c->filters});
        } else if (auto* d = std::get_if<DenseSpec>(&layers_[i])) {
            params_[i].weights = Tensor(Shape{in[0], d->units});
            params_[i].bias = Tensor(Shape{d->units});
        }
    }
}

Network::Network(NetworkConfig config) : Network(std::move(config.input_shape), std::move(config.layers)) {}

Network& Network::operator=(const Network& other) {
    if (this != &other) {
        const auto next = std::max(generation_, other.generation_) + 1;
        input_shape_ = other.input_shape_;
        layers_ = other.layers_;
        shapes_ = other.shapes_;
        params_ = other.params_;
        generation_ = next;
    }
    return *this;
}

Network& Network::operator=(Network&& other) {
    if (this != &other) {
        const auto next = std::max(generation_, other.generation_) + 1;
        input_shape_ = std::move(other.input_shape_);
        layers_ = std::move(other.layers_);
        shapes_ = std::move(other.shapes_);
        params_ = std::move(other.params_);
        generation_ = next;
    }
    return *this;
}

void Network::initialize(Rng& rng) {
    ++generation_;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        auto& p = params_[i];
        if (p.empty()) continue;
        const Shape& ws = p.weights.shape();
        std::size_t fan_in = 0, fan_out = 0;
        if (ws.rank() == 4) {
            fan_in = ws[0] * ws[1] * ws[2];
            fan_out = ws[0] * ws[1] * ws[3];
        } else {
            fan_in = ws[0];
            fan_out = ws[1];
        }
        p.weights = glorot(ws, fan_in, fan_out, rng);
        p.bias = Tensor(p.bias.shape());
    }
}

std::size_t Network::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.weights.size() + p.bias.size();
    return n;
}

ForwardResult Network::forward(const Tensor& input, Mode mode, Rng& rng) const {
    if (input.shape() != input_shape_)
        throw ShapeError("network input " + input_shape_.to_string() + " does not accept " +
                         input.shape().to_string());
    ForwardResult r;
    ForwardTrace& tr = r.trace;
    tr.network = this;
    tr.generation = generation_;
    tr.mode = mode;
    tr.activations.reserve(layers_.size() + 1);
    tr.activations.push_back(input);
    tr.dropout_masks.resize(layers_.size());
    tr.pool_argmax.resize(layers_.size());

    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const Tensor& x = tr.activations.back();
        const LayerParams& p = params_[i];
        Tensor y = std::visit(
            overloaded{
                [&](const Conv2DSpec& c) {
                    Tensor out = conv2d(x, p.weights, p.bias, c.stride, c.padding);
                    if (c.activation == Activation::relu) relu_inplace(out);
                    if (c.activation == Activation::softmax) out = softmax(out);
                    return out;
                },
                [&](const MaxPoolSpec& m) {
                    PoolResult pr = maxpool2d_with_indices(x, m.size, m.stride);
                    tr.pool_argmax[i] = std::move(pr.argmax);
                    return std::move(pr.output);
                },
                [&](const FlattenSpec&) { return x.reshaped(shapes_[i + 1]); },
                [&](const DenseSpec& d) {
                    Tensor out = dense_forward(x, p);
                    if (d.activation == Activation::relu) relu_inplace(out);
                    if (d.activation == Activation::softmax) out = softmax(out);
                    return out;
                },
                [&](const ReLUSpec&) {
                    Tensor out = x;
                    relu_inplace(out);
                    return out;
                },
                [&](const DropoutSpec& d) {
                    if (mode == Mode::eval || d.rate == 0.0f) return x;
                    const float keep_scale = 1.0f / (1.0f - d.rate);
                    auto& mask = tr.dropout_masks[i];
                    mask.resize(x.size());
                    Tensor out(x.shape());
                    for (std::size_t k = 0; k < x.size(); ++k) {
                        mask[k] = rng.bernoulli(d.rate) ? 0.0f : keep_scale;
                        out[k] = x[k] * mask[k];
                    }
                    return out;
                },
                [&](const SoftmaxSpec&) { return softmax(x); },
            },
            layers_[i]);
        tr.activations.push_back(std::move(y));
    }
    r.probs = tr.activations.back();
    return r;
}

Tensor Network::predict(const Tensor& input) const {
    Rng unused(0);
    return forward(input, Mode::eval, unused).probs;
}

Gradients Network::backward(const ForwardTrace& trace, std::size_t label) const {
    if (trace.network != this || trace.generation != generation_)
        throw StateError("forward trace does not belong to this network state");
    if (trace.activations.size() != layers_.size() + 1 || trace.activations.front().shape() != input_shape_)
        throw StateError("forward trace is incomplete");
    const Tensor& probs = trace.activations.back();
    if (label >= probs.size())
        throw ArgumentError("label " + std::to_string(label) + " out of range for " +
                            std::to_string(probs.size()) + " classes");

    Gradients g;
    g.params.resize(layers_.size());

    // Softmax followed by cross-entropy: d loss / d logits = probs - onehot(label).
    Tensor delta = probs;
    delta[label] -= 1.0f;

    for (std::size_t n = layers_.size(); n-- > 0;) {
        const Tensor& x = trace.activations[n];
        const Tensor& y = trace.activations[n + 1];
        const LayerParams& p = params_[n];
        const bool is_last = n + 1 == layers_.size();
        Tensor next = std::visit(
            overloaded{
                [&](const Conv2DSpec& c) {
                    if (c.activation == Activation::relu) relu_backward_inplace(delta, y);
                    Conv2dGrads cg = conv2d_backward(x, p.weights, c.stride, c.padding, delta);
                    g.params[n].weights = std::move(cg.kernels);
                    g.params[n].bias = std::move(cg.bias);
                    return std::move(cg.input);
                },
                [&](const MaxPoolSpec&) { return maxpool2d_backward(x.shape(), trace.pool_argmax[n], delta); },
                [&](const FlattenSpec&) { return delta.reshaped(x.shape()); },
                [&](const DenseSpec& d) {
                    if (d.activation == Activation::relu) relu_backward_inplace(delta, y);
                    const std::size_t in = x.size(), units = delta.size();
                    Tensor gw(p.weights.shape());
                    Tensor gx(x.shape());
                    for (std::size_t a = 0; a < in; ++a) {
                        const float xv = x[a];
                        const float* wrow = p.weights.data() + a * units;
                        float* gwrow = gw.data() + a * units;
                        float dot = 0.0f;
                        for (std::size_t b = 0; b < units; ++b) {
                            gwrow[b] = xv * delta[b];
                            dot += wrow[b] * delta[b];
                        }
                        gx[a] = dot;
                    }
                    g.params[n].weights = std::move(gw);
                    g.params[n].bias = delta;
                    return gx;
                },
                [&](const ReLUSpec&) {
                    relu_backward_inplace(delta, y);
                    return std::move(delta);
                },
                [&](const DropoutSpec&) {
                    const auto& mask = trace.dropout_masks[n];
                    if (!mask.empty())
                        for (std::size_t k = 0; k < delta.size(); ++k) delta[k] *= mask[k];
                    return std::move(delta);
                },
                [&](const SoftmaxSpec&) {
                    if (!is_last) throw StateError("softmax backward is only defined for the final layer");
                    return std::move(delta);
                },
            },
            layers_[n]);
        delta = std::move(next);
    }
    g.input = std::move(delta);
    return g;
}

} // namespace fgsm
