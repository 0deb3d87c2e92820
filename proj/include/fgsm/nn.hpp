#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fgsm/rng.hpp"
#include "fgsm/tensor.hpp"

namespace fgsm {

/// Activation fused into a Conv2D or Dense layer.
enum class Activation { linear, relu, softmax };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

struct Conv2DSpec {
    std::size_t filters = 1;
    std::size_t kernel_size = 3;
    std::size_t stride = 1;
    Padding padding = Padding::same;
    Activation activation = Activation::linear;
    friend bool operator==(const Conv2DSpec&, const Conv2DSpec&) = default;
};

struct MaxPoolSpec {
    std::size_t size = 2;
    std::size_t stride = 2;
    friend bool operator==(const MaxPoolSpec&, const MaxPoolSpec&) = default;
};

struct FlattenSpec {
    friend bool operator==(const FlattenSpec&, const FlattenSpec&) = default;
};

struct DenseSpec {
    std::size_t units = 1;
    Activation activation = Activation::linear;
    friend bool operator==(const DenseSpec&, const DenseSpec&) = default;
};

struct ReLUSpec {
    friend bool operator==(const ReLUSpec&, const ReLUSpec&) = default;
};

struct DropoutSpec {
    float rate = 0.5f;
    friend bool operator==(const DropoutSpec&, const DropoutSpec&) = default;
};

struct SoftmaxSpec {
    friend bool operator==(const SoftmaxSpec&, const SoftmaxSpec&) = default;
};

using LayerSpec =
    std::variant<Conv2DSpec, MaxPoolSpec, FlattenSpec, DenseSpec, ReLUSpec, DropoutSpec, SoftmaxSpec>;

/// Short human-readable layer name, e.g. "Conv2D 64@3x3 same relu".
std::string describe(const LayerSpec& layer);

/// Output shape after each layer; element 0 is the input shape itself.
/// Throws ShapeError naming the first layer index that cannot consume its input.
std::vector<Shape> infer_shapes(const std::vector<LayerSpec>& layers, const Shape& input_shape);

// Built-in configurations.
/// Convolutional part of VGG16 (13 conv + 5 pooling layers, ReLU fused into the convs).
std::vector<LayerSpec> vgg16_backbone();
/// Classification head: Flatten, 2 x (Dense 4096 relu, Dropout 0.5), Dense softmax.
std::vector<LayerSpec> vgg16_head(std::size_t classes = 5);
/// Desk-scale trainable network used for experiments.
std::vector<LayerSpec> small_config(std::size_t classes = 5);

/// Weights and bias of one layer; both empty for parameter-free layers.
struct LayerParams {
    Tensor weights;
    Tensor bias;
    bool empty() const { return weights.empty() && bias.empty(); }
    friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

/// Layer list plus input shape; the parsed form of a network config file.
struct NetworkConfig {
    Shape input_shape;
    std::vector<LayerSpec> layers;
};

enum class Mode { train, eval };

class Network;

/// Cached per-layer state from one forward pass, consumed by backward.
struct ForwardTrace {
    const Network* network = nullptr;
    std::uint64_t generation = 0;
    // activations[i] is the input of layer i; activations.back() is the output.
    std::vector<Tensor> activations;
    // Dropout keep masks (already scaled by 1/(1-p)); empty for other layers or in eval mode.
    std::vector<std::vector<float>> dropout_masks;
    std::vector<std::vector<std::uint32_t>> pool_argmax;
    Mode mode = Mode::eval;
};

struct Gradients {
    std::vector<LayerParams> params;
    Tensor input;
};

struct ForwardResult {
    Tensor probs;
    ForwardTrace trace;
};

/// Sequential network. The final layer must produce softmax probabilities,
/// either as a Softmax layer or as a Dense layer with softmax activation.
class Network {
public:
    Network(Shape input_shape, std::vector<LayerSpec> layers);

    explicit Network(NetworkConfig config);

    // Traces are bound to the object's address and generation; assignment
    // bumps the generation so traces of the overwritten network go stale.
    Network(const Network&) = default;
    Network(Network&&) = default;
    Network& operator=(const Network& other);
    Network& operator=(Network&& other);

    const Shape& input_shape() const { return input_shape_; }
    const std::vector<LayerSpec>& layers() const { return layers_; }
    const std::vector<Shape>& shapes() const { return shapes_; }
    std::size_t num_classes() const { return shapes_.back()[0]; }

    const std::vector<LayerParams>& params() const { return params_; }
    /// Mutable parameter access; invalidates outstanding traces.
    std::vector<LayerParams>& mutable_params() {
        ++generation_;
        return params_;
    }
    std::uint64_t generation() const { return generation_; }

    /// Glorot-uniform weights, zero biases.
    void initialize(Rng& rng);

    std::size_t parameter_count() const;

    /// Forward pass. Dropout draws from `rng` in train mode and is the identity in eval mode.
    ForwardResult forward(const Tensor& input, Mode mode, Rng& rng) const;
    /// Eval-mode forward returning only the probabilities.
    Tensor predict(const Tensor& input) const;

    /// Exact gradients of cross_entropy(forward(input), label) at the traced point.
    Gradients backward(const ForwardTrace& trace, std::size_t label) const;

private:
    Shape input_shape_;
    std::vector<LayerSpec> layers_;
    std::vector<Shape> shapes_;
    std::vector<LayerParams> params_;
    std::uint64_t generation_ = 0;
};

/// exp(z - max z) normalized.
Tensor softmax(const Tensor& logits);

/// -ln(max(p[label], 1e-7)).
float cross_entropy(const Tensor& probs, std::size_t label);

/// Lowest index of the maximum element.
std::size_t argmax(const Tensor& t);

// Model file: "FGSM", u32 version, layer specs, then TNSR parameter tensors.
inline constexpr std::uint32_t model_format_version = 1;
void save_model(const Network& net, const std::string& path);
Network load_model(const std::string& path);
void write_model(std::ostream& out, const Network& net);
Network read_model(std::istream& in);

/// Parses network configuration JSON (schema in docs/network_config.md).
/// `classes`, when given, resolves "units": "classes" placeholders.
NetworkConfig parse_network_config(const std::string& json_text,
                                   std::optional<std::size_t> classes = std::nullopt);
std::string network_config_to_json(const NetworkConfig& config);

/// Built-in name ("small", "vgg16", "vgg16-backbone") or path to a JSON file.
/// Built-ins take their input shape from `default_input`.
NetworkConfig load_network_config(const std::string& name_or_path, std::optional<std::size_t> classes,
                                  const Shape& default_input);

} // namespace fgsm
