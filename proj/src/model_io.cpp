#include <fstream>

#include "binary_io.hpp"
#include "fgsm/error.hpp"
#include "overloaded.hpp"
#include "fgsm/nn.hpp"

namespace fgsm {

namespace {

enum class LayerTag : std::uint8_t {
    conv2d = 1,
    maxpool = 2,
    flatten = 3,
    dense = 4,
    relu = 5,
    dropout = 6,
    softmax = 7,
};

using detail::overloaded;

void write_tag(std::ostream& out, LayerTag tag) {
    detail::write_u8(out, static_cast<std::uint8_t>(tag));
}

Activation read_activation(std::istream& in) {
    const auto v = detail::read_u8(in, "activation");
    if (v > static_cast<std::uint8_t>(Activation::softmax)) throw FormatError("unknown activation code");
    return static_cast<Activation>(v);
}

void write_layer(std::ostream& out, const LayerSpec& layer) {
    using detail::write_u32;
    using detail::write_u8;
    std::visit(overloaded{
                   [&](const Conv2DSpec& c) {
                       write_tag(out, LayerTag::conv2d);
                       write_u32(out, static_cast<std::uint32_t>(c.filters));
                       write_u32(out, static_cast<std::uint32_t>(c.kernel_size));
                       write_u32(out, static_cast<std::uint32_t>(c.stride));
                       write_u8(out, c.padding == Padding::same ? 0 : 1);
                       write_u8(out, static_cast<std::uint8_t>(c.activation));
                   },
                   [&](const MaxPoolSpec& m) {
                       write_tag(out, LayerTag::maxpool);
                       write_u32(out, static_cast<std::uint32_t>(m.size));
                       write_u32(out, static_cast<std::uint32_t>(m.stride));
                   },
                   [&](const FlattenSpec&) { write_tag(out, LayerTag::flatten); },
                   [&](const DenseSpec& d) {
                       write_tag(out, LayerTag::dense);
                       write_u32(out, static_cast<std::uint32_t>(d.units));
                       write_u8(out, static_cast<std::uint8_t>(d.activation));
                   },
                   [&](const ReLUSpec&) { write_tag(out, LayerTag::relu); },
                   [&](const DropoutSpec& d) {
                       write_tag(out, LayerTag::dropout);
                       detail::write_f32(out, d.rate);
                   },
                   [&](const SoftmaxSpec&) { write_tag(out, LayerTag::softmax); },
               },
               layer);
}

LayerSpec read_layer(std::istream& in) {
    using detail::read_u32;
    using detail::read_u8;
    const auto tag = static_cast<LayerTag>(read_u8(in, "layer tag"));
    switch (tag) {
    case LayerTag::conv2d: {
        Conv2DSpec c;
        c.filters = read_u32(in, "conv filters");
        c.kernel_size = read_u32(in, "conv kernel size");
        c.stride = read_u32(in, "conv stride");
        const auto pad = read_u8(in, "conv padding");
        if (pad > 1) throw FormatError("unknown padding code");
        c.padding = pad == 0 ? Padding::same : Padding::valid;
        c.activation = read_activation(in);
        return c;
    }
    case LayerTag::maxpool: {
        MaxPoolSpec m;
        m.size = read_u32(in, "pool size");
        m.stride = read_u32(in, "pool stride");
        return m;
    }
    case LayerTag::flatten: return FlattenSpec{};
    case LayerTag::dense: {
        DenseSpec d;
        d.units = read_u32(in, "dense units");
        d.activation = read_activation(in);
        return d;
    }
    case LayerTag::relu: return ReLUSpec{};
    case LayerTag::dropout: return DropoutSpec{detail::read_f32(in, "dropout rate")};
    case LayerTag::softmax: return SoftmaxSpec{};
    }
    throw FormatError("unknown layer tag " + std::to_string(static_cast<int>(tag)));
}

} // namespace

void write_model(std::ostream& out, const Network& net) {
    detail::write_magic(out, "FGSM");
    detail::write_u32(out, model_format_version);
    detail::write_u32(out, static_cast<std::uint32_t>(net.layers().size()));
    const Shape& in = net.input_shape();
    detail::write_u8(out, static_cast<std::uint8_t>(in.rank()));
    for (auto d : in.dims()) detail::write_u32(out, static_cast<std::uint32_t>(d));
    for (const auto& layer : net.layers()) write_layer(out, layer);
    for (const auto& p : net.params()) {
        if (p.empty()) continue;
        write_tensor(out, p.weights);
        write_tensor(out, p.bias);
    }
}

Network read_model(std::istream& in) {
    detail::expect_magic(in, "FGSM");
    const auto version = detail::read_u32(in, "model version");
    if (version != model_format_version)
        throw FormatError("unsupported model version " + std::to_string(version) + " (expected " +
                          std::to_string(model_format_version) + ")");
    const auto count = detail::read_u32(in, "layer count");
    if (count == 0 || count > 4096) throw FormatError("implausible layer count " + std::to_string(count));
    const auto rank = detail::read_u8(in, "input rank");
    if (rank == 0) throw FormatError("input rank must be positive");
    std::vector<std::size_t> dims(rank);
    for (auto& d : dims) {
        d = detail::read_u32(in, "input dims");
        if (d == 0) throw FormatError("input dimension must be positive");
    }
    std::vector<LayerSpec> layers;
    layers.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) layers.push_back(read_layer(in));

    Network net = [&] {
        try {
            return Network(Shape(std::move(dims)), std::move(layers));
        } catch (const ShapeError& e) {
            throw FormatError(std::string("model describes an invalid network: ") + e.what());
        }
    }();
    auto& params = net.mutable_params();
    for (auto& p : params) {
        if (p.empty()) continue;
        Tensor w = read_tensor(in);
        Tensor b = read_tensor(in);
        if (w.shape() != p.weights.shape() || b.shape() != p.bias.shape())
            throw FormatError("parameter tensor " + w.shape().to_string() + " does not match layer shape " +
                              p.weights.shape().to_string());
        p.weights = std::move(w);
        p.bias = std::move(b);
    }
    return net;
}

void save_model(const Network& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path + " for writing");
    write_model(out, net);
    if (!out) throw DataError("failed writing " + path);
}

Network load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    try {
        return read_model(in);
    } catch (const FormatError& e) {
        throw FormatError(path + ": " + e.what());
    }
}

} // namespace fgsm
