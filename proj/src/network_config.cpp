#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fgsm/error.hpp"
#include "fgsm/nn.hpp"
#include "overloaded.hpp"

namespace fgsm {

namespace {

using json = nlohmann::json;
using detail::overloaded;

std::size_t positive(const json& layer, const char* key, std::size_t fallback) {
    if (!layer.contains(key)) return fallback;
    const auto& v = layer.at(key);
    if (!v.is_number_integer() || v.get<long long>() <= 0)
        throw FormatError(std::string("\"") + key + "\" must be a positive integer");
    return v.get<std::size_t>();
}

std::size_t units_field(const json& layer, std::optional<std::size_t> classes) {
    if (!layer.contains("units")) throw FormatError("dense layer requires \"units\"");
    const auto& v = layer.at("units");
    if (v.is_string() && v.get<std::string>() == "classes") {
        if (!classes) throw FormatError("\"units\": \"classes\" used but the class count is unknown");
        return *classes;
    }
    return positive(layer, "units", 1);
}

Activation activation_field(const json& layer) {
    if (!layer.contains("activation")) return Activation::linear;
    try {
        return activation_from_string(layer.at("activation").get<std::string>());
    } catch (const ArgumentError& e) {
        throw FormatError(e.what());
    }
}

LayerSpec parse_layer(const json& layer, std::optional<std::size_t> classes) {
    if (!layer.is_object() || !layer.contains("type") || !layer.at("type").is_string())
        throw FormatError("each layer must be an object with a string \"type\"");
    const auto type = layer.at("type").get<std::string>();
    if (type == "conv2d") {
        Conv2DSpec c;
        c.filters = positive(layer, "filters", 0);
        if (c.filters == 0) throw FormatError("conv2d layer requires \"filters\"");
        c.kernel_size = positive(layer, "kernel_size", 3);
        c.stride = positive(layer, "stride", 1);
        try {
            c.padding = padding_from_string(layer.value("padding", std::string("same")));
        } catch (const ArgumentError& e) {
            throw FormatError(e.what());
        }
        c.activation = activation_field(layer);
        return c;
    }
    if (type == "maxpool") {
        MaxPoolSpec m;
        m.size = positive(layer, "size", 2);
        m.stride = positive(layer, "stride", m.size);
        return m;
    }
    if (type == "flatten") return FlattenSpec{};
    if (type == "dense") return DenseSpec{units_field(layer, classes), activation_field(layer)};
    if (type == "relu") return ReLUSpec{};
    if (type == "dropout") return DropoutSpec{layer.value("rate", 0.5f)};
    if (type == "softmax") return SoftmaxSpec{};
    throw FormatError("unknown layer type \"" + type + "\"");
}

json layer_to_json(const LayerSpec& layer) {
    return std::visit(
        overloaded{
            [](const Conv2DSpec& c) {
                return json{{"type", "conv2d"},         {"filters", c.filters},
                            {"kernel_size", c.kernel_size}, {"stride", c.stride},
                            {"padding", to_string(c.padding)}, {"activation", to_string(c.activation)}};
            },
            [](const MaxPoolSpec& m) { return json{{"type", "maxpool"}, {"size", m.size}, {"stride", m.stride}}; },
            [](const FlattenSpec&) { return json{{"type", "flatten"}}; },
            [](const DenseSpec& d) {
                return json{{"type", "dense"}, {"units", d.units}, {"activation", to_string(d.activation)}};
            },
            [](const ReLUSpec&) { return json{{"type", "relu"}}; },
            [](const DropoutSpec& d) { return json{{"type", "dropout"}, {"rate", d.rate}}; },
            [](const SoftmaxSpec&) { return json{{"type", "softmax"}}; },
        },
        layer);
}

} // namespace

NetworkConfig parse_network_config(const std::string& json_text, std::optional<std::size_t> classes) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("network config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("layers") || !doc.at("layers").is_array())
        throw FormatError("network config must be an object with a \"layers\" array");
    NetworkConfig cfg;
    try {
        if (doc.contains("input_shape")) {
            const auto dims = doc.at("input_shape").get<std::vector<long long>>();
            std::vector<std::size_t> sdims;
            for (auto d : dims) {
                if (d <= 0) throw FormatError("\"input_shape\" dimensions must be positive");
                sdims.push_back(static_cast<std::size_t>(d));
            }
            cfg.input_shape = Shape(std::move(sdims));
        }
        for (const auto& layer : doc.at("layers")) cfg.layers.push_back(parse_layer(layer, classes));
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed network config: ") + e.what());
    } catch (const ShapeError& e) {
        throw FormatError(std::string("malformed network config: ") + e.what());
    }
    return cfg;
}

std::string network_config_to_json(const NetworkConfig& config) {
    json doc;
    doc["input_shape"] = config.input_shape.dims();
    doc["layers"] = json::array();
    for (const auto& layer : config.layers) doc["layers"].push_back(layer_to_json(layer));
    return doc.dump(2) + "\n";
}

NetworkConfig load_network_config(const std::string& name_or_path, std::optional<std::size_t> classes,
                                  const Shape& default_input) {
    const std::size_t k = classes.value_or(5);
    if (name_or_path == "small") return {default_input, small_config(k)};
    if (name_or_path == "vgg16-backbone") return {default_input, vgg16_backbone()};
    if (name_or_path == "vgg16") {
        auto layers = vgg16_backbone();
        auto head = vgg16_head(k);
        layers.insert(layers.end(), head.begin(), head.end());
        return {default_input, std::move(layers)};
    }
    std::ifstream in(name_or_path);
    if (!in) throw DataError("cannot open network config " + name_or_path);
    std::stringstream buf;
    buf << in.rdbuf();
    NetworkConfig cfg;
    try {
        cfg = parse_network_config(buf.str(), classes);
    } catch (const FormatError& e) {
        throw FormatError(name_or_path + ": " + e.what());
    }
    if (cfg.input_shape.rank() == 0) cfg.input_shape = default_input;
    return cfg;
}

} // namespace fgsm
