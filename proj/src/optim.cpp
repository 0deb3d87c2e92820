#include "fgsm/optim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>

#include "fgsm/error.hpp"
#include "number_format.hpp"

namespace fgsm {

namespace {

constexpr std::uint64_t kShuffleStream = 0x5EED0001ULL;
constexpr std::uint64_t kDropoutStream = 0x5EED0002ULL;
constexpr std::uint64_t kAugmentStream = 0x5EED0003ULL;

void check_dataset(const Network& net, const Dataset& ds, const char* what) {
    if (ds.empty()) throw ArgumentError(std::string(what) + " dataset is empty");
    if (ds.labels.size() != ds.images.size())
        throw DataError(std::string(what) + " dataset has mismatched image and label counts");
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.labels[i] >= net.num_classes())
            throw ArgumentError(std::string(what) + " sample " + std::to_string(i) + " has label " +
                                std::to_string(ds.labels[i]) + " but the network has " +
                                std::to_string(net.num_classes()) + " outputs");
        if (ds.images[i].shape() != net.input_shape())
            throw ShapeError(std::string(what) + " sample " + std::to_string(i) + " has shape " +
                             ds.images[i].shape().to_string() + ", network expects " +
                             net.input_shape().to_string());
    }
}

void accumulate(std::vector<LayerParams>& sum, const std::vector<LayerParams>& g) {
    for (std::size_t l = 0; l < sum.size(); ++l) {
        auto add = [](Tensor& a, const Tensor& b) {
            for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
        };
        add(sum[l].weights, g[l].weights);
        add(sum[l].bias, g[l].bias);
    }
}

std::vector<LayerParams> zeros_like(const std::vector<LayerParams>& params) {
    std::vector<LayerParams> out;
    out.reserve(params.size());
    for (const auto& p : params) {
        LayerParams z;
        if (!p.weights.empty()) z.weights = Tensor(p.weights.shape());
        if (!p.bias.empty()) z.bias = Tensor(p.bias.shape());
        out.push_back(std::move(z));
    }
    return out;
}

} // namespace

RmsPropState RmsPropState::for_network(const Network& net, RmsPropConfig config) {
    return RmsPropState{config, zeros_like(net.params())};
}

void rmsprop_update(std::span<float> theta, std::span<const float> grad, std::span<float> v,
                    const RmsPropConfig& config) {
    if (theta.size() != grad.size() || theta.size() != v.size())
        throw ShapeError("rmsprop_update: parameter, gradient and accumulator sizes differ (" +
                         std::to_string(theta.size()) + ", " + std::to_string(grad.size()) + ", " +
                         std::to_string(v.size()) + ")");
    if (!(config.stabilizer > 0.0f)) throw ArgumentError("rmsprop stabilizer must be positive");
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const float g = grad[i];
        v[i] = config.rho * v[i] + (1.0f - config.rho) * g * g;
        theta[i] -= config.learning_rate * g / (std::sqrt(v[i]) + config.stabilizer);
    }
}

void rmsprop_step(std::vector<LayerParams>& params, const std::vector<LayerParams>& grads, RmsPropState& state) {
    if (params.size() != grads.size() || params.size() != state.v.size())
        throw ShapeError("rmsprop_step: layer counts differ");
    for (std::size_t l = 0; l < params.size(); ++l) {
        auto check = [&](const Tensor& p, const Tensor& g, const Tensor& v, const char* which) {
            if (p.shape() != g.shape() || p.shape() != v.shape())
                throw ShapeError("rmsprop_step: layer " + std::to_string(l) + " " + which + " shapes " +
                                 p.shape().to_string() + " / " + g.shape().to_string() + " / " +
                                 v.shape().to_string() + " disagree");
        };
        if (!params[l].weights.empty() || !grads[l].weights.empty()) check(params[l].weights, grads[l].weights, state.v[l].weights, "weight");
        if (!params[l].bias.empty() || !grads[l].bias.empty()) check(params[l].bias, grads[l].bias, state.v[l].bias, "bias");
    }
    for (std::size_t l = 0; l < params.size(); ++l) {
        rmsprop_update(params[l].weights.values(), grads[l].weights.values(), state.v[l].weights.values(), state.config);
        rmsprop_update(params[l].bias.values(), grads[l].bias.values(), state.v[l].bias.values(), state.config);
    }
}

void write_history_csv(std::ostream& out, const TrainHistory& history) {
    out << "epoch,train_loss,train_acc,val_loss,val_acc\n";
    for (std::size_t e = 0; e < history.epochs.size(); ++e) {
        const auto& r = history.epochs[e];
        out << e + 1 << ',' << detail::shortest(r.train_loss) << ',' << detail::shortest(r.train_accuracy) << ','
            << detail::shortest(r.val_loss) << ',' << detail::shortest(r.val_accuracy) << '\n';
    }
}

void save_history_csv(const std::string& path, const TrainHistory& history) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path + " for writing");
    write_history_csv(out, history);
    if (!out) throw DataError("failed writing " + path);
}

std::vector<std::size_t> canonical_order(const Dataset& ds) {
    std::vector<std::size_t> idx(ds.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (ds.labels[a] != ds.labels[b]) return ds.labels[a] < ds.labels[b];
        const auto va = ds.images[a].values(), vb = ds.images[b].values();
        if (va.size() != vb.size()) return va.size() < vb.size();
        return std::lexicographical_compare(va.begin(), va.end(), vb.begin(), vb.end());
    });
    return idx;
}

EvalMetrics evaluate(const Network& net, const Dataset& dataset) {
    check_dataset(net, dataset, "evaluation");
    double correct = 0, confidence = 0, loss = 0;
    for (std::size_t i : canonical_order(dataset)) {
        const Tensor probs = net.predict(dataset.images[i]);
        const std::size_t pred = argmax(probs);
        correct += pred == dataset.labels[i];
        confidence += probs[pred];
        loss += cross_entropy(probs, dataset.labels[i]);
    }
    const double n = static_cast<double>(dataset.size());
    return {correct / n, confidence / n, loss / n};
}

TrainHistory train(Network& net, const Dataset& train_set, const Dataset& val_set, const TrainConfig& config,
                   const EpochCallback& on_epoch) {
    if (config.epochs < 1) throw ArgumentError("epochs must be >= 1");
    if (config.batch_size < 1) throw ArgumentError("batch size must be >= 1");
    check_dataset(net, train_set, "training");
    check_dataset(net, val_set, "validation");
    if (config.augment) config.augment->validate();

    const std::vector<std::size_t> base = canonical_order(train_set);
    RmsPropState state = RmsPropState::for_network(net, config.optimizer);
    TrainHistory history;

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        std::vector<std::size_t> order = base;
        Rng shuffle_rng(derive_seed(derive_seed(config.seed, kShuffleStream), epoch));
        shuffle_rng.shuffle(std::span(order));
        Rng dropout_rng(derive_seed(derive_seed(config.seed, kDropoutStream), epoch));
        const std::uint64_t augment_seed = derive_seed(derive_seed(config.seed, kAugmentStream), epoch);

        double loss_sum = 0.0;
        std::size_t batches = 0, correct = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(start + config.batch_size, order.size());
            std::vector<LayerParams> grad_sum = zeros_like(net.params());
            double batch_loss = 0.0;
            for (std::size_t pos = start; pos < end; ++pos) {
                const std::size_t i = order[pos];
                const std::size_t label = train_set.labels[i];
                ForwardResult fr = [&] {
                    if (!config.augment) return net.forward(train_set.images[i], Mode::train, dropout_rng);
                    Rng aug_rng(derive_seed(augment_seed, pos));
                    return net.forward(augment(train_set.images[i], *config.augment, aug_rng), Mode::train,
                                       dropout_rng);
                }();
                batch_loss += cross_entropy(fr.probs, label);
                correct += argmax(fr.probs) == label;
                accumulate(grad_sum, net.backward(fr.trace, label).params);
            }
            const float inv = 1.0f / static_cast<float>(end - start);
            for (auto& g : grad_sum) {
                for (auto& x : g.weights.values()) x *= inv;
                for (auto& x : g.bias.values()) x *= inv;
            }
            rmsprop_step(net.mutable_params(), grad_sum, state);
            loss_sum += batch_loss / static_cast<double>(end - start);
            ++batches;
        }

        const EvalMetrics val = evaluate(net, val_set);
        const EpochRecord record{loss_sum / static_cast<double>(batches),
                                 static_cast<double>(correct) / static_cast<double>(order.size()), val.mean_loss,
                                 val.accuracy};
        for (double v : {record.train_loss, record.val_loss})
            if (!std::isfinite(v)) throw StateError("non-finite loss in epoch " + std::to_string(epoch));
        history.epochs.push_back(record);
        if (on_epoch) on_epoch(epoch, net, history);
    }
    return history;
}

} // namespace fgsm
