#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "fgsm/data.hpp"
#include "fgsm/nn.hpp"

namespace fgsm {

struct RmsPropConfig {
    float learning_rate = 0.001f;
    float rho = 0.9f;
    float stabilizer = 1e-7f;
};

/// Squared-gradient accumulators, one per parameter tensor.
struct RmsPropState {
    RmsPropConfig config;
    std::vector<LayerParams> v;

    /// Zero accumulators shaped like `net`'s parameters.
    static RmsPropState for_network(const Network& net, RmsPropConfig config = {});
};

/// v <- rho v + (1 - rho) g^2; theta <- theta - lr g / (sqrt(v) + stabilizer).
void rmsprop_update(std::span<float> theta, std::span<const float> grad, std::span<float> v,
                    const RmsPropConfig& config);

/// Applies rmsprop_update to every parameter tensor. Throws ShapeError on
/// any shape disagreement, before touching anything.
void rmsprop_step(std::vector<LayerParams>& params, const std::vector<LayerParams>& grads, RmsPropState& state);

struct EpochRecord {
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
    friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    friend bool operator==(const TrainHistory&, const TrainHistory&) = default;
};

/// CSV with header `epoch,train_loss,train_acc,val_loss,val_acc`, epochs numbered from 1.
void write_history_csv(std::ostream& out, const TrainHistory& history);
void save_history_csv(const std::string& path, const TrainHistory& history);

struct EvalMetrics {
    double accuracy = 0.0;
    double mean_confidence = 0.0;  // mean over samples of max probability
    double mean_loss = 0.0;
};

/// Eval-mode metrics over the whole dataset.
EvalMetrics evaluate(const Network& net, const Dataset& dataset);

struct TrainConfig {
    std::size_t epochs = 10;
    std::size_t batch_size = 8;
    std::uint64_t seed = 0;
    RmsPropConfig optimizer;
    std::optional<AugmentConfig> augment;  // off unless set
};

/// Called after each epoch with its 1-based number.
using EpochCallback = std::function<void(std::size_t epoch, const Network& net, const TrainHistory& history)>;

/// Trains `net` in place with RMSprop on mean-of-batch cross-entropy gradients.
/// Batches are drawn from a seeded reshuffle of the samples taken in a
/// canonical content order, so the result depends on the seed and the set of
/// samples but not on their order in `train_set`.
TrainHistory train(Network& net, const Dataset& train_set, const Dataset& val_set, const TrainConfig& config,
                   const EpochCallback& on_epoch = {});

/// Indices of `ds` sorted by (label, pixel values); stable for duplicates.
std::vector<std::size_t> canonical_order(const Dataset& ds);

} // namespace fgsm
