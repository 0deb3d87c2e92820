#include "fgsm/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>

#include "fgsm/error.hpp"

namespace fgsm {

namespace {

constexpr std::uint64_t kInitStream = 0x1417ULL;
constexpr std::uint64_t kSampleStream = 0x5A3F1EULL;

template <typename T>
void require_unique(const std::vector<T>& values, const char* what) {
    std::vector<T> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw ArgumentError(std::string("duplicate value in ") + what);
}

Dataset resized(Dataset ds, const Shape& shape) {
    if (shape.rank() != 3) throw ShapeError("image input shape must be (h, w, c), got " + shape.to_string());
    for (auto& img : ds.images)
        if (img.shape() != shape) img = resize_image(img, shape[0], shape[1], shape[2]);
    return ds;
}

} // namespace

Shape default_input_shape() { return Shape{32, 32, 3}; }

Network make_network(const NetworkConfig& config, std::uint64_t seed) {
    Network net(config);
    Rng init(derive_seed(seed, kInitStream));
    net.initialize(init);
    return net;
}

Dataset load_data_source(const std::string& source, const Shape& input_shape) {
    if (source == "synth") {
        const bool native = input_shape.rank() == 3 && input_shape[0] == input_shape[1] && input_shape[2] == 3 &&
                            input_shape[0] >= 8;
        const std::size_t dim = native ? input_shape[0] : 32;
        return resized(synth_dataset(synth_classes, synth_per_class, dim, synth_seed), input_shape);
    }
    std::error_code ec;
    if (std::filesystem::is_directory(source, ec)) return load_image_dir(source, input_shape);
    if (std::filesystem::is_regular_file(source, ec)) return resized(load_dataset(source), input_shape);
    throw DataError("data source " + source + " is neither \"synth\", a dataset file nor a directory");
}

void SweepConfig::validate() const {
    if (epochs_list.empty() || epsilon_list.empty() || modes.empty() || seeds.empty())
        throw ArgumentError("sweep needs at least one epoch count, epsilon, mode and seed");
    for (auto e : epochs_list)
        if (e < 1) throw ArgumentError("epoch counts must be >= 1");
    for (double eps : epsilon_list)
        if (!(eps >= 0.0) || !std::isfinite(eps)) throw ArgumentError("epsilons must be finite and >= 0");
    require_unique(epochs_list, "epochs");
    require_unique(epsilon_list, "epsilons");
    require_unique(modes, "modes");
    require_unique(seeds, "seeds");
    if (samples_per_cell < 1) throw ArgumentError("samples per cell must be >= 1");
    if (batch_size < 1) throw ArgumentError("batch size must be >= 1");
    if (!(train_frac > 0.0 && train_frac < 1.0)) throw ArgumentError("train fraction must lie in (0, 1)");
    if (augment) augment->validate();
}

SampleOutcome summarize(const AttackResult& r, std::size_t true_label) {
    return {true_label, r.label, r.clean_label, r.adv_label, r.adv_confidence, r.success,
            attack_eligible(r, true_label)};
}

SweepRow aggregate_cell(const std::vector<SampleOutcome>& outcomes) {
    if (outcomes.empty()) throw ArgumentError("cannot aggregate an empty cell");
    SweepRow row;
    row.n_samples = outcomes.size();
    std::size_t clean_correct = 0, successes = 0;
    double conf_sum = 0.0;
    for (const auto& o : outcomes) {
        clean_correct += o.clean_label == o.true_label;
        successes += o.success;
        row.failure_count += o.eligible && !o.success;
        conf_sum += o.adv_confidence;
        row.max_adv_confidence = std::max(row.max_adv_confidence, static_cast<double>(o.adv_confidence));
    }
    const double n = static_cast<double>(outcomes.size());
    row.clean_accuracy = clean_correct / n;
    row.success_rate = successes / n;
    row.mean_adv_confidence = conf_sum / n;
    return row;
}

std::vector<std::size_t> select_attack_samples(const Dataset& ds, std::size_t count, std::uint64_t seed) {
    std::map<std::size_t, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < ds.size(); ++i) by_class[ds.labels[i]].push_back(i);
    Rng rng(seed);
    for (auto& [label, idx] : by_class) rng.shuffle(std::span(idx));

    std::vector<std::size_t> picked;
    for (std::size_t round = 0; picked.size() < std::min(count, ds.size()); ++round)
        for (auto& [label, idx] : by_class)
            if (round < idx.size() && picked.size() < count) picked.push_back(idx[round]);
    return picked;
}

SweepReport run_sweep(const SweepConfig& config, const SweepProgress& progress) {
    config.validate();
    const Shape input = load_network_config(config.network, 2, default_input_shape()).input_shape;
    return run_sweep(config, load_data_source(config.data, input), progress);
}

SweepReport run_sweep(const SweepConfig& config, const Dataset& data, const SweepProgress& progress) {
    config.validate();
    data.validate();
    const NetworkConfig net_cfg = load_network_config(config.network, data.num_classes(), default_input_shape());
    const std::set<std::size_t> checkpoints(config.epochs_list.begin(), config.epochs_list.end());
    auto say = [&](const std::string& msg) {
        if (progress) progress(msg);
    };

    SweepReport report;
    report.config = config;
    struct Cell {
        SweepRow row;
        std::vector<SampleOutcome> samples;
    };
    std::vector<Cell> cells;

    for (const std::uint64_t seed : config.seeds) {
        const auto [train_set, val_set] = split(data, config.train_frac, seed);
        Network net = make_network(net_cfg, seed);
        const auto picked = select_attack_samples(val_set, config.samples_per_cell, derive_seed(seed, kSampleStream));

        TrainConfig tc;
        tc.epochs = *checkpoints.rbegin();
        tc.batch_size = config.batch_size;
        tc.seed = seed;
        tc.augment = config.augment;

        say("seed " + std::to_string(seed) + ": training " + std::to_string(tc.epochs) + " epochs on " +
            std::to_string(train_set.size()) + " samples");
        train(net, train_set, val_set, tc, [&](std::size_t epoch, const Network& model, const TrainHistory& history) {
            if (!checkpoints.count(epoch)) return;
            ModelSummary summary{epoch, seed, history, evaluate(model, train_set), evaluate(model, val_set)};
            say("seed " + std::to_string(seed) + " epoch " + std::to_string(epoch) + ": train acc " +
                std::to_string(summary.train_metrics.accuracy) + ", val acc " +
                std::to_string(summary.val_metrics.accuracy));
            report.models.push_back(std::move(summary));
            for (const AttackMode mode : config.modes) {
                for (const double eps : config.epsilon_list) {
                    const AttackConfig ac{mode, static_cast<float>(eps), std::nullopt};
                    std::vector<SampleOutcome> outcomes;
                    outcomes.reserve(picked.size());
                    for (const std::size_t i : picked)
                        outcomes.push_back(
                            summarize(run_attack(model, val_set.images[i], val_set.labels[i], ac), val_set.labels[i]));
                    SweepRow row = aggregate_cell(outcomes);
                    row.epochs = epoch;
                    row.mode = mode;
                    row.epsilon = eps;
                    row.seed = seed;
                    cells.push_back({row, std::move(outcomes)});
                }
            }
        });
    }

    auto key = [](const SweepRow& r) { return std::make_tuple(r.epochs, r.mode, r.epsilon, r.seed); };
    std::sort(cells.begin(), cells.end(), [&](const Cell& a, const Cell& b) { return key(a.row) < key(b.row); });
    for (auto& c : cells) {
        report.rows.push_back(c.row);
        report.samples.push_back(std::move(c.samples));
    }
    std::sort(report.models.begin(), report.models.end(), [](const ModelSummary& a, const ModelSummary& b) {
        return std::tie(a.epochs, a.seed) < std::tie(b.epochs, b.seed);
    });
    return report;
}

} // namespace fgsm
