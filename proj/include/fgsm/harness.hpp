#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fgsm/attack.hpp"
#include "fgsm/data.hpp"
#include "fgsm/optim.hpp"

namespace fgsm {

/// Classes, samples per class and generator seed behind `--data synth`.
inline constexpr std::size_t synth_classes = 5;
inline constexpr std::size_t synth_per_class = 40;
inline constexpr std::uint64_t synth_seed = 0;

/// "synth", a DSET file, or an image directory, resized to `input_shape`.
Dataset load_data_source(const std::string& source, const Shape& input_shape);

/// Default network input when a config does not set one.
Shape default_input_shape();

/// Network built from `config` with initial weights drawn from a stream derived from `seed`.
Network make_network(const NetworkConfig& config, std::uint64_t seed);

struct SweepConfig {
    std::vector<std::size_t> epochs_list;
    std::vector<double> epsilon_list;
    std::vector<AttackMode> modes;
    std::vector<std::uint64_t> seeds;
    std::string data = "synth";
    std::string network = "small";
    std::size_t samples_per_cell = 25;
    std::size_t batch_size = 8;
    double train_frac = 0.8;
    std::optional<AugmentConfig> augment;

    /// Throws ArgumentError when a list is empty or a value is out of range.
    void validate() const;
};

/// Compact record of one attacked sample, kept for recounts.
struct SampleOutcome {
    std::size_t true_label = 0;
    std::size_t attack_label = 0;  // target or true label
    std::size_t clean_label = 0;
    std::size_t adv_label = 0;
    float adv_confidence = 0.0f;
    bool success = false;
    bool eligible = false;
};

SampleOutcome summarize(const AttackResult& result, std::size_t true_label);

struct SweepRow {
    std::size_t epochs = 0;
    AttackMode mode = AttackMode::untargeted;
    double epsilon = 0.0;
    std::uint64_t seed = 0;
    std::size_t n_samples = 0;
    double clean_accuracy = 0.0;
    double success_rate = 0.0;
    std::size_t failure_count = 0;
    double mean_adv_confidence = 0.0;
    double max_adv_confidence = 0.0;
    friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

/// Fills the metric fields of a row from its attacked samples. Failures are
/// unsuccessful attacks on eligible samples (see attack_eligible).
SweepRow aggregate_cell(const std::vector<SampleOutcome>& outcomes);

struct ModelSummary {
    std::size_t epochs = 0;
    std::uint64_t seed = 0;
    TrainHistory history;  // epochs 1..epochs
    EvalMetrics train_metrics;
    EvalMetrics val_metrics;
};

struct SweepReport {
    SweepConfig config;
    std::vector<SweepRow> rows;                       // sorted by (epochs, mode, epsilon, seed)
    std::vector<std::vector<SampleOutcome>> samples;  // parallel to rows
    std::vector<ModelSummary> models;                 // sorted by (epochs, seed)
};

/// Stratified round-robin pick of up to `count` sample indices, seeded.
std::vector<std::size_t> select_attack_samples(const Dataset& ds, std::size_t count, std::uint64_t seed);

using SweepProgress = std::function<void(const std::string& message)>;

/// Trains one model per (epochs, seed) and attacks the same seeded sample
/// selection from its validation split in every (mode, epsilon) cell.
SweepReport run_sweep(const SweepConfig& config, const SweepProgress& progress = {});

/// As run_sweep, with the dataset already loaded.
SweepReport run_sweep(const SweepConfig& config, const Dataset& data, const SweepProgress& progress = {});

// ---- reports ---------------------------------------------------------------

inline constexpr const char* report_csv_header =
    "epochs,mode,epsilon,seed,n_samples,clean_acc,success_rate,failures,mean_adv_conf,max_adv_conf";

enum class ReportFormat { csv, table, summary };
ReportFormat report_format_from_string(const std::string& name);

/// Metric column used by the summary layout.
enum class SummaryMetric { mean_adv_conf, max_adv_conf, success_rate, clean_acc };
SummaryMetric summary_metric_from_string(const std::string& name);

std::string render_csv(const std::vector<SweepRow>& rows);
/// Aligned columns with percentages to two decimals.
std::string render_table(const std::vector<SweepRow>& rows);
/// One `epochs, Type, epsilon, value%` line per row.
std::string render_summary(const std::vector<SweepRow>& rows, SummaryMetric metric);
std::string render_report(const std::vector<SweepRow>& rows, ReportFormat format,
                          SummaryMetric metric = SummaryMetric::mean_adv_conf);

/// Inverse of render_csv; throws FormatError on any deviation.
std::vector<SweepRow> parse_csv(const std::string& text);

/// "Targeted" / "Untargeted".
std::string display_name(AttackMode mode);

/// Conjunction of key=value clauses over epochs, mode, epsilon and seed,
/// e.g. "epochs=10,mode=targeted". Repeating a key accepts any of its values.
class RowFilter {
public:
    RowFilter() = default;
    static RowFilter parse(const std::string& text);
    bool matches(const SweepRow& row) const;
    std::vector<SweepRow> apply(const std::vector<SweepRow>& rows) const;

private:
    std::vector<std::size_t> epochs_;
    std::vector<AttackMode> modes_;
    std::vector<double> epsilons_;
    std::vector<std::uint64_t> seeds_;
};

} // namespace fgsm
