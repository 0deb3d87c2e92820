#include "fgsm/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "fgsm/error.hpp"
#include "fgsm/harness.hpp"
#include "number_format.hpp"

namespace fgsm {

namespace {

Shape parse_shape(const std::string& text) {
    std::vector<std::size_t> dims;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        try {
            dims.push_back(detail::parse_uint(part, "--input"));
        } catch (const FormatError& e) {
            throw ArgumentError(e.what());
        }
    }
    try {
        return Shape(dims);
    } catch (const ShapeError& e) {
        throw ArgumentError(std::string("--input: ") + e.what());
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path + " for writing");
    out << text;
    if (!out) throw DataError("failed writing " + path);
}

// PPM output needs three channels; grayscale images are replicated.
void write_viewable(const std::string& path, const Tensor& image) {
    const bool ppm = path.size() >= 4 && path.compare(path.size() - 4, 4, ".ppm") == 0;
    if (ppm && image.shape().rank() == 3 && image.shape()[2] == 1)
        return write_image(path, resize_image(image, image.shape()[0], image.shape()[1], 3));
    write_image(path, image);
}

bool is_tnsr(const std::string& path) { return path.size() >= 5 && path.compare(path.size() - 5, 5, ".tnsr") == 0; }

Shape config_input_shape(const std::string& config) {
    return load_network_config(config, 2, default_input_shape()).input_shape;
}

struct TrainArgs {
    std::string data, config = "small", out, history;
    std::size_t epochs = 10, batch = 8;
    std::uint64_t seed = 0;
    double train_frac = 0.8;
    bool augment = false;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
    const Dataset data = load_data_source(a.data, config_input_shape(a.config));
    const NetworkConfig cfg = load_network_config(a.config, data.num_classes(), default_input_shape());
    const auto [train_set, val_set] = split(data, a.train_frac, a.seed);
    Network net = make_network(cfg, a.seed);

    TrainConfig tc;
    tc.epochs = a.epochs;
    tc.batch_size = a.batch;
    tc.seed = a.seed;
    if (a.augment) tc.augment = AugmentConfig{};
    const TrainHistory history = train(net, train_set, val_set, tc, [&](std::size_t epoch, const Network&, const TrainHistory& h) {
        const auto& r = h.epochs.back();
        char line[160];
        std::snprintf(line, sizeof line, "epoch %3zu  loss %.4f  acc %.4f  val_loss %.4f  val_acc %.4f\n", epoch,
                      r.train_loss, r.train_accuracy, r.val_loss, r.val_accuracy);
        out << line << std::flush;
    });

    save_model(net, a.out);
    if (!a.history.empty()) save_history_csv(a.history, history);
    const EvalMetrics m = evaluate(net, val_set);
    out << "saved " << a.out << " (" << net.parameter_count() << " parameters); validation accuracy "
        << m.accuracy << ", mean confidence " << m.mean_confidence << "\n";
    return exit_ok;
}

struct AttackArgs {
    std::string model, image, mode, out, eta;
    float epsilon = 0.0f;
    std::optional<std::size_t> target;
    std::size_t label = 0;
};

int cmd_attack(const AttackArgs& a, std::ostream& out) {
    const Network net = load_model(a.model);
    const Shape& in = net.input_shape();
    Tensor image = read_image(a.image);
    if (image.shape() != in) {
        if (in.rank() != 3) throw ShapeError("model input " + in.to_string() + " is not an image shape");
        image = resize_image(image, in[0], in[1], in[2]);
    }
    const AttackConfig cfg{attack_mode_from_string(a.mode), a.epsilon, a.target};
    if (cfg.target_label && cfg.mode != AttackMode::targeted)
        throw ArgumentError("--target only applies to --mode targeted");
    const AttackResult r = run_attack(net, image, a.label, cfg);

    write_viewable(a.out, r.adversarial_image);
    if (!a.eta.empty()) {
        if (is_tnsr(a.eta)) write_image(a.eta, r.perturbation);
        else if (a.epsilon > 0.0f) write_viewable(a.eta, perturbation_image(r.perturbation, a.epsilon));
        else write_viewable(a.eta, Tensor(r.perturbation.shape(), 0.5f));
    }
    out << "mode " << to_string(r.mode) << ", epsilon " << detail::shortest(a.epsilon) << ", "
        << (r.mode == AttackMode::targeted ? "target " : "label ") << r.label << "\n"
        << "clean:       class " << r.clean_label << " (confidence " << r.clean_confidence << ")\n"
        << "adversarial: class " << r.adv_label << " (confidence " << r.adv_confidence << ")\n"
        << "success: " << (r.success ? "yes" : "no") << "\n";
    return exit_ok;
}

struct SweepArgs {
    std::string data, config = "small", out;
    std::vector<std::size_t> epochs{10, 20, 30, 40, 50};
    std::vector<double> epsilons{0.01, 0.02, 0.03, 0.04, 0.05};
    std::vector<std::string> modes{"targeted", "untargeted"};
    std::vector<std::uint64_t> seeds{1, 2, 3};
    std::size_t samples = 25, batch = 8;
    bool augment = false, quiet = false;
};

int cmd_sweep(const SweepArgs& a, std::ostream& out, std::ostream& err) {
    SweepConfig cfg;
    cfg.epochs_list = a.epochs;
    cfg.epsilon_list = a.epsilons;
    for (const auto& m : a.modes) cfg.modes.push_back(attack_mode_from_string(m));
    cfg.seeds = a.seeds;
    cfg.data = a.data;
    cfg.network = a.config;
    cfg.samples_per_cell = a.samples;
    cfg.batch_size = a.batch;
    if (a.augment) cfg.augment = AugmentConfig{};
    const SweepReport report = run_sweep(cfg, [&](const std::string& msg) {
        if (!a.quiet) err << msg << "\n" << std::flush;
    });
    write_file(a.out, render_csv(report.rows));
    if (!a.quiet) out << render_table(report.rows);
    out << "wrote " << report.rows.size() << " rows to " << a.out << "\n";
    return exit_ok;
}

int cmd_shapes(const std::string& config, const std::string& input, std::size_t classes, std::ostream& out) {
    Shape in = input.empty() ? (config.rfind("vgg16", 0) == 0 ? Shape{224, 224, 3} : default_input_shape())
                             : parse_shape(input);
    NetworkConfig cfg = load_network_config(config, classes, in);
    if (!input.empty()) cfg.input_shape = in;
    const auto shapes = infer_shapes(cfg.layers, cfg.input_shape);
    std::size_t width = 5;
    for (const auto& l : cfg.layers) width = std::max(width, describe(l).size());
    auto row = [&](const std::string& idx, const std::string& name, const std::string& shape) {
        out << std::string(3 - std::min<std::size_t>(3, idx.size()), ' ') << idx << "  " << name
            << std::string(width - name.size(), ' ') << "  " << shape << "\n";
    };
    row("#", "Layer", "Output shape");
    row("0", "Input", shapes[0].to_string());
    for (std::size_t i = 0; i < cfg.layers.size(); ++i)
        row(std::to_string(i + 1), describe(cfg.layers[i]), shapes[i + 1].to_string());
    return exit_ok;
}

int cmd_report(const std::string& in, const std::string& format, const std::string& filter,
               const std::string& metric, std::ostream& out) {
    const ReportFormat fmt = report_format_from_string(format);
    const SummaryMetric m = summary_metric_from_string(metric);
    const RowFilter f = RowFilter::parse(filter);
    try {
        out << render_report(f.apply(parse_csv(read_file(in))), fmt, m);
    } catch (const FormatError& e) {
        throw FormatError(in + ": " + e.what());
    }
    return exit_ok;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"FGSM adversarial attack lab: train small CNNs, attack them, sweep and report."};
    app.name("fgsm_lab");
    app.require_subcommand(1);

    TrainArgs ta;
    auto* train_cmd = app.add_subcommand("train", "Train a network and save it");
    train_cmd->add_option("--data", ta.data, "Image directory, dataset file, or 'synth'")->required();
    train_cmd->add_option("--config", ta.config, "Network config: small, vgg16 or a JSON file")->capture_default_str();
    train_cmd->add_option("--epochs", ta.epochs, "Training epochs")->capture_default_str()->check(CLI::PositiveNumber);
    train_cmd->add_option("--batch", ta.batch, "Batch size")->capture_default_str()->check(CLI::PositiveNumber);
    train_cmd->add_option("--seed", ta.seed, "Seed for split, initialization and shuffling")->capture_default_str();
    train_cmd->add_option("--train-frac", ta.train_frac, "Training fraction of each class")->capture_default_str();
    train_cmd->add_option("--out", ta.out, "Output model file")->required();
    train_cmd->add_option("--history", ta.history, "Per-epoch history CSV");
    train_cmd->add_flag("--augment", ta.augment, "Random rotation, zoom, shift and flip during training");

    AttackArgs aa;
    auto* attack_cmd = app.add_subcommand("attack", "Run one FGSM attack on an image");
    attack_cmd->add_option("--model", aa.model, "Model file")->required();
    attack_cmd->add_option("--image", aa.image, "Input image (.ppm, .pgm or .tnsr)")->required();
    attack_cmd->add_option("--mode", aa.mode, "targeted or untargeted")->required()->check(
        CLI::IsMember({"targeted", "untargeted"}));
    attack_cmd->add_option("--epsilon", aa.epsilon, "Per-pixel budget")->required()->check(CLI::NonNegativeNumber);
    attack_cmd->add_option("--target", aa.target, "Target class (targeted; default label+1 mod K)");
    attack_cmd->add_option("--label", aa.label, "True class of the image")->required();
    attack_cmd->add_option("--out", aa.out, "Adversarial image output")->required();
    attack_cmd->add_option("--eta", aa.eta, "Perturbation output (.tnsr exact, .ppm/.pgm visualized)");

    SweepArgs sa;
    auto* sweep_cmd = app.add_subcommand("sweep", "Train and attack over an epochs x epsilon x mode x seed grid");
    sweep_cmd->add_option("--data", sa.data, "Image directory, dataset file, or 'synth'")->required();
    sweep_cmd->add_option("--config", sa.config, "Network config")->capture_default_str();
    sweep_cmd->add_option("--epochs", sa.epochs, "Epoch counts")->delimiter(',')->capture_default_str();
    sweep_cmd->add_option("--epsilons", sa.epsilons, "Epsilons")->delimiter(',')->capture_default_str();
    sweep_cmd->add_option("--modes", sa.modes, "Attack modes")->delimiter(',')->capture_default_str()->check(
        CLI::IsMember({"targeted", "untargeted"}));
    sweep_cmd->add_option("--seeds", sa.seeds, "Training seeds")->delimiter(',')->capture_default_str();
    sweep_cmd->add_option("--samples", sa.samples, "Attacked samples per cell")->capture_default_str()->check(
        CLI::PositiveNumber);
    sweep_cmd->add_option("--batch", sa.batch, "Batch size")->capture_default_str()->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--out", sa.out, "Report CSV")->required();
    sweep_cmd->add_flag("--augment", sa.augment, "Augment training data");
    sweep_cmd->add_flag("--quiet", sa.quiet, "No progress or table output");

    std::string shapes_config = "vgg16", shapes_input;
    std::size_t shapes_classes = 5;
    auto* shapes_cmd = app.add_subcommand("shapes", "Print the output shape of every layer");
    shapes_cmd->add_option("--config", shapes_config, "Network config")->capture_default_str();
    shapes_cmd->add_option("--input", shapes_input, "Input shape H,W,C");
    shapes_cmd->add_option("--classes", shapes_classes, "Class count for the output layer")->capture_default_str();

    std::string report_in, report_format = "table", report_filter, report_metric = "mean_adv_conf";
    auto* report_cmd = app.add_subcommand("report", "Render a sweep CSV");
    report_cmd->add_option("--in", report_in, "Sweep CSV")->required();
    report_cmd->add_option("--format", report_format, "table, csv or summary")->capture_default_str()->check(
        CLI::IsMember({"table", "csv", "summary"}));
    report_cmd->add_option("--filter", report_filter, "e.g. epochs=10,mode=targeted");
    report_cmd->add_option("--metric", report_metric, "Metric for the summary layout")->capture_default_str()->check(
        CLI::IsMember({"mean_adv_conf", "max_adv_conf", "success_rate", "clean_acc"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*train_cmd) return cmd_train(ta, out);
        if (*attack_cmd) return cmd_attack(aa, out);
        if (*sweep_cmd) return cmd_sweep(sa, out, err);
        if (*shapes_cmd) return cmd_shapes(shapes_config, shapes_input, shapes_classes, out);
        if (*report_cmd) return cmd_report(report_in, report_format, report_filter, report_metric, out);
    } catch (const ArgumentError& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const FormatError& e) {
        err << "format error: " << e.what() << "\n";
        return exit_data;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return exit_data;
    } catch (const ShapeError& e) {
        err << "shape error: " << e.what() << "\n";
        return exit_data;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return exit_internal;
    }
    return exit_usage;
}

} // namespace fgsm
