#include <algorithm>
#include <cctype>
#include <cstdio>
#include <sstream>

#include "fgsm/error.hpp"
#include "fgsm/harness.hpp"
#include "number_format.hpp"

namespace fgsm {

namespace {

std::vector<std::string> split_on(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : text) {
        if (c == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    parts.push_back(cur);
    return parts;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::string percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f%%", fraction * 100.0);
    return buf;
}

double metric_value(const SweepRow& row, SummaryMetric metric) {
    switch (metric) {
    case SummaryMetric::mean_adv_conf: return row.mean_adv_confidence;
    case SummaryMetric::max_adv_conf: return row.max_adv_confidence;
    case SummaryMetric::success_rate: return row.success_rate;
    case SummaryMetric::clean_acc: return row.clean_accuracy;
    }
    throw StateError("unknown summary metric");
}

} // namespace

std::string display_name(AttackMode mode) { return mode == AttackMode::targeted ? "Targeted" : "Untargeted"; }

ReportFormat report_format_from_string(const std::string& name) {
    if (name == "csv") return ReportFormat::csv;
    if (name == "table") return ReportFormat::table;
    if (name == "summary") return ReportFormat::summary;
    throw ArgumentError("unknown report format \"" + name + "\" (expected csv, table or summary)");
}

SummaryMetric summary_metric_from_string(const std::string& name) {
    if (name == "mean_adv_conf") return SummaryMetric::mean_adv_conf;
    if (name == "max_adv_conf") return SummaryMetric::max_adv_conf;
    if (name == "success_rate") return SummaryMetric::success_rate;
    if (name == "clean_acc") return SummaryMetric::clean_acc;
    throw ArgumentError("unknown metric \"" + name + "\"");
}

std::string render_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << report_csv_header << '\n';
    for (const auto& r : rows) {
        out << r.epochs << ',' << to_string(r.mode) << ',' << detail::shortest(r.epsilon) << ',' << r.seed << ','
            << r.n_samples << ',' << detail::shortest(r.clean_accuracy) << ',' << detail::shortest(r.success_rate)
            << ',' << r.failure_count << ',' << detail::shortest(r.mean_adv_confidence) << ','
            << detail::shortest(r.max_adv_confidence) << '\n';
    }
    return out.str();
}

std::vector<SweepRow> parse_csv(const std::string& text) {
    std::vector<std::string> lines = split_on(text, '\n');
    if (!lines.empty() && lines.back().empty()) lines.pop_back();
    for (auto& l : lines)
        if (!l.empty() && l.back() == '\r') l.pop_back();
    if (lines.empty() || lines[0] != report_csv_header) throw FormatError("report CSV header mismatch");

    std::vector<SweepRow> rows;
    for (std::size_t n = 1; n < lines.size(); ++n) {
        const auto f = split_on(lines[n], ',');
        const std::string where = "line " + std::to_string(n + 1);
        if (f.size() != 10) throw FormatError(where + ": expected 10 fields, got " + std::to_string(f.size()));
        SweepRow r;
        r.epochs = detail::parse_uint(f[0], where + " epochs");
        try {
            r.mode = attack_mode_from_string(f[1]);
        } catch (const ArgumentError& e) {
            throw FormatError(where + ": " + e.what());
        }
        r.epsilon = detail::parse_double(f[2], where + " epsilon");
        r.seed = detail::parse_uint(f[3], where + " seed");
        r.n_samples = detail::parse_uint(f[4], where + " n_samples");
        r.clean_accuracy = detail::parse_double(f[5], where + " clean_acc");
        r.success_rate = detail::parse_double(f[6], where + " success_rate");
        r.failure_count = detail::parse_uint(f[7], where + " failures");
        r.mean_adv_confidence = detail::parse_double(f[8], where + " mean_adv_conf");
        r.max_adv_confidence = detail::parse_double(f[9], where + " max_adv_conf");
        for (double v : {r.clean_accuracy, r.success_rate, r.mean_adv_confidence, r.max_adv_confidence})
            if (!(v >= 0.0 && v <= 1.0)) throw FormatError(where + ": rates must lie in [0, 1]");
        if (r.failure_count > r.n_samples) throw FormatError(where + ": more failures than samples");
        rows.push_back(r);
    }
    return rows;
}

std::string render_table(const std::vector<SweepRow>& rows) {
    const std::vector<std::string> header = {"Epochs",  "Type",     "Epsilon",   "Seed",     "Samples",
                                             "Clean acc", "Success", "Failures", "Mean conf", "Max conf"};
    std::vector<std::vector<std::string>> cells;
    for (const auto& r : rows)
        cells.push_back({std::to_string(r.epochs), display_name(r.mode), detail::shortest(r.epsilon),
                         std::to_string(r.seed), std::to_string(r.n_samples), percent(r.clean_accuracy),
                         percent(r.success_rate), std::to_string(r.failure_count), percent(r.mean_adv_confidence),
                         percent(r.max_adv_confidence)});

    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
        width[c] = header[c].size();
        for (const auto& row : cells) width[c] = std::max(width[c], row[c].size());
    }
    std::ostringstream out;
    auto emit = [&](const std::vector<std::string>& row) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out << "  ";
            // Type is text, left-aligned; the rest are numbers.
            if (c == 1) out << row[c] << std::string(width[c] - row[c].size(), ' ');
            else out << std::string(width[c] - row[c].size(), ' ') << row[c];
        }
        out << '\n';
    };
    emit(header);
    std::size_t total = 2 * (header.size() - 1);
    for (auto w : width) total += w;
    out << std::string(total, '-') << '\n';
    for (const auto& row : cells) emit(row);
    return out.str();
}

std::string render_summary(const std::vector<SweepRow>& rows, SummaryMetric metric) {
    std::ostringstream out;
    for (const auto& r : rows)
        out << r.epochs << ", " << display_name(r.mode) << ", " << detail::shortest(r.epsilon) << ", "
            << percent(metric_value(r, metric)) << '\n';
    return out.str();
}

std::string render_report(const std::vector<SweepRow>& rows, ReportFormat format, SummaryMetric metric) {
    switch (format) {
    case ReportFormat::csv: return render_csv(rows);
    case ReportFormat::table: return render_table(rows);
    case ReportFormat::summary: return render_summary(rows, metric);
    }
    throw StateError("unknown report format");
}

RowFilter RowFilter::parse(const std::string& text) {
    RowFilter f;
    if (text.empty()) return f;
    for (const auto& clause : split_on(text, ',')) {
        const auto eq = clause.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == clause.size())
            throw ArgumentError("filter clause \"" + clause + "\" is not key=value");
        const std::string key = clause.substr(0, eq), value = clause.substr(eq + 1);
        try {
            if (key == "epochs") f.epochs_.push_back(detail::parse_uint(value, "epochs filter"));
            else if (key == "mode") f.modes_.push_back(attack_mode_from_string(lower(value)));
            else if (key == "epsilon") f.epsilons_.push_back(detail::parse_double(value, "epsilon filter"));
            else if (key == "seed") f.seeds_.push_back(detail::parse_uint(value, "seed filter"));
            else throw ArgumentError("unknown filter key \"" + key + "\" (expected epochs, mode, epsilon or seed)");
        } catch (const FormatError& e) {
            throw ArgumentError(e.what());
        }
    }
    return f;
}

bool RowFilter::matches(const SweepRow& row) const {
    auto ok = [](const auto& allowed, const auto& v) {
        return allowed.empty() || std::find(allowed.begin(), allowed.end(), v) != allowed.end();
    };
    return ok(epochs_, row.epochs) && ok(modes_, row.mode) && ok(epsilons_, row.epsilon) && ok(seeds_, row.seed);
}

std::vector<SweepRow> RowFilter::apply(const std::vector<SweepRow>& rows) const {
    std::vector<SweepRow> out;
    std::copy_if(rows.begin(), rows.end(), std::back_inserter(out), [&](const SweepRow& r) { return matches(r); });
    return out;
}

} // namespace fgsm
