#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cb/bandit.hpp"
#include "cb/core.hpp"
#include "cb/learners.hpp"

// Prequential metrics (windowed accuracy, RMSE, round-wise RMSE), the
// static-vs-online comparison protocol, and plain-text report emission.
namespace cb {

struct AccuracySeries {
    std::size_t window_size = 20;
    std::vector<double> values;  // one per tumbling window, each in [0,1]
};

namespace detail_eval {

inline double round_half_up(double v) { return std::floor(v + 0.5); }

inline double clamped_prediction(const LogEntry& e, RewardKind task) {
    if (task == RewardKind::rating) return std::clamp(e.predicted, 1.0, 5.0);
    return e.predicted;
}

}  // namespace detail_eval

// Correctness of a single prediction. Click: thresholded probability must
// match the 0/1 outcome. Rating: the clamped, rounded prediction must hit the
// actual star value, optionally within +/- tolerance stars.
inline bool entry_correct(const LogEntry& e, RewardKind task, int rating_tolerance = 0) {
    if (task == RewardKind::click) {
        const bool predicted_click = e.predicted >= 0.5;
        return predicted_click == (e.actual != 0.0);
    }
    const double rounded = detail_eval::round_half_up(std::clamp(e.predicted, 1.0, 5.0));
    return std::abs(rounded - e.actual) <= static_cast<double>(rating_tolerance) + 1e-9;
}

// Accuracy per consecutive tumbling window; the final partial window (if
// any) is scored over its own size. Empty log -> empty series.
inline AccuracySeries windowed_accuracy(const PredictionLog& log, std::size_t window_size = 20,
                                        int rating_tolerance = 0) {
    if (window_size < 1) throw config_error("window_size must be >= 1");
    AccuracySeries series;
    series.window_size = window_size;
    std::size_t correct = 0, in_window = 0;
    for (const LogEntry& e : log.entries) {
        correct += entry_correct(e, log.task, rating_tolerance) ? 1 : 0;
        if (++in_window == window_size) {
            series.values.push_back(static_cast<double>(correct) / static_cast<double>(in_window));
            correct = in_window = 0;
        }
    }
    if (in_window > 0)
        series.values.push_back(static_cast<double>(correct) / static_cast<double>(in_window));
    return series;
}

// Total correct over total entries — not the mean of window means, so
// partial windows carry their true weight.
inline double average_accuracy(const PredictionLog& log, int rating_tolerance = 0) {
    if (log.entries.empty()) throw metric_error("average_accuracy of an empty log is undefined");
    std::size_t correct = 0;
    for (const LogEntry& e : log.entries)
        correct += entry_correct(e, log.task, rating_tolerance) ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(log.entries.size());
}

// Entry-weighted mean of a series: every window contributes window_size
// entries except the last, which covers the remainder of total_entries.
inline double average_accuracy(const AccuracySeries& series, std::size_t total_entries) {
    if (series.values.empty() || total_entries == 0)
        throw metric_error("average_accuracy of an empty series is undefined");
    double correct = 0.0;
    std::size_t counted = 0;
    for (std::size_t i = 0; i < series.values.size(); ++i) {
        const std::size_t remaining = total_entries - counted;
        const std::size_t size = std::min(series.window_size, remaining);
        correct += series.values[i] * static_cast<double>(size);
        counted += size;
    }
    if (counted != total_entries)
        throw metric_error("series does not cover total_entries");
    return correct / static_cast<double>(total_entries);
}

// sqrt(mean((predicted - actual)^2)); rating predictions are clamped to
// [1,5] before the residual.
inline double rmse(const PredictionLog& log) {
    if (log.entries.empty()) throw metric_error("rmse of an empty log is undefined");
    double sum_sq = 0.0;
    for (const LogEntry& e : log.entries) {
        const double r = detail_eval::clamped_prediction(e, log.task) - e.actual;
        sum_sq += r * r;
    }
    return std::sqrt(sum_sq / static_cast<double>(log.entries.size()));
}

// RMSE of each consecutive full block of round_size entries, up to `rounds`
// blocks; a trailing partial block is not scored.
inline std::vector<double> rounds_rmse(const PredictionLog& log, std::size_t round_size = 1000,
                                       std::size_t rounds = 10) {
    if (round_size < 1) throw config_error("round_size must be >= 1");
    if (rounds < 1) throw config_error("rounds must be >= 1");
    if (log.entries.size() < round_size)
        throw metric_error("log holds " + std::to_string(log.entries.size()) +
                           " entries, fewer than one round of " + std::to_string(round_size));
    std::vector<double> out;
    const std::size_t full_blocks = std::min(rounds, log.entries.size() / round_size);
    for (std::size_t b = 0; b < full_blocks; ++b) {
        double sum_sq = 0.0;
        for (std::size_t i = b * round_size; i < (b + 1) * round_size; ++i) {
            const double r =
                detail_eval::clamped_prediction(log.entries[i], log.task) - log.entries[i].actual;
            sum_sq += r * r;
        }
        out.push_back(std::sqrt(sum_sq / static_cast<double>(round_size)));
    }
    return out;
}

enum class Algo { static_tree, static_ols, online_sgd, bandit_array };

inline const char* algo_name(Algo a) {
    switch (a) {
        case Algo::static_tree: return "static-tree";
        case Algo::static_ols: return "static-ols";
        case Algo::online_sgd: return "online-sgd";
        case Algo::bandit_array: return "bandit-array";
    }
    return "?";
}

inline Algo algo_from_name(std::string_view name) {
    if (name == "static-tree") return Algo::static_tree;
    if (name == "static-ols") return Algo::static_ols;
    if (name == "online-sgd") return Algo::online_sgd;
    if (name == "bandit-array") return Algo::bandit_array;
    throw config_error("unknown algorithm '" + std::string(name) +
                       "' (expected static-tree, static-ols, online-sgd, or bandit-array)");
}

struct ProtocolParams {
    std::size_t train_n = 1000;  // records fit before any prediction is scored
    std::size_t window_size = 20;
    std::size_t round_size = 1000;
    std::size_t rounds = 10;
    double eta = 0.01;
    double l2 = 1e-4;
    TreeParams tree;
    int rating_tolerance = 0;
};

namespace detail_eval {

// First-seen arm registry over the whole dataset, so static models see a
// stable arm coordinate. Returns label -> index plus the total count.
inline std::unordered_map<std::string, std::size_t> arm_universe(
    std::span<const InteractionRecord> records) {
    std::unordered_map<std::string, std::size_t> index;
    for (const InteractionRecord& r : records) index.emplace(r.arm.label, index.size());
    return index;
}

inline std::vector<double> static_input(const ContextSchema& schema, const InteractionRecord& r,
                                        const std::unordered_map<std::string, std::size_t>& arms) {
    std::vector<double> x = normalize_context(schema, r.raw_context);
    const std::size_t idx = arms.at(r.arm.label);
    x.push_back(arm_feature(ArmId{r.arm.label, idx}, arms.size()));
    return x;
}

}  // namespace detail_eval

// Fit a static model (tree classifier or OLS regressor) on the first
// train_n records and predict every record after them.
inline PredictionLog run_static(const ContextSchema& schema,
                                std::span<const InteractionRecord> records, RewardKind task,
                                Algo algo, const ProtocolParams& params = {}) {
    if (algo != Algo::static_tree && algo != Algo::static_ols)
        throw config_error("run_static expects a static algorithm");
    if (records.size() <= params.train_n)
        throw config_error("dataset holds " + std::to_string(records.size()) +
                           " records, need more than train_n = " + std::to_string(params.train_n));

    const auto arms = detail_eval::arm_universe(records);
    std::vector<std::vector<double>> x_train;
    std::vector<double> y_train;
    x_train.reserve(params.train_n);
    y_train.reserve(params.train_n);
    for (std::size_t i = 0; i < params.train_n; ++i) {
        x_train.push_back(detail_eval::static_input(schema, records[i], arms));
        y_train.push_back(records[i].reward);
    }

    PredictionLog log;
    log.task = task;
    if (algo == Algo::static_tree) {
        // The click and rating baselines both use the tree as a classifier:
        // classes are the reward values themselves (0/1 or 1..5).
        const DecisionTree tree =
            DecisionTree::fit(x_train, y_train, TreeTask::classify, params.tree);
        for (std::size_t i = params.train_n; i < records.size(); ++i) {
            const auto x = detail_eval::static_input(schema, records[i], arms);
            log.entries.push_back(
                LogEntry{records[i].position, tree.predict(x), records[i].reward});
        }
    } else {
        const OlsModel ols = ols_fit(x_train, y_train);
        for (std::size_t i = params.train_n; i < records.size(); ++i) {
            const auto x = detail_eval::static_input(schema, records[i], arms);
            log.entries.push_back(
                LogEntry{records[i].position, ols.predict(x), records[i].reward});
        }
    }
    return log;
}

// One shared SGD model over context + arm coordinate: warm up on the first
// train_n records, then predict-then-fit on the rest. The single model
// always has weights, so every post-warmup record is scored.
inline PredictionLog run_single_sgd(const ContextSchema& schema,
                                    std::span<const InteractionRecord> records, RewardKind task,
                                    const ProtocolParams& params = {}) {
    if (records.size() <= params.train_n)
        throw config_error("dataset holds " + std::to_string(records.size()) +
                           " records, need more than train_n = " + std::to_string(params.train_n));

    const LossMode mode = task == RewardKind::click ? LossMode::logistic : LossMode::squared;
    SgdLinear model(schema.size() + 1, mode, params.eta, params.l2);
    std::unordered_map<std::string, std::size_t> arms;  // first-seen, grows with the stream

    const auto make_input = [&](const InteractionRecord& r) {
        const auto [it, inserted] = arms.emplace(r.arm.label, arms.size());
        std::vector<double> x = normalize_context(schema, r.raw_context);
        x.push_back(arm_feature(ArmId{r.arm.label, it->second}, arms.size()));
        return x;
    };
    const auto scale = [&](double reward) {
        return task == RewardKind::rating ? (reward - 1.0) / 4.0 : reward;
    };
    const auto descale = [&](double p) {
        return task == RewardKind::rating ? 1.0 + 4.0 * p : p;
    };

    PredictionLog log;
    log.task = task;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto x = make_input(records[i]);
        if (i >= params.train_n)
            log.entries.push_back(
                LogEntry{records[i].position, descale(model.predict(x)), records[i].reward});
        model.partial_fit(x, scale(records[i].reward), records[i].position);
    }
    return log;
}

// One algorithm's row of a comparison: the (position-filtered) log plus the
// derived metrics. Metrics are absent when the shared log is empty.
struct AlgoReport {
    Algo algo = Algo::bandit_array;
    PredictionLog log;
    AccuracySeries series;
    std::optional<double> avg_accuracy;
    std::optional<double> rmse_value;
    std::vector<double> rounds;  // empty when the log is shorter than one round
};

struct Comparison {
    RewardKind task = RewardKind::click;
    std::size_t train_n = 0;
    std::vector<std::int64_t> positions;  // evaluation positions shared by all algorithms
    std::vector<AlgoReport> reports;
};

// Metrics over a finished log. Rounds are computed only when at least one
// full round fits.
inline AlgoReport make_report(Algo algo, PredictionLog log, const ProtocolParams& params = {}) {
    AlgoReport report;
    report.algo = algo;
    report.series = windowed_accuracy(log, params.window_size, params.rating_tolerance);
    if (!log.entries.empty()) {
        report.avg_accuracy = average_accuracy(log, params.rating_tolerance);
        report.rmse_value = rmse(log);
        if (log.entries.size() >= params.round_size)
            report.rounds = rounds_rmse(log, params.round_size, params.rounds);
    }
    report.log = std::move(log);
    return report;
}

namespace detail_eval {

inline PredictionLog filter_log(const PredictionLog& log,
                                const std::vector<std::int64_t>& positions) {
    PredictionLog out;
    out.task = log.task;
    out.cold_start_count = log.cold_start_count;
    std::size_t p = 0;
    for (const LogEntry& e : log.entries) {
        while (p < positions.size() && positions[p] < e.position) ++p;
        if (p < positions.size() && positions[p] == e.position) out.entries.push_back(e);
    }
    return out;
}

}  // namespace detail_eval

// Run every requested algorithm over the same dataset, restrict all logs to
// the evaluation positions every algorithm scored (the bandit array skips
// post-warmup cold starts), and compute metrics over that shared
// subsequence.
inline Comparison compare_protocol(const ContextSchema& schema,
                                   std::span<const InteractionRecord> records, RewardKind task,
                                   const std::vector<Algo>& algos,
                                   const ProtocolParams& params = {}) {
    if (algos.empty()) throw config_error("no algorithms requested");
    if (records.size() <= params.train_n)
        throw config_error("dataset holds " + std::to_string(records.size()) +
                           " records, need more than train_n = " + std::to_string(params.train_n));

    std::vector<PredictionLog> logs;
    for (Algo algo : algos) {
        switch (algo) {
            case Algo::static_tree:
            case Algo::static_ols:
                logs.push_back(run_static(schema, records, task, algo, params));
                break;
            case Algo::online_sgd:
                logs.push_back(run_single_sgd(schema, records, task, params));
                break;
            case Algo::bandit_array: {
                ArmLearnerArray array(schema, task, params.eta, params.l2);
                logs.push_back(array.run_prequential(records, params.train_n));
                break;
            }
        }
    }

    Comparison cmp;
    cmp.task = task;
    cmp.train_n = params.train_n;
    std::vector<std::int64_t> shared;
    for (const LogEntry& e : logs[0].entries) shared.push_back(e.position);
    for (std::size_t i = 1; i < logs.size(); ++i) {
        std::vector<std::int64_t> next, merged;
        for (const LogEntry& e : logs[i].entries) next.push_back(e.position);
        std::set_intersection(shared.begin(), shared.end(), next.begin(), next.end(),
                              std::back_inserter(merged));
        shared = std::move(merged);
    }
    cmp.positions = shared;
    for (std::size_t i = 0; i < logs.size(); ++i)
        cmp.reports.push_back(
            make_report(algos[i], detail_eval::filter_log(logs[i], shared), params));
    return cmp;
}

namespace detail_eval {

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open '" + path.string() + "' for writing");
    return out;
}

inline void close_out(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw io_error("write failed for '" + path.string() + "'");
}

}  // namespace detail_eval

// Report files for one algorithm run: accuracy_series.csv (with the 0.70
// presentation flag), rmse_rounds.csv, a gnuplot data file, and summary.txt.
inline void emit_report(const AlgoReport& report, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw io_error("cannot create directory '" + out_dir.string() + "': " + ec.message());

    {
        const auto path = out_dir / "accuracy_series.csv";
        auto out = detail_eval::open_out(path);
        out << "window_index,accuracy,above_0.70\n";
        for (std::size_t i = 0; i < report.series.values.size(); ++i)
            out << (i + 1) << ',' << detail::fmt6(report.series.values[i]) << ','
                << (report.series.values[i] > 0.70 ? "above" : "below") << '\n';
        detail_eval::close_out(out, path);
    }
    {
        const auto path = out_dir / "accuracy_series.dat";
        auto out = detail_eval::open_out(path);
        out << "# window_index accuracy\n";
        for (std::size_t i = 0; i < report.series.values.size(); ++i)
            out << (i + 1) << ' ' << detail::fmt6(report.series.values[i]) << '\n';
        detail_eval::close_out(out, path);
    }
    {
        const auto path = out_dir / "rmse_rounds.csv";
        auto out = detail_eval::open_out(path);
        out << "round,rmse\n";
        for (std::size_t i = 0; i < report.rounds.size(); ++i)
            out << (i + 1) << ',' << detail::fmt6(report.rounds[i]) << '\n';
        detail_eval::close_out(out, path);
    }
    {
        const auto path = out_dir / "summary.txt";
        auto out = detail_eval::open_out(path);
        out << "algorithm " << algo_name(report.algo) << '\n';
        out << "task " << (report.log.task == RewardKind::click ? "click" : "rating") << '\n';
        out << "entries " << report.log.entries.size() << '\n';
        out << "cold_starts " << report.log.cold_start_count << '\n';
        if (report.avg_accuracy)
            out << "average_accuracy " << detail::fmt6(*report.avg_accuracy) << '\n';
        if (report.rmse_value) out << "rmse " << detail::fmt6(*report.rmse_value) << '\n';
        if (!report.rounds.empty()) {
            out << "rmse_rounds";
            for (double r : report.rounds) out << ' ' << detail::fmt6(r);
            out << '\n';
        }
        detail_eval::close_out(out, path);
    }
}

// comparison.csv: one row per algorithm; round columns are padded to the
// widest report, blank where a report has fewer rounds.
inline void write_comparison_csv(const Comparison& cmp, const std::filesystem::path& path) {
    auto out = detail_eval::open_out(path);
    std::size_t max_rounds = 0;
    for (const AlgoReport& r : cmp.reports) max_rounds = std::max(max_rounds, r.rounds.size());
    out << "algorithm,average_accuracy,rmse";
    for (std::size_t i = 1; i <= max_rounds; ++i) out << ",round_" << i;
    out << '\n';
    for (const AlgoReport& r : cmp.reports) {
        out << algo_name(r.algo) << ','
            << (r.avg_accuracy ? detail::fmt6(*r.avg_accuracy) : std::string()) << ','
            << (r.rmse_value ? detail::fmt6(*r.rmse_value) : std::string());
        for (std::size_t i = 0; i < max_rounds; ++i)
            out << ',' << (i < r.rounds.size() ? detail::fmt6(r.rounds[i]) : std::string());
        out << '\n';
    }
    detail_eval::close_out(out, path);
}

}  // namespace cb
