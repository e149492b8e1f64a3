#pragma once

#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cb/core.hpp"
#include "cb/learners.hpp"

namespace cb {

struct StepOutcome {
    ArmId arm;
    std::optional<double> prediction;  // absent on arm cold start
    bool cold_start = false;
};

// The array of per-arm online learners. Each incoming record routes to the
// learner for its arm: an unseen arm gets a fresh zero-initialized learner
// fitted once (no prediction emitted); a known arm predicts first, then fits
// on the same record. Rating rewards are scaled to [0,1] via (r-1)/4 before
// fitting and predictions are descaled on the way out. Click data trains
// logistic learners, rating data squared-loss learners.
//
// The input vector is (normalized context, arm feature), the arm feature
// scaled over the arms known to the array so far. Single-writer: steps must
// be applied in stream order.
class ArmLearnerArray {
public:
    ArmLearnerArray(ContextSchema schema, RewardKind task, double eta = 0.01, double l2 = 1e-4)
        : schema_(std::move(schema)),
          task_(task),
          mode_(task == RewardKind::click ? LossMode::logistic : LossMode::squared),
          eta_(eta),
          l2_(l2) {}

    StepOutcome step(const InteractionRecord& record) {
        const ContextVector context = normalize_context(schema_, record.raw_context);
        if (record.arm.label.empty()) throw schema_error("arm label must be non-empty");

        const auto it = arm_index_.find(record.arm.label);
        if (it == arm_index_.end()) {
            const std::size_t idx = known_arms_.size();
            known_arms_.push_back(ArmId{record.arm.label, idx});
            arm_index_.emplace(record.arm.label, idx);
            learners_.emplace_back(schema_.size() + 1, mode_, eta_, l2_);
            const std::vector<double> x = make_input(context, idx);
            learners_[idx].partial_fit(x, scale_reward(record.reward), record.position);
            return StepOutcome{known_arms_[idx], std::nullopt, true};
        }

        const std::size_t idx = it->second;
        const std::vector<double> x = make_input(context, idx);
        const double p = learners_[idx].predict(x);
        learners_[idx].partial_fit(x, scale_reward(record.reward), record.position);
        return StepOutcome{known_arms_[idx], descale(p), false};
    }

    // E[R | context, arm] from the arm's current learner. Does not create
    // learners: the caller owns the cold-start policy.
    double expected_reward(const RawContext& raw, const std::string& arm_label) const {
        const auto it = arm_index_.find(arm_label);
        if (it == arm_index_.end())
            throw unknown_arm_error("unknown arm '" + arm_label + "'");
        const ContextVector context = normalize_context(schema_, raw);
        const std::vector<double> x = make_input(context, it->second);
        return descale(learners_[it->second].predict(x));
    }

    // Convenience argmax over known arms; ties break to the lowest arm index.
    // The streaming protocol itself never selects arms.
    ArmId recommend(const RawContext& raw) const {
        if (known_arms_.empty()) throw unknown_arm_error("no arms seen yet");
        std::size_t best = 0;
        double best_reward = expected_reward(raw, known_arms_[0].label);
        for (std::size_t i = 1; i < known_arms_.size(); ++i) {
            const double r = expected_reward(raw, known_arms_[i].label);
            if (r > best_reward) {
                best_reward = r;
                best = i;
            }
        }
        return known_arms_[best];
    }

    // Test-then-train over a stream. The first warmup_n records fit without
    // logging; afterwards every emitted prediction is logged against the
    // actual reward and cold starts are tallied instead of logged.
    PredictionLog run_prequential(std::span<const InteractionRecord> stream,
                                  std::size_t warmup_n) {
        if (warmup_n > stream.size())
            throw arity_error("warmup " + std::to_string(warmup_n) + " exceeds stream length " +
                              std::to_string(stream.size()));
        PredictionLog log;
        log.task = task_;
        for (std::size_t i = 0; i < stream.size(); ++i) {
            StepOutcome outcome = [&] {
                try {
                    return step(stream[i]);
                } catch (const schema_error& e) {
                    throw schema_error(std::string(e.what()) + " (record " +
                                       std::to_string(stream[i].position) + ")");
                }
            }();
            if (i < warmup_n) continue;
            if (outcome.cold_start) {
                ++log.cold_start_count;
            } else {
                log.entries.push_back({stream[i].position, *outcome.prediction,
                                       stream[i].reward});
            }
        }
        return log;
    }

    const ContextSchema& schema() const { return schema_; }
    RewardKind task() const { return task_; }
    LossMode mode() const { return mode_; }
    double eta() const { return eta_; }
    double l2() const { return l2_; }
    const std::vector<ArmId>& known_arms() const { return known_arms_; }

    const SgdLinear* learner(const std::string& arm_label) const {
        const auto it = arm_index_.find(arm_label);
        return it == arm_index_.end() ? nullptr : &learners_[it->second];
    }

    // Snapshot: header (mode, schema hash, arm list in index order), then one
    // learner state line per arm.
    std::string export_snapshot() const {
        std::string out = "mode ";
        out += loss_mode_name(mode_);
        out += "\nschema_hash ";
        char hex[17];
        std::snprintf(hex, sizeof hex, "%016llx",
                      static_cast<unsigned long long>(schema_hash(schema_)));
        out += hex;
        out += "\narms";
        for (const ArmId& arm : known_arms_) out += " " + arm.label;
        out += '\n';
        for (const SgdLinear& learner : learners_) {
            out += "learner " + learner.export_state() + "\n";
        }
        return out;
    }

    static ArmLearnerArray import_snapshot(const std::string& text, ContextSchema schema) {
        std::istringstream in(text);
        std::string line;
        std::size_t line_no = 0;
        LossMode mode = LossMode::logistic;
        std::vector<std::string> arm_labels;
        std::vector<SgdLinear> learners;
        bool saw_mode = false, saw_hash = false, saw_arms = false;
        while (std::getline(in, line)) {
            ++line_no;
            const auto tokens = detail::split(std::string(detail::trim(line)), ' ');
            if (tokens.empty() || tokens[0].empty()) continue;
            if (tokens[0] == "mode") {
                if (tokens.size() != 2) throw parse_error("mode line needs one value", line_no);
                if (tokens[1] == "logistic")
                    mode = LossMode::logistic;
                else if (tokens[1] == "squared")
                    mode = LossMode::squared;
                else
                    throw parse_error("unknown mode '" + tokens[1] + "'", line_no);
                saw_mode = true;
            } else if (tokens[0] == "schema_hash") {
                if (tokens.size() != 2) throw parse_error("schema_hash line needs one value", line_no);
                char expected[17];
                std::snprintf(expected, sizeof expected, "%016llx",
                              static_cast<unsigned long long>(schema_hash(schema)));
                if (tokens[1] != expected)
                    throw schema_error("snapshot schema hash " + tokens[1] +
                                       " does not match the supplied schema");
                saw_hash = true;
            } else if (tokens[0] == "arms") {
                arm_labels.assign(tokens.begin() + 1, tokens.end());
                saw_arms = true;
            } else if (tokens[0] == "learner") {
                learners.push_back(
                    SgdLinear::import_state(line.substr(line.find(' ') + 1)));
            } else {
                throw parse_error("unknown snapshot line '" + tokens[0] + "'", line_no);
            }
        }
        if (!saw_mode || !saw_hash || !saw_arms)
            throw parse_error("snapshot needs mode, schema_hash and arms lines", 1);
        if (arm_labels.size() != learners.size())
            throw parse_error("snapshot has " + std::to_string(arm_labels.size()) +
                                  " arms but " + std::to_string(learners.size()) + " learners",
                              1);
        ArmLearnerArray array(std::move(schema),
                              mode == LossMode::logistic ? RewardKind::click
                                                         : RewardKind::rating);
        for (std::size_t i = 0; i < arm_labels.size(); ++i) {
            if (learners[i].mode() != mode)
                throw parse_error("learner mode differs from snapshot mode", 1);
            if (learners[i].n_features() != array.schema_.size() + 1)
                throw parse_error("learner arity does not match schema", 1);
            array.known_arms_.push_back(ArmId{arm_labels[i], i});
            array.arm_index_.emplace(arm_labels[i], i);
            array.learners_.push_back(learners[i]);
        }
        if (!array.learners_.empty()) {
            array.eta_ = array.learners_[0].eta();
            array.l2_ = array.learners_[0].l2();
        }
        return array;
    }

private:
    std::vector<double> make_input(const ContextVector& context, std::size_t arm_idx) const {
        std::vector<double> x(context);
        x.push_back(arm_feature(known_arms_[arm_idx], known_arms_.size()));
        return x;
    }

    double scale_reward(double r) const {
        return task_ == RewardKind::rating ? (r - 1.0) / 4.0 : r;
    }

    double descale(double p) const {
        return task_ == RewardKind::rating ? 1.0 + 4.0 * p : p;
    }

    ContextSchema schema_;
    RewardKind task_;
    LossMode mode_;
    double eta_;
    double l2_;
    std::vector<ArmId> known_arms_;  // first-seen order
    std::unordered_map<std::string, std::size_t> arm_index_;
    std::vector<SgdLinear> learners_;  // parallel to known_arms_
};

}  // namespace cb
