#pragma once

#include <algorithm>
#include <cstdint>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "cb/errors.hpp"
#include "cb/text.hpp"

namespace cb {

// One context feature: either a bounded numeric value or an ordered category
// list. The category order is fixed in the schema (sorted when built from
// data), never assigned first-seen, so context vectors do not depend on
// record order.
struct FeatureSpec {
    enum class Kind { numeric, categorical };

    std::string name;
    Kind kind = Kind::numeric;
    double lower = 0.0;
    double upper = 1.0;
    std::vector<std::string> categories;

    static FeatureSpec numeric(std::string name, double lower, double upper) {
        if (name.empty()) throw schema_error("feature name must be non-empty");
        if (!(lower < upper))
            throw schema_error("feature '" + name + "': numeric bounds require lower < upper");
        FeatureSpec f;
        f.name = std::move(name);
        f.kind = Kind::numeric;
        f.lower = lower;
        f.upper = upper;
        return f;
    }

    static FeatureSpec categorical(std::string name, std::vector<std::string> categories) {
        if (name.empty()) throw schema_error("feature name must be non-empty");
        if (categories.empty())
            throw schema_error("feature '" + name + "': category list must be non-empty");
        for (std::size_t i = 0; i < categories.size(); ++i)
            for (std::size_t j = i + 1; j < categories.size(); ++j)
                if (categories[i] == categories[j])
                    throw schema_error("feature '" + name + "': duplicate category '" +
                                       categories[i] + "'");
        FeatureSpec f;
        f.name = std::move(name);
        f.kind = Kind::categorical;
        f.categories = std::move(categories);
        return f;
    }
};

// Ordered feature list; the order defines the context-vector layout.
struct ContextSchema {
    std::vector<FeatureSpec> features;

    ContextSchema() = default;
    explicit ContextSchema(std::vector<FeatureSpec> f) : features(std::move(f)) {
        for (std::size_t i = 0; i < features.size(); ++i)
            for (std::size_t j = i + 1; j < features.size(); ++j)
                if (features[i].name == features[j].name)
                    throw schema_error("duplicate feature name '" + features[i].name + "'");
    }

    std::size_t size() const { return features.size(); }
};

using RawValue = std::variant<double, std::string>;
using RawContext = std::vector<RawValue>;

// Normalized context; every component lies in [0, 1].
using ContextVector = std::vector<double>;

struct ArmId {
    std::string label;
    std::size_t index = 0;  // stable within one run, assigned in first-seen order
};

// One logged event of a stream: position x, raw context, arm pulled, reward.
struct InteractionRecord {
    std::int64_t position = 0;  // 1-based, strictly increasing within a stream
    RawContext raw_context;
    ArmId arm;
    double reward = 0.0;  // {0,1} for click data, [1,5] for rating data
};

enum class RewardKind { click, rating };

struct LogEntry {
    std::int64_t position;
    double predicted;
    double actual;
};

// Aligned predicted/actual reward pairs; the input to every metric.
struct PredictionLog {
    RewardKind task = RewardKind::click;
    std::vector<LogEntry> entries;     // positions strictly increasing
    std::size_t cold_start_count = 0;  // post-warmup records skipped for lack of a learner
};

// Min-max normalization into [0, 1]. Numeric values outside their bounds
// clamp instead of erroring so a drifting stream never aborts a run.
// A categorical value at position i of a K-item list maps to i/(K-1), 0 when K == 1.
inline ContextVector normalize_context(const ContextSchema& schema, const RawContext& raw) {
    if (raw.size() != schema.size())
        throw arity_error("context has " + std::to_string(raw.size()) +
                          " values, schema expects " + std::to_string(schema.size()));
    ContextVector out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const FeatureSpec& spec = schema.features[i];
        if (spec.kind == FeatureSpec::Kind::numeric) {
            const double* v = std::get_if<double>(&raw[i]);
            if (v == nullptr)
                throw schema_error("feature '" + spec.name + "' expects a numeric value");
            const double scaled = (*v - spec.lower) / (spec.upper - spec.lower);
            out.push_back(std::clamp(scaled, 0.0, 1.0));
        } else {
            const std::string* v = std::get_if<std::string>(&raw[i]);
            if (v == nullptr)
                throw schema_error("feature '" + spec.name + "' expects a categorical value");
            const auto it = std::find(spec.categories.begin(), spec.categories.end(), *v);
            if (it == spec.categories.end())
                throw schema_error("feature '" + spec.name + "': unknown category '" + *v + "'");
            const auto idx = static_cast<std::size_t>(it - spec.categories.begin());
            const std::size_t k = spec.categories.size();
            out.push_back(k == 1 ? 0.0
                                 : static_cast<double>(idx) / static_cast<double>(k - 1));
        }
    }
    return out;
}

// The arm identity appended to the feature vector, scaled into [0, 1] over
// the known arm count.
inline double arm_feature(const ArmId& arm, std::size_t total_arms) {
    if (total_arms < 1) throw arity_error("total_arms must be >= 1");
    if (arm.index >= total_arms)
        throw arity_error("arm index " + std::to_string(arm.index) + " out of range for " +
                          std::to_string(total_arms) + " arms");
    if (total_arms == 1) return 0.0;
    return static_cast<double>(arm.index) / static_cast<double>(total_arms - 1);
}

// Schema config format: one feature per line,
//   <name> numeric <lower> <upper>
//   <name> categorical <cat1> <cat2> ...
inline std::string write_schema(const ContextSchema& schema) {
    std::string out;
    for (const FeatureSpec& f : schema.features) {
        out += f.name;
        if (f.kind == FeatureSpec::Kind::numeric) {
            out += " numeric " + detail::fmt17(f.lower) + " " + detail::fmt17(f.upper);
        } else {
            out += " categorical";
            for (const std::string& c : f.categories) out += " " + c;
        }
        out += '\n';
    }
    return out;
}

inline ContextSchema parse_schema(const std::string& text) {
    std::vector<FeatureSpec> features;
    std::size_t line_no = 0;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        const auto trimmed = detail::trim(line);
        if (trimmed.empty() || trimmed.front() == '#') continue;
        const auto tokens = detail::split(std::string(trimmed), ' ');
        if (tokens.size() < 2) throw parse_error("expected '<name> <kind> <params>'", line_no);
        const std::string& name = tokens[0];
        const std::string& kind = tokens[1];
        if (kind == "numeric") {
            double lo = 0, hi = 0;
            if (tokens.size() != 4 || !detail::parse_double(tokens[2], lo) ||
                !detail::parse_double(tokens[3], hi))
                throw parse_error("numeric feature needs '<lower> <upper>'", line_no);
            features.push_back(FeatureSpec::numeric(name, lo, hi));
        } else if (kind == "categorical") {
            if (tokens.size() < 3)
                throw parse_error("categorical feature needs at least one category", line_no);
            features.push_back(FeatureSpec::categorical(
                name, std::vector<std::string>(tokens.begin() + 2, tokens.end())));
        } else {
            throw parse_error("unknown feature kind '" + kind + "'", line_no);
        }
    }
    return ContextSchema(std::move(features));
}

inline std::uint64_t schema_hash(const ContextSchema& schema) {
    return detail::fnv1a(write_schema(schema));
}

}  // namespace cb
