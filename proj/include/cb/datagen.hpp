#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "cb/core.hpp"
#include "cb/rng.hpp"

namespace cb::datagen {

inline constexpr std::array<const char*, 2> kGenders = {"f", "m"};
inline constexpr std::array<const char*, 3> kAgeBuckets = {"<30", "30-60", ">60"};
inline constexpr std::array<const char*, 4> kCategories = {"news", "movies", "sports", "health"};

inline int age_bucket(int age) { return age < 30 ? 0 : age <= 60 ? 1 : 2; }

// One regime of the piecewise preference table: from start_row on, the click
// probability for every (gender, age bucket, category) cell.
struct RegimeSpec {
    std::int64_t start_row = 0;  // 0-based row where the regime takes effect
    double click_prob[2][3][4] = {};

    double& cell(int gender, int bucket, int category) {
        return click_prob[gender][bucket][category];
    }
    double cell(int gender, int bucket, int category) const {
        return click_prob[gender][bucket][category];
    }
};

struct GeneratorConfig {
    std::vector<RegimeSpec> regimes;
    std::int64_t n_rows = 5000;
    std::uint64_t seed = 42;
    int age_min = 13;
    int age_max = 90;
};

inline void validate(const GeneratorConfig& config) {
    if (config.n_rows < 1) throw config_error("n_rows must be >= 1");
    if (config.regimes.empty()) throw config_error("at least one regime is required");
    if (config.regimes.front().start_row != 0)
        throw config_error("first regime must start at row 0");
    for (std::size_t i = 1; i < config.regimes.size(); ++i)
        if (config.regimes[i].start_row <= config.regimes[i - 1].start_row)
            throw config_error("regime start rows must be strictly increasing");
    for (const RegimeSpec& regime : config.regimes)
        for (int g = 0; g < 2; ++g)
            for (int b = 0; b < 3; ++b)
                for (int c = 0; c < 4; ++c) {
                    const double p = regime.cell(g, b, c);
                    if (!(p >= 0.0 && p <= 1.0))
                        throw config_error(std::string("click probability for (") +
                                           kGenders[g] + ", " + kAgeBuckets[b] + ", " +
                                           kCategories[c] + ") must be in [0,1]");
                }
    if (config.age_min < 0 || config.age_min > config.age_max)
        throw config_error("age range must satisfy 0 <= min <= max");
}

// Two regimes; the only drift is the health category jumping 0.2 -> 0.9 for
// every cell at row 2500. The stationary arms key on gender with a mild age
// tilt inside each slice — news clicks come from women, sports clicks from
// men, movies click at a high flat-ish rate for everyone — so one online
// pass is enough to track them while the drift still punishes anything
// trained once and frozen.
inline GeneratorConfig default_config() {
    GeneratorConfig config;
    RegimeSpec base;
    base.start_row = 0;
    const double news_f[3] = {0.93, 0.96, 0.98};
    const double news_m[3] = {0.02, 0.04, 0.07};
    const double movies_all[3] = {0.88, 0.90, 0.92};
    const double sports_f[3] = {0.07, 0.04, 0.02};
    const double sports_m[3] = {0.98, 0.96, 0.93};
    for (int b = 0; b < 3; ++b) {
        base.cell(0, b, 0) = news_f[b];
        base.cell(1, b, 0) = news_m[b];
        base.cell(0, b, 1) = movies_all[b];
        base.cell(1, b, 1) = movies_all[b];
        base.cell(0, b, 2) = sports_f[b];
        base.cell(1, b, 2) = sports_m[b];
        base.cell(0, b, 3) = 0.20;
        base.cell(1, b, 3) = 0.20;
    }
    RegimeSpec shifted = base;
    shifted.start_row = 2500;
    for (int g = 0; g < 2; ++g)
        for (int b = 0; b < 3; ++b) shifted.cell(g, b, 3) = 0.90;
    config.regimes = {base, shifted};
    return config;
}

// Context layout of the synthetic dataset: age then gender.
inline const ContextSchema& schema() {
    static const ContextSchema s{std::vector<FeatureSpec>{
        FeatureSpec::numeric("age", 0.0, 100.0),
        FeatureSpec::categorical("gender", {"f", "m"}),
    }};
    return s;
}

// Draw order per row: gender, age, category, reward — one splitmix64 draw
// each, so a seed fully determines the file.
inline std::vector<InteractionRecord> generate(const GeneratorConfig& config) {
    validate(config);
    SplitMix64 rng(config.seed);
    std::vector<InteractionRecord> records;
    records.reserve(static_cast<std::size_t>(config.n_rows));
    std::unordered_map<std::string, std::size_t> arm_index;
    std::size_t active = 0;
    for (std::int64_t row = 0; row < config.n_rows; ++row) {
        while (active + 1 < config.regimes.size() &&
               config.regimes[active + 1].start_row <= row)
            ++active;
        const int gender = static_cast<int>(rng.below(2));
        const int age = config.age_min +
                        static_cast<int>(rng.below(
                            static_cast<std::uint64_t>(config.age_max - config.age_min + 1)));
        const int category = static_cast<int>(rng.below(4));
        const double p = config.regimes[active].cell(gender, age_bucket(age), category);
        const double reward = rng.bernoulli(p) ? 1.0 : 0.0;

        const std::string label = kCategories[static_cast<std::size_t>(category)];
        const auto [it, inserted] = arm_index.emplace(label, arm_index.size());
        InteractionRecord rec;
        rec.position = row + 1;
        rec.raw_context = {static_cast<double>(age), std::string(kGenders[gender])};
        rec.arm = ArmId{label, it->second};
        rec.reward = reward;
        records.push_back(std::move(rec));
    }
    return records;
}

// CSV dialect: header `gender,age,recommendation,reward`, LF endings, no
// quoting. Rows look like `m,29,health,0`.
inline void write_csv(const std::vector<InteractionRecord>& records,
                      const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open '" + path.string() + "' for writing");
    out << "gender,age,recommendation,reward\n";
    for (const InteractionRecord& rec : records) {
        const double age = std::get<double>(rec.raw_context.at(0));
        const std::string& gender = std::get<std::string>(rec.raw_context.at(1));
        out << gender << ',' << static_cast<long long>(age) << ',' << rec.arm.label << ','
            << static_cast<int>(rec.reward) << '\n';
    }
    if (!out) throw io_error("write failed for '" + path.string() + "'");
}

inline std::vector<InteractionRecord> read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open '" + path.string() + "' for reading");
    std::string line;
    if (!std::getline(in, line)) throw parse_error("missing header", 1);

    // Header match is case-insensitive; a leading unnamed index column (as
    // written by some dataframe exports) is tolerated and skipped.
    auto header = detail::split(std::string(detail::trim(line)), ',');
    std::size_t skip = 0;
    if (!header.empty() && (header[0].empty() || detail::lower(header[0]) == "index"))
        skip = 1;
    const std::array<const char*, 4> expected = {"gender", "age", "recommendation", "reward"};
    if (header.size() != 4 + skip)
        throw parse_error("expected header gender,age,recommendation,reward", 1);
    for (std::size_t i = 0; i < 4; ++i)
        if (detail::lower(detail::trim(header[i + skip])) != expected[i])
            throw parse_error("expected header gender,age,recommendation,reward", 1);

    std::vector<InteractionRecord> records;
    std::unordered_map<std::string, std::size_t> arm_index;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split(std::string(detail::trim(line)), ',');
        if (fields.size() != 4 + skip)
            throw parse_error("expected " + std::to_string(4 + skip) + " fields, got " +
                                  std::to_string(fields.size()),
                              line_no);
        const std::string gender(detail::trim(fields[skip + 0]));
        if (gender != "f" && gender != "m")
            throw parse_error("gender must be 'f' or 'm', got '" + gender + "'", line_no);
        std::int64_t age = 0;
        if (!detail::parse_int(detail::trim(fields[skip + 1]), age))
            throw parse_error("age must be an integer", line_no);
        const std::string category(detail::trim(fields[skip + 2]));
        bool known = false;
        for (const char* c : kCategories) known |= category == c;
        if (!known)
            throw schema_error("unknown category '" + category + "' (line " +
                               std::to_string(line_no) + ")");
        std::int64_t reward = 0;
        if (!detail::parse_int(detail::trim(fields[skip + 3]), reward) ||
            (reward != 0 && reward != 1))
            throw parse_error("reward must be 0 or 1", line_no);

        const auto [it, inserted] = arm_index.emplace(category, arm_index.size());
        InteractionRecord rec;
        rec.position = static_cast<std::int64_t>(records.size()) + 1;
        rec.raw_context = {static_cast<double>(age), gender};
        rec.arm = ArmId{category, it->second};
        rec.reward = static_cast<double>(reward);
        records.push_back(std::move(rec));
    }
    return records;
}

// Generator config file: plain key-value lines. `regime <start_row>` opens a
// regime that starts as a copy of the previous one (the first starts empty);
// `prob <gender> <bucket> <category> <p>` fills cells, `*` matching every
// value of that key. Later lines override earlier ones within a regime.
//
//   rows 5000
//   seed 42
//   regime 0
//   prob * <30 news 0.05
//   ...
//   regime 2500
//   prob * * health 0.9
inline GeneratorConfig parse_config(const std::string& text) {
    GeneratorConfig config;
    config.regimes.clear();
    bool filled[2][3][4] = {};
    bool any_regime = false;

    const auto match_indices = [](const std::string& token,
                                  const auto& names) -> std::vector<int> {
        std::vector<int> out;
        if (token == "*") {
            for (int i = 0; i < static_cast<int>(names.size()); ++i) out.push_back(i);
            return out;
        }
        for (int i = 0; i < static_cast<int>(names.size()); ++i)
            if (token == names[static_cast<std::size_t>(i)]) out.push_back(i);
        return out;
    };

    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto trimmed = detail::trim(line);
        if (trimmed.empty() || trimmed.front() == '#') continue;
        const auto tokens = detail::split(std::string(trimmed), ' ');
        const std::string& key = tokens[0];
        if (key == "rows" || key == "seed" || key == "age_min" || key == "age_max") {
            std::int64_t v = 0;
            if (tokens.size() != 2 || !detail::parse_int(tokens[1], v))
                throw parse_error("'" + key + "' needs one integer value", line_no);
            if (key == "rows")
                config.n_rows = v;
            else if (key == "seed")
                config.seed = static_cast<std::uint64_t>(v);
            else if (key == "age_min")
                config.age_min = static_cast<int>(v);
            else
                config.age_max = static_cast<int>(v);
        } else if (key == "regime") {
            std::int64_t start = 0;
            if (tokens.size() != 2 || !detail::parse_int(tokens[1], start))
                throw parse_error("'regime' needs a start row", line_no);
            RegimeSpec next;
            next.start_row = start;
            if (!config.regimes.empty()) {
                const auto& prev = config.regimes.back();
                for (int g = 0; g < 2; ++g)
                    for (int b = 0; b < 3; ++b)
                        for (int c = 0; c < 4; ++c) next.cell(g, b, c) = prev.cell(g, b, c);
            }
            config.regimes.push_back(next);
            any_regime = true;
        } else if (key == "prob") {
            if (!any_regime) throw parse_error("'prob' before any 'regime' line", line_no);
            if (tokens.size() != 5)
                throw parse_error("'prob' needs '<gender> <bucket> <category> <p>'", line_no);
            const auto genders = match_indices(tokens[1], kGenders);
            const auto buckets = match_indices(tokens[2], kAgeBuckets);
            const auto categories = match_indices(tokens[3], kCategories);
            double p = 0;
            if (genders.empty() || buckets.empty() || categories.empty() ||
                !detail::parse_double(tokens[4], p))
                throw parse_error("bad 'prob' line", line_no);
            for (const int g : genders)
                for (const int b : buckets)
                    for (const int c : categories) {
                        config.regimes.back().cell(g, b, c) = p;
                        if (config.regimes.size() == 1) filled[g][b][c] = true;
                    }
        } else {
            throw parse_error("unknown config key '" + key + "'", line_no);
        }
    }

    if (!any_regime) throw config_error("config defines no regimes");
    for (int g = 0; g < 2; ++g)
        for (int b = 0; b < 3; ++b)
            for (int c = 0; c < 4; ++c)
                if (!filled[g][b][c])
                    throw config_error(std::string("first regime leaves (") + kGenders[g] +
                                       ", " + kAgeBuckets[b] + ", " + kCategories[c] +
                                       ") unset");
    validate(config);
    return config;
}

inline GeneratorConfig read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open '" + path.string() + "' for reading");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

inline std::string write_config(const GeneratorConfig& config) {
    std::string out;
    out += "rows " + std::to_string(config.n_rows) + "\n";
    out += "seed " + std::to_string(config.seed) + "\n";
    out += "age_min " + std::to_string(config.age_min) + "\n";
    out += "age_max " + std::to_string(config.age_max) + "\n";
    for (const RegimeSpec& regime : config.regimes) {
        out += "regime " + std::to_string(regime.start_row) + "\n";
        for (int g = 0; g < 2; ++g)
            for (int b = 0; b < 3; ++b)
                for (int c = 0; c < 4; ++c)
                    out += std::string("prob ") + kGenders[g] + " " + kAgeBuckets[b] + " " +
                           kCategories[c] + " " + detail::fmt17(regime.cell(g, b, c)) + "\n";
    }
    return out;
}

}  // namespace cb::datagen
