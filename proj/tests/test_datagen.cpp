#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cb/datagen.hpp"
#include "support/oracles.hpp"

using namespace cb;
using namespace cb::datagen;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void spit(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

GeneratorConfig flat_config(double p, std::int64_t rows) {
    GeneratorConfig config;
    config.n_rows = rows;
    config.seed = 7;
    RegimeSpec regime;
    regime.start_row = 0;
    for (int g = 0; g < 2; ++g)
        for (int b = 0; b < 3; ++b)
            for (int c = 0; c < 4; ++c) regime.cell(g, b, c) = p;
    config.regimes = {regime};
    return config;
}

}  // namespace

TEST_CASE("age buckets split at 30 and 60") {
    REQUIRE(age_bucket(13) == 0);
    REQUIRE(age_bucket(29) == 0);
    REQUIRE(age_bucket(30) == 1);
    REQUIRE(age_bucket(60) == 1);
    REQUIRE(age_bucket(61) == 2);
    REQUIRE(age_bucket(90) == 2);
}

TEST_CASE("generator output respects its domains") {
    const auto records = generate(default_config());
    REQUIRE(records.size() == 5000);
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        REQUIRE(r.position == static_cast<std::int64_t>(i) + 1);
        const double age = std::get<double>(r.raw_context.at(0));
        REQUIRE(age >= 13.0);
        REQUIRE(age <= 90.0);
        const std::string& gender = std::get<std::string>(r.raw_context.at(1));
        REQUIRE((gender == "f" || gender == "m"));
        REQUIRE((r.reward == 0.0 || r.reward == 1.0));
        bool known = false;
        for (const char* c : kCategories) known |= r.arm.label == c;
        REQUIRE(known);
    }
}

TEST_CASE("degenerate probability tables saturate the rewards") {
    for (const auto& r : generate(flat_config(1.0, 400))) REQUIRE(r.reward == 1.0);
    for (const auto& r : generate(flat_config(0.0, 400))) REQUIRE(r.reward == 0.0);
}

TEST_CASE("the default table drifts the health arm at the midpoint") {
    const auto records = generate(default_config());
    std::size_t n_before = 0, clicks_before = 0, n_after = 0, clicks_after = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].arm.label != "health") continue;
        if (i < 2500) {
            ++n_before;
            clicks_before += records[i].reward == 1.0;
        } else {
            ++n_after;
            clicks_after += records[i].reward == 1.0;
        }
    }
    const double rate_after = static_cast<double>(clicks_after) / static_cast<double>(n_after);
    REQUIRE(rate_after == Catch::Approx(0.9).margin(0.05));
    const double rate_before =
        static_cast<double>(clicks_before) / static_cast<double>(n_before);
    REQUIRE(rate_before < 0.3);
}

TEST_CASE("every category lands near a quarter of the stream") {
    const auto records = generate(default_config());
    std::size_t counts[4] = {0, 0, 0, 0};
    for (const auto& r : records)
        for (std::size_t c = 0; c < 4; ++c)
            if (r.arm.label == kCategories[c]) ++counts[c];
    for (const std::size_t n : counts) {
        const double share = static_cast<double>(n) / 5000.0;
        REQUIRE(share == Catch::Approx(0.25).margin(0.02));
    }
}

TEST_CASE("the seeded stream is frozen") {
    const auto records = generate(default_config());
    // anchors pinned once and kept: any drift in the RNG or draw order breaks this
    const auto& first = records[0];
    REQUIRE(std::get<double>(first.raw_context[0]) == 25.0);
    REQUIRE(std::get<std::string>(first.raw_context[1]) == "m");
    REQUIRE(first.arm.label == "movies");
    REQUIRE(first.reward == 1.0);
    double clicks = 0;
    for (const auto& r : records) clicks += r.reward;
    REQUIRE(clicks == 3087.0);
}

TEST_CASE("identical seeds write byte-identical files") {
    oracle::TempDir dir;
    write_csv(generate(default_config()), dir.file("a.csv"));
    write_csv(generate(default_config()), dir.file("b.csv"));
    REQUIRE(slurp(dir.file("a.csv")) == slurp(dir.file("b.csv")));

    auto other = default_config();
    other.seed = 43;
    write_csv(generate(other), dir.file("c.csv"));
    REQUIRE(slurp(dir.file("a.csv")) != slurp(dir.file("c.csv")));
}

TEST_CASE("csv write/read round trip is the identity") {
    oracle::TempDir dir;
    const auto records = generate([] {
        auto c = default_config();
        c.n_rows = 500;
        return c;
    }());
    write_csv(records, dir.file("d.csv"));
    const auto back = read_csv(dir.file("d.csv"));
    REQUIRE(back.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        REQUIRE(back[i].position == records[i].position);
        REQUIRE(back[i].raw_context == records[i].raw_context);
        REQUIRE(back[i].arm.label == records[i].arm.label);
        REQUIRE(back[i].arm.index == records[i].arm.index);
        REQUIRE(back[i].reward == records[i].reward);
    }
}

TEST_CASE("csv layout is the four-column dialect") {
    oracle::TempDir dir;
    InteractionRecord r;
    r.position = 1;
    r.raw_context = {29.0, std::string("m")};
    r.arm = ArmId{"health", 0};
    r.reward = 0.0;
    write_csv({r}, dir.file("one.csv"));
    REQUIRE(slurp(dir.file("one.csv")) == "gender,age,recommendation,reward\nm,29,health,0\n");

    write_csv({}, dir.file("empty.csv"));
    REQUIRE(slurp(dir.file("empty.csv")) == "gender,age,recommendation,reward\n");
}

TEST_CASE("csv reader tolerates header case and an index column") {
    oracle::TempDir dir;
    spit(dir.file("up.csv"), "Gender,Age,Recommendation,Reward\nf,31,news,1\n");
    auto records = read_csv(dir.file("up.csv"));
    REQUIRE(records.size() == 1);
    REQUIRE(records[0].arm.label == "news");

    spit(dir.file("idx.csv"), "index,gender,age,recommendation,reward\n0,m,29,health,0\n");
    records = read_csv(dir.file("idx.csv"));
    REQUIRE(records.size() == 1);
    REQUIRE(std::get<double>(records[0].raw_context[0]) == 29.0);

    spit(dir.file("anon.csv"), ",gender,age,recommendation,reward\n7,m,29,health,1\n");
    records = read_csv(dir.file("anon.csv"));
    REQUIRE(records.size() == 1);
    REQUIRE(records[0].reward == 1.0);
}

TEST_CASE("csv reader reports malformed input with line numbers") {
    oracle::TempDir dir;
    spit(dir.file("h.csv"), "gender,age,clicks\n");
    REQUIRE_THROWS_AS(read_csv(dir.file("h.csv")), parse_error);

    spit(dir.file("g.csv"), "gender,age,recommendation,reward\nq,29,health,0\n");
    REQUIRE_THROWS_WITH(read_csv(dir.file("g.csv")),
                        Catch::Matchers::ContainsSubstring("line 2"));

    spit(dir.file("a.csv"), "gender,age,recommendation,reward\nm,old,health,0\n");
    REQUIRE_THROWS_AS(read_csv(dir.file("a.csv")), parse_error);

    spit(dir.file("c.csv"), "gender,age,recommendation,reward\nm,29,gardening,0\n");
    REQUIRE_THROWS_AS(read_csv(dir.file("c.csv")), schema_error);

    spit(dir.file("r.csv"), "gender,age,recommendation,reward\nm,29,health,2\n");
    REQUIRE_THROWS_AS(read_csv(dir.file("r.csv")), parse_error);

    REQUIRE_THROWS_AS(read_csv(dir.file("missing.csv")), io_error);
}

TEST_CASE("config validation catches inconsistent tables") {
    REQUIRE_THROWS_AS(validate(flat_config(0.5, 0)), config_error);
    REQUIRE_THROWS_AS(validate(flat_config(1.5, 10)), config_error);

    auto bad_start = flat_config(0.5, 10);
    bad_start.regimes[0].start_row = 5;
    REQUIRE_THROWS_AS(validate(bad_start), config_error);

    auto unordered = flat_config(0.5, 10);
    unordered.regimes.push_back(unordered.regimes[0]);
    unordered.regimes[1].start_row = 0;
    REQUIRE_THROWS_AS(validate(unordered), config_error);

    auto ages = flat_config(0.5, 10);
    ages.age_min = 50;
    ages.age_max = 20;
    REQUIRE_THROWS_AS(validate(ages), config_error);
}

TEST_CASE("config text round trip") {
    const GeneratorConfig config = default_config();
    const std::string text = write_config(config);
    const GeneratorConfig parsed = parse_config(text);
    REQUIRE(parsed.n_rows == config.n_rows);
    REQUIRE(parsed.seed == config.seed);
    REQUIRE(parsed.age_min == config.age_min);
    REQUIRE(parsed.age_max == config.age_max);
    REQUIRE(parsed.regimes.size() == config.regimes.size());
    for (std::size_t i = 0; i < config.regimes.size(); ++i) {
        REQUIRE(parsed.regimes[i].start_row == config.regimes[i].start_row);
        for (int g = 0; g < 2; ++g)
            for (int b = 0; b < 3; ++b)
                for (int c = 0; c < 4; ++c)
                    REQUIRE(parsed.regimes[i].cell(g, b, c) == config.regimes[i].cell(g, b, c));
    }
}

TEST_CASE("config wildcards fill and later lines override") {
    const GeneratorConfig config = parse_config(
        "rows 100\n"
        "seed 9\n"
        "regime 0\n"
        "prob * * * 0.5\n"
        "prob m * health 0.9\n"
        "regime 50\n"
        "prob * * news 0.1\n");
    REQUIRE(config.n_rows == 100);
    REQUIRE(config.regimes.size() == 2);
    // wildcard base
    REQUIRE(config.regimes[0].cell(0, 1, 0) == 0.5);
    // the override narrows to gender m, health only
    const int health = 3;
    REQUIRE(config.regimes[0].cell(1, 0, health) == 0.9);
    REQUIRE(config.regimes[0].cell(0, 0, health) == 0.5);
    // the second regime inherits, then changes news
    REQUIRE(config.regimes[1].start_row == 50);
    REQUIRE(config.regimes[1].cell(1, 0, health) == 0.9);
    REQUIRE(config.regimes[1].cell(0, 2, 0) == 0.1);
}

TEST_CASE("config parsing rejects incomplete or malformed tables") {
    REQUIRE_THROWS_AS(parse_config("rows 10\nregime 0\nprob m <30 news 0.5\n"), config_error);
    REQUIRE_THROWS_AS(parse_config("rows 10\n"), config_error);
    REQUIRE_THROWS_AS(parse_config("rows 10\nregime 0\nprob * * * 2.0\n"), config_error);
    REQUIRE_THROWS_AS(parse_config("bogus 1\n"), parse_error);
    REQUIRE_THROWS_AS(parse_config("rows 10\nprob * * * 0.5\n"), parse_error);
}
