#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <vector>

#include "cb/core.hpp"
#include "cb/rng.hpp"

using namespace cb;

namespace {

ContextSchema demo_schema() {
    return ContextSchema({FeatureSpec::numeric("age", 0.0, 100.0),
                          FeatureSpec::categorical("gender", {"f", "m"})});
}

}  // namespace

TEST_CASE("feature specs validate their invariants") {
    REQUIRE_THROWS_AS(FeatureSpec::numeric("age", 1.0, 1.0), schema_error);
    REQUIRE_THROWS_AS(FeatureSpec::numeric("age", 2.0, 1.0), schema_error);
    REQUIRE_THROWS_AS(FeatureSpec::categorical("g", {}), schema_error);
    REQUIRE_THROWS_AS(FeatureSpec::categorical("g", {"a", "b", "a"}), schema_error);
    REQUIRE_NOTHROW(FeatureSpec::numeric("age", 0.0, 100.0));
    REQUIRE_NOTHROW(FeatureSpec::categorical("g", {"a", "b"}));
}

TEST_CASE("schemas reject duplicate feature names") {
    REQUIRE_THROWS_AS(ContextSchema({FeatureSpec::numeric("a", 0, 1),
                                     FeatureSpec::numeric("a", 0, 2)}),
                      schema_error);
    REQUIRE(demo_schema().size() == 2);
}

TEST_CASE("normalize_context maps numeric and categorical values") {
    const auto schema = demo_schema();
    REQUIRE(normalize_context(schema, {29.0, std::string("m")}) ==
            ContextVector{0.29, 1.0});
    REQUIRE(normalize_context(schema, {150.0, std::string("f")}) ==
            ContextVector{1.0, 0.0});
    REQUIRE(normalize_context(schema, {-5.0, std::string("f")}) ==
            ContextVector{0.0, 0.0});

    const ContextSchema only_age({FeatureSpec::numeric("age", 0.0, 100.0)});
    REQUIRE(normalize_context(only_age, {0.0}) == ContextVector{0.0});
}

TEST_CASE("normalize_context categorical index rule") {
    const ContextSchema schema({FeatureSpec::categorical("c", {"a", "b", "c", "d"})});
    REQUIRE(normalize_context(schema, {std::string("a")}) == ContextVector{0.0});
    REQUIRE(normalize_context(schema, {std::string("b")}) == ContextVector{1.0 / 3.0});
    REQUIRE(normalize_context(schema, {std::string("d")}) == ContextVector{1.0});

    const ContextSchema lone({FeatureSpec::categorical("c", {"only"})});
    REQUIRE(normalize_context(lone, {std::string("only")}) == ContextVector{0.0});
}

TEST_CASE("normalize_context error cases") {
    const auto schema = demo_schema();
    REQUIRE_THROWS_AS(normalize_context(schema, {29.0}), arity_error);
    REQUIRE_THROWS_AS(normalize_context(schema, {29.0, std::string("m"), 1.0}), arity_error);
    // unknown category names the feature
    REQUIRE_THROWS_WITH(normalize_context(schema, {29.0, std::string("x")}),
                        Catch::Matchers::ContainsSubstring("gender"));
    REQUIRE_THROWS_AS(normalize_context(schema, {29.0, std::string("x")}), schema_error);
    // wrong raw kind
    REQUIRE_THROWS_AS(normalize_context(schema, {std::string("29"), std::string("m")}),
                      schema_error);
    REQUIRE_THROWS_AS(normalize_context(schema, {29.0, 1.0}), schema_error);
}

TEST_CASE("normalize_context is idempotent on unit-bounded numerics") {
    const ContextSchema unit({FeatureSpec::numeric("u", 0.0, 1.0)});
    for (const double v : {0.0, 0.125, 0.5, 0.875, 1.0}) {
        const auto once = normalize_context(unit, {v});
        const auto twice = normalize_context(unit, {once[0]});
        REQUIRE(once == twice);
    }
}

TEST_CASE("normalized components always land in [0,1]") {
    const auto schema = demo_schema();
    SplitMix64 rng(2024);
    for (int i = 0; i < 200; ++i) {
        const double age = -50.0 + 200.0 * rng.uniform01();  // deliberately out of range too
        const std::string gender = rng.below(2) == 0 ? "f" : "m";
        const auto v = normalize_context(schema, {age, gender});
        REQUIRE(v.size() == 2);
        for (const double c : v) {
            REQUIRE(c >= 0.0);
            REQUIRE(c <= 1.0);
        }
    }
}

TEST_CASE("categorical codes depend on the schema, not the stream") {
    const auto schema = demo_schema();
    const double code_m = normalize_context(schema, {10.0, std::string("m")})[1];
    // process other records in between; the code for "m" cannot move
    for (int i = 0; i < 50; ++i)
        (void)normalize_context(schema, {static_cast<double>(i), std::string("f")});
    REQUIRE(normalize_context(schema, {90.0, std::string("m")})[1] == code_m);
}

TEST_CASE("arm_feature spreads arm indices over [0,1]") {
    REQUIRE(arm_feature(ArmId{"a", 0}, 4) == 0.0);
    REQUIRE(arm_feature(ArmId{"d", 3}, 4) == 1.0);
    REQUIRE(arm_feature(ArmId{"b", 1}, 4) == 1.0 / 3.0);
    REQUIRE(arm_feature(ArmId{"solo", 0}, 1) == 0.0);
    REQUIRE_THROWS_AS(arm_feature(ArmId{"a", 4}, 4), arity_error);
    REQUIRE_THROWS_AS(arm_feature(ArmId{"a", 0}, 0), arity_error);
}

TEST_CASE("schema text round trip preserves layout and hash") {
    const auto schema = demo_schema();
    const std::string text = write_schema(schema);
    const ContextSchema parsed = parse_schema(text);
    REQUIRE(write_schema(parsed) == text);
    REQUIRE(schema_hash(parsed) == schema_hash(schema));
    REQUIRE(parsed.size() == schema.size());
    REQUIRE(parsed.features[0].name == "age");
    REQUIRE(parsed.features[1].categories == std::vector<std::string>{"f", "m"});

    // normalization agrees through the round trip
    REQUIRE(normalize_context(parsed, {29.0, std::string("m")}) ==
            normalize_context(schema, {29.0, std::string("m")}));
}

TEST_CASE("schema parser reports the offending line") {
    REQUIRE_THROWS_WITH(parse_schema("age numeric 0 100\ngender bogus f m\n"),
                        Catch::Matchers::ContainsSubstring("line 2"));
    REQUIRE_THROWS_AS(parse_schema("age numeric 0\n"), parse_error);
    REQUIRE_THROWS_AS(parse_schema("lonely\n"), parse_error);
    // comments and blank lines are fine
    REQUIRE_NOTHROW(parse_schema("# comment\n\nage numeric 0 100\n"));
}
