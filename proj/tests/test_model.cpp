#include "ctxgraph/error.hpp"
#include "ctxgraph/model.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace ctxgraph;
using namespace testsupport;

namespace {

bool has_violation(const std::vector<std::string>& v, const std::string& needle) {
    return std::any_of(v.begin(), v.end(), [&](const std::string& s) { return s.find(needle) != std::string::npos; });
}

ParameterDef time_of_day() {
    ParameterDef d;
    d.name = "time";
    d.allowed_values = {"morning", "afternoon", "evening"};
    d.categorizer = RangeBinsCategorizer{{{6 * 60, 12 * 60, "morning"}, {12 * 60, 18 * 60, "afternoon"}}, "evening"};
    return d;
}

ParameterDef day_type() {
    ParameterDef d;
    d.name = "day";
    d.allowed_values = {"working_day", "sparing_day"};
    d.categorizer = ValueMapCategorizer{{{"Saturday", "sparing_day"}, {"Sunday", "sparing_day"}}, "working_day"};
    return d;
}

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no exception";
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(ValidateSchema, ClassroomFixtureIsValid) {
    const auto schema = classroom_schema();
    EXPECT_TRUE(validate_schema(schema).empty());
    EXPECT_EQ(schema.parameters.size(), 7u);
}

TEST(ValidateSchema, DuplicateParameterName) {
    auto schema = classroom_schema();
    auto dup = *schema.find("light");
    schema.parameters.push_back(dup);
    EXPECT_TRUE(has_violation(validate_schema(schema), "duplicate parameter name"));
}

TEST(ValidateSchema, AllWeightsZero) {
    auto schema = classroom_schema();
    for (auto& p : schema.parameters) p.weight = Rational(0);
    EXPECT_TRUE(has_violation(validate_schema(schema), "no positive weight"));
}

TEST(ValidateSchema, OtherViolations) {
    ParameterSchema s{"x", 1, {}};
    ParameterDef p;
    p.name = "a";
    p.category = ParameterCategory::Shared;
    s.parameters.push_back(p);
    const auto v = validate_schema(s);
    EXPECT_TRUE(has_violation(v, "no dynamic parameter"));
    EXPECT_TRUE(has_violation(v, "allowed_values"));

    s.parameters[0].allowed_values = {"on", "on=1"};
    s.parameters[0].weight = Rational(-1);
    s.parameters[0].categorizer = ValueMapCategorizer{{{"x", "nope"}}, std::nullopt};
    const auto w = validate_schema(s);
    EXPECT_TRUE(has_violation(w, "negative weight"));
    EXPECT_TRUE(has_violation(w, "nope"));
    EXPECT_GE(w.size(), 4u);
}

TEST(ValidateSchema, DoesNotMutate) {
    auto schema = classroom_schema();
    const auto copy = schema;
    (void)validate_schema(schema);
    EXPECT_EQ(schema, copy);
}

TEST(Categorize, TimeOfDayBins) {
    const auto def = time_of_day();
    EXPECT_EQ(categorize_reading(def, {0, "time", std::string("14:00")}), "afternoon");
    EXPECT_EQ(categorize_reading(def, {0, "time", std::string("06:00")}), "morning");
    EXPECT_EQ(categorize_reading(def, {0, "time", std::string("23:59")}), "evening");
    EXPECT_EQ(categorize_reading(def, {0, "time", 720.0}), "afternoon");
}

TEST(Categorize, IdentityAndValueMap) {
    ParameterDef light{"light", {"on", "off"}, ParameterCategory::Dynamic, Rational(1), IdentityCategorizer{}};
    EXPECT_EQ(categorize_reading(light, {0, "light", std::string("on")}), "on");
    EXPECT_EQ(code_of([&] { categorize_reading(light, {0, "light", std::string("dim")}); }),
              ErrorCode::UncategorizableReading);
    EXPECT_EQ(categorize_reading(day_type(), {0, "day", std::string("Wednesday")}), "working_day");
    EXPECT_EQ(categorize_reading(day_type(), {0, "day", std::string("Sunday")}), "sparing_day");

    ParameterDef level{"level", {"1", "2"}, ParameterCategory::Dynamic, Rational(1), std::nullopt};
    EXPECT_EQ(categorize_reading(level, {0, "level", 2.0}), "2");
}

TEST(Categorize, OutsideEveryBin) {
    ParameterDef d = time_of_day();
    std::get<RangeBinsCategorizer>(*d.categorizer).fallback.reset();
    EXPECT_EQ(code_of([&] { categorize_reading(d, {0, "time", std::string("03:00")}); }),
              ErrorCode::UncategorizableReading);
    EXPECT_EQ(code_of([&] { categorize_reading(d, {0, "time", std::string("noon")}); }),
              ErrorCode::UncategorizableReading);
}

TEST(Categorize, DeterministicAndTotalOverBins) {
    const auto def = time_of_day();
    Rng rng(11);
    std::uniform_real_distribution<double> minute(0, 24 * 60);
    for (int i = 0; i < 1000; ++i) {
        const double m = minute(rng);
        const auto a = categorize_reading(def, {0, "time", m});
        EXPECT_EQ(a, categorize_reading(def, {1, "time", m}));
        EXPECT_TRUE(def.allows(a));
        const char* expected = m >= 360 && m < 720 ? "morning" : m >= 720 && m < 1080 ? "afternoon" : "evening";
        EXPECT_EQ(a, expected) << m;
    }
}

TEST(ParseClock, Formats) {
    EXPECT_EQ(parse_clock("14:00"), 840.0);
    EXPECT_EQ(parse_clock("6:05"), 365.0);
    EXPECT_FALSE(parse_clock("25:00"));
    EXPECT_FALSE(parse_clock("12:60"));
    EXPECT_FALSE(parse_clock("12"));
}

TEST(Fingerprint, SortedPairs) {
    EXPECT_EQ(fingerprint(ContextSnapshot(ValueMap{{"b", "1"}, {"a", "2"}})), "a=2;b=1");
    const auto schema = classroom_schema();
    EXPECT_EQ(snap(schema, "out in on off off off test").fingerprint(),
              "camera=off;day_type=test;light=on;prof=out;projector=off;screen=off;ta=in");
}

TEST(Fingerprint, EqualityMatchesValueMaps) {
    Rng rng(3);
    const auto schema = random_schema(rng, 5, 3);
    for (int i = 0; i < 1000; ++i) {
        const auto a = random_snapshot(rng, schema);
        const auto b = random_snapshot(rng, schema);
        EXPECT_EQ(a.fingerprint() == b.fingerprint(), a.values() == b.values());
    }
}

TEST(Snapshot, SharedAndDynamicPartsPartitionValues) {
    const auto schema = classroom_schema();
    const auto s = snap(schema, "out in on off off off test");
    const auto shared = s.shared_part(schema);
    const auto dynamic = s.dynamic_part(schema);
    EXPECT_EQ(shared.size(), 3u);
    EXPECT_EQ(dynamic.size(), 4u);
    ValueMap all = shared;
    all.insert(dynamic.begin(), dynamic.end());
    EXPECT_EQ(all, s.values());
}

TEST(Snapshot, MakeSnapshotChecksSchema) {
    const auto schema = classroom_schema();
    EXPECT_EQ(code_of([&] { make_snapshot(schema, {{"prof", "in"}}); }), ErrorCode::SchemaMismatch);
    auto values = snap(schema, "out in on off off off test").values();
    values["light"] = "dim";
    EXPECT_FALSE(snapshot_violations(schema, ContextSnapshot(values)).empty());
}

TEST(BuildContext, PartialChangeCarriesOver) {
    const auto schema = classroom_schema();
    const auto prev = snap(schema, "out out off off off off test");
    const auto next = build_context(schema, readings(1, {{"ta", "in"}}), prev);
    EXPECT_EQ(next, snap(schema, "out in off off off off test"));
}

TEST(BuildContext, EmptyReadingsIsIdentity) {
    const auto schema = classroom_schema();
    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
        const auto prev = random_snapshot(rng, schema);
        EXPECT_EQ(build_context(schema, {}, prev), prev);
    }
}

TEST(BuildContext, FirstContextNeedsEveryParameter) {
    const auto schema = classroom_schema();
    const ValueMap full{{"prof", "in"},     {"ta", "out"},    {"light", "on"},         {"projector", "on"},
                        {"screen", "on"},   {"camera", "off"}, {"day_type", "midterm"}};
    const auto s = build_context(schema, readings(0, full));
    EXPECT_EQ(s, snap(schema, "in out on on on off test"));

    auto partial = full;
    partial.erase("camera");
    EXPECT_EQ(code_of([&] { build_context(schema, readings(0, partial)); }), ErrorCode::MissingParameter);
    EXPECT_EQ(code_of([&] { build_context(schema, readings(0, {{"humidity", "high"}}), s); }),
              ErrorCode::UnknownParameter);
    EXPECT_EQ(code_of([&] { build_context(schema, readings(0, {{"day_type", "holiday"}}), s); }),
              ErrorCode::UncategorizableReading);
}

TEST(BuildContext, LatestReadingWins) {
    const auto schema = classroom_schema();
    const auto prev = snap(schema, "out out off off off off test");
    const std::vector<SensorReading> batch{{5, "light", std::string("on")}, {3, "light", std::string("off")}};
    EXPECT_EQ(build_context(schema, batch, prev).at("light"), "on");
    const std::vector<SensorReading> tie{{5, "light", std::string("off")}, {5, "light", std::string("on")}};
    EXPECT_EQ(build_context(schema, tie, prev).at("light"), "on");
}

TEST(BuildContext, FrameProperty) {
    Rng rng(17);
    const auto schema = random_schema(rng, 8, 4);
    for (int i = 0; i < 500; ++i) {
        const auto prev = random_snapshot(rng, schema);
        const auto target = random_snapshot(rng, schema);
        ValueMap sent;
        for (const auto& p : schema.parameters) {
            if (pick(rng, 2)) sent[p.name] = target.at(p.name);
        }
        const auto next = build_context(schema, readings(1, sent), prev);
        for (const auto& p : schema.parameters) {
            const auto it = sent.find(p.name);
            EXPECT_EQ(next.at(p.name), it != sent.end() ? it->second : prev.at(p.name));
        }
    }
}

TEST(Action, Validation) {
    EXPECT_TRUE(validate_action({"a", "A", {{"light", "on"}}}).empty());
    EXPECT_FALSE(validate_action({"a", "A", {}}).empty());
    EXPECT_FALSE(validate_action({"", "A", {{"light", "on"}}}).empty());
}
