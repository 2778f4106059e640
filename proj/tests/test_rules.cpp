#include "ctxgraph/error.hpp"
#include "ctxgraph/rules.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <functional>

using namespace ctxgraph;
using namespace testsupport;

namespace {

Condition nobody() { return Condition::all({Condition::eq("prof", "out"), Condition::eq("ta", "out")}); }

ActionSpec lights_off() { return {"lights_off", "Lights off", {{"light", "off"}}}; }

// Random condition tree plus a direct truth-table evaluation of it.
struct Tree {
    Condition cond;
    std::function<bool(const ContextSnapshot&)> truth;
};

Tree random_tree(Rng& rng, const ParameterSchema& schema, int depth) {
    const std::size_t roll = depth == 0 ? 0 : pick(rng, 4);
    if (roll == 0) {
        const auto& p = schema.parameters[pick(rng, schema.parameters.size())];
        const std::string v = p.allowed_values[pick(rng, p.allowed_values.size())];
        return {Condition::eq(p.name, v), [n = p.name, v](const ContextSnapshot& s) { return s.at(n) == v; }};
    }
    if (roll == 3) {
        auto child = random_tree(rng, schema, depth - 1);
        return {Condition::negate(child.cond), [f = child.truth](const ContextSnapshot& s) { return !f(s); }};
    }
    std::vector<Condition> kids;
    std::vector<std::function<bool(const ContextSnapshot&)>> fs;
    for (std::size_t k = pick(rng, 4); k > 0; --k) {
        auto c = random_tree(rng, schema, depth - 1);
        kids.push_back(c.cond);
        fs.push_back(c.truth);
    }
    const bool conj = roll == 1;
    auto truth = [fs, conj](const ContextSnapshot& s) {
        bool acc = conj;
        for (const auto& f : fs) acc = conj ? (acc && f(s)) : (acc || f(s));
        return acc;
    };
    return {conj ? Condition::all(kids) : Condition::any(kids), truth};
}

}  // namespace

TEST(Condition, Examples) {
    const auto schema = classroom_schema();
    EXPECT_TRUE(eval_condition(nobody(), snap(schema, "out out off off off off test")));
    EXPECT_FALSE(eval_condition(nobody(), snap(schema, "out in on off off off test")));
    EXPECT_FALSE(eval_condition(Condition::negate(Condition::eq("light", "on")), snap(schema, "out in on off off off test")));
    EXPECT_FALSE(eval_condition(Condition::any({}), snap(schema, "out in on off off off test")));
    EXPECT_TRUE(eval_condition(Condition::all({}), snap(schema, "out in on off off off test")));
}

TEST(Condition, Violations) {
    const auto schema = classroom_schema();
    EXPECT_TRUE(condition_violations(nobody(), schema).empty());
    EXPECT_FALSE(condition_violations(Condition::eq("humidity", "high"), schema).empty());
    EXPECT_FALSE(condition_violations(Condition::negate(Condition::eq("light", "dim")), schema).empty());
}

TEST(Condition, TruthTableOracle) {
    Rng rng(77);
    const auto schema = random_schema(rng, 4, 3);
    for (int i = 0; i < 500; ++i) {
        const auto tree = random_tree(rng, schema, 4);
        for (int k = 0; k < 8; ++k) {
            const auto s = random_snapshot(rng, schema);
            const bool v = eval_condition(tree.cond, s);
            EXPECT_EQ(v, tree.truth(s));
            EXPECT_EQ(eval_condition(Condition::negate(Condition::negate(tree.cond)), s), v);
        }
    }
}

TEST(RulesStore, Registration) {
    const auto schema = classroom_schema();
    RulesStore store(schema);
    store.register_action(lights_off());
    store.register_rule({"nobody", nobody(), "lights_off", 0});
    EXPECT_EQ(store.rules().size(), 1u);

    auto code = [&](RuleDef r) {
        try {
            store.register_rule(std::move(r));
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::InvalidArgument;
    };
    EXPECT_EQ(code({"nobody", nobody(), "lights_off", 0}), ErrorCode::DuplicateRuleId);
    EXPECT_EQ(code({"humid", Condition::eq("humidity", "high"), "lights_off", 0}), ErrorCode::SchemaMismatch);
    EXPECT_EQ(code({"other", nobody(), "nope", 0}), ErrorCode::UnknownAction);
}

TEST(RulesStore, MatchingOrder) {
    const auto schema = classroom_schema();
    RulesStore store(schema);
    const auto empty = snap(schema, "out out off off off off test");
    EXPECT_TRUE(store.matching_rules(empty).empty());

    store.register_action(lights_off());
    store.register_rule({"nobody", nobody(), "lights_off", 0});
    ASSERT_EQ(store.matching_rules(empty).size(), 1u);
    EXPECT_EQ(store.matching_rules(empty)[0].rule_id, "nobody");

    store.register_rule({"b_low", Condition::all({}), "lights_off", 1});
    store.register_rule({"a_low", Condition::all({}), "lights_off", 1});
    store.register_rule({"high", Condition::eq("ta", "out"), "lights_off", 5});
    std::vector<std::string> ids;
    for (const auto& r : store.matching_rules(empty)) ids.push_back(r.rule_id);
    EXPECT_EQ(ids, (std::vector<std::string>{"high", "a_low", "b_low", "nobody"}));
    EXPECT_EQ(store.matching_rules(empty), store.matching_rules(empty));
}

TEST(RulesStore, NobodyRuleFiresExactlyOnEmptyRoom) {
    const auto schema = classroom_schema();
    const auto graph = classroom_graph();
    const auto store = classroom_rules(schema, graph);
    Rng rng(8);
    for (int i = 0; i < 500; ++i) {
        const auto s = random_snapshot(rng, schema);
        const bool empty = s.at("prof") == "out" && s.at("ta") == "out";
        EXPECT_EQ(!store.matching_rules(s).empty(), empty);
    }
}
