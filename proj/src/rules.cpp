#include "ctxgraph/rules.hpp"

#include "ctxgraph/error.hpp"

#include <algorithm>

namespace ctxgraph {

Condition Condition::eq(std::string parameter, std::string value) {
    Condition c;
    c.kind_ = Kind::Eq;
    c.parameter_ = std::move(parameter);
    c.value_ = std::move(value);
    return c;
}

Condition Condition::all(std::vector<Condition> children) {
    Condition c;
    c.kind_ = Kind::All;
    c.children_ = std::move(children);
    return c;
}

Condition Condition::any(std::vector<Condition> children) {
    Condition c;
    c.kind_ = Kind::Any;
    c.children_ = std::move(children);
    return c;
}

Condition Condition::negate(Condition child) {
    Condition c;
    c.kind_ = Kind::Not;
    c.children_.push_back(std::move(child));
    return c;
}

namespace {

void collect_violations(const Condition& c, const ParameterSchema& schema, std::vector<std::string>& out) {
    if (c.kind() != Condition::Kind::Eq) {
        for (const auto& child : c.children()) collect_violations(child, schema, out);
        return;
    }
    const ParameterDef* def = schema.find(c.parameter());
    if (!def) {
        out.push_back("condition names unknown parameter '" + c.parameter() + "'");
    } else if (!def->allows(c.value())) {
        out.push_back("condition compares '" + c.parameter() + "' with '" + c.value() +
                      "' which is not an allowed value");
    }
}

}  // namespace

std::vector<std::string> condition_violations(const Condition& condition, const ParameterSchema& schema) {
    std::vector<std::string> out;
    collect_violations(condition, schema, out);
    return out;
}

bool eval_condition(const Condition& condition, const ContextSnapshot& snapshot) {
    switch (condition.kind()) {
        case Condition::Kind::Eq: {
            auto it = snapshot.values().find(condition.parameter());
            return it != snapshot.values().end() && it->second == condition.value();
        }
        case Condition::Kind::All:
            return std::all_of(condition.children().begin(), condition.children().end(),
                               [&](const Condition& c) { return eval_condition(c, snapshot); });
        case Condition::Kind::Any:
            return std::any_of(condition.children().begin(), condition.children().end(),
                               [&](const Condition& c) { return eval_condition(c, snapshot); });
        case Condition::Kind::Not:
            return !eval_condition(condition.children().front(), snapshot);
    }
    return false;
}

void RulesStore::register_action(ActionSpec action) {
    if (auto v = validate_action(action); !v.empty()) throw Error(ErrorCode::InvalidArgument, v.front());
    std::string key = action.action_id;
    actions_.insert_or_assign(std::move(key), std::move(action));
}

void RulesStore::register_rule(RuleDef rule) {
    if (rule.rule_id.empty()) throw Error(ErrorCode::InvalidArgument, "rule with empty rule_id");
    if (std::any_of(rules_.begin(), rules_.end(), [&](const RuleDef& r) { return r.rule_id == rule.rule_id; })) {
        throw Error(ErrorCode::DuplicateRuleId, "duplicate rule_id '" + rule.rule_id + "'");
    }
    if (auto v = condition_violations(rule.condition, schema_); !v.empty()) {
        throw Error(ErrorCode::SchemaMismatch, "rule '" + rule.rule_id + "': " + v.front());
    }
    if (!actions_.contains(rule.action)) {
        throw Error(ErrorCode::UnknownAction, "rule '" + rule.rule_id + "' fires unknown action '" + rule.action + "'");
    }
    rules_.push_back(std::move(rule));
}

std::vector<RuleDef> RulesStore::matching_rules(const ContextSnapshot& snapshot) const {
    std::vector<RuleDef> out;
    std::copy_if(rules_.begin(), rules_.end(), std::back_inserter(out),
                 [&](const RuleDef& r) { return eval_condition(r.condition, snapshot); });
    std::sort(out.begin(), out.end(), [](const RuleDef& a, const RuleDef& b) {
        if (a.priority != b.priority) return a.priority > b.priority;
        return a.rule_id < b.rule_id;
    });
    return out;
}

const ActionSpec& RulesStore::action_of(const RuleDef& rule) const { return actions_.at(rule.action); }

}  // namespace ctxgraph
