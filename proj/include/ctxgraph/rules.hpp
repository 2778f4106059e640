#pragma once

#include "ctxgraph/model.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ctxgraph {

/// Boolean condition over categorical parameters: equality leaves joined by
/// all/any/not.
class Condition {
public:
    enum class Kind { Eq, All, Any, Not };

    /// Empty conjunction: always true.
    Condition() = default;

    static Condition eq(std::string parameter, std::string value);
    static Condition all(std::vector<Condition> children);
    static Condition any(std::vector<Condition> children);
    static Condition negate(Condition child);

    Kind kind() const noexcept { return kind_; }
    const std::string& parameter() const noexcept { return parameter_; }
    const std::string& value() const noexcept { return value_; }
    const std::vector<Condition>& children() const noexcept { return children_; }

    friend bool operator==(const Condition&, const Condition&) = default;

private:
    Kind kind_ = Kind::All;
    std::string parameter_;
    std::string value_;
    std::vector<Condition> children_;
};

/// Leaves naming unknown parameters or labels outside allowed_values.
std::vector<std::string> condition_violations(const Condition& condition, const ParameterSchema& schema);

bool eval_condition(const Condition& condition, const ContextSnapshot& snapshot);

struct RuleDef {
    std::string rule_id;
    Condition condition;
    std::string action;  // action_id
    std::int64_t priority = 0;

    friend bool operator==(const RuleDef&, const RuleDef&) = default;
};

/// Registered if-condition-then-action defaults.
class RulesStore {
public:
    explicit RulesStore(ParameterSchema schema) : schema_(std::move(schema)) {}

    /// Inserts or replaces an action the rules may refer to.
    void register_action(ActionSpec action);

    /// Throws DuplicateRuleId, SchemaMismatch (invalid condition) or
    /// UnknownAction (no such registered action).
    void register_rule(RuleDef rule);

    /// Rules whose condition holds, by descending priority then rule_id.
    std::vector<RuleDef> matching_rules(const ContextSnapshot& snapshot) const;

    const ActionSpec& action_of(const RuleDef& rule) const;

    const std::vector<RuleDef>& rules() const noexcept { return rules_; }
    const std::map<std::string, ActionSpec>& actions() const noexcept { return actions_; }
    const ParameterSchema& schema() const noexcept { return schema_; }

private:
    ParameterSchema schema_;
    std::vector<RuleDef> rules_;  // registration order
    std::map<std::string, ActionSpec> actions_;
};

}  // namespace ctxgraph
