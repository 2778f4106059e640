#pragma once

// JSON encodings of the file formats: schema, rules, graph, trace lines and
// decision records. Decoders reject unknown keys and throw
// Error(MalformedInput) with a path-like location in the message.

#include "ctxgraph/graph.hpp"
#include "ctxgraph/model.hpp"
#include "ctxgraph/reasoner.hpp"
#include "ctxgraph/rules.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace ctxgraph {

using json = nlohmann::json;

nlohmann::json schema_to_json(const ParameterSchema& schema);
ParameterSchema schema_from_json(const nlohmann::json& j);

nlohmann::json action_to_json(const ActionSpec& action);
ActionSpec action_from_json(const nlohmann::json& j, const std::string& where = "action");

nlohmann::json condition_to_json(const Condition& condition);
Condition condition_from_json(const nlohmann::json& j, const std::string& where = "when");

nlohmann::json rules_to_json(const RulesStore& store);

/// Rule `then` is either an action_id resolved against `catalog` or an
/// inline action object. Throws MalformedInput, or the store's own errors.
RulesStore rules_from_json(const ParameterSchema& schema, const nlohmann::json& j,
                           const std::map<std::string, ActionSpec>& catalog = {});

nlohmann::json graph_to_json(const ContextualGraph& graph);

/// Structure only; callers decide whether to run check_integrity().
ContextualGraph graph_from_json(const nlohmann::json& j);

struct TraceEvent {
    std::uint64_t t = 0;
    std::map<std::string, RawValue> readings;
};

TraceEvent trace_event_from_json(const nlohmann::json& j);
nlohmann::json trace_event_to_json(const TraceEvent& event);
std::vector<SensorReading> to_readings(const TraceEvent& event);

nlohmann::json decision_to_json(const DecisionRecord& record);
DecisionRecord decision_from_json(const nlohmann::json& j);

/// Violations of a serialized decision record against the output schema.
std::vector<std::string> decision_json_violations(const nlohmann::json& j);

// File helpers. Read failures throw StorageFailure, parse failures MalformedInput.
nlohmann::json read_json_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

ParameterSchema load_schema(const std::filesystem::path& path);

/// One event per non-blank line.
std::vector<TraceEvent> load_trace(const std::filesystem::path& path);

}  // namespace ctxgraph
