#include "ctxgraph/json_io.hpp"

#include "ctxgraph/error.hpp"

#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace ctxgraph {

namespace {

[[noreturn]] void malformed(const std::string& where, const std::string& what) {
    throw Error(ErrorCode::MalformedInput, where + ": " + what);
}

void expect_object(const json& j, const std::string& where, std::initializer_list<const char*> required,
                   std::initializer_list<const char*> optional = {}) {
    if (!j.is_object()) malformed(where, "expected an object");
    std::set<std::string> known;
    for (const char* k : required) {
        known.insert(k);
        if (!j.contains(k)) malformed(where, std::string("missing key '") + k + "'");
    }
    for (const char* k : optional) known.insert(k);
    for (const auto& [key, _] : j.items()) {
        if (!known.contains(key)) malformed(where, "unknown key '" + key + "'");
    }
}

const std::string& get_string(const json& j, const std::string& where) {
    if (!j.is_string()) malformed(where, "expected a string");
    return j.get_ref<const std::string&>();
}

std::int64_t get_int(const json& j, const std::string& where) {
    if (j.is_number_unsigned()) {
        const auto u = j.get<std::uint64_t>();
        if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) malformed(where, "integer too large");
        return static_cast<std::int64_t>(u);
    }
    if (!j.is_number_integer()) malformed(where, "expected an integer");
    return j.get<std::int64_t>();
}

std::uint64_t get_id(const json& j, const std::string& where) {
    const auto v = get_int(j, where);
    if (v <= 0) malformed(where, "identifiers are positive integers");
    return static_cast<std::uint64_t>(v);
}

ValueMap get_value_map(const json& j, const std::string& where) {
    if (!j.is_object()) malformed(where, "expected an object of string labels");
    ValueMap out;
    for (const auto& [k, v] : j.items()) out.emplace(k, get_string(v, where + "." + k));
    return out;
}

Rational get_weight(const json& j, const std::string& where) {
    try {
        if (j.is_number_integer() || j.is_number_unsigned()) return Rational(get_int(j, where));
        if (j.is_number_float()) return Rational::parse(j.dump());
        if (j.is_string()) return Rational::parse(j.get<std::string>());
    } catch (const Error& e) {
        malformed(where, e.what());
    }
    malformed(where, "expected a number or a \"p/q\" string");
}

json weight_to_json(const Rational& w) {
    if (w.den() == 1) return w.num();
    return w.to_string();
}

double get_bound(const json& j, const std::string& where) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        if (auto m = parse_clock(j.get<std::string>())) return *m;
        if (j.get<std::string>() == "24:00") return 24 * 60.0;
    }
    malformed(where, "expected a number or an \"HH:MM\" clock time");
}

Categorizer categorizer_from_json(const json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("kind")) malformed(where, "expected an object with 'kind'");
    const auto& kind = get_string(j["kind"], where + ".kind");
    if (kind == "identity") {
        expect_object(j, where, {"kind"});
        return IdentityCategorizer{};
    }
    if (kind == "value_map") {
        expect_object(j, where, {"kind", "map"}, {"default"});
        ValueMapCategorizer c;
        c.mapping = get_value_map(j["map"], where + ".map");
        if (j.contains("default")) c.fallback = get_string(j["default"], where + ".default");
        return c;
    }
    if (kind == "range_bins") {
        expect_object(j, where, {"kind", "bins"}, {"default"});
        RangeBinsCategorizer c;
        if (!j["bins"].is_array()) malformed(where + ".bins", "expected an array");
        std::size_t i = 0;
        for (const auto& b : j["bins"]) {
            const std::string bw = where + ".bins[" + std::to_string(i++) + "]";
            expect_object(b, bw, {"from", "to", "label"});
            c.bins.push_back({get_bound(b["from"], bw + ".from"), get_bound(b["to"], bw + ".to"),
                              get_string(b["label"], bw + ".label")});
        }
        if (j.contains("default")) c.fallback = get_string(j["default"], where + ".default");
        return c;
    }
    malformed(where + ".kind", "unknown categorizer kind '" + kind + "'");
}

json categorizer_to_json(const Categorizer& c) {
    if (std::holds_alternative<IdentityCategorizer>(c)) return json{{"kind", "identity"}};
    if (const auto* vm = std::get_if<ValueMapCategorizer>(&c)) {
        json j{{"kind", "value_map"}, {"map", vm->mapping}};
        if (vm->fallback) j["default"] = *vm->fallback;
        return j;
    }
    const auto& rb = std::get<RangeBinsCategorizer>(c);
    json bins = json::array();
    for (const auto& b : rb.bins) bins.push_back({{"from", b.lo}, {"to", b.hi}, {"label", b.label}});
    json j{{"kind", "range_bins"}, {"bins", std::move(bins)}};
    if (rb.fallback) j["default"] = *rb.fallback;
    return j;
}

json optional_string(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

}  // namespace

json schema_to_json(const ParameterSchema& schema) {
    json params = json::array();
    for (const auto& p : schema.parameters) {
        json pj{{"name", p.name},
                {"allowed_values", p.allowed_values},
                {"category", std::string(to_string(p.category))},
                {"weight", weight_to_json(p.weight)}};
        if (p.categorizer) pj["categorizer"] = categorizer_to_json(*p.categorizer);
        params.push_back(std::move(pj));
    }
    return {{"schema_id", schema.schema_id}, {"version", schema.version}, {"parameters", std::move(params)}};
}

ParameterSchema schema_from_json(const json& j) {
    expect_object(j, "schema", {"schema_id", "version", "parameters"});
    ParameterSchema s;
    s.schema_id = get_string(j["schema_id"], "schema.schema_id");
    s.version = get_int(j["version"], "schema.version");
    if (!j["parameters"].is_array()) malformed("schema.parameters", "expected an array");
    std::size_t i = 0;
    for (const auto& pj : j["parameters"]) {
        const std::string where = "schema.parameters[" + std::to_string(i++) + "]";
        expect_object(pj, where, {"name", "allowed_values", "category"}, {"weight", "categorizer"});
        ParameterDef p;
        p.name = get_string(pj["name"], where + ".name");
        if (!pj["allowed_values"].is_array()) malformed(where + ".allowed_values", "expected an array");
        for (const auto& v : pj["allowed_values"]) p.allowed_values.push_back(get_string(v, where + ".allowed_values"));
        const auto& cat = get_string(pj["category"], where + ".category");
        if (cat == "shared") p.category = ParameterCategory::Shared;
        else if (cat == "dynamic") p.category = ParameterCategory::Dynamic;
        else malformed(where + ".category", "expected \"shared\" or \"dynamic\"");
        if (pj.contains("weight")) p.weight = get_weight(pj["weight"], where + ".weight");
        if (pj.contains("categorizer")) p.categorizer = categorizer_from_json(pj["categorizer"], where + ".categorizer");
        s.parameters.push_back(std::move(p));
    }
    return s;
}

json action_to_json(const ActionSpec& action) {
    return {{"action_id", action.action_id}, {"name", action.name}, {"assignments", action.assignments}};
}

ActionSpec action_from_json(const json& j, const std::string& where) {
    expect_object(j, where, {"action_id", "assignments"}, {"name"});
    ActionSpec a;
    a.action_id = get_string(j["action_id"], where + ".action_id");
    a.name = j.contains("name") ? get_string(j["name"], where + ".name") : a.action_id;
    a.assignments = get_value_map(j["assignments"], where + ".assignments");
    if (auto v = validate_action(a); !v.empty()) malformed(where, v.front());
    return a;
}

json condition_to_json(const Condition& c) {
    switch (c.kind()) {
        case Condition::Kind::Eq: return {{"eq", json::array({c.parameter(), c.value()})}};
        case Condition::Kind::Not: return {{"not", condition_to_json(c.children().front())}};
        case Condition::Kind::All:
        case Condition::Kind::Any: {
            json children = json::array();
            for (const auto& child : c.children()) children.push_back(condition_to_json(child));
            return {{c.kind() == Condition::Kind::All ? "all" : "any", std::move(children)}};
        }
    }
    return nullptr;
}

Condition condition_from_json(const json& j, const std::string& where) {
    if (!j.is_object() || j.size() != 1) malformed(where, "expected an object with exactly one of eq/all/any/not");
    const auto& [tag, body] = *j.items().begin();
    if (tag == "eq") {
        if (!body.is_array() || body.size() != 2) malformed(where + ".eq", "expected [parameter, value]");
        return Condition::eq(get_string(body[0], where + ".eq[0]"), get_string(body[1], where + ".eq[1]"));
    }
    if (tag == "not") return Condition::negate(condition_from_json(body, where + ".not"));
    if (tag == "all" || tag == "any") {
        if (!body.is_array()) malformed(where + "." + tag, "expected an array");
        std::vector<Condition> children;
        std::size_t i = 0;
        for (const auto& c : body) children.push_back(condition_from_json(c, where + "." + tag + "[" + std::to_string(i++) + "]"));
        return tag == "all" ? Condition::all(std::move(children)) : Condition::any(std::move(children));
    }
    malformed(where, "unknown condition tag '" + tag + "'");
}

json rules_to_json(const RulesStore& store) {
    json out = json::array();
    for (const auto& r : store.rules()) {
        out.push_back({{"rule_id", r.rule_id},
                       {"priority", r.priority},
                       {"when", condition_to_json(r.condition)},
                       {"then", action_to_json(store.action_of(r))}});
    }
    return out;
}

RulesStore rules_from_json(const ParameterSchema& schema, const json& j,
                           const std::map<std::string, ActionSpec>& catalog) {
    if (!j.is_array()) malformed("rules", "expected an array of rules");
    RulesStore store(schema);
    std::size_t i = 0;
    for (const auto& rj : j) {
        const std::string where = "rules[" + std::to_string(i++) + "]";
        expect_object(rj, where, {"rule_id", "when", "then"}, {"priority"});
        RuleDef rule;
        rule.rule_id = get_string(rj["rule_id"], where + ".rule_id");
        if (rj.contains("priority")) rule.priority = get_int(rj["priority"], where + ".priority");
        rule.condition = condition_from_json(rj["when"], where + ".when");
        const auto& then = rj["then"];
        if (then.is_string()) {
            rule.action = then.get<std::string>();
            if (!store.actions().contains(rule.action)) {
                auto it = catalog.find(rule.action);
                if (it == catalog.end()) {
                    throw Error(ErrorCode::UnknownAction, where + ".then: unknown action '" + rule.action + "'");
                }
                store.register_action(it->second);
            }
        } else {
            ActionSpec a = action_from_json(then, where + ".then");
            if (auto it = store.actions().find(a.action_id); it != store.actions().end() && it->second != a) {
                malformed(where + ".then", "action '" + a.action_id + "' defined twice with different content");
            }
            rule.action = a.action_id;
            store.register_action(std::move(a));
        }
        store.register_rule(std::move(rule));
    }
    return store;
}

json graph_to_json(const ContextualGraph& graph) {
    json nodes = json::array(), edges = json::array(), paths = json::array(), actions = json::array();
    for (const auto& [id, n] : graph.nodes()) {
        json attachments = json::array();
        for (NodeId s : n.shared_attachments) attachments.push_back(s.value);
        nodes.push_back({{"id", id.value}, {"values", n.snapshot.values()}, {"shared_attachments", attachments}});
    }
    for (const auto& [id, e] : graph.edges()) {
        json pids = json::array();
        for (PathId p : e.path_ids) pids.push_back(p.value);
        edges.push_back({{"id", id.value},
                         {"from", e.from.value},
                         {"to", e.to.value},
                         {"action", optional_string(e.action)},
                         {"path_ids", pids}});
    }
    for (const auto& [id, p] : graph.paths()) {
        json members = json::array();
        for (EdgeId e : p.edges) members.push_back(e.value);
        paths.push_back({{"id", id.value}, {"edges", members}});
    }
    for (const auto& [_, a] : graph.actions()) actions.push_back(action_to_json(a));
    return {{"nodes", nodes}, {"edges", edges}, {"paths", paths}, {"actions", actions}};
}

ContextualGraph graph_from_json(const json& j) {
    expect_object(j, "graph", {"nodes", "edges", "paths", "actions"});
    for (const char* k : {"nodes", "edges", "paths", "actions"}) {
        if (!j[k].is_array()) malformed(std::string("graph.") + k, "expected an array");
    }
    std::vector<ContextNode> nodes;
    std::vector<TransitionEdge> edges;
    std::vector<PathRecord> paths;
    std::vector<ActionSpec> actions;

    std::set<std::uint64_t> seen;
    std::size_t i = 0;
    for (const auto& nj : j["nodes"]) {
        const std::string where = "graph.nodes[" + std::to_string(i++) + "]";
        expect_object(nj, where, {"id", "values"}, {"shared_attachments"});
        ContextNode n;
        n.id = NodeId{get_id(nj["id"], where + ".id")};
        if (!seen.insert(n.id.value).second) malformed(where, "duplicate node id");
        n.snapshot = ContextSnapshot(get_value_map(nj["values"], where + ".values"));
        if (nj.contains("shared_attachments")) {
            if (!nj["shared_attachments"].is_array()) malformed(where + ".shared_attachments", "expected an array");
            for (const auto& s : nj["shared_attachments"]) n.shared_attachments.insert(NodeId{get_id(s, where + ".shared_attachments")});
        }
        nodes.push_back(std::move(n));
    }
    seen.clear();
    i = 0;
    for (const auto& ej : j["edges"]) {
        const std::string where = "graph.edges[" + std::to_string(i++) + "]";
        expect_object(ej, where, {"id", "from", "to", "path_ids"}, {"action"});
        TransitionEdge e;
        e.id = EdgeId{get_id(ej["id"], where + ".id")};
        if (!seen.insert(e.id.value).second) malformed(where, "duplicate edge id");
        e.from = NodeId{get_id(ej["from"], where + ".from")};
        e.to = NodeId{get_id(ej["to"], where + ".to")};
        if (ej.contains("action") && !ej["action"].is_null()) e.action = get_string(ej["action"], where + ".action");
        if (!ej["path_ids"].is_array()) malformed(where + ".path_ids", "expected an array");
        for (const auto& p : ej["path_ids"]) e.path_ids.insert(PathId{get_id(p, where + ".path_ids")});
        edges.push_back(std::move(e));
    }
    seen.clear();
    i = 0;
    for (const auto& pj : j["paths"]) {
        const std::string where = "graph.paths[" + std::to_string(i++) + "]";
        expect_object(pj, where, {"id", "edges"});
        PathRecord p;
        p.id = PathId{get_id(pj["id"], where + ".id")};
        if (!seen.insert(p.id.value).second) malformed(where, "duplicate path id");
        if (!pj["edges"].is_array()) malformed(where + ".edges", "expected an array");
        for (const auto& e : pj["edges"]) p.edges.push_back(EdgeId{get_id(e, where + ".edges")});
        paths.push_back(std::move(p));
    }
    std::set<std::string> action_ids;
    i = 0;
    for (const auto& aj : j["actions"]) {
        const std::string where = "graph.actions[" + std::to_string(i++) + "]";
        ActionSpec a = action_from_json(aj, where);
        if (!action_ids.insert(a.action_id).second) malformed(where, "duplicate action id");
        actions.push_back(std::move(a));
    }
    return ContextualGraph::from_parts(std::move(nodes), std::move(edges), std::move(paths), std::move(actions));
}

TraceEvent trace_event_from_json(const json& j) {
    expect_object(j, "trace event", {"t", "readings"});
    TraceEvent ev;
    const auto t = get_int(j["t"], "trace event.t");
    if (t < 0) malformed("trace event.t", "timestamps are non-negative");
    ev.t = static_cast<std::uint64_t>(t);
    if (!j["readings"].is_object()) malformed("trace event.readings", "expected an object");
    for (const auto& [k, v] : j["readings"].items()) {
        if (v.is_string()) ev.readings.emplace(k, v.get<std::string>());
        else if (v.is_number()) ev.readings.emplace(k, v.get<double>());
        else malformed("trace event.readings." + k, "expected a string or a number");
    }
    return ev;
}

json trace_event_to_json(const TraceEvent& event) {
    json readings = json::object();
    for (const auto& [k, v] : event.readings) {
        if (const auto* s = std::get_if<std::string>(&v)) readings[k] = *s;
        else readings[k] = std::get<double>(v);
    }
    return {{"t", event.t}, {"readings", std::move(readings)}};
}

std::vector<SensorReading> to_readings(const TraceEvent& event) {
    std::vector<SensorReading> out;
    for (const auto& [k, v] : event.readings) out.push_back({event.t, k, v});
    return out;
}

json decision_to_json(const DecisionRecord& r) {
    json mutations = json::array();
    for (const auto& m : r.graph_mutations) mutations.push_back({{"kind", std::string(to_string(m.kind))}, {"id", m.id}});
    json match = nullptr;
    if (r.match) match = {{"node", r.match->node.value}, {"similarity", r.match->similarity.to_string()}, {"exact", r.match->exact}};
    return {{"t", r.timestamp},
            {"session", r.session_id},
            {"node", r.node.value},
            {"action", r.fired_action ? action_to_json(*r.fired_action) : json(nullptr)},
            {"provenance", std::string(to_string(r.provenance))},
            {"rule_ids", r.rule_ids},
            {"path_id_used", r.path_id_used ? json(r.path_id_used->value) : json(nullptr)},
            {"graph_action", optional_string(r.graph_action)},
            {"mutations", std::move(mutations)},
            {"match", std::move(match)},
            {"sink_errors", r.sink_errors},
            {"storage_error", optional_string(r.storage_error)}};
}

std::vector<std::string> decision_json_violations(const json& j) {
    try {
        (void)decision_from_json(j);
    } catch (const Error& e) {
        return {e.what()};
    }
    std::vector<std::string> out;
    const auto prov = j["provenance"].get<std::string>();
    if ((prov == "none") != j["action"].is_null()) out.push_back("provenance none must coincide with a null action");
    if (prov == "merged" && (j["rule_ids"].empty() || j["path_id_used"].is_null())) {
        out.push_back("merged decision without rule_ids or path_id_used");
    }
    return out;
}

DecisionRecord decision_from_json(const json& j) {
    const std::string w = "decision";
    expect_object(j, w, {"t", "session", "node", "action", "provenance", "rule_ids", "path_id_used", "graph_action",
                         "mutations", "match", "sink_errors", "storage_error"});
    DecisionRecord r;
    const auto t = get_int(j["t"], w + ".t");
    if (t < 0) malformed(w + ".t", "timestamps are non-negative");
    r.timestamp = static_cast<std::uint64_t>(t);
    r.session_id = get_string(j["session"], w + ".session");
    r.node = NodeId{get_id(j["node"], w + ".node")};
    if (!j["action"].is_null()) r.fired_action = action_from_json(j["action"], w + ".action");
    try {
        r.provenance = parse_provenance(get_string(j["provenance"], w + ".provenance"));
    } catch (const Error& e) {
        malformed(w + ".provenance", e.what());
    }
    if (!j["rule_ids"].is_array()) malformed(w + ".rule_ids", "expected an array");
    for (const auto& id : j["rule_ids"]) r.rule_ids.push_back(get_string(id, w + ".rule_ids"));
    if (!j["path_id_used"].is_null()) r.path_id_used = PathId{get_id(j["path_id_used"], w + ".path_id_used")};
    if (!j["graph_action"].is_null()) r.graph_action = get_string(j["graph_action"], w + ".graph_action");
    if (!j["mutations"].is_array()) malformed(w + ".mutations", "expected an array");
    for (const auto& m : j["mutations"]) {
        expect_object(m, w + ".mutations", {"kind", "id"});
        try {
            r.graph_mutations.push_back({parse_mutation_kind(get_string(m["kind"], w + ".mutations.kind")),
                                         get_id(m["id"], w + ".mutations.id")});
        } catch (const Error& e) {
            malformed(w + ".mutations", e.what());
        }
    }
    if (!j["match"].is_null()) {
        expect_object(j["match"], w + ".match", {"node", "similarity", "exact"});
        if (!j["match"]["exact"].is_boolean()) malformed(w + ".match.exact", "expected a boolean");
        try {
            r.match = MatchResult{NodeId{get_id(j["match"]["node"], w + ".match.node")},
                                  Rational::parse(get_string(j["match"]["similarity"], w + ".match.similarity")),
                                  j["match"]["exact"].get<bool>()};
        } catch (const Error& e) {
            malformed(w + ".match", e.what());
        }
    }
    if (!j["sink_errors"].is_array()) malformed(w + ".sink_errors", "expected an array");
    for (const auto& e : j["sink_errors"]) r.sink_errors.push_back(get_string(e, w + ".sink_errors"));
    if (!j["storage_error"].is_null()) r.storage_error = get_string(j["storage_error"], w + ".storage_error");
    return r;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::StorageFailure, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw Error(ErrorCode::StorageFailure, "cannot read " + path.string());
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::StorageFailure, "cannot open " + path.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw Error(ErrorCode::StorageFailure, "cannot write " + path.string());
}

json read_json_file(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::MalformedInput, path.string() + ": " + e.what());
    }
}

ParameterSchema load_schema(const std::filesystem::path& path) { return schema_from_json(read_json_file(path)); }

std::vector<TraceEvent> load_trace(const std::filesystem::path& path) {
    std::istringstream in(read_text_file(path));
    std::vector<TraceEvent> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(trace_event_from_json(json::parse(line)));
        } catch (const json::parse_error& e) {
            throw Error(ErrorCode::MalformedInput, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        } catch (const Error& e) {
            throw Error(ErrorCode::MalformedInput, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace ctxgraph
