#pragma once

#include "ctxgraph/json_io.hpp"
#include "ctxgraph/model.hpp"
#include "ctxgraph/rules.hpp"
#include "ctxgraph/store.hpp"

#include <unistd.h>

#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace testsupport {

using namespace ctxgraph;

inline std::filesystem::path fixture(const std::string& name) {
    return std::filesystem::path(CTXGRAPH_FIXTURES) / "uclassroom" / name;
}

inline ParameterSchema classroom_schema() { return load_schema(fixture("schema.json")); }
inline ContextualGraph classroom_graph() { return load_graph(fixture("graph.json")); }
inline RulesStore classroom_rules(const ParameterSchema& schema, const ContextualGraph& graph) {
    return rules_from_json(schema, read_json_file(fixture("rules.json")), graph.actions());
}

/// Snapshot from labels listed in schema parameter order, e.g.
/// "out in on off off off test" for the classroom schema.
inline ContextSnapshot snap(const ParameterSchema& schema, const std::string& labels) {
    std::istringstream in(labels);
    ValueMap values;
    for (const auto& p : schema.parameters) {
        std::string v;
        in >> v;
        values[p.name] = v;
    }
    return make_snapshot(schema, std::move(values));
}

inline std::vector<SensorReading> readings(std::uint64_t t, const ValueMap& kv) {
    std::vector<SensorReading> out;
    for (const auto& [k, v] : kv) out.push_back({t, k, v});
    return out;
}

/// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() / ("ctxgraph_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// Random generators --------------------------------------------------------

using Rng = std::mt19937_64;

inline std::size_t pick(Rng& rng, std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }

/// Identity-categorized parameters p0..p{n-1} with 2..max_values labels each,
/// weights drawn from {0,1,2,3} (and at least one positive).
inline ParameterSchema random_schema(Rng& rng, std::size_t n, std::size_t max_values, bool unit_weights = false) {
    ParameterSchema s;
    s.schema_id = "random";
    for (std::size_t i = 0; i < n; ++i) {
        ParameterDef p;
        p.name = "p" + std::to_string(i);
        const std::size_t k = 2 + pick(rng, max_values - 1);
        for (std::size_t v = 0; v < k; ++v) p.allowed_values.push_back("v" + std::to_string(v));
        p.category = i == 0 || pick(rng, 2) ? ParameterCategory::Dynamic : ParameterCategory::Shared;
        p.weight = unit_weights ? Rational(1) : Rational(static_cast<std::int64_t>(pick(rng, 4)));
        p.categorizer = IdentityCategorizer{};
        s.parameters.push_back(std::move(p));
    }
    if (!unit_weights) s.parameters[pick(rng, n)].weight = Rational(1 + static_cast<std::int64_t>(pick(rng, 3)));
    return s;
}

inline ContextSnapshot random_snapshot(Rng& rng, const ParameterSchema& schema) {
    ValueMap values;
    for (const auto& p : schema.parameters) values[p.name] = p.allowed_values[pick(rng, p.allowed_values.size())];
    return ContextSnapshot(std::move(values));
}

/// Copy of `s` with parameter `name` set to a different allowed label.
inline ContextSnapshot flip(Rng& rng, const ParameterSchema& schema, const ContextSnapshot& s, const std::string& name) {
    const ParameterDef* def = schema.find(name);
    ValueMap values = s.values();
    std::string next;
    do {
        next = def->allowed_values[pick(rng, def->allowed_values.size())];
    } while (next == values[name]);
    values[name] = next;
    return ContextSnapshot(std::move(values));
}

}  // namespace testsupport
