#include "ctxgraph/model.hpp"

#include "ctxgraph/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

namespace ctxgraph {

namespace {

// Labels and names must not contain the fingerprint separators, otherwise two
// different value maps could render to the same canonical string.
bool has_reserved(std::string_view s) { return s.find_first_of("=;") != std::string_view::npos; }

std::optional<double> parse_number(std::string_view text) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) return std::nullopt;
    return v;
}

std::map<std::string, const SensorReading*> latest_per_parameter(std::span<const SensorReading> readings) {
    std::map<std::string, const SensorReading*> chosen;
    for (const auto& r : readings) {
        auto [it, inserted] = chosen.try_emplace(r.parameter, &r);
        if (!inserted && r.timestamp >= it->second->timestamp) it->second = &r;
    }
    return chosen;
}

}  // namespace

std::string_view to_string(ParameterCategory c) noexcept {
    return c == ParameterCategory::Shared ? "shared" : "dynamic";
}

bool ParameterDef::allows(const std::string& label) const {
    return std::find(allowed_values.begin(), allowed_values.end(), label) != allowed_values.end();
}

const ParameterDef* ParameterSchema::find(std::string_view name) const {
    for (const auto& p : parameters) {
        if (p.name == name) return &p;
    }
    return nullptr;
}

std::vector<std::string> validate_schema(const ParameterSchema& schema) {
    std::vector<std::string> out;
    if (schema.schema_id.empty()) out.push_back("empty schema_id");
    if (schema.parameters.empty()) out.push_back("schema has no parameters");

    std::set<std::string> names;
    bool any_positive = false;
    bool any_dynamic = false;
    for (const auto& p : schema.parameters) {
        const std::string where = "parameter '" + p.name + "': ";
        if (p.name.empty()) out.push_back("parameter with empty name");
        if (has_reserved(p.name)) out.push_back(where + "name contains '=' or ';'");
        if (!names.insert(p.name).second) out.push_back("duplicate parameter name '" + p.name + "'");
        if (p.allowed_values.empty()) out.push_back(where + "allowed_values is empty");

        std::set<std::string> labels;
        for (const auto& v : p.allowed_values) {
            if (!labels.insert(v).second) out.push_back(where + "duplicate allowed value '" + v + "'");
            if (v.empty()) out.push_back(where + "empty allowed value");
            if (has_reserved(v)) out.push_back(where + "allowed value '" + v + "' contains '=' or ';'");
        }

        if (p.weight < Rational(0)) out.push_back(where + "negative weight");
        if (p.weight > Rational(0)) any_positive = true;
        if (p.category == ParameterCategory::Dynamic) any_dynamic = true;

        if (!p.categorizer) continue;
        auto check_label = [&](const std::string& label) {
            if (!p.allows(label)) out.push_back(where + "categorizer label '" + label + "' not in allowed_values");
        };
        std::visit(
            [&](const auto& c) {
                using T = std::decay_t<decltype(c)>;
                if constexpr (std::is_same_v<T, ValueMapCategorizer>) {
                    for (const auto& [_, label] : c.mapping) check_label(label);
                    if (c.fallback) check_label(*c.fallback);
                } else if constexpr (std::is_same_v<T, RangeBinsCategorizer>) {
                    if (c.bins.empty()) out.push_back(where + "range_bins has no bins");
                    for (const auto& b : c.bins) {
                        check_label(b.label);
                        if (!(b.lo < b.hi)) out.push_back(where + "bin for '" + b.label + "' has lo >= hi");
                    }
                    if (c.fallback) check_label(*c.fallback);
                }
            },
            *p.categorizer);
    }
    if (!schema.parameters.empty() && !any_positive) out.push_back("no positive weight");
    if (!schema.parameters.empty() && !any_dynamic) out.push_back("no dynamic parameter");
    return out;
}

ContextSnapshot::ContextSnapshot(ValueMap values) : values_(std::move(values)) {
    for (const auto& [name, value] : values_) {
        if (!fingerprint_.empty()) fingerprint_.push_back(';');
        fingerprint_ += name;
        fingerprint_.push_back('=');
        fingerprint_ += value;
    }
}

ValueMap ContextSnapshot::shared_part(const ParameterSchema& schema) const {
    ValueMap out;
    for (const auto& p : schema.parameters) {
        if (p.category != ParameterCategory::Shared) continue;
        if (auto it = values_.find(p.name); it != values_.end()) out.insert(*it);
    }
    return out;
}

ValueMap ContextSnapshot::dynamic_part(const ParameterSchema& schema) const {
    ValueMap out;
    for (const auto& p : schema.parameters) {
        if (p.category != ParameterCategory::Dynamic) continue;
        if (auto it = values_.find(p.name); it != values_.end()) out.insert(*it);
    }
    return out;
}

std::string fingerprint(const ContextSnapshot& snapshot) { return snapshot.fingerprint(); }

std::vector<std::string> snapshot_violations(const ParameterSchema& schema, const ContextSnapshot& snapshot) {
    std::vector<std::string> out;
    for (const auto& p : schema.parameters) {
        auto it = snapshot.values().find(p.name);
        if (it == snapshot.values().end()) {
            out.push_back("missing parameter '" + p.name + "'");
        } else if (!p.allows(it->second)) {
            out.push_back("parameter '" + p.name + "' has label '" + it->second + "' outside allowed_values");
        }
    }
    for (const auto& [name, _] : snapshot.values()) {
        if (!schema.find(name)) out.push_back("unknown parameter '" + name + "'");
    }
    return out;
}

ContextSnapshot make_snapshot(const ParameterSchema& schema, ValueMap values) {
    ContextSnapshot s(std::move(values));
    if (auto v = snapshot_violations(schema, s); !v.empty()) throw Error(ErrorCode::SchemaMismatch, v.front());
    return s;
}

std::vector<std::string> validate_action(const ActionSpec& action) {
    std::vector<std::string> out;
    if (action.action_id.empty()) out.push_back("action with empty action_id");
    if (action.assignments.empty()) out.push_back("action '" + action.action_id + "' has no assignments");
    return out;
}

std::string raw_to_string(const RawValue& raw) {
    if (const auto* s = std::get_if<std::string>(&raw)) return *s;
    const double d = std::get<double>(raw);
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, d);
    return std::string(buf, ptr);
}

std::optional<double> parse_clock(std::string_view text) {
    auto colon = text.find(':');
    if (colon == std::string_view::npos || colon == 0 || colon > 2 || text.size() != colon + 3) return std::nullopt;
    int h = 0, m = 0;
    auto hs = text.substr(0, colon), ms = text.substr(colon + 1);
    if (std::from_chars(hs.data(), hs.data() + hs.size(), h).ptr != hs.data() + hs.size()) return std::nullopt;
    if (std::from_chars(ms.data(), ms.data() + ms.size(), m).ptr != ms.data() + ms.size()) return std::nullopt;
    if (h < 0 || h > 23 || m < 0 || m > 59) return std::nullopt;
    return h * 60.0 + m;
}

std::string categorize_reading(const ParameterDef& def, const SensorReading& reading) {
    if (reading.parameter != def.name) {
        throw Error(ErrorCode::InvalidArgument,
                    "reading for '" + reading.parameter + "' passed to parameter '" + def.name + "'");
    }
    auto fail = [&](const std::string& why) -> Error {
        return Error(ErrorCode::UncategorizableReading,
                     "parameter '" + def.name + "': raw value '" + raw_to_string(reading.raw_value) + "' " + why);
    };

    std::string label;
    const Categorizer cat = def.categorizer.value_or(IdentityCategorizer{});
    if (std::holds_alternative<IdentityCategorizer>(cat)) {
        label = raw_to_string(reading.raw_value);
    } else if (const auto* vm = std::get_if<ValueMapCategorizer>(&cat)) {
        const std::string key = raw_to_string(reading.raw_value);
        if (auto it = vm->mapping.find(key); it != vm->mapping.end()) label = it->second;
        else if (vm->fallback) label = *vm->fallback;
        else throw fail("has no mapping");
    } else {
        const auto& rb = std::get<RangeBinsCategorizer>(cat);
        std::optional<double> x;
        if (const auto* d = std::get_if<double>(&reading.raw_value)) {
            x = *d;
        } else {
            const auto& s = std::get<std::string>(reading.raw_value);
            x = parse_clock(s);
            if (!x) x = parse_number(s);
        }
        if (!x || !std::isfinite(*x)) throw fail("is not numeric or a clock time");
        for (const auto& b : rb.bins) {
            if (*x >= b.lo && *x < b.hi) {
                label = b.label;
                break;
            }
        }
        if (label.empty()) {
            if (!rb.fallback) throw fail("falls outside every bin");
            label = *rb.fallback;
        }
    }
    if (!def.allows(label)) throw fail("categorized to '" + label + "' which is not an allowed value");
    return label;
}

namespace {

ContextSnapshot build_impl(const ParameterSchema& schema, std::span<const SensorReading> readings,
                           const ContextSnapshot* previous) {
    const auto chosen = latest_per_parameter(readings);

    ValueMap values;
    for (const auto& [name, r] : chosen) {
        const ParameterDef* def = schema.find(name);
        if (!def) throw Error(ErrorCode::UnknownParameter, "reading for unknown parameter '" + name + "'");
        values.emplace(name, categorize_reading(*def, *r));
    }
    for (const auto& p : schema.parameters) {
        if (values.contains(p.name)) continue;
        if (previous) {
            if (auto it = previous->values().find(p.name); it != previous->values().end()) {
                values.emplace(p.name, it->second);
                continue;
            }
        }
        throw Error(ErrorCode::MissingParameter, "no reading and no previous value for '" + p.name + "'");
    }
    return make_snapshot(schema, std::move(values));
}

}  // namespace

ContextSnapshot build_context(const ParameterSchema& schema, std::span<const SensorReading> readings,
                              const ContextSnapshot& previous) {
    return build_impl(schema, readings, &previous);
}

ContextSnapshot build_context(const ParameterSchema& schema, std::span<const SensorReading> readings) {
    return build_impl(schema, readings, nullptr);
}

}  // namespace ctxgraph
