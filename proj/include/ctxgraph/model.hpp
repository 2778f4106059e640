#pragma once

// Domain types for context parameters and the filtering pipeline that turns
// raw sensor readings into canonical, categorical context snapshots.

#include "ctxgraph/rational.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace ctxgraph {

using ValueMap = std::map<std::string, std::string>;

enum class ParameterCategory { Shared, Dynamic };

std::string_view to_string(ParameterCategory c) noexcept;

/// Passes string readings through unchanged; numbers are rendered in their
/// shortest decimal form first.
struct IdentityCategorizer {
    friend bool operator==(const IdentityCategorizer&, const IdentityCategorizer&) = default;
};

/// Exact lookup of the raw string, with an optional catch-all label.
struct ValueMapCategorizer {
    std::map<std::string, std::string> mapping;
    std::optional<std::string> fallback;

    friend bool operator==(const ValueMapCategorizer&, const ValueMapCategorizer&) = default;
};

/// Half-open numeric interval [lo, hi). Clock readings "HH:MM" are minutes
/// since midnight.
struct RangeBin {
    double lo = 0;
    double hi = 0;
    std::string label;

    friend bool operator==(const RangeBin&, const RangeBin&) = default;
};

/// First bin containing the value wins; the fallback covers everything else.
struct RangeBinsCategorizer {
    std::vector<RangeBin> bins;
    std::optional<std::string> fallback;

    friend bool operator==(const RangeBinsCategorizer&, const RangeBinsCategorizer&) = default;
};

using Categorizer = std::variant<IdentityCategorizer, ValueMapCategorizer, RangeBinsCategorizer>;

struct ParameterDef {
    std::string name;
    std::vector<std::string> allowed_values;
    ParameterCategory category = ParameterCategory::Dynamic;
    Rational weight{1};
    std::optional<Categorizer> categorizer;

    bool allows(const std::string& label) const;

    friend bool operator==(const ParameterDef&, const ParameterDef&) = default;
};

struct ParameterSchema {
    std::string schema_id;
    std::int64_t version = 1;
    std::vector<ParameterDef> parameters;

    const ParameterDef* find(std::string_view name) const;

    friend bool operator==(const ParameterSchema&, const ParameterSchema&) = default;
};

/// Every invariant violation of the schema, in declaration order. Empty means valid.
std::vector<std::string> validate_schema(const ParameterSchema& schema);

/// A total assignment of category labels to parameter names.
///
/// The fingerprint is computed once at construction: "name=value" pairs in
/// ascending name order joined by ';'. Schema membership is checked by
/// make_snapshot(); a bare ContextSnapshot only guarantees the canonical form.
class ContextSnapshot {
public:
    ContextSnapshot() = default;
    explicit ContextSnapshot(ValueMap values);

    const ValueMap& values() const noexcept { return values_; }
    const std::string& fingerprint() const noexcept { return fingerprint_; }
    const std::string& at(const std::string& name) const { return values_.at(name); }

    ValueMap shared_part(const ParameterSchema& schema) const;
    ValueMap dynamic_part(const ParameterSchema& schema) const;

    friend bool operator==(const ContextSnapshot& a, const ContextSnapshot& b) noexcept {
        return a.values_ == b.values_;
    }

private:
    ValueMap values_;
    std::string fingerprint_;
};

std::string fingerprint(const ContextSnapshot& snapshot);

/// Violations of the snapshot against the schema (coverage and label membership).
std::vector<std::string> snapshot_violations(const ParameterSchema& schema, const ContextSnapshot& snapshot);

/// Validating constructor; throws Error(SchemaMismatch) listing the first violation.
ContextSnapshot make_snapshot(const ParameterSchema& schema, ValueMap values);

struct ActionSpec {
    std::string action_id;
    std::string name;
    ValueMap assignments;  // device -> state label

    friend bool operator==(const ActionSpec&, const ActionSpec&) = default;
};

std::vector<std::string> validate_action(const ActionSpec& action);

using RawValue = std::variant<std::string, double>;

std::string raw_to_string(const RawValue& raw);

struct SensorReading {
    std::uint64_t timestamp = 0;
    std::string parameter;
    RawValue raw_value;
};

/// Minutes since midnight for "H:MM" / "HH:MM", nullopt otherwise.
std::optional<double> parse_clock(std::string_view text);

/// Maps a raw reading onto one of def.allowed_values.
/// Throws UncategorizableReading when no bin or mapping applies, or when the
/// categorizer yields a label outside allowed_values.
std::string categorize_reading(const ParameterDef& def, const SensorReading& reading);

/// Builds a snapshot from a batch of readings. Parameters without a reading
/// keep their label from `previous`. Within a batch the reading with the
/// greatest timestamp wins; equal timestamps resolve to the later element.
ContextSnapshot build_context(const ParameterSchema& schema, std::span<const SensorReading> readings,
                              const ContextSnapshot& previous);

/// First-context variant: readings must cover every schema parameter.
ContextSnapshot build_context(const ParameterSchema& schema, std::span<const SensorReading> readings);

}  // namespace ctxgraph
