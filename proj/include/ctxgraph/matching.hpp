#pragma once

#include "ctxgraph/graph.hpp"
#include "ctxgraph/model.hpp"
#include "ctxgraph/rational.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace ctxgraph {

/// Weighted overlap: sum of weights of parameters on which a and b agree,
/// over the sum of all weights. Both snapshots must be valid under schema.
Rational similarity(const ParameterSchema& schema, const ContextSnapshot& a, const ContextSnapshot& b);

struct MatchResult {
    NodeId node;
    Rational similarity;
    bool exact = false;

    friend bool operator==(const MatchResult&, const MatchResult&) = default;
};

/// Stored contexts keyed for exact and nearest-neighbour retrieval.
///
/// Snapshots are encoded once as per-parameter label ordinals and weights are
/// scaled to integers over their common denominator, so a scan compares
/// small integers and the resulting similarity is still exact.
class ContextIndex {
public:
    explicit ContextIndex(ParameterSchema schema);

    static ContextIndex from_graph(ParameterSchema schema, const ContextualGraph& graph);

    /// Throws SchemaMismatch for invalid snapshots, DuplicateContext for a repeated fingerprint.
    void insert(NodeId node, const ContextSnapshot& snapshot);

    std::optional<NodeId> exact_lookup(const ContextSnapshot& snapshot) const;

    /// Best entry with similarity >= threshold. An exact fingerprint hit wins
    /// outright; otherwise ties go to the smallest node id.
    /// Throws InvalidArgument unless 0 < threshold <= 1.
    std::optional<MatchResult> retrieve_best(const ContextSnapshot& snapshot, const Rational& threshold) const;

    std::size_t size() const noexcept { return nodes_.size(); }
    const ParameterSchema& schema() const noexcept { return schema_; }
    const std::vector<std::pair<NodeId, ContextSnapshot>>& entries() const noexcept { return entries_; }

private:
    std::vector<std::uint16_t> encode(const ContextSnapshot& snapshot) const;

    ParameterSchema schema_;
    std::vector<std::int64_t> weights_;  // scaled to the common denominator
    std::int64_t total_weight_ = 0;
    bool all_positive_ = true;

    std::unordered_map<std::string, NodeId> by_fingerprint_;
    std::vector<std::pair<NodeId, ContextSnapshot>> entries_;
    std::vector<NodeId> nodes_;
    std::vector<std::uint16_t> codes_;  // entries_.size() rows of schema_.parameters.size()
};

}  // namespace ctxgraph
