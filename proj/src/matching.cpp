#include "ctxgraph/matching.hpp"

#include "ctxgraph/error.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace ctxgraph {

Rational similarity(const ParameterSchema& schema, const ContextSnapshot& a, const ContextSnapshot& b) {
    Rational agree{0};
    Rational total{0};
    for (const auto& p : schema.parameters) {
        total += p.weight;
        if (a.at(p.name) == b.at(p.name)) agree += p.weight;
    }
    if (total == Rational(0)) throw Error(ErrorCode::InvalidArgument, "schema has no positive weight");
    return agree / total;
}

ContextIndex::ContextIndex(ParameterSchema schema) : schema_(std::move(schema)) {
    std::int64_t common = 1;
    for (const auto& p : schema_.parameters) {
        if (p.weight < Rational(0)) throw Error(ErrorCode::InvalidArgument, "negative weight on '" + p.name + "'");
        if (p.allowed_values.size() > std::numeric_limits<std::uint16_t>::max()) {
            throw Error(ErrorCode::InvalidArgument, "too many labels on '" + p.name + "'");
        }
        common = std::lcm(common, p.weight.den());
    }
    for (const auto& p : schema_.parameters) {
        const std::int64_t w = p.weight.num() * (common / p.weight.den());
        weights_.push_back(w);
        total_weight_ += w;
        if (w == 0) all_positive_ = false;
    }
    if (total_weight_ <= 0) throw Error(ErrorCode::InvalidArgument, "schema has no positive weight");
}

ContextIndex ContextIndex::from_graph(ParameterSchema schema, const ContextualGraph& graph) {
    ContextIndex index(std::move(schema));
    for (const auto& [id, n] : graph.nodes()) index.insert(id, n.snapshot);
    return index;
}

std::vector<std::uint16_t> ContextIndex::encode(const ContextSnapshot& snapshot) const {
    if (auto v = snapshot_violations(schema_, snapshot); !v.empty()) throw Error(ErrorCode::SchemaMismatch, v.front());
    std::vector<std::uint16_t> row;
    row.reserve(schema_.parameters.size());
    for (const auto& p : schema_.parameters) {
        const auto& label = snapshot.at(p.name);
        auto it = std::find(p.allowed_values.begin(), p.allowed_values.end(), label);
        row.push_back(static_cast<std::uint16_t>(it - p.allowed_values.begin()));
    }
    return row;
}

void ContextIndex::insert(NodeId node, const ContextSnapshot& snapshot) {
    auto row = encode(snapshot);
    if (!by_fingerprint_.try_emplace(snapshot.fingerprint(), node).second) {
        throw Error(ErrorCode::DuplicateContext, "context already indexed: " + snapshot.fingerprint());
    }
    entries_.emplace_back(node, snapshot);
    nodes_.push_back(node);
    codes_.insert(codes_.end(), row.begin(), row.end());
}

std::optional<NodeId> ContextIndex::exact_lookup(const ContextSnapshot& snapshot) const {
    auto it = by_fingerprint_.find(snapshot.fingerprint());
    if (it == by_fingerprint_.end()) return std::nullopt;
    return it->second;
}

std::optional<MatchResult> ContextIndex::retrieve_best(const ContextSnapshot& snapshot,
                                                       const Rational& threshold) const {
    if (!(threshold > Rational(0)) || threshold > Rational(1)) {
        throw Error(ErrorCode::InvalidArgument, "threshold must lie in (0, 1], got " + threshold.to_string());
    }
    if (auto hit = exact_lookup(snapshot)) return MatchResult{*hit, Rational(1), true};
    // Without zero weights only an exact hit reaches similarity 1.
    if (threshold == Rational(1) && all_positive_) return std::nullopt;

    const auto query = encode(snapshot);
    const std::size_t width = query.size();
    std::int64_t best_weight = -1;
    std::size_t best = 0;
    for (std::size_t row = 0; row < nodes_.size(); ++row) {
        const std::uint16_t* codes = codes_.data() + row * width;
        std::int64_t agree = 0;
        for (std::size_t i = 0; i < width; ++i) {
            if (codes[i] == query[i]) agree += weights_[i];
        }
        if (agree > best_weight || (agree == best_weight && nodes_[row] < nodes_[best])) {
            best_weight = agree;
            best = row;
        }
    }
    if (best_weight < 0) return std::nullopt;

    // agree / total >= num / den, compared without division.
    const __int128 lhs = static_cast<__int128>(best_weight) * threshold.den();
    const __int128 rhs = static_cast<__int128>(threshold.num()) * total_weight_;
    if (lhs < rhs) return std::nullopt;
    return MatchResult{nodes_[best], Rational(best_weight, total_weight_), false};
}

}  // namespace ctxgraph
