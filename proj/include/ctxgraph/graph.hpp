#pragma once

#include "ctxgraph/model.hpp"

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ctxgraph {

template <class Tag>
struct Id {
    std::uint64_t value = 0;

    friend auto operator<=>(const Id&, const Id&) = default;
};

using NodeId = Id<struct NodeTag>;
using EdgeId = Id<struct EdgeTag>;
using PathId = Id<struct PathTag>;

std::string to_string(NodeId id);
std::string to_string(EdgeId id);
std::string to_string(PathId id);

using PathSet = std::set<PathId>;

struct ContextNode {
    NodeId id;
    ContextSnapshot snapshot;
    std::set<NodeId> shared_attachments;

    friend bool operator==(const ContextNode&, const ContextNode&) = default;
};

/// A transition between two contexts. The action, when present, is an
/// action_id into the graph's action catalog.
struct TransitionEdge {
    EdgeId id;
    NodeId from;
    NodeId to;
    std::optional<std::string> action;
    PathSet path_ids;

    friend bool operator==(const TransitionEdge&, const TransitionEdge&) = default;
};

/// A linear chain of edges; each edge's `to` is the next edge's `from`.
struct PathRecord {
    PathId id;
    std::vector<EdgeId> edges;

    friend bool operator==(const PathRecord&, const PathRecord&) = default;
};

/// Context nodes joined by action-carrying edges, each edge tagged with the
/// identifiers of the paths that run through it.
///
/// The mutating API preserves every invariant checked by check_integrity().
/// from_parts() is the one unchecked entry point; loaders call it and then
/// check_integrity() themselves.
///
/// Thread-safety: single writer, concurrent readers between mutations.
class ContextualGraph {
public:
    ContextualGraph() = default;

    static ContextualGraph from_parts(std::vector<ContextNode> nodes, std::vector<TransitionEdge> edges,
                                      std::vector<PathRecord> paths, std::vector<ActionSpec> actions);

    // ------------------------------------------------------------------
    // Mutation
    // ------------------------------------------------------------------

    /// Throws DuplicateContext when a node with the same fingerprint exists.
    NodeId add_context_node(ContextSnapshot snapshot);

    /// Inserts or replaces the catalog entry for action.action_id.
    void put_action(ActionSpec action);

    /// Adds `path` to the (from, to, action) edge, creating the edge if needed,
    /// and appends it to the path's chain.
    /// Throws UnknownNode, UnknownAction, SelfTransition or BrokenChain.
    EdgeId add_edge(NodeId from, NodeId to, std::optional<std::string> action, PathId path);

    /// Appends an existing edge to a path (created when absent).
    void append_to_path(PathId path, EdgeId edge);

    void set_edge_action(EdgeId edge, std::optional<std::string> action);

    void add_shared_attachment(NodeId node, NodeId shared);

    // ------------------------------------------------------------------
    // Queries
    // ------------------------------------------------------------------

    const std::map<NodeId, ContextNode>& nodes() const noexcept { return nodes_; }
    const std::map<EdgeId, TransitionEdge>& edges() const noexcept { return edges_; }
    const std::map<PathId, PathRecord>& paths() const noexcept { return paths_; }
    const std::map<std::string, ActionSpec>& actions() const noexcept { return actions_; }

    const ContextNode& node(NodeId id) const;
    const TransitionEdge& edge(EdgeId id) const;
    const PathRecord& path(PathId id) const;
    const ActionSpec* find_action(const std::string& action_id) const;

    std::optional<NodeId> find_node(const std::string& fingerprint) const;
    bool contains(NodeId id) const { return nodes_.contains(id); }

    /// Every edge from `from` to `to`, ascending by edge id. Throws UnknownNode.
    std::vector<TransitionEdge> edges_between(NodeId from, NodeId to) const;

    PathSet path_ids() const;

    /// One past the largest registered path id.
    PathId next_path_id() const;

    /// Every violated structural invariant. Empty means the graph is sound.
    std::vector<std::string> check_integrity() const;

    friend bool operator==(const ContextualGraph& a, const ContextualGraph& b) {
        return a.nodes_ == b.nodes_ && a.edges_ == b.edges_ && a.paths_ == b.paths_ && a.actions_ == b.actions_;
    }

private:
    void require_node(NodeId id) const;
    void rebuild_indexes();

    std::map<NodeId, ContextNode> nodes_;
    std::map<EdgeId, TransitionEdge> edges_;
    std::map<PathId, PathRecord> paths_;
    std::map<std::string, ActionSpec> actions_;

    std::map<std::string, NodeId> by_fingerprint_;
    std::map<std::pair<NodeId, NodeId>, std::vector<EdgeId>> adjacency_;
    std::uint64_t next_node_ = 1;
    std::uint64_t next_edge_ = 1;
};

struct CrossroadChoice {
    TransitionEdge edge;
    PathSet narrowed;
};

/// Picks the candidate whose path ids intersect the active set; when several
/// do, the one with the smallest intersecting path id. nullopt means no
/// candidate lies on an active path. Throws InvalidArgument on no candidates.
std::optional<CrossroadChoice> resolve_crossroad(std::span<const TransitionEdge> candidates,
                                                 const PathSet& active_paths);

/// One observed context in a session log. A feedback entry revises the
/// action on the session's most recent transition, which must end at
/// `snapshot`.
struct LogEntry {
    std::string session_id;
    ContextSnapshot snapshot;
    std::optional<ActionSpec> action;
    bool feedback = false;
};

/// Builds a graph by replaying session logs: one node per fingerprint, and
/// a session's transitions follow existing paths until they diverge, at
/// which point the session's own path is registered (carrying the edges it
/// already walked). Throws InconsistentLog when a transition that follows
/// a path records a different action than the path holds.
ContextualGraph build_from_log(const ParameterSchema& schema, std::span<const LogEntry> log);

/// Deterministic Graphviz rendering.
std::string export_dot(const ContextualGraph& graph);

}  // namespace ctxgraph
