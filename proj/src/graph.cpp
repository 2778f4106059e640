#include "ctxgraph/graph.hpp"

#include "ctxgraph/error.hpp"

#include <algorithm>
#include <sstream>

namespace ctxgraph {

std::string to_string(NodeId id) { return "n" + std::to_string(id.value); }
std::string to_string(EdgeId id) { return "e" + std::to_string(id.value); }
std::string to_string(PathId id) { return std::to_string(id.value); }

ContextualGraph ContextualGraph::from_parts(std::vector<ContextNode> nodes, std::vector<TransitionEdge> edges,
                                            std::vector<PathRecord> paths, std::vector<ActionSpec> actions) {
    ContextualGraph g;
    for (auto& n : nodes) g.nodes_.insert_or_assign(n.id, std::move(n));
    for (auto& e : edges) g.edges_.insert_or_assign(e.id, std::move(e));
    for (auto& p : paths) g.paths_.insert_or_assign(p.id, std::move(p));
    for (auto& a : actions) g.actions_.insert_or_assign(a.action_id, std::move(a));
    g.rebuild_indexes();
    return g;
}

void ContextualGraph::rebuild_indexes() {
    by_fingerprint_.clear();
    adjacency_.clear();
    for (const auto& [id, n] : nodes_) {
        by_fingerprint_.try_emplace(n.snapshot.fingerprint(), id);
        next_node_ = std::max(next_node_, id.value + 1);
    }
    for (const auto& [id, e] : edges_) {
        adjacency_[{e.from, e.to}].push_back(id);
        next_edge_ = std::max(next_edge_, id.value + 1);
    }
}

void ContextualGraph::require_node(NodeId id) const {
    if (!nodes_.contains(id)) throw Error(ErrorCode::UnknownNode, "unknown node " + to_string(id));
}

NodeId ContextualGraph::add_context_node(ContextSnapshot snapshot) {
    if (by_fingerprint_.contains(snapshot.fingerprint())) {
        throw Error(ErrorCode::DuplicateContext, "context already stored: " + snapshot.fingerprint());
    }
    const NodeId id{next_node_++};
    by_fingerprint_.emplace(snapshot.fingerprint(), id);
    nodes_.emplace(id, ContextNode{id, std::move(snapshot), {}});
    return id;
}

void ContextualGraph::put_action(ActionSpec action) {
    if (auto v = validate_action(action); !v.empty()) throw Error(ErrorCode::InvalidArgument, v.front());
    std::string key = action.action_id;
    actions_.insert_or_assign(std::move(key), std::move(action));
}

EdgeId ContextualGraph::add_edge(NodeId from, NodeId to, std::optional<std::string> action, PathId path) {
    require_node(from);
    require_node(to);
    if (from == to) throw Error(ErrorCode::SelfTransition, "self-transition on " + to_string(from));
    if (action && !actions_.contains(*action)) throw Error(ErrorCode::UnknownAction, "unknown action '" + *action + "'");
    if (path.value == 0) throw Error(ErrorCode::InvalidArgument, "path ids are positive");

    if (auto it = paths_.find(path); it != paths_.end()) {
        const auto& tip = edges_.at(it->second.edges.back());
        if (tip.to != from) {
            throw Error(ErrorCode::BrokenChain, "path " + to_string(path) + " ends at " + to_string(tip.to) +
                                                    ", cannot continue from " + to_string(from));
        }
    }

    EdgeId id{};
    auto& bucket = adjacency_[{from, to}];
    auto same = std::find_if(bucket.begin(), bucket.end(), [&](EdgeId e) { return edges_.at(e).action == action; });
    if (same != bucket.end()) {
        id = *same;
    } else {
        id = EdgeId{next_edge_++};
        edges_.emplace(id, TransitionEdge{id, from, to, std::move(action), {}});
        bucket.push_back(id);
    }
    append_to_path(path, id);
    return id;
}

void ContextualGraph::append_to_path(PathId path, EdgeId edge) {
    auto eit = edges_.find(edge);
    if (eit == edges_.end()) throw Error(ErrorCode::InvalidArgument, "unknown edge " + to_string(edge));
    if (path.value == 0) throw Error(ErrorCode::InvalidArgument, "path ids are positive");
    auto [pit, inserted] = paths_.try_emplace(path, PathRecord{path, {}});
    if (!inserted) {
        const auto& tip = edges_.at(pit->second.edges.back());
        if (tip.to != eit->second.from) {
            throw Error(ErrorCode::BrokenChain, "edge " + to_string(edge) + " does not continue path " +
                                                    to_string(path));
        }
    }
    pit->second.edges.push_back(edge);
    eit->second.path_ids.insert(path);
}

void ContextualGraph::set_edge_action(EdgeId edge, std::optional<std::string> action) {
    auto it = edges_.find(edge);
    if (it == edges_.end()) throw Error(ErrorCode::InvalidArgument, "unknown edge " + to_string(edge));
    if (action && !actions_.contains(*action)) throw Error(ErrorCode::UnknownAction, "unknown action '" + *action + "'");
    it->second.action = std::move(action);
}

void ContextualGraph::add_shared_attachment(NodeId node, NodeId shared) {
    require_node(node);
    require_node(shared);
    if (node == shared) throw Error(ErrorCode::InvalidArgument, "node cannot be its own shared context");
    nodes_.at(node).shared_attachments.insert(shared);
}

const ContextNode& ContextualGraph::node(NodeId id) const {
    require_node(id);
    return nodes_.at(id);
}

const TransitionEdge& ContextualGraph::edge(EdgeId id) const {
    auto it = edges_.find(id);
    if (it == edges_.end()) throw Error(ErrorCode::InvalidArgument, "unknown edge " + to_string(id));
    return it->second;
}

const PathRecord& ContextualGraph::path(PathId id) const {
    auto it = paths_.find(id);
    if (it == paths_.end()) throw Error(ErrorCode::InvalidArgument, "unknown path " + to_string(id));
    return it->second;
}

const ActionSpec* ContextualGraph::find_action(const std::string& action_id) const {
    auto it = actions_.find(action_id);
    return it == actions_.end() ? nullptr : &it->second;
}

std::optional<NodeId> ContextualGraph::find_node(const std::string& fingerprint) const {
    auto it = by_fingerprint_.find(fingerprint);
    if (it == by_fingerprint_.end()) return std::nullopt;
    return it->second;
}

std::vector<TransitionEdge> ContextualGraph::edges_between(NodeId from, NodeId to) const {
    require_node(from);
    require_node(to);
    std::vector<TransitionEdge> out;
    if (auto it = adjacency_.find({from, to}); it != adjacency_.end()) {
        for (EdgeId e : it->second) out.push_back(edges_.at(e));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return out;
}

PathSet ContextualGraph::path_ids() const {
    PathSet out;
    for (const auto& [id, _] : paths_) out.insert(id);
    return out;
}

PathId ContextualGraph::next_path_id() const {
    return PathId{paths_.empty() ? 1 : paths_.rbegin()->first.value + 1};
}

std::vector<std::string> ContextualGraph::check_integrity() const {
    std::vector<std::string> out;

    std::map<std::string, NodeId> seen;
    for (const auto& [key, n] : nodes_) {
        if (key != n.id) out.push_back("node keyed " + to_string(key) + " carries id " + to_string(n.id));
        if (key.value == 0) out.push_back("node id 0 is reserved");
        auto [it, fresh] = seen.try_emplace(n.snapshot.fingerprint(), key);
        if (!fresh) {
            out.push_back("nodes " + to_string(it->second) + " and " + to_string(key) + " share fingerprint '" +
                          n.snapshot.fingerprint() + "'");
        }
        for (NodeId s : n.shared_attachments) {
            if (!nodes_.contains(s)) out.push_back("node " + to_string(key) + " attaches unknown node " + to_string(s));
            if (s == key) out.push_back("node " + to_string(key) + " attaches itself");
        }
    }

    for (const auto& [key, a] : actions_) {
        if (key != a.action_id) out.push_back("action keyed '" + key + "' carries id '" + a.action_id + "'");
        for (auto& v : validate_action(a)) out.push_back(v);
    }

    for (const auto& [key, e] : edges_) {
        const std::string where = "edge " + to_string(key) + ": ";
        if (key != e.id) out.push_back(where + "carries id " + to_string(e.id));
        if (!nodes_.contains(e.from)) out.push_back(where + "unknown source " + to_string(e.from));
        if (!nodes_.contains(e.to)) out.push_back(where + "unknown target " + to_string(e.to));
        if (e.from == e.to) out.push_back(where + "self-transition");
        if (e.action && !actions_.contains(*e.action)) out.push_back(where + "unknown action '" + *e.action + "'");
        if (e.path_ids.empty()) out.push_back(where + "no path ids");
        for (PathId p : e.path_ids) {
            auto pit = paths_.find(p);
            if (pit == paths_.end()) {
                out.push_back(where + "path " + to_string(p) + " has no path record");
            } else if (std::find(pit->second.edges.begin(), pit->second.edges.end(), key) == pit->second.edges.end()) {
                out.push_back(where + "path " + to_string(p) + " does not traverse this edge");
            }
        }
    }

    for (const auto& [key, p] : paths_) {
        const std::string where = "path " + to_string(key) + ": ";
        if (key != p.id) out.push_back(where + "carries id " + to_string(p.id));
        if (key.value == 0) out.push_back(where + "path ids are positive");
        if (p.edges.empty()) out.push_back(where + "no edges");
        const TransitionEdge* prev = nullptr;
        for (EdgeId e : p.edges) {
            auto eit = edges_.find(e);
            if (eit == edges_.end()) {
                out.push_back(where + "unknown edge " + to_string(e));
                prev = nullptr;
                continue;
            }
            if (!eit->second.path_ids.contains(key)) {
                out.push_back(where + "member edge " + to_string(e) + " does not list this path");
            }
            if (prev && prev->to != eit->second.from) {
                out.push_back(where + "chain broken between " + to_string(prev->id) + " and " + to_string(e));
            }
            prev = &eit->second;
        }
    }
    return out;
}

std::optional<CrossroadChoice> resolve_crossroad(std::span<const TransitionEdge> candidates,
                                                 const PathSet& active_paths) {
    if (candidates.empty()) throw Error(ErrorCode::InvalidArgument, "crossroad with no candidates");
    const TransitionEdge* best = nullptr;
    PathSet best_paths;
    for (const auto& c : candidates) {
        PathSet common;
        std::set_intersection(c.path_ids.begin(), c.path_ids.end(), active_paths.begin(), active_paths.end(),
                              std::inserter(common, common.end()));
        if (common.empty()) continue;
        if (!best || *common.begin() < *best_paths.begin() ||
            (*common.begin() == *best_paths.begin() && c.id < best->id)) {
            best = &c;
            best_paths = std::move(common);
        }
    }
    if (!best) return std::nullopt;
    return CrossroadChoice{*best, std::move(best_paths)};
}

namespace {

// Replay state of one session while building from a log.
struct SessionReplay {
    std::optional<NodeId> current;
    PathSet active;
    std::vector<EdgeId> traversed;
    std::optional<PathId> own_path;
};

std::string describe(const ContextualGraph& g, NodeId from, NodeId to) {
    return to_string(from) + " -> " + to_string(to) + " (" + g.node(from).snapshot.fingerprint() + " -> " +
           g.node(to).snapshot.fingerprint() + ")";
}

}  // namespace

ContextualGraph build_from_log(const ParameterSchema& schema, std::span<const LogEntry> log) {
    ContextualGraph g;
    std::set<std::string> finished;
    std::optional<std::string> session_id;
    SessionReplay s;

    for (const auto& entry : log) {
        if (entry.session_id != session_id) {
            if (session_id) finished.insert(*session_id);
            if (finished.contains(entry.session_id)) {
                throw Error(ErrorCode::InconsistentLog, "session '" + entry.session_id + "' is not contiguous");
            }
            session_id = entry.session_id;
            s = SessionReplay{};
            s.active = g.path_ids();
        }
        if (auto v = snapshot_violations(schema, entry.snapshot); !v.empty()) {
            throw Error(ErrorCode::SchemaMismatch, "log snapshot: " + v.front());
        }

        std::optional<std::string> action_id;
        if (entry.action) {
            const ActionSpec* known = g.find_action(entry.action->action_id);
            if (known && *known != *entry.action && !entry.feedback) {
                throw Error(ErrorCode::InconsistentLog,
                            "action '" + entry.action->action_id + "' recorded with two definitions");
            }
            g.put_action(*entry.action);
            action_id = entry.action->action_id;
        }

        if (entry.feedback) {
            const auto target = g.find_node(entry.snapshot.fingerprint());
            if (s.traversed.empty() || !target || g.edge(s.traversed.back()).to != *target) {
                throw Error(ErrorCode::InconsistentLog, "feedback in session '" + entry.session_id +
                                                            "' does not follow a transition into its context");
            }
            g.set_edge_action(s.traversed.back(), action_id);
            continue;
        }

        const auto found = g.find_node(entry.snapshot.fingerprint());
        const NodeId node = found ? *found : g.add_context_node(entry.snapshot);
        if (!s.current) {
            s.current = node;
            continue;
        }
        if (node == *s.current) continue;

        const auto candidates = g.edges_between(*s.current, node);
        std::vector<TransitionEdge> agreeing;
        std::copy_if(candidates.begin(), candidates.end(), std::back_inserter(agreeing),
                     [&](const auto& e) { return e.action == action_id; });

        std::optional<CrossroadChoice> choice;
        if (!agreeing.empty()) choice = resolve_crossroad(agreeing, s.active);
        if (!choice && !candidates.empty()) {
            if (auto other = resolve_crossroad(candidates, s.active)) {
                throw Error(ErrorCode::InconsistentLog,
                            "transition " + describe(g, *s.current, node) + " on path " +
                                to_string(*other->narrowed.begin()) + " recorded with action '" +
                                action_id.value_or("none") + "' but the path holds '" +
                                other->edge.action.value_or("none") + "'");
            }
        }

        if (choice) {
            if (s.own_path) g.append_to_path(*s.own_path, choice->edge.id);
            s.active = std::move(choice->narrowed);
            s.traversed.push_back(choice->edge.id);
        } else {
            if (!s.own_path) {
                s.own_path = g.next_path_id();
                for (EdgeId e : s.traversed) g.append_to_path(*s.own_path, e);
            }
            s.traversed.push_back(g.add_edge(*s.current, node, action_id, *s.own_path));
            s.active = {*s.own_path};
        }
        s.current = node;
    }
    return g;
}

namespace {

std::string dot_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

std::string html_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

std::string path_label(const PathSet& paths) {
    std::string out = paths.size() == 1 ? "path " : "paths ";
    bool first = true;
    for (PathId p : paths) {
        if (!first) out += ",";
        out += to_string(p);
        first = false;
    }
    return out;
}

}  // namespace

std::string export_dot(const ContextualGraph& graph) {
    std::ostringstream os;
    os << "digraph ctx {\n";
    for (const auto& [id, n] : graph.nodes()) {
        os << "  " << to_string(id) << " [shape=box, label=\"" << to_string(id);
        for (const auto& [name, value] : n.snapshot.values()) os << "\\n" << dot_escape(name) << '=' << dot_escape(value);
        os << "\"];\n";
    }
    for (const auto& [id, e] : graph.edges()) {
        os << "  " << to_string(e.from) << " -> " << to_string(e.to) << " [";
        if (e.action) {
            const ActionSpec* a = graph.find_action(*e.action);
            const std::string name = a && !a->name.empty() ? a->name : *e.action;
            os << "label=<<table border=\"1\" cellborder=\"0\" style=\"rounded\"><tr><td>" << html_escape(name)
               << "</td></tr><tr><td>" << html_escape(path_label(e.path_ids)) << "</td></tr></table>>";
        } else {
            os << "label=\"" << path_label(e.path_ids) << '"';
        }
        os << "];\n";
    }
    for (const auto& [id, n] : graph.nodes()) {
        for (NodeId s : n.shared_attachments) {
            os << "  " << to_string(id) << " -> " << to_string(s) << " [style=dashed, arrowhead=none];\n";
        }
    }
    os << "}\n";
    return os.str();
}

}  // namespace ctxgraph
