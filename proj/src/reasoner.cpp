#include "ctxgraph/reasoner.hpp"

#include "ctxgraph/error.hpp"

#include <algorithm>

namespace ctxgraph {

std::string_view to_string(Provenance p) noexcept {
    switch (p) {
        case Provenance::Graph: return "graph";
        case Provenance::Rule: return "rule";
        case Provenance::Merged: return "merged";
        case Provenance::Feedback: return "feedback";
        case Provenance::None: return "none";
    }
    return "none";
}

std::string_view to_string(SynthesisPolicy p) noexcept {
    return p == SynthesisPolicy::GraphWins ? "graph_wins" : "rule_wins";
}

std::string_view to_string(FeedbackMode m) noexcept {
    switch (m) {
        case FeedbackMode::Interactive: return "interactive";
        case FeedbackMode::File: return "file";
        case FeedbackMode::Off: return "off";
    }
    return "off";
}

std::string_view to_string(MutationKind k) noexcept {
    switch (k) {
        case MutationKind::Node: return "node";
        case MutationKind::Edge: return "edge";
        case MutationKind::Path: return "path";
        case MutationKind::Revise: return "revise";
    }
    return "node";
}

Provenance parse_provenance(std::string_view text) {
    for (auto p : {Provenance::Graph, Provenance::Rule, Provenance::Merged, Provenance::Feedback, Provenance::None}) {
        if (to_string(p) == text) return p;
    }
    throw Error(ErrorCode::MalformedInput, "unknown provenance '" + std::string(text) + "'");
}

SynthesisPolicy parse_policy(std::string_view text) {
    if (text == "graph_wins") return SynthesisPolicy::GraphWins;
    if (text == "rule_wins") return SynthesisPolicy::RuleWins;
    throw Error(ErrorCode::MalformedInput, "unknown synthesis policy '" + std::string(text) + "'");
}

FeedbackMode parse_feedback_mode(std::string_view text) {
    for (auto m : {FeedbackMode::Interactive, FeedbackMode::File, FeedbackMode::Off}) {
        if (to_string(m) == text) return m;
    }
    throw Error(ErrorCode::MalformedInput, "unknown feedback mode '" + std::string(text) + "'");
}

MutationKind parse_mutation_kind(std::string_view text) {
    for (auto k : {MutationKind::Node, MutationKind::Edge, MutationKind::Path, MutationKind::Revise}) {
        if (to_string(k) == text) return k;
    }
    throw Error(ErrorCode::MalformedInput, "unknown mutation kind '" + std::string(text) + "'");
}

Synthesis synthesize(const std::optional<ActionSpec>& graph_action, std::span<const ActionSpec> rule_actions,
                     SynthesisPolicy policy) {
    const bool have_rules = !rule_actions.empty();
    if (!graph_action && !have_rules) return {};

    // Lowest precedence first; later writes win.
    std::vector<const ActionSpec*> order;
    auto push_rules = [&] {
        for (auto it = rule_actions.rbegin(); it != rule_actions.rend(); ++it) order.push_back(&*it);
    };
    if (policy == SynthesisPolicy::GraphWins) {
        push_rules();
        if (graph_action) order.push_back(&*graph_action);
    } else {
        if (graph_action) order.push_back(&*graph_action);
        push_rules();
    }

    ActionSpec merged = *order.back();
    merged.assignments.clear();
    for (const ActionSpec* a : order) {
        for (const auto& [device, state] : a->assignments) merged.assignments.insert_or_assign(device, state);
    }

    Provenance p = Provenance::Merged;
    if (!graph_action) p = Provenance::Rule;
    else if (!have_rules) p = Provenance::Graph;
    return {std::move(merged), p};
}

Engine::Engine(ParameterSchema schema, ContextualGraph graph, RulesStore rules, EngineConfig config)
    : schema_(std::move(schema)),
      graph_(std::move(graph)),
      rules_(std::move(rules)),
      config_(config),
      index_(schema_) {
    if (auto v = validate_schema(schema_); !v.empty()) throw Error(ErrorCode::SchemaMismatch, "schema: " + v.front());
    if (auto v = graph_.check_integrity(); !v.empty()) throw Error(ErrorCode::IntegrityViolation, v.front());
    if (!(config_.threshold > Rational(0)) || config_.threshold > Rational(1)) {
        throw Error(ErrorCode::InvalidArgument, "threshold must lie in (0, 1]");
    }
    for (const auto& [id, n] : graph_.nodes()) {
        if (auto v = snapshot_violations(schema_, n.snapshot); !v.empty()) {
            throw Error(ErrorCode::SchemaMismatch, "graph node " + to_string(id) + ": " + v.front());
        }
        index_.insert(id, n.snapshot);
    }
}

SessionState Engine::start_session(std::optional<std::string> session_id) {
    SessionState s;
    s.session_id = session_id ? std::move(*session_id) : "s" + std::to_string(next_session_++);
    s.active_paths = graph_.path_ids();
    return s;
}

const ActionSpec* Engine::find_action(const std::string& action_id) const {
    if (const ActionSpec* a = graph_.find_action(action_id)) return a;
    auto it = rules_.actions().find(action_id);
    return it == rules_.actions().end() ? nullptr : &it->second;
}

void Engine::dispatch(DecisionRecord& record) {
    for (const auto& sink : sinks_) {
        try {
            sink->emit(record);
        } catch (const std::exception& e) {
            record.sink_errors.emplace_back(e.what());
        }
    }
    if (journal_) {
        try {
            journal_->decision(record);
        } catch (const std::exception& e) {
            if (!record.storage_error) record.storage_error = e.what();
        }
    }
    history_.push_back(record);
}

DecisionRecord Engine::step(SessionState& session, std::span<const SensorReading> readings,
                            std::optional<std::uint64_t> at) {
    std::uint64_t t = at.value_or(session.last_timestamp);
    for (const auto& r : readings) {
        if (r.timestamp < session.last_timestamp) t = r.timestamp;
        else if (!at) t = std::max(t, r.timestamp);
    }
    if (t < session.last_timestamp) {
        throw Error(ErrorCode::InvalidArgument, "timestamp " + std::to_string(t) + " precedes " +
                                                    std::to_string(session.last_timestamp));
    }

    ContextSnapshot snapshot = session.last_snapshot ? build_context(schema_, readings, *session.last_snapshot)
                                                     : build_context(schema_, readings);
    session.last_timestamp = t;

    DecisionRecord record;
    record.timestamp = t;
    record.session_id = session.session_id;

    // No significant change: filtered before storage and reasoning.
    if (session.last_snapshot && snapshot == *session.last_snapshot) {
        record.node = *session.current_node;
        dispatch(record);
        return record;
    }

    std::vector<ActionSpec> rule_actions;
    for (const auto& rule : rules_.matching_rules(snapshot)) {
        record.rule_ids.push_back(rule.rule_id);
        rule_actions.push_back(rules_.action_of(rule));
    }

    NodeId matched;
    if (auto hit = index_.retrieve_best(snapshot, config_.threshold)) {
        matched = hit->node;
        record.match = *hit;
    } else {
        matched = graph_.add_context_node(snapshot);
        index_.insert(matched, snapshot);
        record.graph_mutations.push_back({MutationKind::Node, matched.value});
    }
    session.last_snapshot = snapshot;

    std::optional<ActionSpec> graph_action;
    if (session.current_node && *session.current_node != matched) {
        const NodeId from = *session.current_node;
        const auto candidates = graph_.edges_between(from, matched);
        std::optional<CrossroadChoice> choice;
        if (!candidates.empty()) choice = resolve_crossroad(candidates, session.active_paths);

        EdgeId walked;
        if (choice) {
            walked = choice->edge.id;
            if (session.provisional_path) graph_.append_to_path(*session.provisional_path, walked);
            session.active_paths = std::move(choice->narrowed);
            if (choice->edge.action) {
                graph_action = *graph_.find_action(*choice->edge.action);
                record.graph_action = choice->edge.action;
            }
        } else {
            if (!session.provisional_path) {
                session.provisional_path = graph_.next_path_id();
                for (EdgeId e : session.traversed) graph_.append_to_path(*session.provisional_path, e);
                record.graph_mutations.push_back({MutationKind::Path, session.provisional_path->value});
            }
            const std::size_t before = graph_.edges().size();
            walked = graph_.add_edge(from, matched, std::nullopt, *session.provisional_path);
            if (graph_.edges().size() != before) record.graph_mutations.push_back({MutationKind::Edge, walked.value});
            session.active_paths = {*session.provisional_path};
        }
        record.path_id_used = *session.active_paths.begin();
        session.traversed.push_back(walked);
        session.last_edge = walked;
    } else {
        session.last_edge.reset();
    }
    session.current_node = matched;
    record.node = matched;

    auto final_action = synthesize(graph_action, rule_actions, config_.policy);
    record.fired_action = std::move(final_action.action);
    record.provenance = final_action.provenance;

    if (journal_) {
        try {
            journal_->context(session.session_id, t, snapshot, graph_.node(matched).snapshot, graph_action);
        } catch (const std::exception& e) {
            record.storage_error = e.what();
        }
    }
    dispatch(record);
    return record;
}

DecisionRecord Engine::apply_feedback(SessionState& session, const ActionSpec& corrected) {
    if (config_.feedback == FeedbackMode::Off) throw Error(ErrorCode::FeedbackDisabled, "feedback is disabled");
    if (!session.last_edge) throw Error(ErrorCode::NoPriorStep, "no transition to revise in session " + session.session_id);
    if (auto v = validate_action(corrected); !v.empty()) throw Error(ErrorCode::InvalidArgument, v.front());

    graph_.put_action(corrected);
    graph_.set_edge_action(*session.last_edge, corrected.action_id);

    DecisionRecord record;
    record.timestamp = session.last_timestamp;
    record.session_id = session.session_id;
    record.node = *session.current_node;
    record.fired_action = corrected;
    record.provenance = Provenance::Feedback;
    record.graph_action = corrected.action_id;
    if (!session.active_paths.empty()) record.path_id_used = *session.active_paths.begin();
    record.graph_mutations.push_back({MutationKind::Revise, session.last_edge->value});

    if (journal_) {
        try {
            journal_->feedback(session.session_id, record.timestamp, graph_.node(record.node).snapshot, corrected);
        } catch (const std::exception& e) {
            record.storage_error = e.what();
        }
    }
    dispatch(record);
    return record;
}

}  // namespace ctxgraph
