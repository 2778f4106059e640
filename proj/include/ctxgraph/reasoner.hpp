#pragma once

#include "ctxgraph/graph.hpp"
#include "ctxgraph/matching.hpp"
#include "ctxgraph/model.hpp"
#include "ctxgraph/rules.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ctxgraph {

enum class Provenance { Graph, Rule, Merged, Feedback, None };
enum class SynthesisPolicy { GraphWins, RuleWins };
enum class FeedbackMode { Interactive, File, Off };

std::string_view to_string(Provenance p) noexcept;
std::string_view to_string(SynthesisPolicy p) noexcept;
std::string_view to_string(FeedbackMode m) noexcept;
Provenance parse_provenance(std::string_view text);
SynthesisPolicy parse_policy(std::string_view text);
FeedbackMode parse_feedback_mode(std::string_view text);

struct EngineConfig {
    Rational threshold{3, 4};
    SynthesisPolicy policy = SynthesisPolicy::GraphWins;
    FeedbackMode feedback = FeedbackMode::Interactive;
};

enum class MutationKind { Node, Edge, Path, Revise };

std::string_view to_string(MutationKind k) noexcept;
MutationKind parse_mutation_kind(std::string_view text);

struct GraphMutation {
    MutationKind kind;
    std::uint64_t id = 0;

    friend bool operator==(const GraphMutation&, const GraphMutation&) = default;
};

/// Outcome of one reasoning step (or one feedback event).
///
/// graph_action and rule_ids name the sources handed to synthesize(), so the
/// fired action can be recomputed from the record and the catalogs.
struct DecisionRecord {
    std::uint64_t timestamp = 0;
    std::string session_id;
    NodeId node;
    std::optional<ActionSpec> fired_action;
    Provenance provenance = Provenance::None;
    std::vector<std::string> rule_ids;
    std::optional<PathId> path_id_used;
    std::optional<std::string> graph_action;
    std::vector<GraphMutation> graph_mutations;
    std::optional<MatchResult> match;
    std::vector<std::string> sink_errors;
    std::optional<std::string> storage_error;

    friend bool operator==(const DecisionRecord&, const DecisionRecord&) = default;
};

struct Synthesis {
    std::optional<ActionSpec> action;
    Provenance provenance = Provenance::None;
};

/// Merges the graph's action with the matching rules' actions device by
/// device. Under GraphWins the graph assignment beats any rule; under
/// RuleWins the reverse. Among rules, earlier entries beat later ones.
/// The merged action keeps the id and name of the winning source.
Synthesis synthesize(const std::optional<ActionSpec>& graph_action, std::span<const ActionSpec> rule_actions,
                     SynthesisPolicy policy = SynthesisPolicy::GraphWins);

/// Receives every decision record in step order. Throwing from emit() is
/// reported in the record and never aborts the step.
class ActionSink {
public:
    virtual ~ActionSink() = default;
    virtual void emit(const DecisionRecord& record) = 0;
};

class CollectorSink : public ActionSink {
public:
    void emit(const DecisionRecord& record) override { records_.push_back(record); }
    const std::vector<DecisionRecord>& records() const noexcept { return records_; }

private:
    std::vector<DecisionRecord> records_;
};

/// Persistence hook for the stored context database. Implementations throw
/// Error(StorageFailure); the engine records the failure and carries on.
class DecisionJournal {
public:
    virtual ~DecisionJournal() = default;

    /// A significantly changed context. `node` is the stored context it was
    /// matched to; `transition_action` is the action on the edge walked into it.
    virtual void context(const std::string& session_id, std::uint64_t timestamp, const ContextSnapshot& observed,
                         const ContextSnapshot& node, const std::optional<ActionSpec>& transition_action) = 0;
    virtual void decision(const DecisionRecord& record) = 0;
    virtual void feedback(const std::string& session_id, std::uint64_t timestamp, const ContextSnapshot& node,
                          const ActionSpec& corrected) = 0;
};

struct SessionState {
    std::string session_id;
    std::optional<NodeId> current_node;
    PathSet active_paths;
    std::optional<PathId> provisional_path;

    // Carry-over base for partial readings; the sensed context, which may
    // differ from current_node's snapshot after a similarity match.
    std::optional<ContextSnapshot> last_snapshot;
    std::vector<EdgeId> traversed;
    std::optional<EdgeId> last_edge;
    std::uint64_t last_timestamp = 0;
};

/// Runs the per-event reasoning pipeline over an owned graph and rules store.
///
/// One session steps strictly sequentially. Steps may mutate the graph, so
/// the engine must be exclusively owned while stepping.
class Engine {
public:
    Engine(ParameterSchema schema, ContextualGraph graph, RulesStore rules, EngineConfig config = {});

    /// Ids default to s1, s2, ... in call order.
    SessionState start_session(std::optional<std::string> session_id = std::nullopt);

    /// Readings without an explicit `at` are stamped with their own greatest
    /// timestamp. Throws InvalidArgument when time runs backwards, and
    /// whatever build_context() throws.
    DecisionRecord step(SessionState& session, std::span<const SensorReading> readings,
                        std::optional<std::uint64_t> at = std::nullopt);

    /// Puts `corrected` on the edge walked by the session's last transition.
    /// Throws NoPriorStep or FeedbackDisabled.
    DecisionRecord apply_feedback(SessionState& session, const ActionSpec& corrected);

    void add_sink(std::shared_ptr<ActionSink> sink) { sinks_.push_back(std::move(sink)); }
    void set_journal(std::shared_ptr<DecisionJournal> journal) { journal_ = std::move(journal); }

    /// Ids of actions known to either the graph or the rules store.
    const ActionSpec* find_action(const std::string& action_id) const;

    const ParameterSchema& schema() const noexcept { return schema_; }
    const ContextualGraph& graph() const noexcept { return graph_; }
    const RulesStore& rules() const noexcept { return rules_; }
    const ContextIndex& index() const noexcept { return index_; }
    const EngineConfig& config() const noexcept { return config_; }
    const std::vector<DecisionRecord>& history() const noexcept { return history_; }

private:
    void dispatch(DecisionRecord& record);

    ParameterSchema schema_;
    ContextualGraph graph_;
    RulesStore rules_;
    EngineConfig config_;
    ContextIndex index_;
    std::vector<std::shared_ptr<ActionSink>> sinks_;
    std::shared_ptr<DecisionJournal> journal_;
    std::vector<DecisionRecord> history_;
    std::uint64_t next_session_ = 1;
};

}  // namespace ctxgraph
