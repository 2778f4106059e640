#pragma once

// Stored context database: an append-only newline-delimited JSON log plus
// graph save/load.

#include "ctxgraph/graph.hpp"
#include "ctxgraph/reasoner.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace ctxgraph {

enum class LogKind { Context, Decision, Feedback };

std::string_view to_string(LogKind k) noexcept;

struct LogRecord {
    std::uint64_t seq = 0;
    LogKind kind = LogKind::Context;
    std::string session_id;
    nlohmann::json payload;

    friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

nlohmann::json log_record_to_json(const LogRecord& record);

struct LoadedLog {
    std::vector<LogRecord> records;
    std::vector<std::string> warnings;
};

/// Reads a log in seq order. A final line without a terminating newline that
/// does not parse is dropped with a warning; any other bad line, gap or
/// non-monotone seq throws CorruptLogError. Missing file: StorageFailure.
LoadedLog load_log(const std::filesystem::path& path);

/// Appends records with consecutive seq numbers, flushing after each one.
/// Reopening an existing log continues after its last seq and cuts off a
/// torn final line.
class LogWriter {
public:
    explicit LogWriter(std::filesystem::path path);

    /// Returns the assigned seq. Throws StorageFailure.
    std::uint64_t append(LogKind kind, const std::string& session_id, nlohmann::json payload);

    std::uint64_t last_seq() const noexcept { return next_seq_ - 1; }
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
    std::ofstream out_;
    std::uint64_t next_seq_ = 1;
};

/// Engine journal backed by a LogWriter.
class LogJournal : public DecisionJournal {
public:
    explicit LogJournal(std::filesystem::path path) : writer_(std::move(path)) {}

    void context(const std::string& session_id, std::uint64_t timestamp, const ContextSnapshot& observed,
                 const ContextSnapshot& node, const std::optional<ActionSpec>& transition_action) override;
    void decision(const DecisionRecord& record) override;
    void feedback(const std::string& session_id, std::uint64_t timestamp, const ContextSnapshot& node,
                  const ActionSpec& corrected) override;

    const LogWriter& writer() const noexcept { return writer_; }

private:
    LogWriter writer_;
};

/// Graph-builder input from context and feedback records; decisions are skipped.
std::vector<LogEntry> log_entries(const std::vector<LogRecord>& records);

/// Sorted keys, two-space indent, trailing newline.
std::string graph_to_text(const ContextualGraph& graph);

/// Throws CorruptGraphFile on bad JSON or structure, IntegrityViolation when
/// the decoded graph fails check_integrity().
ContextualGraph graph_from_text(const std::string& text);

void save_graph(const ContextualGraph& graph, const std::filesystem::path& path);
ContextualGraph load_graph(const std::filesystem::path& path);

}  // namespace ctxgraph
