#pragma once

// Command implementations behind the ctxgraph executable. Each returns the
// process exit code: 0 success, 1 malformed input or validation failure,
// 2 storage/file failure.

#include "ctxgraph/reasoner.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ctxgraph::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitStorage = 2;

/// Writes one JSON line per decision that fired an action.
class StreamSink : public ActionSink {
public:
    explicit StreamSink(std::ostream& out) : out_(out) {}
    void emit(const DecisionRecord& record) override;

private:
    std::ostream& out_;
};

/// Appends fired decisions to a file, flushing per record.
class FileSink : public ActionSink {
public:
    explicit FileSink(std::filesystem::path path);
    void emit(const DecisionRecord& record) override;

private:
    std::filesystem::path path_;
};

struct EngineInputs {
    std::filesystem::path schema;
    std::optional<std::filesystem::path> graph;
    std::optional<std::filesystem::path> rules;
    std::string threshold = "0.75";
    std::string policy = "graph_wins";

    /// Session ids continue after those already present in this log.
    std::optional<std::filesystem::path> log;
};

struct RunOptions {
    EngineInputs inputs;
    std::filesystem::path trace;
    std::filesystem::path out;  // "-" for stdout
    std::optional<std::filesystem::path> save_graph;
    std::optional<std::filesystem::path> feedback;
    std::vector<std::string> sinks;  // "stdout" or "file:PATH"
};

int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err);
/// `prelude` is an optional trace replayed before the first prompt.
int cmd_interactive(const EngineInputs& inputs, const std::optional<std::filesystem::path>& prelude, std::istream& in,
                    std::ostream& out, std::ostream& err);
int cmd_build_graph(const std::filesystem::path& schema, const std::filesystem::path& log,
                    const std::filesystem::path& out_path, std::ostream& out, std::ostream& err);
int cmd_export_dot(const std::filesystem::path& graph, const std::filesystem::path& out_path, std::ostream& out,
                   std::ostream& err);

/// kind is one of schema, graph, rules, trace. rules and trace need a schema.
int cmd_validate(const std::string& kind, const std::filesystem::path& file,
                 const std::optional<std::filesystem::path>& schema, std::ostream& out, std::ostream& err);

int run_main(int argc, char** argv);

}  // namespace ctxgraph::cli
