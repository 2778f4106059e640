#include "ctxgraph/store.hpp"

#include "ctxgraph/error.hpp"
#include "ctxgraph/json_io.hpp"

#include <sstream>

namespace ctxgraph {

std::string_view to_string(LogKind k) noexcept {
    switch (k) {
        case LogKind::Context: return "context";
        case LogKind::Decision: return "decision";
        case LogKind::Feedback: return "feedback";
    }
    return "context";
}

namespace {

LogKind parse_kind(const std::string& s, std::size_t line) {
    for (auto k : {LogKind::Context, LogKind::Decision, LogKind::Feedback}) {
        if (to_string(k) == s) return k;
    }
    throw CorruptLogError(line, "unknown record kind '" + s + "'");
}

LogRecord parse_record(const std::string& text, std::size_t line) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw CorruptLogError(line, e.what());
    }
    if (!j.is_object() || j.size() != 4 || !j.contains("seq") || !j.contains("kind") || !j.contains("session") ||
        !j.contains("payload")) {
        throw CorruptLogError(line, "expected exactly the keys seq, kind, session, payload");
    }
    if (!j["seq"].is_number_unsigned() || !j["kind"].is_string() || !j["session"].is_string() ||
        !j["payload"].is_object()) {
        throw CorruptLogError(line, "field of the wrong type");
    }
    return {j["seq"].get<std::uint64_t>(), parse_kind(j["kind"].get<std::string>(), line),
            j["session"].get<std::string>(), j["payload"]};
}

struct ScannedLog {
    LoadedLog log;
    std::uintmax_t valid_bytes = 0;  // prefix worth keeping
};

ScannedLog scan_log(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    ScannedLog out;
    std::size_t pos = 0;
    std::size_t line = 0;
    while (pos < text.size()) {
        ++line;
        const std::size_t nl = text.find('\n', pos);
        const bool terminated = nl != std::string::npos;
        const std::string body = text.substr(pos, terminated ? nl - pos : std::string::npos);
        const std::size_t next = terminated ? nl + 1 : text.size();

        if (body.find_first_not_of(" \t\r") == std::string::npos) {
            if (!terminated) break;
            pos = next;
            out.valid_bytes = pos;
            continue;
        }
        LogRecord rec;
        try {
            rec = parse_record(body, line);
        } catch (const CorruptLogError&) {
            if (terminated) throw;
            out.log.warnings.push_back("line " + std::to_string(line) + ": dropped truncated final record");
            break;
        }
        const std::uint64_t expected = out.log.records.empty() ? 1 : out.log.records.back().seq + 1;
        if (rec.seq != expected) {
            throw CorruptLogError(line, "seq " + std::to_string(rec.seq) + " where " + std::to_string(expected) +
                                            " was expected");
        }
        out.log.records.push_back(std::move(rec));
        pos = next;
        out.valid_bytes = terminated ? pos : text.size();
    }
    return out;
}

}  // namespace

json log_record_to_json(const LogRecord& r) {
    return {{"seq", r.seq}, {"kind", std::string(to_string(r.kind))}, {"session", r.session_id}, {"payload", r.payload}};
}

LoadedLog load_log(const std::filesystem::path& path) { return scan_log(path).log; }

LogWriter::LogWriter(std::filesystem::path path) : path_(std::move(path)) {
    std::error_code ec;
    if (std::filesystem::exists(path_, ec)) {
        auto scanned = scan_log(path_);
        if (!scanned.log.records.empty()) next_seq_ = scanned.log.records.back().seq + 1;
        std::filesystem::resize_file(path_, scanned.valid_bytes, ec);
        if (ec) throw Error(ErrorCode::StorageFailure, "cannot trim " + path_.string() + ": " + ec.message());
        // A last record written without its newline still needs one.
        if (scanned.valid_bytes > 0) {
            const std::string text = read_text_file(path_);
            if (text.back() != '\n') {
                std::ofstream fix(path_, std::ios::binary | std::ios::app);
                fix << '\n';
            }
        }
    }
    out_.open(path_, std::ios::binary | std::ios::app);
    if (!out_) throw Error(ErrorCode::StorageFailure, "cannot open log " + path_.string());
}

std::uint64_t LogWriter::append(LogKind kind, const std::string& session_id, json payload) {
    LogRecord r{next_seq_, kind, session_id, std::move(payload)};
    out_ << log_record_to_json(r).dump() << '\n';
    out_.flush();
    if (!out_) throw Error(ErrorCode::StorageFailure, "write to " + path_.string() + " failed");
    return next_seq_++;
}

void LogJournal::context(const std::string& session_id, std::uint64_t timestamp, const ContextSnapshot& observed,
                         const ContextSnapshot& node, const std::optional<ActionSpec>& transition_action) {
    writer_.append(LogKind::Context, session_id,
                   {{"t", timestamp},
                    {"observed", observed.values()},
                    {"context", node.values()},
                    {"action", transition_action ? action_to_json(*transition_action) : json(nullptr)}});
}

void LogJournal::decision(const DecisionRecord& record) {
    writer_.append(LogKind::Decision, record.session_id, decision_to_json(record));
}

void LogJournal::feedback(const std::string& session_id, std::uint64_t timestamp, const ContextSnapshot& node,
                          const ActionSpec& corrected) {
    writer_.append(LogKind::Feedback, session_id,
                   {{"t", timestamp}, {"context", node.values()}, {"action", action_to_json(corrected)}});
}

std::vector<LogEntry> log_entries(const std::vector<LogRecord>& records) {
    std::vector<LogEntry> out;
    for (const auto& r : records) {
        if (r.kind == LogKind::Decision) continue;
        const std::string where = "log seq " + std::to_string(r.seq);
        try {
            const auto& p = r.payload;
            if (!p.contains("context") || !p["context"].is_object()) {
                throw Error(ErrorCode::MalformedInput, "payload lacks a context object");
            }
            ValueMap values;
            for (const auto& [k, v] : p["context"].items()) {
                if (!v.is_string()) throw Error(ErrorCode::MalformedInput, "context label for '" + k + "' is not a string");
                values.emplace(k, v.get<std::string>());
            }
            LogEntry e{r.session_id, ContextSnapshot(std::move(values)), std::nullopt, r.kind == LogKind::Feedback};
            if (p.contains("action") && !p["action"].is_null()) e.action = action_from_json(p["action"], where);
            if (e.feedback && !e.action) throw Error(ErrorCode::MalformedInput, "feedback without an action");
            out.push_back(std::move(e));
        } catch (const Error& e) {
            throw CorruptLogError(static_cast<std::size_t>(r.seq), e.what());
        }
    }
    return out;
}

std::string graph_to_text(const ContextualGraph& graph) { return graph_to_json(graph).dump(2) + "\n"; }

ContextualGraph graph_from_text(const std::string& text) {
    ContextualGraph g;
    try {
        g = graph_from_json(json::parse(text));
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::CorruptGraphFile, e.what());
    } catch (const Error& e) {
        if (e.code() != ErrorCode::MalformedInput) throw;
        throw Error(ErrorCode::CorruptGraphFile, e.what());
    }
    if (auto v = g.check_integrity(); !v.empty()) {
        std::string msg = "graph fails integrity check:";
        for (const auto& s : v) msg += "\n  " + s;
        throw Error(ErrorCode::IntegrityViolation, msg);
    }
    return g;
}

void save_graph(const ContextualGraph& graph, const std::filesystem::path& path) {
    write_text_file(path, graph_to_text(graph));
}

ContextualGraph load_graph(const std::filesystem::path& path) { return graph_from_text(read_text_file(path)); }

}  // namespace ctxgraph
