#include "ctxgraph/cli.hpp"

#include "ctxgraph/error.hpp"
#include "ctxgraph/json_io.hpp"
#include "ctxgraph/store.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace ctxgraph::cli {

namespace {

int exit_code_for(const Error& e) {
    return e.code() == ErrorCode::StorageFailure ? kExitStorage : kExitInput;
}

std::string describe_action(const std::optional<ActionSpec>& a) { return a ? a->name : "none"; }

std::string path_set_text(const PathSet& paths) {
    std::string s = "{";
    for (PathId p : paths) {
        if (s.size() > 1) s += ",";
        s += to_string(p);
    }
    return s + "}";
}

Engine load_engine(const EngineInputs& in, FeedbackMode feedback) {
    ParameterSchema schema = load_schema(in.schema);
    if (auto v = validate_schema(schema); !v.empty()) throw Error(ErrorCode::SchemaMismatch, "schema: " + v.front());
    ContextualGraph graph = in.graph ? load_graph(*in.graph) : ContextualGraph{};
    RulesStore rules = in.rules ? rules_from_json(schema, read_json_file(*in.rules), graph.actions()) : RulesStore(schema);

    EngineConfig config;
    try {
        config.threshold = Rational::parse(in.threshold);
    } catch (const Error& e) {
        throw Error(ErrorCode::MalformedInput, std::string("--threshold: ") + e.what());
    }
    config.policy = parse_policy(in.policy);
    config.feedback = feedback;
    return Engine(std::move(schema), std::move(graph), std::move(rules), config);
}

SessionState open_session(Engine& engine, const EngineInputs& in) {
    if (!in.log) return engine.start_session();
    std::set<std::string> taken;
    if (std::filesystem::exists(*in.log)) {
        for (const auto& r : load_log(*in.log).records) taken.insert(r.session_id);
    }
    std::size_t k = taken.size() + 1;
    while (taken.contains("s" + std::to_string(k))) ++k;
    SessionState session = engine.start_session("s" + std::to_string(k));
    engine.set_journal(std::make_shared<LogJournal>(*in.log));
    return session;
}

struct FeedbackEntry {
    std::uint64_t after_t = 0;
    json action;
};

std::vector<FeedbackEntry> load_feedback(const std::filesystem::path& path) {
    std::istringstream in(read_text_file(path));
    std::vector<FeedbackEntry> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = path.string() + ":" + std::to_string(lineno);
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw Error(ErrorCode::MalformedInput, where + ": " + e.what());
        }
        if (!j.is_object() || j.size() != 2 || !j.contains("after_t") || !j["after_t"].is_number_unsigned() ||
            !j.contains("action")) {
            throw Error(ErrorCode::MalformedInput, where + ": expected {\"after_t\":int, \"action\":id|object}");
        }
        out.push_back({j["after_t"].get<std::uint64_t>(), j["action"]});
    }
    return out;
}

ActionSpec resolve_action(const Engine& engine, const json& j) {
    if (j.is_string()) {
        const ActionSpec* a = engine.find_action(j.get<std::string>());
        if (!a) throw Error(ErrorCode::UnknownAction, "unknown action '" + j.get<std::string>() + "'");
        return *a;
    }
    return action_from_json(j, "feedback action");
}

std::unique_ptr<std::ofstream> open_out(const std::filesystem::path& path) {
    auto f = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
    if (!*f) throw Error(ErrorCode::StorageFailure, "cannot open " + path.string() + " for writing");
    return f;
}

}  // namespace

void StreamSink::emit(const DecisionRecord& record) {
    if (!record.fired_action) return;
    out_ << json{{"t", record.timestamp}, {"session", record.session_id}, {"fire", action_to_json(*record.fired_action)},
                 {"provenance", std::string(to_string(record.provenance))}}
                .dump()
         << '\n';
    out_.flush();
    if (!out_) throw Error(ErrorCode::StorageFailure, "stdout sink write failed");
}

FileSink::FileSink(std::filesystem::path path) : path_(std::move(path)) {
    std::ofstream f(path_, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::StorageFailure, "cannot open sink file " + path_.string());
}

void FileSink::emit(const DecisionRecord& record) {
    if (!record.fired_action) return;
    std::ofstream f(path_, std::ios::binary | std::ios::app);
    f << decision_to_json(record).dump() << '\n';
    f.flush();
    if (!f) throw Error(ErrorCode::StorageFailure, "sink write to " + path_.string() + " failed");
}

int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err) {
    try {
        Engine engine = load_engine(options.inputs, options.feedback ? FeedbackMode::File : FeedbackMode::Off);
        const auto trace = load_trace(options.trace);
        const auto feedback = options.feedback ? load_feedback(*options.feedback) : std::vector<FeedbackEntry>{};

        for (const auto& s : options.sinks) {
            if (s == "stdout") engine.add_sink(std::make_shared<StreamSink>(std::cout));
            else if (s.rfind("file:", 0) == 0) engine.add_sink(std::make_shared<FileSink>(s.substr(5)));
            else throw Error(ErrorCode::MalformedInput, "unknown sink '" + s + "'");
        }

        std::unique_ptr<std::ofstream> file;
        std::ostream* dest = &out;
        if (options.out != "-") {
            file = open_out(options.out);
            dest = file.get();
        }

        bool storage_failed = false;
        auto emit = [&](const DecisionRecord& r) {
            *dest << decision_to_json(r).dump() << '\n';
            if (r.storage_error) {
                storage_failed = true;
                err << "storage failure at t=" << r.timestamp << ": " << *r.storage_error << '\n';
            }
            for (const auto& e : r.sink_errors) err << "sink failure at t=" << r.timestamp << ": " << e << '\n';
        };

        SessionState session = open_session(engine, options.inputs);
        std::size_t next_feedback = 0;
        for (const auto& ev : trace) {
            const auto readings = to_readings(ev);
            emit(engine.step(session, readings, ev.t));
            while (next_feedback < feedback.size() && feedback[next_feedback].after_t <= ev.t) {
                emit(engine.apply_feedback(session, resolve_action(engine, feedback[next_feedback].action)));
                ++next_feedback;
            }
        }
        dest->flush();
        if (!*dest) throw Error(ErrorCode::StorageFailure, "writing output failed");
        if (options.save_graph) save_graph(engine.graph(), *options.save_graph);
        return storage_failed ? kExitStorage : kExitOk;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e);
    }
}

int cmd_interactive(const EngineInputs& inputs, const std::optional<std::filesystem::path>& prelude, std::istream& in,
                    std::ostream& out, std::ostream& err) {
    std::optional<Engine> engine;
    std::optional<SessionState> opened;
    std::uint64_t clock = 0;
    try {
        engine.emplace(load_engine(inputs, FeedbackMode::Interactive));
        opened = open_session(*engine, inputs);
        if (prelude) {
            for (const auto& ev : load_trace(*prelude)) {
                out << decision_to_json(engine->step(*opened, to_readings(ev), ev.t)).dump() << '\n';
                clock = ev.t;
            }
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e);
    }
    SessionState& session = *opened;

    out << "ctxgraph interactive session " << session.session_id << "; type 'help' for commands\n";
    std::string line;
    while (out << "> " << std::flush, std::getline(in, line)) {
        std::istringstream words(line);
        std::string cmd;
        if (!(words >> cmd)) continue;
        try {
            if (cmd == "quit" || cmd == "exit") {
                return kExitOk;
            } else if (cmd == "help") {
                out << "  event <param>=<raw> ...   sense readings and run one reasoning step\n"
                       "  feedback <action_id>      revise the action on the last transition\n"
                       "  show graph|session|paths  inspect state\n"
                       "  save <path>               write the graph file\n"
                       "  quit                      leave\n";
            } else if (cmd == "event") {
                std::vector<SensorReading> readings;
                std::string kv;
                ++clock;
                while (words >> kv) {
                    auto eq = kv.find('=');
                    if (eq == std::string::npos || eq == 0) throw Error(ErrorCode::MalformedInput, "expected param=value, got '" + kv + "'");
                    readings.push_back({clock, kv.substr(0, eq), kv.substr(eq + 1)});
                }
                const auto r = engine->step(session, readings, clock);
                out << decision_to_json(r).dump() << '\n';
                out << "fired " << describe_action(r.fired_action) << " (" << to_string(r.provenance) << "), paths "
                    << path_set_text(session.active_paths) << '\n';
            } else if (cmd == "feedback") {
                std::string id;
                if (!(words >> id)) throw Error(ErrorCode::MalformedInput, "usage: feedback <action_id>");
                const ActionSpec* a = engine->find_action(id);
                if (!a) throw Error(ErrorCode::UnknownAction, "unknown action '" + id + "'");
                const ActionSpec corrected = *a;
                const auto r = engine->apply_feedback(session, corrected);
                out << decision_to_json(r).dump() << '\n';
                out << "edge " << to_string(*session.last_edge) << " updated: " << corrected.action_id << '\n';
            } else if (cmd == "show") {
                std::string what;
                words >> what;
                const auto& g = engine->graph();
                if (what == "graph") {
                    out << "nodes " << g.nodes().size() << " edges " << g.edges().size() << " paths " << g.paths().size() << '\n';
                    for (const auto& [id, n] : g.nodes()) out << "  " << to_string(id) << " " << n.snapshot.fingerprint() << '\n';
                    for (const auto& [id, e] : g.edges()) {
                        out << "  " << to_string(id) << " " << to_string(e.from) << " -> " << to_string(e.to) << " "
                            << e.action.value_or("-") << " paths " << path_set_text(e.path_ids) << '\n';
                    }
                } else if (what == "session") {
                    out << "session " << session.session_id << " node "
                        << (session.current_node ? to_string(*session.current_node) : std::string("-")) << " active "
                        << path_set_text(session.active_paths) << " provisional "
                        << (session.provisional_path ? to_string(*session.provisional_path) : std::string("-")) << '\n';
                } else if (what == "paths") {
                    for (const auto& [id, p] : g.paths()) {
                        out << "  path " << to_string(id) << ":";
                        for (EdgeId e : p.edges) out << " " << to_string(e);
                        out << '\n';
                    }
                } else {
                    out << "usage: show graph|session|paths\n";
                }
            } else if (cmd == "save") {
                std::string path;
                if (!(words >> path)) throw Error(ErrorCode::MalformedInput, "usage: save <path>");
                save_graph(engine->graph(), path);
                out << "saved " << path << '\n';
            } else {
                out << "unknown command '" << cmd << "'; type 'help'\n";
            }
        } catch (const Error& e) {
            out << "error: " << e.what() << '\n';
        }
    }
    return kExitOk;
}

int cmd_build_graph(const std::filesystem::path& schema_path, const std::filesystem::path& log,
                    const std::filesystem::path& out_path, std::ostream& out, std::ostream& err) {
    try {
        const ParameterSchema schema = load_schema(schema_path);
        const auto loaded = load_log(log);
        for (const auto& w : loaded.warnings) err << "warning: " << w << '\n';
        const auto entries = log_entries(loaded.records);
        const ContextualGraph g = build_from_log(schema, entries);
        save_graph(g, out_path);
        out << "nodes " << g.nodes().size() << " edges " << g.edges().size() << " paths " << g.paths().size() << '\n';
        return kExitOk;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e);
    }
}

int cmd_export_dot(const std::filesystem::path& graph, const std::filesystem::path& out_path, std::ostream& out,
                   std::ostream& err) {
    try {
        const std::string dot = export_dot(load_graph(graph));
        if (out_path == "-") out << dot;
        else write_text_file(out_path, dot);
        return kExitOk;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e);
    }
}

int cmd_validate(const std::string& kind, const std::filesystem::path& file,
                 const std::optional<std::filesystem::path>& schema_path, std::ostream& out, std::ostream& err) {
    std::vector<std::string> violations;
    try {
        std::optional<ParameterSchema> schema;
        if (schema_path) schema = load_schema(*schema_path);

        if (kind == "schema") {
            violations = validate_schema(load_schema(file));
        } else if (kind == "graph") {
            ContextualGraph g;
            try {
                g = graph_from_json(read_json_file(file));
            } catch (const Error& e) {
                if (e.code() == ErrorCode::StorageFailure) throw;
                violations.emplace_back(e.what());
            }
            for (auto& v : g.check_integrity()) violations.push_back(std::move(v));
            if (schema) {
                for (const auto& [id, n] : g.nodes()) {
                    for (auto& v : snapshot_violations(*schema, n.snapshot)) violations.push_back(to_string(id) + ": " + v);
                }
            }
        } else if (kind == "rules" || kind == "trace") {
            if (!schema) throw Error(ErrorCode::MalformedInput, "validate " + kind + " needs --schema");
            if (kind == "rules") {
                try {
                    (void)rules_from_json(*schema, read_json_file(file));
                } catch (const Error& e) {
                    if (e.code() == ErrorCode::StorageFailure) throw;
                    violations.emplace_back(e.what());
                }
            } else {
                std::vector<TraceEvent> trace;
                try {
                    trace = load_trace(file);
                } catch (const Error& e) {
                    if (e.code() == ErrorCode::StorageFailure) throw;
                    violations.emplace_back(e.what());
                }
                std::uint64_t last = 0;
                for (std::size_t i = 0; i < trace.size(); ++i) {
                    const std::string where = "event " + std::to_string(i + 1) + ": ";
                    if (trace[i].t < last) violations.push_back(where + "t decreases");
                    last = std::max(last, trace[i].t);
                    for (const auto& r : to_readings(trace[i])) {
                        const ParameterDef* def = schema->find(r.parameter);
                        if (!def) {
                            violations.push_back(where + "unknown parameter '" + r.parameter + "'");
                            continue;
                        }
                        try {
                            (void)categorize_reading(*def, r);
                        } catch (const Error& e) {
                            violations.push_back(where + e.what());
                        }
                    }
                }
            }
        } else {
            err << "error: unknown kind '" << kind << "' (schema|graph|rules|trace)\n";
            return kExitInput;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e);
    }

    for (const auto& v : violations) out << v << '\n';
    if (!violations.empty()) return kExitInput;
    out << "ok\n";
    return kExitOk;
}

int run_main(int argc, char** argv) {
    CLI::App app{"ctxgraph: contextual-graph reasoning engine"};
    app.require_subcommand(1);

    EngineInputs inputs;
    auto add_engine_flags = [&](CLI::App* sub) {
        sub->add_option("--schema", inputs.schema, "parameter schema (JSON)")->required();
        sub->add_option("--graph", inputs.graph, "contextual graph (JSON)");
        sub->add_option("--rules", inputs.rules, "rules file (JSON)");
        sub->add_option("--threshold", inputs.threshold, "similarity threshold in (0,1], decimal or p/q")
            ->capture_default_str();
        sub->add_option("--log", inputs.log, "append contexts and decisions to this log");
        sub->add_option("--policy", inputs.policy, "graph_wins | rule_wins")
            ->check(CLI::IsMember({"graph_wins", "rule_wins"}))
            ->capture_default_str();
    };

    RunOptions run;
    auto* run_cmd = app.add_subcommand("run", "replay a trace through one session");
    add_engine_flags(run_cmd);
    run_cmd->add_option("--trace", run.trace, "trace file (JSON lines)")->required();
    run_cmd->add_option("--out", run.out, "decision output (JSON lines), '-' for stdout")->required();
    run_cmd->add_option("--save-graph", run.save_graph, "write the updated graph here");
    run_cmd->add_option("--feedback", run.feedback, "feedback file (JSON lines)");
    run_cmd->add_option("--sink", run.sinks, "action sink: stdout | file:PATH");

    auto* repl_cmd = app.add_subcommand("interactive", "read events and feedback from stdin");
    add_engine_flags(repl_cmd);
    std::optional<std::filesystem::path> prelude;
    repl_cmd->add_option("--trace", prelude, "replay this trace before the first prompt");

    std::filesystem::path schema, log, out, graph;
    auto* build_cmd = app.add_subcommand("build-graph", "construct a graph from a context log");
    build_cmd->add_option("--schema", schema)->required();
    build_cmd->add_option("--log", log)->required();
    build_cmd->add_option("--out", out)->required();

    auto* dot_cmd = app.add_subcommand("export-dot", "render a graph as Graphviz DOT");
    dot_cmd->add_option("--graph", graph)->required();
    dot_cmd->add_option("--out", out, "'-' for stdout")->default_val("-");

    std::string kind;
    std::filesystem::path file;
    std::optional<std::filesystem::path> vschema;
    auto* validate_cmd = app.add_subcommand("validate", "check a schema, graph, rules or trace file");
    validate_cmd->add_option("kind", kind)->required()->check(CLI::IsMember({"schema", "graph", "rules", "trace"}));
    validate_cmd->add_option("file", file)->required();
    validate_cmd->add_option("--schema", vschema);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitInput;
    }

    if (*run_cmd) {
        run.inputs = inputs;
        return cmd_run(run, std::cout, std::cerr);
    }
    if (*repl_cmd) return cmd_interactive(inputs, prelude, std::cin, std::cout, std::cerr);
    if (*build_cmd) return cmd_build_graph(schema, log, out, std::cout, std::cerr);
    if (*dot_cmd) return cmd_export_dot(graph, out, std::cout, std::cerr);
    return cmd_validate(kind, file, vschema, std::cout, std::cerr);
}

}  // namespace ctxgraph::cli
