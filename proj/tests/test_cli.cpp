#include "ctxgraph/cli.hpp"
#include "ctxgraph/store.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace ctxgraph;
using namespace ctxgraph::cli;
using namespace testsupport;

namespace {

EngineInputs classroom_inputs() {
    EngineInputs in;
    in.schema = fixture("schema.json");
    in.graph = fixture("graph.json");
    in.rules = fixture("rules.json");
    return in;
}

RunOptions run_options(const std::string& trace, const std::filesystem::path& out) {
    RunOptions o;
    o.inputs = classroom_inputs();
    o.trace = fixture(trace);
    o.out = out;
    return o;
}

std::vector<json> json_lines(const std::string& text) {
    std::vector<json> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) out.push_back(json::parse(line));
    }
    return out;
}

std::string fired(const json& j) { return j["action"].is_null() ? "none" : j["action"]["name"].get<std::string>(); }

std::string repl(const EngineInputs& in, const std::string& script,
                 const std::optional<std::filesystem::path>& prelude = fixture("test_day.start.jsonl")) {
    std::istringstream input(script);
    std::ostringstream out, err;
    EXPECT_EQ(cmd_interactive(in, prelude, input, out, err), kExitOk) << err.str();
    return out.str();
}

}  // namespace

TEST(CliRun, TestDayOutput) {
    const auto dir = scratch_dir("cli_run");
    std::ostringstream out, err;
    ASSERT_EQ(cmd_run(run_options("test_day.trace.jsonl", dir / "o.jsonl"), out, err), kExitOk) << err.str();
    const auto lines = json_lines(read_text_file(dir / "o.jsonl"));
    ASSERT_EQ(lines.size(), 5u);
    std::vector<std::string> names;
    for (std::size_t i = 1; i < lines.size(); ++i) names.push_back(fired(lines[i]));
    EXPECT_EQ(names, (std::vector<std::string>{"Prepare room", "Turn on supervised mode", "none", "Close the classroom"}));
    for (const auto& l : lines) EXPECT_TRUE(decision_json_violations(l).empty()) << l.dump();
    EXPECT_EQ(read_text_file(dir / "o.jsonl"), read_text_file(fixture("expected/test_day.out.jsonl")));
}

TEST(CliRun, LectureDayOutput) {
    std::ostringstream out, err;
    ASSERT_EQ(cmd_run(run_options("lecture_day.trace.jsonl", "-"), out, err), kExitOk) << err.str();
    const auto lines = json_lines(out.str());
    ASSERT_EQ(lines.size(), 3u);
    EXPECT_EQ(fired(lines[1]), "Turn on lecture mode");
    EXPECT_EQ(fired(lines[2]), "Close the classroom");
    EXPECT_EQ(lines[2]["path_id_used"], 1);
}

TEST(CliRun, EmptyTrace) {
    const auto dir = scratch_dir("cli_empty");
    write_text_file(dir / "t.jsonl", "");
    auto o = run_options("test_day.trace.jsonl", dir / "o.jsonl");
    o.trace = dir / "t.jsonl";
    std::ostringstream out, err;
    EXPECT_EQ(cmd_run(o, out, err), kExitOk);
    EXPECT_EQ(read_text_file(dir / "o.jsonl"), "");
}

TEST(CliRun, ReproducibleAndIdempotent) {
    const auto dir = scratch_dir("cli_idem");
    std::ostringstream out, err;
    const EngineInputs empty_engine{fixture("schema.json"), std::nullopt, fixture("rules.json"), "0.75", "graph_wins"};

    auto first = run_options("test_day.trace.jsonl", dir / "a.jsonl");
    first.inputs = empty_engine;
    first.save_graph = dir / "g1.json";
    ASSERT_EQ(cmd_run(first, out, err), kExitOk) << err.str();

    auto second = first;
    second.inputs.graph = dir / "g1.json";
    second.save_graph = dir / "g2.json";
    second.out = dir / "b.jsonl";
    ASSERT_EQ(cmd_run(second, out, err), kExitOk) << err.str();
    EXPECT_EQ(read_text_file(dir / "g1.json"), read_text_file(dir / "g2.json"));

    auto third = second;
    third.out = dir / "c.jsonl";
    third.save_graph = dir / "g3.json";
    ASSERT_EQ(cmd_run(third, out, err), kExitOk);
    EXPECT_EQ(read_text_file(dir / "b.jsonl"), read_text_file(dir / "c.jsonl"));
    EXPECT_EQ(read_text_file(dir / "g2.json"), read_text_file(dir / "g3.json"));
}

TEST(CliRun, ExitCodes) {
    const auto dir = scratch_dir("cli_exit");
    std::ostringstream out, err;
    auto missing = run_options("test_day.trace.jsonl", dir / "o.jsonl");
    missing.trace = dir / "nope.jsonl";
    EXPECT_EQ(cmd_run(missing, out, err), kExitStorage);

    write_text_file(dir / "bad.jsonl", "{\"t\":0,\"readings\":{\"prof\":\"maybe\"}}\n");
    auto bad = missing;
    bad.trace = dir / "bad.jsonl";
    EXPECT_EQ(cmd_run(bad, out, err), kExitInput);

    auto theta = run_options("test_day.trace.jsonl", dir / "o.jsonl");
    theta.inputs.threshold = "1.5";
    EXPECT_EQ(cmd_run(theta, out, err), kExitInput);

    auto unwritable = run_options("test_day.trace.jsonl", "/nonexistent/dir/o.jsonl");
    EXPECT_EQ(cmd_run(unwritable, out, err), kExitStorage);
}

TEST(CliRun, FeedbackFileAndSinks) {
    const auto dir = scratch_dir("cli_fb");
    write_text_file(dir / "fb.jsonl", "{\"after_t\":30,\"action\":\"close_room\"}\n");
    auto o = run_options("test_day.trace.jsonl", dir / "o.jsonl");
    o.feedback = dir / "fb.jsonl";
    o.save_graph = dir / "g.json";
    o.sinks = {"file:" + (dir / "sink.jsonl").string()};
    std::ostringstream out, err;
    ASSERT_EQ(cmd_run(o, out, err), kExitOk) << err.str();
    const auto lines = json_lines(read_text_file(dir / "o.jsonl"));
    ASSERT_EQ(lines.size(), 6u);
    EXPECT_EQ(lines[4]["provenance"], "feedback");
    EXPECT_EQ(json_lines(read_text_file(dir / "sink.jsonl")).size(), 5u);

    auto replay = run_options("test_day.trace.jsonl", dir / "o2.jsonl");
    replay.inputs.graph = dir / "g.json";
    ASSERT_EQ(cmd_run(replay, out, err), kExitOk);
    EXPECT_EQ(fired(json_lines(read_text_file(dir / "o2.jsonl"))[3]), "Close the classroom");
}

TEST(CliRun, SessionIdsContinueAcrossLogRuns) {
    const auto dir = scratch_dir("cli_log");
    std::ostringstream out, err;
    for (const char* t : {"test_day.trace.jsonl", "lecture_day.trace.jsonl"}) {
        auto o = run_options(t, dir / "o.jsonl");
        o.inputs.log = dir / "ctx.log";
        ASSERT_EQ(cmd_run(o, out, err), kExitOk) << err.str();
    }
    std::set<std::string> sessions;
    for (const auto& r : load_log(dir / "ctx.log").records) sessions.insert(r.session_id);
    EXPECT_EQ(sessions, (std::set<std::string>{"s1", "s2"}));

    std::ostringstream counts;
    ASSERT_EQ(cmd_build_graph(fixture("schema.json"), dir / "ctx.log", dir / "built.json", counts, err), kExitOk);
    EXPECT_EQ(counts.str(), "nodes 6 edges 6 paths 2\n");
}

TEST(CliBuildGraph, EmptyAndConflicting) {
    const auto dir = scratch_dir("cli_build");
    write_text_file(dir / "empty.log", "");
    std::ostringstream out, err;
    ASSERT_EQ(cmd_build_graph(fixture("schema.json"), dir / "empty.log", dir / "g.json", out, err), kExitOk);
    EXPECT_EQ(out.str(), "nodes 0 edges 0 paths 0\n");

    const auto schema = classroom_schema();
    {
        LogWriter w(dir / "bad.log");
        const auto a = snap(schema, "out out off off off off test").values();
        const auto b = snap(schema, "out in on off off off test").values();
        for (const auto& [session, action] : {std::pair{"s1", "prepare_room"}, std::pair{"s2", "other"}}) {
            w.append(LogKind::Context, session, {{"t", 0}, {"observed", a}, {"context", a}, {"action", nullptr}});
            w.append(LogKind::Context, session,
                     {{"t", 1}, {"observed", b}, {"context", b},
                      {"action", {{"action_id", action}, {"assignments", {{"light", "on"}}}}}});
        }
    }
    std::ostringstream e2;
    EXPECT_EQ(cmd_build_graph(fixture("schema.json"), dir / "bad.log", dir / "g.json", out, e2), kExitInput);
    EXPECT_NE(e2.str().find("n1"), std::string::npos) << e2.str();
}

TEST(CliExportDot, GoldenFile) {
    std::ostringstream out, err;
    ASSERT_EQ(cmd_export_dot(fixture("graph.json"), "-", out, err), kExitOk);
    EXPECT_EQ(out.str(), read_text_file(fixture("expected/graph.dot")));
    EXPECT_EQ(cmd_export_dot("/nonexistent.json", "-", out, err), kExitStorage);
}

TEST(CliValidate, Kinds) {
    const auto dir = scratch_dir("cli_validate");
    std::ostringstream out, err;
    const auto schema = fixture("schema.json");
    EXPECT_EQ(cmd_validate("schema", schema, std::nullopt, out, err), kExitOk);
    EXPECT_EQ(cmd_validate("graph", fixture("graph.json"), schema, out, err), kExitOk);
    EXPECT_EQ(cmd_validate("rules", fixture("rules.json"), schema, out, err), kExitOk);
    EXPECT_EQ(cmd_validate("trace", fixture("test_day.trace.jsonl"), schema, out, err), kExitOk);

    auto g = read_json_file(fixture("graph.json"));
    g["edges"][0]["path_ids"] = json::array({9});
    write_text_file(dir / "g.json", g.dump());
    std::ostringstream violations;
    EXPECT_EQ(cmd_validate("graph", dir / "g.json", schema, violations, err), kExitInput);
    EXPECT_NE(violations.str().find("9"), std::string::npos);

    EXPECT_EQ(cmd_validate("rules", fixture("rules.json"), std::nullopt, out, err), kExitInput);
    EXPECT_EQ(cmd_validate("schema", dir / "missing.json", std::nullopt, out, err), kExitStorage);
}

TEST(CliInteractive, EventAndPaths) {
    const auto out = repl(classroom_inputs(), "event ta=in light=on\nquit\n");
    EXPECT_NE(out.find("fired Prepare room (graph), paths {2}"), std::string::npos) << out;
}

TEST(CliInteractive, FeedbackAfterActionFreeStep) {
    const auto dir = scratch_dir("cli_repl");
    const auto out = repl(classroom_inputs(),
                          "event ta=in light=on\n"
                          "event prof=in camera=on projector=on screen=on\n"
                          "event prof=out\n"
                          "feedback close_room\n"
                          "save " + (dir / "g.json").string() + "\n");
    EXPECT_NE(out.find("edge e5 updated: close_room"), std::string::npos) << out;
    EXPECT_EQ(load_graph(dir / "g.json").edge(EdgeId{5}).action, "close_room");
}

TEST(CliInteractive, ErrorsReprompt) {
    const auto out = repl(classroom_inputs(), "frobnicate\nevent foo\nevent prof=maybe\nfeedback\nshow session\nhelp\nquit\n");
    EXPECT_NE(out.find("unknown command 'frobnicate'"), std::string::npos);
    EXPECT_NE(out.find("expected param=value"), std::string::npos);
    EXPECT_NE(out.find("session s1 node n3"), std::string::npos) << out;
    EXPECT_NE(out.find("event <param>=<raw>"), std::string::npos);
}

TEST(CliInteractive, ShowGraphAndPaths) {
    const auto out = repl(classroom_inputs(), "show graph\nshow paths\n", std::nullopt);
    EXPECT_NE(out.find("nodes 6 edges 6 paths 2"), std::string::npos);
    EXPECT_NE(out.find("path 2: e3 e4 e5 e6"), std::string::npos);
}
