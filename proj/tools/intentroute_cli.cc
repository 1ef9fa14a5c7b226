#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "intentroute/compiler.h"
#include "intentroute/constellation.h"
#include "intentroute/grounding.h"
#include "intentroute/harness.h"
#include "intentroute/ir.h"
#include "intentroute/router.h"
#include "intentroute/validator.h"
#include "json.hpp"

using namespace intentroute;
using nlohmann::json;

namespace {

struct Common {
  std::string topology;
  double time_s = 0.0;
  std::string events;
  std::string out;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

WalkerConfig topology_of(const Common& c) {
  return c.topology.empty() ? WalkerConfig{} : load_walker_config(c.topology);
}

TopologySnapshot snapshot_of(const Common& c) {
  return build_snapshot(topology_of(c), c.time_s);
}

EventSet events_of(const std::string& list) {
  EventSet out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.insert(item);
  return out;
}

void emit(const Common& c, const json& doc) {
  const std::string text = doc.dump(2) + "\n";
  if (c.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(c.out);
  if (!f) throw ConfigError("cannot write " + c.out);
  f << text;
}

void add_common(CLI::App* app, Common& c, bool with_events = true) {
  app->add_option("--topology", c.topology, "Walker config file");
  app->add_option("--time", c.time_s, "Snapshot time in seconds");
  if (with_events)
    app->add_option("--events", c.events, "Active events, comma separated");
  app->add_option("--out", c.out, "Write the report here instead of stdout");
}

std::vector<BenchmarkEntry> bench_of(const std::string& path) {
  return path.empty() ? builtin_benchmark() : load_benchmark(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Intent compiler, validator and routing harness"};
  app.require_subcommand(1);
  Common common;
  int exit_code = 0;

  // validate
  std::string program_file, mode = "universal";
  auto* validate_cmd = app.add_subcommand("validate", "Run the eight passes");
  validate_cmd->add_option("program", program_file)->required();
  validate_cmd->add_option("--mode", mode)
      ->check(CLI::IsMember({"universal", "existential"}));
  bool with_fallback = false;
  validate_cmd->add_flag("--fallback", with_fallback,
                         "Apply the program's fallback policy on Reject");
  add_common(validate_cmd, common);
  validate_cmd->callback([&] {
    const auto snap = snapshot_of(common);
    ValidateOptions opts;
    opts.mode = *endpoint_mode_from_string(mode);
    const std::string text = read_file(program_file);
    ValidationReport r = validate_text(text, snap, events_of(common.events), opts);
    json doc = r.to_json();
    if (with_fallback) {
      ParseResult parsed = parse_program(text);
      if (parsed.ok())
        doc["resolution"] = resolve_fallback(*parsed.program, r, snap,
                                             events_of(common.events), opts)
                                .to_json();
    }
    emit(common, doc);
  });

  // ground
  auto* ground_cmd = app.add_subcommand("ground", "Ground a program on a snapshot");
  ground_cmd->add_option("program", program_file)->required();
  add_common(ground_cmd, common);
  ground_cmd->callback([&] {
    const auto snap = snapshot_of(common);
    ParseResult parsed = parse_program(read_file(program_file));
    if (!parsed.ok()) {
      emit(common, {{"errors", parsed.errors}});
      exit_code = 2;
      return;
    }
    GroundingResult g = ground(*parsed.program, snap, events_of(common.events));
    emit(common, grounding_report(snap, g));
  });

  // route
  long long src = 0, dst = 0;
  std::string route_program;
  auto* route_cmd = app.add_subcommand("route", "Shortest path between two nodes");
  route_cmd->add_option("src", src)->required();
  route_cmd->add_option("dst", dst)->required();
  route_cmd->add_option("--program", route_program, "Constrain by this program");
  add_common(route_cmd, common);
  route_cmd->callback([&] {
    const auto snap = snapshot_of(common);
    if (!snap.valid_node(src) || !snap.valid_node(dst))
      throw EntityError("node id out of range [0, " +
                        std::to_string(snap.node_count()) + ")");
    GroundingResult g = empty_grounding(snap);
    std::optional<ConstraintProgram> prog;
    if (!route_program.empty()) {
      ParseResult parsed = parse_program(read_file(route_program));
      if (!parsed.ok()) throw ConfigError(parsed.errors.front());
      prog = std::move(parsed.program);
      g = ground(*prog, snap, events_of(common.events));
    }
    const RoutingGraph graph = constrained_graph(snap, g);
    json doc = {{"src", src}, {"dst", dst}, {"time_s", common.time_s}};
    try {
      auto path = shortest_path(graph, static_cast<NodeId>(src),
                                static_cast<NodeId>(dst));
      doc["reachable"] = path.has_value();
      if (path) {
        doc["path"] = path->nodes;
        doc["hops"] = path->hops();
        doc["delay_ms"] = path->delay_ms;
        if (prog)
          doc["violations"] = check_violations(path->nodes, *prog, g, snap);
      }
    } catch (const EndpointError& e) {
      doc["reachable"] = false;
      doc["error"] = e.what();
    }
    emit(common, doc);
  });

  // compile
  std::string intent, backend_name = "rule", config_file, script_file;
  auto* compile_cmd = app.add_subcommand("compile", "Compile an intent");
  compile_cmd->add_option("intent", intent)->required();
  compile_cmd->add_option("--backend", backend_name)
      ->check(CLI::IsMember({"rule", "llm", "mock"}));
  compile_cmd->add_option("--config", config_file, "Compiler config JSON");
  compile_cmd->add_option("--script", script_file,
                          "JSON array of scripted responses for the mock backend");
  bool show_trace = false;
  compile_cmd->add_flag("--trace", show_trace, "Include the attempt trace");
  add_common(compile_cmd, common, false);
  compile_cmd->callback([&] {
    const auto snap = snapshot_of(common);
    CompilerConfig cfg = config_file.empty() ? CompilerConfig{}
                                             : load_compiler_config(config_file);
    cfg = apply_environment(cfg);
    cfg.backend = backend_name == "rule"  ? Backend::kRuleBased
                  : backend_name == "llm" ? Backend::kLlm
                                          : Backend::kMock;
    HttpChatBackend http;
    std::unique_ptr<MockBackend> mock;
    ChatBackend* backend = nullptr;
    if (cfg.backend == Backend::kLlm) backend = &http;
    if (cfg.backend == Backend::kMock) {
      if (script_file.empty())
        throw ConfigError("--backend mock needs --script");
      mock = std::make_unique<MockBackend>(
          json::parse(read_file(script_file)).get<std::vector<std::string>>());
      backend = mock.get();
    }
    CompileResult r = compile(intent, cfg, snap, backend);
    json doc = {{"compiled", r.trace.compiled},
                {"first_try", r.trace.first_try},
                {"attempts", r.trace.attempts.size()},
                {"failure", r.trace.failure}};
    if (r.program) doc["program"] = json::parse(serialize_program(*r.program));
    else if (r.last_parsed)
      doc["last_parsed"] = json::parse(serialize_program(*r.last_parsed));
    if (show_trace) doc["trace"] = r.trace.to_json();
    emit(common, doc);
    if (!r.trace.compiled) exit_code = 1;
  });

  // bench run
  std::string bench_file, ablation = "full", bench_backend = "rule";
  auto* bench_cmd = app.add_subcommand("bench", "Benchmark runs");
  bench_cmd->require_subcommand(1);
  auto* bench_run = bench_cmd->add_subcommand("run", "Compile, score and validate");
  bench_run->add_option("--config", ablation)
      ->check(CLI::IsMember({"full", "no-verifier", "no-repair", "zero-shot"}));
  bench_run->add_option("--backend", bench_backend)
      ->check(CLI::IsMember({"rule", "llm", "truth"}));
  bench_run->add_option("--compiler-config", config_file, "Compiler config JSON");
  bench_run->add_option("--benchmark", bench_file, "Benchmark JSON (default: built in)");
  add_common(bench_run, common, false);
  bench_run->callback([&] {
    const auto snap = snapshot_of(common);
    const auto bench = bench_of(bench_file);
    CompilerConfig cfg = config_file.empty() ? CompilerConfig{}
                                             : load_compiler_config(config_file);
    cfg = apply_environment(cfg);
    std::string mode_name = ablation;
    std::replace(mode_name.begin(), mode_name.end(), '-', '_');
    cfg = ablation_config(mode_name, cfg);
    HttpChatBackend http;
    LookupBackend truth = truth_backend(bench);
    ChatBackend* backend = nullptr;
    if (bench_backend == "rule") {
      cfg.backend = Backend::kRuleBased;
    } else if (bench_backend == "llm") {
      cfg.backend = Backend::kLlm;
      backend = &http;
    } else {
      cfg.backend = Backend::kMock;
      backend = &truth;
    }
    BenchRunResult r = run_benchmark(bench, cfg, snap, backend, mode_name);
    emit(common, r.to_json());
    if (r.confusion.unsafe > 0) exit_code = 1;
  });

  // audit
  int n_per_type = 30;
  std::uint64_t seed = 0;
  int reps = 5;
  auto* audit_cmd = app.add_subcommand("audit", "Validator audits");
  audit_cmd->require_subcommand(1);
  auto* audit_corruption = audit_cmd->add_subcommand("corruption", "Injected-fault audit");
  audit_corruption->add_option("--n", n_per_type, "Injections per type");
  audit_corruption->add_option("--seed", seed);
  audit_corruption->add_option("--benchmark", bench_file);
  add_common(audit_corruption, common, false);
  audit_corruption->callback([&] {
    const auto snap = snapshot_of(common);
    AuditResult r = run_corruption_audit(bench_of(bench_file), snap, n_per_type, seed);
    json doc = r.to_json();
    std::vector<int> missing;
    const auto covered = r.covering_passes();
    for (int pass = 1; pass <= 6; ++pass)
      if (std::find(covered.begin(), covered.end(), pass) == covered.end())
        missing.push_back(pass);
    doc["passes_without_catches"] = missing;
    emit(common, doc);
    if (r.detected != r.injections || !missing.empty()) exit_code = 1;
  });

  std::string adversarial_file;
  auto* audit_adv = audit_cmd->add_subcommand("adversarial", "Adversarial suite");
  audit_adv->add_option("--suite", adversarial_file, "Suite JSON (default: built in)");
  add_common(audit_adv, common, false);
  audit_adv->callback([&] {
    const auto snap = snapshot_of(common);
    const auto cases = adversarial_file.empty()
                           ? builtin_adversarial()
                           : parse_adversarial(read_file(adversarial_file));
    AdversarialResult r = run_adversarial(cases, snap);
    emit(common, r.to_json());
    if (r.flagged() != static_cast<int>(r.rows.size())) exit_code = 1;
  });

  auto* audit_runtime = audit_cmd->add_subcommand("runtime", "Validator latency table");
  audit_runtime->add_option("--reps", reps, "Timed repetitions per program");
  audit_runtime->add_option("--benchmark", bench_file);
  add_common(audit_runtime, common, false);
  audit_runtime->callback([&] {
    const auto snap = snapshot_of(common);
    emit(common, measure_runtime(bench_of(bench_file), snap, reps).to_json());
  });

  auto* confusion_cmd = audit_cmd->add_subcommand(
      "confusion", "Validator-only confusion matrix over ground truths");
  confusion_cmd->add_option("--benchmark", bench_file);
  add_common(confusion_cmd, common, false);
  confusion_cmd->callback([&] {
    const auto snap = snapshot_of(common);
    ConfusionResult r = run_confusion(bench_of(bench_file), snap);
    emit(common, r.to_json());
    if (r.unsafe > 0) exit_code = 1;
  });

  // sweep
  std::vector<int> counts;
  EvalOptions eval;
  auto* sweep_cmd = app.add_subcommand("sweep", "Severity sweeps");
  sweep_cmd->require_subcommand(1);
  auto* planes_off = sweep_cmd->add_subcommand("planes-off", "Disable c evenly spaced planes");
  planes_off->add_option("counts", counts)->required()->delimiter(',');
  planes_off->add_option("--seeds", eval.seeds)->delimiter(',');
  planes_off->add_option("--steps", eval.steps);
  planes_off->add_option("--pairs", eval.pairs_per_step);
  planes_off->add_option("--topology", common.topology);
  planes_off->add_option("--out", common.out);
  planes_off->callback([&] {
    emit(common, sweep_to_json(sweep_planes_off(topology_of(common), counts, eval)));
  });

  std::vector<double> thresholds;
  int snapshots = 20;
  auto* latitude = sweep_cmd->add_subcommand(
      "latitude", "ISL fraction removed by avoid_latitude thresholds");
  latitude->add_option("thresholds", thresholds)->required()->delimiter(',');
  latitude->add_option("--snapshots", snapshots);
  latitude->add_option("--topology", common.topology);
  latitude->add_option("--out", common.out);
  latitude->callback([&] {
    std::vector<EdgeRemovalRow> rows;
    for (double t : thresholds)
      rows.push_back(latitude_edge_removal(topology_of(common), t, snapshots));
    emit(common, edge_removal_to_json(rows));
  });

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Routing evaluation");
  eval_cmd->require_subcommand(1);
  auto* e2e = eval_cmd->add_subcommand("e2e", "Four constrained scenarios");
  e2e->add_option("--seeds", eval.seeds)->delimiter(',');
  e2e->add_option("--steps", eval.steps);
  e2e->add_option("--pairs", eval.pairs_per_step);
  e2e->add_option("--topology", common.topology);
  e2e->add_option("--out", common.out);
  e2e->callback([&] {
    auto results = run_e2e(topology_of(common), eval);
    json doc = e2e_to_json(results, eval);
    emit(common, doc);
    if (doc["total_violations"].get<long long>() > 0) exit_code = 1;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return exit_code;
}
