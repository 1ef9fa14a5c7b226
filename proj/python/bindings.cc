#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "intentroute/compiler.h"
#include "intentroute/constellation.h"
#include "intentroute/grounding.h"
#include "intentroute/harness.h"
#include "intentroute/ir.h"
#include "intentroute/router.h"
#include "intentroute/validator.h"
#include "json.hpp"

namespace py = pybind11;
using namespace intentroute;
using nlohmann::json;

// Everything crosses the boundary as JSON text; the Python package decodes it.
namespace {

TopologySnapshot snapshot_of(const std::string& topology, double time_s) {
  const WalkerConfig cfg =
      topology.empty() ? WalkerConfig{} : parse_walker_config(topology);
  return build_snapshot(cfg, time_s);
}

EventSet events_of(const std::vector<std::string>& events) {
  return EventSet(events.begin(), events.end());
}

ConstraintProgram program_of(const std::string& text) {
  ParseResult parsed = parse_program(text);
  if (!parsed.ok()) throw ConfigError(parsed.errors.front());
  return std::move(*parsed.program);
}

std::string validate_json(const std::string& program, const std::string& topology,
                          double time_s, const std::vector<std::string>& events,
                          const std::string& mode, int max_pairs, bool fallback) {
  const auto snap = snapshot_of(topology, time_s);
  ValidateOptions opts;
  auto m = endpoint_mode_from_string(mode);
  if (!m) throw ConfigError("unknown endpoint mode: " + mode);
  opts.mode = *m;
  opts.max_pairs = max_pairs;
  const ValidationReport r = validate_text(program, snap, events_of(events), opts);
  json doc = r.to_json();
  if (fallback) {
    ParseResult parsed = parse_program(program);
    if (parsed.ok())
      doc["resolution"] =
          resolve_fallback(*parsed.program, r, snap, events_of(events), opts).to_json();
  }
  return doc.dump();
}

std::string ground_json(const std::string& program, const std::string& topology,
                        double time_s, const std::vector<std::string>& events) {
  const auto snap = snapshot_of(topology, time_s);
  return grounding_report(snap, ground(program_of(program), snap, events_of(events))).dump();
}

std::string route_json(int src, int dst, const std::string& program,
                       const std::string& topology, double time_s,
                       const std::vector<std::string>& events) {
  const auto snap = snapshot_of(topology, time_s);
  GroundingResult g = empty_grounding(snap);
  std::optional<ConstraintProgram> prog;
  if (!program.empty()) {
    prog = program_of(program);
    g = ground(*prog, snap, events_of(events));
  }
  const RoutingGraph graph = constrained_graph(snap, g);
  json doc = {{"src", src}, {"dst", dst}, {"time_s", time_s}};
  auto path = shortest_path(graph, src, dst);
  doc["reachable"] = path.has_value();
  if (path) {
    doc["path"] = path->nodes;
    doc["hops"] = path->hops();
    doc["delay_ms"] = path->delay_ms;
    if (prog) doc["violations"] = check_violations(path->nodes, *prog, g, snap);
  }
  return doc.dump();
}

std::string compile_json(const std::string& intent, const std::string& backend,
                         const std::vector<std::string>& script, int max_retries,
                         const std::string& config, const std::string& topology,
                         double time_s) {
  const auto snap = snapshot_of(topology, time_s);
  CompilerConfig cfg = config.empty() ? CompilerConfig{} : parse_compiler_config(config);
  cfg = apply_environment(cfg);
  auto b = backend_from_string(backend);
  if (!b) throw ConfigError("unknown backend: " + backend);
  cfg.backend = *b;
  if (max_retries >= 0) cfg.max_retries = max_retries;
  HttpChatBackend http;
  MockBackend mock(script);
  ChatBackend* chat = cfg.backend == Backend::kLlm    ? static_cast<ChatBackend*>(&http)
                      : cfg.backend == Backend::kMock ? &mock
                                                      : nullptr;
  CompileResult r;
  {
    py::gil_scoped_release release;
    r = compile(intent, cfg, snap, chat);
  }
  json doc = {{"compiled", r.trace.compiled},
              {"first_try", r.trace.first_try},
              {"attempts", r.trace.attempts.size()},
              {"failure", r.trace.failure},
              {"trace", r.trace.to_json()}};
  doc["program"] = r.program ? json::parse(serialize_program(*r.program)) : json(nullptr);
  return doc.dump();
}

std::vector<BenchmarkEntry> bench_of(const std::string& text) {
  return text.empty() ? builtin_benchmark() : parse_benchmark(text);
}

}  // namespace

PYBIND11_MODULE(_intentroute, m) {
  m.doc() = "Constraint-program validator, grounding and routing core";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<EntityError>(m, "EntityError", PyExc_ValueError);
  py::register_exception<GroundingError>(m, "GroundingError", PyExc_ValueError);
  py::register_exception<EndpointError>(m, "EndpointError", PyExc_ValueError);
  py::register_exception<TransportError>(m, "TransportError", PyExc_ConnectionError);

  m.attr("RESULTS_SCHEMA_VERSION") = kResultsSchemaVersion;

  m.def("validate", &validate_json, py::arg("program"), py::arg("topology") = "",
        py::arg("time_s") = 0.0, py::arg("events") = std::vector<std::string>{},
        py::arg("mode") = "universal", py::arg("max_pairs") = 400,
        py::arg("fallback") = false);
  m.def("ground", &ground_json, py::arg("program"), py::arg("topology") = "",
        py::arg("time_s") = 0.0, py::arg("events") = std::vector<std::string>{});
  m.def("route", &route_json, py::arg("src"), py::arg("dst"), py::arg("program") = "",
        py::arg("topology") = "", py::arg("time_s") = 0.0,
        py::arg("events") = std::vector<std::string>{});
  m.def("compile", &compile_json, py::arg("intent"), py::arg("backend") = "rule_based",
        py::arg("script") = std::vector<std::string>{}, py::arg("max_retries") = -1,
        py::arg("config") = "", py::arg("topology") = "", py::arg("time_s") = 0.0);

  m.def("parse_program", [](const std::string& text) {
    ParseResult r = parse_program(text);
    json doc = {{"ok", r.ok()}, {"errors", r.errors}};
    doc["program"] = r.ok() ? json::parse(serialize_program(*r.program)) : json(nullptr);
    return doc.dump();
  });

  m.def("snapshot", [](const std::string& topology, double time_s) {
    const auto s = snapshot_of(topology, time_s);
    json nodes = json::array();
    for (const auto& n : s.nodes())
      nodes.push_back({{"id", n.node_id}, {"plane", n.plane}, {"slot", n.slot},
                       {"lat", n.latitude_deg}, {"lon", n.longitude_deg}});
    json edges = json::array();
    for (const auto& e : s.edges())
      edges.push_back({{"u", e.u}, {"v", e.v}, {"delay_ms", e.delay_ms},
                       {"inter_plane", e.inter_plane}});
    return json{{"time_s", time_s}, {"nodes", nodes}, {"edges", edges}}.dump();
  }, py::arg("topology") = "", py::arg("time_s") = 0.0);

  m.def("benchmark", []() {
    json out = json::array();
    for (const auto& e : builtin_benchmark())
      out.push_back({{"id", e.id},
                     {"category", to_string(e.category)},
                     {"intent_text", e.intent_text},
                     {"program", json::parse(serialize_program(e.truth))}});
    return out.dump();
  });

  m.def("corruption_audit", [](int n, std::uint64_t seed, const std::string& bench,
                               const std::string& topology, double time_s) {
    const auto snap = snapshot_of(topology, time_s);
    return run_corruption_audit(bench_of(bench), snap, n, seed).to_json().dump();
  }, py::arg("n") = 100, py::arg("seed") = 0, py::arg("benchmark") = "",
        py::arg("topology") = "", py::arg("time_s") = 0.0);

  m.def("adversarial", [](const std::string& topology, double time_s) {
    return run_adversarial(builtin_adversarial(), snapshot_of(topology, time_s))
        .to_json().dump();
  }, py::arg("topology") = "", py::arg("time_s") = 0.0);

  m.def("confusion", [](const std::string& bench, const std::string& topology,
                        double time_s) {
    return run_confusion(bench_of(bench), snapshot_of(topology, time_s)).to_json().dump();
  }, py::arg("benchmark") = "", py::arg("topology") = "", py::arg("time_s") = 0.0);

  m.def("latitude_edge_removal", [](const std::vector<double>& thresholds,
                                    int snapshots, const std::string& topology) {
    const WalkerConfig cfg =
        topology.empty() ? WalkerConfig{} : parse_walker_config(topology);
    std::vector<EdgeRemovalRow> rows;
    for (double t : thresholds) rows.push_back(latitude_edge_removal(cfg, t, snapshots));
    return edge_removal_to_json(rows).dump();
  }, py::arg("thresholds"), py::arg("snapshots") = 20, py::arg("topology") = "");
}
