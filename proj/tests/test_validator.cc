#include <random>

#include "doctest.h"
#include "intentroute/validator.h"
#include "json.hpp"
#include "support.h"

using namespace intentroute;
using namespace intentroute::testing;

namespace {

const TopologySnapshot& shell() {
  static const TopologySnapshot s = build_snapshot(WalkerConfig{}, 0.0);
  return s;
}

HardConstraint hard(HardType t, Target target, std::optional<double> v = {},
                    std::optional<std::string> cond = {}) {
  return {t, std::move(target), v, std::move(cond)};
}

FlowSelector flow(long long src, long long dst) {
  FlowSelector f;
  f.src_node = src;
  f.dst_node = dst;
  return f;
}

ConstraintProgram program(std::vector<FlowSelector> flows,
                          std::vector<HardConstraint> hc) {
  ConstraintProgram p;
  p.intent_id = "v";
  p.flow_selectors = std::move(flows);
  p.hard_constraints = std::move(hc);
  return p;
}

bool mentions(const std::vector<std::string>& v, std::string_view needle) {
  for (const auto& x : v)
    if (x.find(needle) != std::string::npos) return true;
  return false;
}

// Lowest pass carrying an error, or 0.
int first_error_pass(const ValidationReport& r) {
  for (int i = 1; i <= kPassCount; ++i)
    if (!r.pass(i).errors.empty()) return i;
  return 0;
}

nlohmann::json stable_json(const ValidationReport& r) {
  nlohmann::json j = r.to_json();
  j.erase("elapsed_ms");
  return j;
}

}  // namespace

TEST_CASE("structural errors land in the expected pass") {
  const auto& s = shell();
  struct Row {
    ConstraintProgram p;
    int pass;
    std::string_view needle;
  };
  ConstraintProgram no_id = program({}, {hard(HardType::kDisableNode, Target::node(1))});
  no_id.intent_id.clear();
  ConstraintProgram undeclared =
      program({}, {hard(HardType::kDisableNode, Target::node(1), {}, "solar_storm")});
  ConstraintProgram two_src = program({flow(1, 2)}, {});
  two_src.flow_selectors[0].src_plane = 3;
  ConstraintProgram bad_class = program({flow(1, 2)}, {});
  bad_class.flow_selectors[0].traffic_class = "gaming";

  const std::vector<Row> rows = {
      {no_id, 1, "intent_id"},
      {program({flow(1, 2)}, {hard(HardType::kMaxHops, Target::flow(0))}), 1,
       "hard_constraints[0].value"},
      {program({}, {hard(HardType::kDisableNode, Target::node(454))}), 2,
       "node 454 out of range"},
      {program({}, {hard(HardType::kDisablePlane, Target::plane(25))}), 2,
       "plane 25 out of range"},
      {program({}, {hard(HardType::kDisableEdge, Target::edge(0, 200))}), 2,
       "no ISL between nodes 0 and 200"},
      {program({}, {hard(HardType::kAvoidRegion, Target::region("atlantis"))}), 2,
       "unknown region"},
      {undeclared, 2, "not declared"},
      {bad_class, 2, "unknown traffic class \"gaming\""},
      {program({flow(1, 454)}, {}), 2, "flow_selectors[0].dst_node"},
      {program({}, {hard(HardType::kDisableNode, Target::edges())}), 3,
       "requires a node target"},
      {program({flow(1, 2)}, {hard(HardType::kMaxHops, Target::node(42), 3.0)}), 3,
       "requires a flow_selector target"},
      {two_src, 3, "source endpoint"},
      {program({flow(1, 2)}, {hard(HardType::kMaxLatencyMs, Target::flow(0), -50.0)}),
       4, "must be positive"},
      {program({flow(1, 2)}, {hard(HardType::kMaxHops, Target::flow(0), 2.5)}), 4,
       "integer"},
      {program({flow(1, 2)}, {hard(HardType::kMinCapReserve, Target::flow(0), 1.5)}),
       4, "outside (0, 1]"},
      {program({}, {hard(HardType::kAvoidLatitude, Target::edges(), 95.0)}), 4,
       "outside [-90, 90]"},
      {program({flow(142, 2)}, {hard(HardType::kDisableNode, Target::node(142))}), 5,
       "disabled by hard_constraints[0]"},
      {program({flow(61, 200)}, {hard(HardType::kDisablePlane, Target::plane(3))}), 5,
       "node 61 is used as a flow endpoint"},
      {program({flow(1, 2)}, {hard(HardType::kMaxLatencyMs, Target::flow(0), 100.0),
                              hard(HardType::kMaxLatencyMs, Target::flow(0), 80.0)}),
       5, "conflicting max_latency_ms bounds 100 and 80"},
      {program({flow(12, 215)}, {hard(HardType::kMaxLatencyMs, Target::flow(0), 0.5)}),
       6, "below the 2 ms"},
  };
  for (const Row& row : rows) {
    CAPTURE(row.needle);
    const ValidationReport r = validate(row.p, s, {});
    CHECK(r.outcome == Outcome::kReject);
    CHECK(first_error_pass(r) == row.pass);
    CHECK(mentions(r.pass(row.pass).errors, row.needle));
    CHECK(mentions(r.errors, row.needle));
    CHECK(r.pass(8).status == PassStatus::kSkipped);
  }
}

TEST_CASE("warnings never block acceptance") {
  const auto& s = shell();
  ConstraintProgram dup =
      program({flow(10, 30)}, {hard(HardType::kMaxHops, Target::flow(0), 12.0),
                               hard(HardType::kMaxHops, Target::flow(0), 12.0)});
  ValidationReport r = validate(dup, s, {});
  CHECK(r.outcome == Outcome::kAccept);
  CHECK(mentions(r.pass(5).warnings, "duplicate max_hops bound 12"));
  CHECK(r.pass(5).status == PassStatus::kWarning);

  // Two disabled planes cut the torus into two cylinders.
  ConstraintProgram cut =
      program({flow(100, 120)}, {hard(HardType::kDisablePlane, Target::plane(3)),
                                 hard(HardType::kDisablePlane, Target::plane(10))});
  r = validate(cut, s, {});
  CHECK(r.outcome == Outcome::kAccept);
  CHECK(mentions(r.pass(7).warnings, "disconnected (2 components)"));

  ConstraintProgram heavy = program({flow(0, 1)}, {});
  for (int plane = 2; plane < 14; ++plane)
    heavy.hard_constraints.push_back(hard(HardType::kDisablePlane, Target::plane(plane)));
  r = validate(heavy, s, {});
  CHECK(mentions(r.pass(6).warnings, "of ISLs"));
  CHECK(mentions(r.pass(7).warnings, "60.000% of nodes disabled"));
  CHECK(r.outcome == Outcome::kAccept);

  for (int plane = 14; plane < 18; ++plane)
    heavy.hard_constraints.push_back(hard(HardType::kDisablePlane, Target::plane(plane)));
  r = validate(heavy, s, {});
  CHECK(mentions(r.pass(7).warnings, "strong warning: 80.000%"));
}

TEST_CASE("fragment selection and decisions on the default shell") {
  const auto& s = shell();
  struct Row {
    ConstraintProgram p;
    Fragment fragment;
    Outcome outcome;
  };
  const std::vector<Row> rows = {
      {program({flow(10, 30)}, {}), Fragment::kF1, Outcome::kAccept},
      {program({flow(10, 30)}, {hard(HardType::kMaxLatencyMs, Target::flow(0), 150.0)}),
       Fragment::kF2, Outcome::kAccept},
      {program({flow(12, 215)}, {hard(HardType::kMaxLatencyMs, Target::flow(0), 30.0)}),
       Fragment::kF2, Outcome::kReject},
      {program({flow(5, 105)}, {hard(HardType::kMaxHops, Target::flow(0), 12.0)}),
       Fragment::kF3, Outcome::kAccept},
      {program({flow(5, 305)}, {hard(HardType::kMaxHops, Target::flow(0), 3.0)}),
       Fragment::kF3, Outcome::kReject},
      {program({flow(5, 305)}, {hard(HardType::kMaxHops, Target::flow(0), 5.0)}),
       Fragment::kF3, Outcome::kAccept},
      {program({flow(5, 105)}, {hard(HardType::kMaxHops, Target::flow(0), 12.0),
                                hard(HardType::kMaxLatencyMs, Target::flow(0), 200.0)}),
       Fragment::kF4, Outcome::kAccept},
      {program({flow(5, 105)}, {hard(HardType::kMaxHops, Target::flow(0), 12.0),
                                hard(HardType::kMaxLatencyMs, Target::flow(0), 3.0)}),
       Fragment::kF4, Outcome::kReject},
      {program({flow(20, 220)}, {hard(HardType::kKEdgeDisjoint, Target::flow(0), 4.0)}),
       Fragment::kF5, Outcome::kAccept},
      {program({flow(20, 220)}, {hard(HardType::kKEdgeDisjoint, Target::flow(0), 5.0)}),
       Fragment::kF5, Outcome::kReject},
      {program({flow(40, 180)}, {hard(HardType::kMinCapReserve, Target::flow(0), 0.2)}),
       Fragment::kNone, Outcome::kAbstain},
      {program({flow(40, 180)}, {hard(HardType::kKEdgeDisjoint, Target::flow(0), 2.0),
                                 hard(HardType::kMaxHops, Target::flow(0), 30.0)}),
       Fragment::kNone, Outcome::kAbstain},
  };
  for (const Row& row : rows) {
    CAPTURE(serialize_program(row.p));
    const ValidationReport r = validate(row.p, s, {});
    REQUIRE(r.certificates.size() == 1);
    CHECK(r.certificates[0].fragment == row.fragment);
    CHECK(r.outcome == row.outcome);
    CHECK(r.witness.has_value() == (row.outcome == Outcome::kAccept));
    if (row.outcome == Outcome::kReject) CHECK_FALSE(r.pass(8).errors.empty());
    if (r.witness) {
      const GroundingResult g = ground(row.p, s, {});
      CHECK(verify_witness(*r.witness, row.p, s, g).ok);
    }
  }
}

TEST_CASE("topology-only programs abstain") {
  const ValidationReport r =
      validate(program({}, {hard(HardType::kDisableNode, Target::node(142))}), shell(), {});
  CHECK(r.outcome == Outcome::kAbstain);
  CHECK(mentions(r.pass(8).warnings, "topology-only"));
  CHECK(r.clean_through(7));
}

TEST_CASE("pair cap and empty endpoint sets abstain") {
  const auto& s = shell();
  FlowSelector planes;
  planes.src_plane = 2;
  planes.dst_plane = 9;
  ConstraintProgram p = program({planes}, {});
  CHECK(validate(p, s, {}).outcome == Outcome::kAccept);  // 20 x 20 = cap
  ValidateOptions small;
  small.max_pairs = 399;
  ValidationReport r = validate(p, s, {}, small);
  CHECK(r.outcome == Outcome::kAbstain);
  CHECK(mentions(r.pass(8).warnings, "400 node pairs (cap 399)"));

  CHECK(validate(program({FlowSelector{}}, {}), s, {}).outcome == Outcome::kAbstain);

  FlowSelector polar;
  polar.src_region = "polar_north";
  polar.dst_node = 3;
  r = validate(program({polar}, {}), s, {});
  CHECK(r.outcome == Outcome::kAbstain);
  CHECK(mentions(r.pass(7).warnings, "no satellite is over \"polar_north\""));
}

TEST_CASE("universal and existential endpoint semantics") {
  const auto& s = shell();
  FlowSelector f;
  f.src_plane = 0;
  f.dst_node = 200;
  // One satellite in the source plane is down.
  const ConstraintProgram p = program({f}, {hard(HardType::kDisableNode, Target::node(5))});
  const ValidationReport uni = validate(p, s, {});
  CHECK(uni.outcome == Outcome::kReject);
  CHECK(mentions(uni.pass(8).errors, "endpoint node 5 is disabled"));
  ValidateOptions ex;
  ex.mode = EndpointMode::kExistential;
  const ValidationReport exi = validate(p, s, {}, ex);
  CHECK(exi.outcome == Outcome::kAccept);
  REQUIRE(exi.witness);
  CHECK(exi.witness->flows.at(0).pairs.size() == 1);
  CHECK(verify_witness(*exi.witness, p, s, ground(p, s, {})).ok);
}

TEST_CASE("verify_witness rejects tampered witnesses") {
  const auto& s = shell();
  FlowSelector f;
  f.src_plane = 1;
  f.dst_node = 250;
  const ConstraintProgram p = program(
      {f}, {hard(HardType::kMaxLatencyMs, Target::flow(0), 120.0),
            hard(HardType::kRerouteAway, Target::node(45))});
  const ValidationReport r = validate(p, s, {});
  REQUIRE(r.outcome == Outcome::kAccept);
  const GroundingResult g = ground(p, s, {});
  const Witness good = *r.witness;
  REQUIRE(verify_witness(good, p, s, g).ok);

  auto expect_bad = [&](const Witness& w, std::string_view needle) {
    const WitnessCheck c = verify_witness(w, p, s, g);
    CAPTURE(needle);
    CHECK_FALSE(c.ok);
    CHECK(mentions(c.violations, needle));
  };
  Witness w = good;
  w.flows[0].pairs.pop_back();
  expect_bad(w, "is not covered");

  w = good;
  w.flows[0].pairs[0].paths[0].delay_ms += 1.0;
  expect_bad(w, "but its edges sum to");

  w = good;
  w.flows[0].fragment = Fragment::kF1;
  expect_bad(w, "does not match the demand");

  w = good;
  w.flows[0].pairs.push_back(w.flows[0].pairs[0]);
  expect_bad(w, "pair witnessed twice");

  w = good;
  w.flows[0].pairs[0].paths[0].nodes = {w.flows[0].pairs[0].src, 399};
  expect_bad(w, "does not join");

  w = good;
  w.flows.clear();
  expect_bad(w, "missing witness");

  // A detour through the transit-excluded node.
  ConstraintProgram q = program({flow(44, 46)}, {hard(HardType::kRerouteAway, Target::node(45))});
  const GroundingResult gq = ground(q, s, {});
  Witness detour;
  detour.flows = {{0, Fragment::kF1, {{44, 46, {{{44, 45, 46}, 0.0}}}}}};
  detour.flows[0].pairs[0].paths[0].delay_ms =
      s.edge(*s.find_edge(44, 45)).delay_ms + s.edge(*s.find_edge(45, 46)).delay_ms;
  const WitnessCheck c = verify_witness(detour, q, s, gq);
  CHECK_FALSE(c.ok);
  CHECK(mentions(c.violations, "transit-excluded node"));
}

TEST_CASE("every accept carries a witness the independent checker confirms") {
  std::mt19937_64 rng(41);
  DemandMix mix;
  mix.allow_disjoint = true;
  int accepts = 0;
  for (int i = 0; i < 1000; ++i) {
    const bool big = i % 10 == 0;
    const TopologySnapshot s =
        big ? build_snapshot(WalkerConfig{}, i * 13.0) : random_snapshot(rng, 4, 30);
    const ConstraintProgram p = random_program(rng, s, mix);
    ValidateOptions opt;
    if (i % 4 == 1) opt.mode = EndpointMode::kExistential;
    const ValidationReport r = validate(p, s, {}, opt);
    if (r.outcome != Outcome::kAccept) continue;
    ++accepts;
    REQUIRE(r.witness);
    const WitnessCheck c = verify_witness(*r.witness, p, s, ground(p, s, {}), opt.max_pairs);
    CAPTURE(serialize_program(p));
    CHECK(c.ok);
  }
  CHECK(accepts > 200);
}

TEST_CASE("pass-8 decisions agree with exhaustive search on small graphs") {
  std::mt19937_64 rng(42);
  DemandMix mix;
  mix.allow_disjoint = true;
  int rejects = 0;
  for (int i = 0; i < 600; ++i) {
    const TopologySnapshot s = random_snapshot(rng, 4, 14, 0.4);
    const ConstraintProgram p = random_program(rng, s, mix);
    const ValidationReport r = validate(p, s, {});
    if (!r.clean_through(6) || r.outcome == Outcome::kAbstain) continue;
    const OracleMasks m = oracle_masks(p, s);
    const FlowSelector& f = p.flow_selectors[0];
    const auto deadline = first_value(p, HardType::kMaxLatencyMs);
    const auto hop_value = first_value(p, HardType::kMaxHops);
    const std::optional<int> hops =
        hop_value ? std::optional<int>(static_cast<int>(*hop_value)) : std::nullopt;
    const auto k = first_value(p, HardType::kKEdgeDisjoint);
    const bool allow_self = f.src_node && f.dst_node;
    bool all_ok = true;
    for (NodeId a : side_nodes(s, f.src_node, f.src_plane))
      for (NodeId b : side_nodes(s, f.dst_node, f.dst_plane)) {
        if (a == b && !allow_self) continue;
        const bool ok = k ? oracle_disjoint(s, m, a, b, static_cast<int>(*k))
                          : oracle_feasible(s, m, a, b, deadline, hops);
        all_ok = all_ok && ok;
      }
    CAPTURE(serialize_program(p));
    CHECK(all_ok == (r.outcome == Outcome::kAccept));
    rejects += r.outcome == Outcome::kReject;
  }
  CHECK(rejects > 50);
}

TEST_CASE("adding a hard constraint to a rejected program never accepts") {
  std::mt19937_64 rng(43);
  int checked = 0;
  for (int i = 0; i < 400; ++i) {
    const TopologySnapshot s = random_snapshot(rng, 4, 24);
    ConstraintProgram p = random_program(rng, s, DemandMix{});
    if (validate(p, s, {}).outcome != Outcome::kReject) continue;
    ++checked;
    const Isl& e = s.edge(uniform_int(rng, 0, s.edge_count() - 1));
    for (const HardConstraint& extra :
         {hard(HardType::kDisableNode, Target::node(uniform_int(rng, 0, s.node_count() - 1))),
          hard(HardType::kDisableEdge, Target::edge(e.u, e.v)),
          hard(HardType::kAvoidLatitude, Target::edges(), 30.0),
          hard(HardType::kMaxHops, Target::flow(0), 2.0)}) {
      ConstraintProgram q = p;
      q.hard_constraints.push_back(extra);
      CHECK(validate(q, s, {}).outcome != Outcome::kAccept);
    }
  }
  CHECK(checked > 50);
}

TEST_CASE("warning thresholds never flip the outcome") {
  std::mt19937_64 rng(44);
  for (int i = 0; i < 200; ++i) {
    const TopologySnapshot s = random_snapshot(rng, 4, 24);
    const ConstraintProgram p = random_program(rng, s, DemandMix{});
    ValidateOptions loud;
    loud.edge_loss_warning = 0.0;
    loud.node_loss_warning = 0.0;
    loud.node_loss_strong_warning = 0.0;
    ValidateOptions quiet;
    quiet.edge_loss_warning = 1.0;
    quiet.node_loss_warning = 1.0;
    quiet.node_loss_strong_warning = 1.0;
    CHECK(validate(p, s, {}, loud).outcome == validate(p, s, {}, quiet).outcome);
  }
}

TEST_CASE("reports are deterministic") {
  std::mt19937_64 rng(45);
  for (int i = 0; i < 50; ++i) {
    const TopologySnapshot s = random_snapshot(rng, 4, 24);
    const ConstraintProgram p = random_program(rng, s, DemandMix{});
    CHECK(stable_json(validate(p, s, {})) == stable_json(validate(p, s, {})));
  }
}

TEST_CASE("validate_text turns parse failures into pass-1 errors") {
  const ValidationReport r =
      validate_text(R"({"intent_id": "x", "priority": "urgent", "hard_constraints": []})",
                    shell(), {});
  CHECK(r.outcome == Outcome::kReject);
  CHECK(mentions(r.pass(1).errors, "priority"));
  CHECK(validate_text("not json", shell(), {}).outcome == Outcome::kReject);
}

TEST_CASE("conditional constraints follow the active events") {
  const auto& s = shell();
  ConstraintProgram p = program(
      {flow(5, 305)}, {hard(HardType::kMaxHops, Target::flow(0), 3.0, "solar_storm")});
  p.event_conditions = {"solar_storm"};
  CHECK(validate(p, s, {}).outcome == Outcome::kAccept);
  CHECK(validate(p, s, {"solar_storm"}).outcome == Outcome::kReject);

  // Endpoint conflicts are structural and flagged whether or not the event is active.
  ConstraintProgram q = program(
      {flow(61, 200)}, {hard(HardType::kDisablePlane, Target::plane(3), {}, "solar_storm")});
  q.event_conditions = {"solar_storm"};
  CHECK(first_error_pass(validate(q, s, {})) == 5);
}

TEST_CASE("fallback policies") {
  const auto& s = shell();
  ConstraintProgram infeasible =
      program({flow(5, 305)}, {hard(HardType::kDisableNode, Target::node(300)),
                               hard(HardType::kMaxHops, Target::flow(0), 3.0),
                               hard(HardType::kRerouteAway, Target::node(88))});

  SUBCASE("accepted programs route as is") {
    const ConstraintProgram ok = program({flow(10, 30)}, {});
    const Resolution res = resolve_fallback(ok, validate(ok, s, {}), s, {});
    CHECK(res.kind == ResolutionKind::kRoutedAsIs);
    CHECK(res.program == ok);
  }
  SUBCASE("default policy refuses and lists the errors") {
    const ValidationReport r = validate(infeasible, s, {});
    const Resolution res = resolve_fallback(infeasible, r, s, {});
    CHECK(res.kind == ResolutionKind::kRefusal);
    CHECK_FALSE(res.program);
    CHECK(res.message.find("minimum hop count") != std::string::npos);
  }
  SUBCASE("relax_soft_first drops soft constraints by ascending weight") {
    ConstraintProgram p = program({flow(10, 30)}, {});
    p.fallback_policy = FallbackPolicy::kRelaxSoftFirst;
    p.soft_constraints = {{SoftType::kMaxUtilization, Target::edges(), 1.5, 5.0},
                          {SoftType::kMinimizeLatency, Target::flow(0), 1.0, 0.5}};
    const Resolution res = resolve_fallback(p, validate(p, s, {}), s, {});
    CHECK(res.kind == ResolutionKind::kRelaxed);
    CHECK(res.dropped_soft.size() == 2);
    REQUIRE(res.program);
    CHECK(res.program->soft_constraints.empty());
    CHECK(res.program->hard_constraints == p.hard_constraints);
    CHECK(res.final_report.outcome == Outcome::kAccept);

    infeasible.fallback_policy = FallbackPolicy::kRelaxSoftFirst;
    const Resolution hard_fail =
        resolve_fallback(infeasible, validate(infeasible, s, {}), s, {});
    CHECK(hard_fail.kind == ResolutionKind::kRefusal);
  }
  SUBCASE("report_unsat_core isolates the conflicting constraint") {
    infeasible.fallback_policy = FallbackPolicy::kReportUnsatCore;
    const Resolution res = resolve_fallback(infeasible, validate(infeasible, s, {}), s, {});
    CHECK(res.kind == ResolutionKind::kUnsatCore);
    CHECK(res.unsat_core == std::vector<int>{1});
    CHECK(res.message.find("hard_constraints[1]") != std::string::npos);
  }
}
