// Acceptance runner: one PASS/FAIL line per criterion clause.
//   acceptance            run everything
//   acceptance 6          run every clause of criterion 6
//   acceptance 6a         run one clause
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "intentroute/compiler.h"
#include "intentroute/grounding.h"
#include "intentroute/harness.h"
#include "intentroute/router.h"
#include "intentroute/validator.h"
#include "json.hpp"
#include "support.h"

using namespace intentroute;
using namespace intentroute::testing;

namespace {

// Pinned tolerances and sizes.
constexpr int kCorruptionsPerType = 30;
constexpr double kCorruptionBudgetS = 10.0;
constexpr int kSoundnessCases = 1000;
constexpr double kSoundnessBudgetS = 60.0;
constexpr int kMinAccepts = 200;
constexpr int kRejectCases = 200;
constexpr int kMaxRejectNodes = 30;
constexpr int kDisjointCases = 200;
constexpr int kMaxDisjointNodes = 15;
constexpr double kPolar45Target = 0.158;
constexpr double kPolar30Target = 0.288;
constexpr double kPolarBand = 0.03;
constexpr int kPolarSnapshots = 20;
constexpr double kMedianBoundMs = 2.0;
constexpr double kMaxBoundMs = 10.0;
constexpr int kRuntimeReps = 5;
constexpr int kExpectedAdversarial = 15;
constexpr int kExtractionPrograms = 100;
constexpr int kScoringPairs = 1000;

struct Line {
  std::string id;
  bool pass = false;
  std::string detail;
};

using Clauses = std::vector<Line>;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string pct(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * x);
  return buf;
}

const TopologySnapshot& walker_t0() {
  static const TopologySnapshot s = build_snapshot(WalkerConfig{}, 0.0);
  return s;
}

Clauses criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  AuditResult r = run_corruption_audit(builtin_benchmark(), walker_t0(),
                                       kCorruptionsPerType, 0);
  const double secs = seconds_since(t0);
  const int expected = kCorruptionsPerType * 8;
  std::string passes;
  for (int p : r.covering_passes()) passes += std::to_string(p) + " ";
  std::string missing;
  for (int p = 1; p <= 6; ++p) {
    const auto c = r.covering_passes();
    if (std::find(c.begin(), c.end(), p) == c.end())
      missing += std::to_string(p) + " ";
  }
  return {
      {"1a",
       r.injections == expected && r.detected == expected &&
           secs < kCorruptionBudgetS,
       "corruption detection " + std::to_string(r.detected) + "/" +
           std::to_string(r.injections) + " rejected with field-naming errors in " +
           std::to_string(secs) + " s"},
      {"1b", missing.empty(),
       "passes catching >=1 type: { " + passes + "}; passes 1-6 with none: { " +
           missing + "}"}};
}

Clauses criterion2() {
  ConfusionResult c = run_confusion(builtin_benchmark(), walker_t0());
  const OutcomeCounts& inf = c.cells.at(Category::kInfeasible);
  return {{"2", inf.accept == 0 && inf.total() > 0,
           "infeasible ground truths: accept=" + std::to_string(inf.accept) +
               " reject=" + std::to_string(inf.reject) +
               " abstain=" + std::to_string(inf.abstain)}};
}

// Independent re-check of a witness path against oracle masks.
bool oracle_path_ok(const TopologySnapshot& s, const OracleMasks& m,
                    const WitnessPath& w, std::optional<double> deadline,
                    std::optional<int> hops) {
  if (w.nodes.empty()) return false;
  std::set<NodeId> seen;
  double delay = 0.0;
  for (std::size_t i = 0; i < w.nodes.size(); ++i) {
    const NodeId v = w.nodes[i];
    if (!m.node_ok[v] || !seen.insert(v).second) return false;
    if (i > 0 && i + 1 < w.nodes.size() && m.no_transit[v]) return false;
    if (i > 0) {
      auto e = s.find_edge(w.nodes[i - 1], v);
      if (!e || !m.edge_ok[*e]) return false;
      delay += s.edge(*e).delay_ms;
    }
  }
  if (deadline && delay > *deadline) return false;
  if (hops && w.hops() > *hops) return false;
  return true;
}

Clauses criterion3() {
  std::mt19937_64 rng(3);
  const auto t0 = std::chrono::steady_clock::now();
  int accepts = 0, verifier_failures = 0, oracle_failures = 0;
  DemandMix mix;
  mix.allow_disjoint = true;
  for (int i = 0; i < kSoundnessCases; ++i) {
    const bool walker = i % 4 == 0;
    const TopologySnapshot snap =
        walker ? build_snapshot(WalkerConfig{}, uniform_real(rng, 0.0, 6000.0))
               : random_snapshot(rng, 4, 30);
    mix.plane_endpoint_prob = walker ? 0.1 : 0.25;
    const ConstraintProgram p = random_program(rng, snap, mix);
    ValidateOptions opts;
    opts.mode = i % 2 ? EndpointMode::kExistential : EndpointMode::kUniversal;
    ValidationReport r = validate(p, snap, {}, opts);
    if (r.outcome != Outcome::kAccept) continue;
    ++accepts;
    const GroundingResult g = ground(p, snap, {});
    if (!r.witness || !verify_witness(*r.witness, p, snap, g).ok) {
      ++verifier_failures;
      continue;
    }
    const OracleMasks m = oracle_masks(p, snap);
    const auto deadline = first_value(p, HardType::kMaxLatencyMs);
    const auto hops = first_value(p, HardType::kMaxHops);
    for (const auto& fw : r.witness->flows)
      for (const auto& pw : fw.pairs)
        for (const auto& path : pw.paths)
          if (!oracle_path_ok(snap, m, path, deadline,
                              hops ? std::optional<int>(static_cast<int>(*hops))
                                   : std::nullopt))
            ++oracle_failures;
  }
  const double secs = seconds_since(t0);
  return {{"3a",
           verifier_failures == 0 && accepts >= kMinAccepts &&
               secs < kSoundnessBudgetS,
           std::to_string(kSoundnessCases) + " cases, " +
               std::to_string(accepts) + " accepts, verify_witness failures=" +
               std::to_string(verifier_failures) + " in " +
               std::to_string(secs) + " s"},
          {"3b", oracle_failures == 0 && accepts >= kMinAccepts,
           "witness paths rejected by the oracle masks=" +
               std::to_string(oracle_failures)}};
}

Clauses criterion4() {
  std::mt19937_64 rng(4);
  int rejects = 0, counterexamples = 0, accepts = 0, accept_mismatch = 0;
  int iterations = 0;
  DemandMix mix;
  mix.plane_endpoint_prob = 0.2;
  while (rejects < kRejectCases && iterations < 200000) {
    ++iterations;
    const TopologySnapshot snap = random_snapshot(rng, 4, kMaxRejectNodes, 0.4, 0.9);
    const ConstraintProgram p = random_program(rng, snap, mix);
    ValidationReport r = validate(p, snap, {});
    const bool pass8_reject = r.outcome == Outcome::kReject &&
                              r.clean_through(7) && !r.pass(8).errors.empty();
    const bool accept = r.outcome == Outcome::kAccept;
    if (!pass8_reject && !accept) continue;

    const OracleMasks m = oracle_masks(p, snap);
    const auto deadline = first_value(p, HardType::kMaxLatencyMs);
    const auto hv = first_value(p, HardType::kMaxHops);
    const std::optional<int> hops =
        hv ? std::optional<int>(static_cast<int>(*hv)) : std::nullopt;
    const FlowSelector& f = p.flow_selectors[0];
    const bool allow_self = f.src_node && f.dst_node;
    bool all_feasible = true;
    for (NodeId a : side_nodes(snap, f.src_node, f.src_plane))
      for (NodeId b : side_nodes(snap, f.dst_node, f.dst_plane)) {
        if (a == b && !allow_self) continue;
        if (!oracle_feasible(snap, m, a, b, deadline, hops)) all_feasible = false;
      }
    if (pass8_reject) {
      ++rejects;
      if (all_feasible) ++counterexamples;
    } else {
      ++accepts;
      if (!all_feasible) ++accept_mismatch;
    }
  }
  return {{"4", rejects >= kRejectCases && counterexamples == 0,
           std::to_string(rejects) + " Pass-8 rejects on graphs <= " +
               std::to_string(kMaxRejectNodes) +
               " nodes, counterexamples=" + std::to_string(counterexamples) +
               " (accepts cross-checked: " + std::to_string(accepts) +
               ", mismatches=" + std::to_string(accept_mismatch) + ")"}};
}

Clauses criterion5() {
  std::mt19937_64 rng(5);
  int cases = 0, mismatches = 0, bad_paths = 0, feasible = 0;
  for (int i = 0; i < kDisjointCases; ++i) {
    const TopologySnapshot snap = random_snapshot(rng, 4, kMaxDisjointNodes, 1.0);
    ConstraintProgram p;
    p.intent_id = "f5";
    if (coin(rng, 0.4))
      p.hard_constraints.push_back(
          {HardType::kRerouteAway,
           Target::node(uniform_int(rng, 0, snap.node_count() - 1)),
           std::nullopt, std::nullopt});
    const GroundingResult g = ground(p, snap, {});
    const RoutingGraph graph = constrained_graph(snap, g);
    const OracleMasks m = oracle_masks(p, snap);
    const NodeId s = uniform_int(rng, 0, snap.node_count() - 1);
    NodeId t = uniform_int(rng, 0, snap.node_count() - 2);
    if (t >= s) ++t;
    for (int k = 1; k <= 3; ++k) {
      ++cases;
      auto paths = edge_disjoint_paths(graph, s, t, k);
      const bool want = oracle_disjoint(snap, m, s, t, k);
      if (paths.has_value() != want) ++mismatches;
      if (!paths) continue;
      ++feasible;
      std::set<EdgeId> used;
      for (const Path& path : *paths) {
        WitnessPath w{path.nodes, path.delay_ms};
        if (path.nodes.front() != s || path.nodes.back() != t ||
            !oracle_path_ok(snap, m, w, std::nullopt, std::nullopt))
          ++bad_paths;
        for (std::size_t j = 1; j < path.nodes.size(); ++j)
          if (!used.insert(*snap.find_edge(path.nodes[j - 1], path.nodes[j])).second)
            ++bad_paths;
      }
    }
  }
  return {{"5", cases >= kDisjointCases && mismatches == 0 && bad_paths == 0,
           std::to_string(cases) + " (graph, k) cases on <= " +
               std::to_string(kMaxDisjointNodes) + " nodes, " +
               std::to_string(feasible) + " feasible, mismatches=" +
               std::to_string(mismatches) + ", invalid paths=" +
               std::to_string(bad_paths)}};
}

Clauses criterion6() {
  EvalOptions opt;  // 3 seeds x 20 steps x 100 pairs
  const auto results = run_e2e(WalkerConfig{}, opt);
  bool pdr_ok = true;
  long long violations = 0;
  std::string pdr, viol;
  for (const auto& r : results) {
    violations += r.violations;
    viol += r.scenario + "=" + std::to_string(r.violations) + " ";
    if (r.scenario == "polar_avoidance" || r.scenario == "compositional") {
      pdr_ok = pdr_ok && r.reachable_pdr == 1.0 && r.reachable > 0;
      pdr += r.scenario + " reachable PDR " + pct(r.reachable_pdr) +
             " (reachability " + pct(r.reachability) + ") ";
    }
  }
  return {{"6a", pdr_ok, pdr}, {"6b", violations == 0, "violations: " + viol}};
}

Clauses criterion7() {
  const auto r45 = latitude_edge_removal(WalkerConfig{}, 45.0, kPolarSnapshots);
  const auto r30 = latitude_edge_removal(WalkerConfig{}, 30.0, kPolarSnapshots);
  return {{"7a", std::abs(r45.mean - kPolar45Target) <= kPolarBand,
           "45 deg removes " + pct(r45.mean) + " (target 15.8% +/- 3pp)"},
          {"7b", std::abs(r30.mean - kPolar30Target) <= kPolarBand,
           "30 deg removes " + pct(r30.mean) + " (target 28.8% +/- 3pp)"}};
}

Clauses criterion8() {
  RuntimeResult r = measure_runtime(builtin_benchmark(), walker_t0(), kRuntimeReps);
  const LatencyRow* all = r.row("all");
  return {{"8a", all && all->n > 0 && all->median_ms <= kMedianBoundMs,
           "median validate " + std::to_string(all ? all->median_ms : -1) +
               " ms over " + std::to_string(all ? all->n : 0) + " programs"},
          {"8b", all && all->n > 0 && all->max_ms <= kMaxBoundMs,
           "max validate " + std::to_string(all ? all->max_ms : -1) + " ms"}};
}

Clauses criterion9() {
  AdversarialResult r = run_adversarial(builtin_adversarial(), walker_t0());
  std::string missed;
  for (const auto& row : r.rows)
    if (!row.flagged) missed += row.id + " ";
  return {{"9",
           static_cast<int>(r.rows.size()) == kExpectedAdversarial &&
               r.flagged() == kExpectedAdversarial,
           std::to_string(r.flagged()) + "/" + std::to_string(r.rows.size()) +
               " flagged" + (missed.empty() ? "" : "; missed: " + missed)}};
}

std::string valid_program_json(int i) {
  ConstraintProgram p;
  p.intent_id = "mock-" + std::to_string(i);
  p.hard_constraints.push_back(
      {HardType::kDisableNode, Target::node(i), std::nullopt, std::nullopt});
  return serialize_program(p);
}

Clauses criterion10() {
  Clauses out;
  const TopologySnapshot& snap = walker_t0();

  // (a) repair-loop contract
  {
    std::vector<std::string> problems;
    CompilerConfig cfg;
    cfg.backend = Backend::kMock;
    cfg.max_retries = 3;
    const std::string bad = R"({"intent_id": "x", "priority": "urgent"})";

    MockBackend always_bad({bad});
    CompileResult r1 = compile("anything", cfg, snap, &always_bad);
    if (r1.program || always_bad.calls() != cfg.max_retries + 1)
      problems.push_back("attempt bound");
    if (r1.trace.attempts.size() != static_cast<std::size_t>(cfg.max_retries + 1))
      problems.push_back("trace length");
    // Every error of attempt i must appear verbatim in the next user message.
    for (std::size_t i = 0; i + 1 < always_bad.seen().size(); ++i) {
      const auto& next = always_bad.seen()[i + 1].back();
      for (const auto& e : r1.trace.attempts[i].errors)
        if (next.role != "user" || next.content.find(e) == std::string::npos)
          problems.push_back("error not fed back verbatim");
      if (always_bad.seen()[i + 1][always_bad.seen()[i + 1].size() - 2].content != bad)
        problems.push_back("assistant turn not echoed");
    }

    MockBackend second_ok({bad, valid_program_json(5)});
    CompileResult r2 = compile("anything", cfg, snap, &second_ok);
    if (!r2.program || r2.trace.first_try || second_ok.calls() != 2)
      problems.push_back("repair success");

    MockBackend first_ok({valid_program_json(6)});
    CompileResult r3 = compile("anything", cfg, snap, &first_ok);
    if (!r3.program || !r3.trace.first_try || first_ok.calls() != 1)
      problems.push_back("first-try flag");

    CompilerConfig no_repair = ablation_config("no_repair", cfg);
    MockBackend once({bad});
    compile("anything", no_repair, snap, &once);
    if (once.calls() != 1) problems.push_back("no_repair makes one call");

    std::string detail = problems.empty() ? "attempt bounds, verbatim feedback, "
                                            "first-try flag all hold"
                                          : "";
    for (const auto& p : problems) detail += p + "; ";
    out.push_back({"10a", problems.empty(), detail});
  }

  // (b) extraction totality over three response formats
  {
    std::mt19937_64 rng(10);
    int ok = 0, total = 0;
    DemandMix mix;
    mix.allow_disjoint = true;
    for (int i = 0; i < kExtractionPrograms; ++i) {
      const ConstraintProgram p = random_program(rng, snap, mix);
      const std::string body = serialize_program(p, {.pretty = coin(rng, 0.5)});
      const std::string formats[3] = {
          body,
          "Here is the program:\n```json\n" + body + "\n```\nLet me know.",
          "<think>the user wants {something}</think>Sure. " + body +
              " That covers the request."};
      for (const auto& text : formats) {
        ++total;
        ExtractResult ex = extract_payload(text);
        if (!ex.payload) continue;
        ParseResult parsed = parse_program(*ex.payload);
        if (parsed.ok() && *parsed.program == p) ++ok;
      }
    }
    out.push_back({"10b", ok == total,
                   std::to_string(ok) + "/" + std::to_string(total) +
                       " responses extracted to the original program"});
  }

  // (c) rule-based baseline
  {
    CompilerConfig cfg;
    cfg.backend = Backend::kRuleBased;
    BenchRunResult r = run_benchmark(builtin_benchmark(), cfg, snap, nullptr, "full");
    int keyword = 0, keyword_full = 0, compiled = 0;
    std::string misses;
    for (std::size_t i = 0; i < r.entries.size(); ++i) {
      const auto& e = builtin_benchmark()[i];
      compiled += r.entries[i].score.compiled;
      if (e.category == Category::kSingle && e.has_tag("catalog_keywords")) {
        ++keyword;
        if (r.entries[i].score.full_match) ++keyword_full;
        else misses += e.id + " ";
      }
    }
    out.push_back({"10c", keyword > 0 && keyword_full == keyword,
                   "rule-based full_match on keyword single entries " +
                       std::to_string(keyword_full) + "/" + std::to_string(keyword) +
                       (misses.empty() ? "" : "; missed: " + misses)});
    out.push_back({"10d", compiled == static_cast<int>(r.entries.size()),
                   "rule-based compiled " + std::to_string(compiled) + "/" +
                       std::to_string(r.entries.size())});
  }
  return out;
}

ConstraintProgram mutate(std::mt19937_64& rng, ConstraintProgram p) {
  const int kind = uniform_int(rng, 0, 6);
  if (!p.hard_constraints.empty()) {
    auto& h = p.hard_constraints[uniform_int(rng, 0, p.hard_constraints.size() - 1)];
    switch (kind) {
      case 0:
        if (h.value) *h.value *= 1.0 + uniform_real(rng, -2e-6, 2e-6);
        return p;
      case 1:
        if (h.value) *h.value += 1.0;
        return p;
      case 2:
        if (h.target.kind == TargetKind::kNode) h.target.id = (h.target.id + 1) % 400;
        return p;
      case 3:
        h.type = h.type == HardType::kDisableNode ? HardType::kRerouteAway
                                                  : HardType::kDisableNode;
        return p;
      case 4:
        p.hard_constraints.pop_back();
        return p;
      default:
        break;
    }
  }
  if (kind == 5)
    p.soft_constraints.push_back({SoftType::kLoadBalance, Target::edges(), 1.0, 1.0});
  if (kind == 6) std::reverse(p.hard_constraints.begin(), p.hard_constraints.end());
  return p;
}

Clauses criterion11() {
  std::mt19937_64 rng(11);
  const auto& bench = builtin_benchmark();
  int violations = 0, full = 0, none = 0;
  for (int i = 0; i < kScoringPairs; ++i) {
    const ConstraintProgram& truth =
        bench[uniform_int(rng, 0, bench.size() - 1)].truth;
    std::optional<ConstraintProgram> cand;
    if (!coin(rng, 0.05)) {
      cand = truth;
      for (int m = uniform_int(rng, 0, 2); m > 0; --m) cand = mutate(rng, *cand);
    }
    const bool compiled = !coin(rng, 0.05);
    const ScoreReport s = score_program(cand, compiled, truth);
    if ((s.full_match && !s.targets_match) || (s.targets_match && !s.types_match) ||
        (s.types_match && !s.compiled))
      ++violations;
    full += s.full_match;
    none += !s.compiled;
  }

  ConstraintProgram base;
  base.intent_id = "tol";
  base.flow_selectors.push_back(FlowSelector{});
  base.hard_constraints.push_back(
      {HardType::kMaxLatencyMs, Target::flow(0), 80.0, std::nullopt});
  auto with_value = [&](double v) {
    ConstraintProgram p = base;
    p.hard_constraints[0].value = v;
    return score_program(p, true, base).full_match;
  };
  ConstraintProgram zero = base;
  zero.hard_constraints[0].value = 0.0;
  auto near_zero = [&](double v) {
    ConstraintProgram p = zero;
    p.hard_constraints[0].value = v;
    return score_program(p, true, zero).full_match;
  };
  const bool boundaries =
      with_value(80.0 + 1e-9) && with_value(80.0 * (1 + 0.9e-6)) &&
      !with_value(80.0 * (1 + 1.1e-6)) && near_zero(1e-7) &&
      near_zero(0.9e-6) && !near_zero(1.1e-6) && numeric_eq(1e6, 1e6 + 0.9) &&
      !numeric_eq(1e6, 1e6 + 1.1);
  return {{"11a", violations == 0,
           std::to_string(kScoringPairs) + " scored pairs, hierarchy violations=" +
               std::to_string(violations) + " (full=" + std::to_string(full) +
               ", not compiled=" + std::to_string(none) + ")"},
          {"11b", boundaries, "rel/abs 1e-6 boundary cases"}};
}

const std::map<int, std::function<Clauses()>>& criteria() {
  static const std::map<int, std::function<Clauses()>> all = {
      {1, criterion1}, {2, criterion2},   {3, criterion3},  {4, criterion4},
      {5, criterion5}, {6, criterion6},   {7, criterion7},  {8, criterion8},
      {9, criterion9}, {10, criterion10}, {11, criterion11}};
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string filter = argc > 1 ? argv[1] : "";
  int number = 0;
  std::string clause;
  if (!filter.empty()) {
    std::size_t used = 0;
    try {
      number = std::stoi(filter, &used);
    } catch (const std::exception&) {
      std::fprintf(stderr, "usage: acceptance [criterion[clause]]\n");
      return 2;
    }
    clause = filter;
    if (used == filter.size()) clause.clear();
    if (!criteria().count(number)) {
      std::fprintf(stderr, "unknown criterion %s\n", filter.c_str());
      return 2;
    }
  }
  int failures = 0, printed = 0;
  for (const auto& [n, run] : criteria()) {
    if (number && n != number) continue;
    for (const Line& line : run()) {
      if (!clause.empty() && line.id != clause) continue;
      ++printed;
      failures += !line.pass;
      std::printf("%s  criterion %-4s %s\n", line.pass ? "PASS" : "FAIL",
                  line.id.c_str(), line.detail.c_str());
    }
  }
  if (printed == 0) {
    std::fprintf(stderr, "no clause matched %s\n", filter.c_str());
    return 2;
  }
  return failures == 0 ? 0 : 1;
}
