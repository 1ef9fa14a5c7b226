#include "intentroute/validator.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include "intentroute/router.h"

namespace intentroute {
namespace {

using nlohmann::json;

constexpr std::array<std::string_view, kPassCount> kPassNames = {
    "schema",   "entity",   "type",         "value",
    "conflict", "physical", "reachability", "certification"};

std::string hpath(std::size_t i) {
  return "hard_constraints[" + std::to_string(i) + "]";
}
std::string spath(std::size_t i) {
  return "soft_constraints[" + std::to_string(i) + "]";
}
std::string fpath(std::size_t i) {
  return "flow_selectors[" + std::to_string(i) + "]";
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

std::string fmt_ms(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

bool is_integral(double v) { return std::isfinite(v) && std::floor(v) == v; }

ValidationReport fresh_report() {
  ValidationReport r;
  for (int i = 0; i < kPassCount; ++i) {
    r.passes[i].pass = i + 1;
    r.passes[i].name = std::string(kPassNames[i]);
  }
  return r;
}

void finalize_statuses(ValidationReport& r) {
  r.errors.clear();
  r.warnings.clear();
  for (auto& pr : r.passes) {
    if (pr.status != PassStatus::kSkipped) {
      pr.status = !pr.errors.empty()     ? PassStatus::kError
                  : !pr.warnings.empty() ? PassStatus::kWarning
                                         : PassStatus::kOk;
    }
    r.errors.insert(r.errors.end(), pr.errors.begin(), pr.errors.end());
    r.warnings.insert(r.warnings.end(), pr.warnings.begin(), pr.warnings.end());
  }
}

bool soft_target_allowed(SoftType t, TargetKind k) {
  switch (t) {
    case SoftType::kMaxUtilization:
      return k == TargetKind::kEdges || k == TargetKind::kEdge ||
             k == TargetKind::kNode || k == TargetKind::kRegion;
    case SoftType::kMinimizeLatency:
    case SoftType::kMinimizeHops:
    case SoftType::kPathStability:
      return k == TargetKind::kFlowSelector || k == TargetKind::kEdges;
    case SoftType::kLoadBalance:
      return k == TargetKind::kEdges || k == TargetKind::kRegion ||
             k == TargetKind::kPlane || k == TargetKind::kNode;
  }
  return false;
}

class Checker {
 public:
  Checker(const ConstraintProgram& p, const TopologySnapshot& s,
          const EventSet& events, const ValidateOptions& opt,
          ValidationReport& r)
      : p_(p), s_(s), events_(events), opt_(opt), r_(r),
        hard_ok_(p.hard_constraints.size(), true),
        soft_ok_(p.soft_constraints.size(), true),
        sel_ok_(p.flow_selectors.size(), true) {}

  void run() {
    pass1();
    pass2();
    pass3();
    pass4();
    const ConstraintProgram clean = sanitized();
    pass5(clean);
    GroundingResult g;
    try {
      g = ground(clean, s_, events_);
    } catch (const std::exception& e) {
      error(6, std::string("$: grounding failed: ") + e.what());
      g = empty_grounding(s_);
    }
    pass6(g);
    pass7(clean, g);
    pass8(clean, g);
  }

 private:
  const ConstraintProgram& p_;
  const TopologySnapshot& s_;
  const EventSet& events_;
  const ValidateOptions& opt_;
  ValidationReport& r_;
  std::vector<bool> hard_ok_;
  std::vector<bool> soft_ok_;
  std::vector<bool> sel_ok_;

  void error(int pass, std::string msg) {
    r_.passes[pass - 1].errors.push_back(std::move(msg));
  }
  void warning(int pass, std::string msg) {
    r_.passes[pass - 1].warnings.push_back(std::move(msg));
  }
  bool has_errors_through(int last) const {
    for (int i = 0; i < last; ++i)
      if (!r_.passes[i].errors.empty()) return true;
    return false;
  }

  void pass1() {
    if (p_.intent_id.empty()) error(1, "intent_id: expected a non-empty string");
    for (std::size_t i = 0; i < p_.hard_constraints.size(); ++i) {
      const auto& h = p_.hard_constraints[i];
      if (hard_type_needs_value(h.type) && !h.value) {
        error(1, hpath(i) + ".value: missing required field for " +
                     std::string(to_string(h.type)));
        hard_ok_[i] = false;
      }
    }
    std::set<std::string> seen;
    for (std::size_t i = 0; i < p_.event_conditions.size(); ++i) {
      if (!seen.insert(p_.event_conditions[i]).second)
        error(1, "event_conditions[" + std::to_string(i) +
                     "]: duplicate event \"" + p_.event_conditions[i] + "\"");
    }
  }

  // Existence of whatever the target names, independent of its kind.
  bool check_target_entity(const std::string& path, const Target& t) {
    const int n = s_.node_count();
    switch (t.kind) {
      case TargetKind::kNode:
        if (!s_.valid_node(t.id)) {
          error(2, path + ": node " + std::to_string(t.id) +
                       " out of range [0, " + std::to_string(n) + ")");
          return false;
        }
        return true;
      case TargetKind::kPlane:
        if (t.id < 0 || t.id >= s_.config().planes) {
          error(2, path + ": plane " + std::to_string(t.id) +
                       " out of range [0, " +
                       std::to_string(s_.config().planes) + ")");
          return false;
        }
        return true;
      case TargetKind::kEdge:
        if (!s_.valid_node(t.id) || !s_.valid_node(t.id2)) {
          error(2, path + ": edge endpoint out of range in " + t.to_string());
          return false;
        }
        if (!s_.find_edge(static_cast<NodeId>(t.id),
                          static_cast<NodeId>(t.id2))) {
          error(2, path + ": no ISL between nodes " + std::to_string(t.id) +
                       " and " + std::to_string(t.id2));
          return false;
        }
        return true;
      case TargetKind::kFlowSelector:
        if (t.id < 0 ||
            t.id >= static_cast<long long>(p_.flow_selectors.size())) {
          error(2, path + ": " + t.to_string() + " does not name a flow " +
                       "selector (program has " +
                       std::to_string(p_.flow_selectors.size()) + ")");
          return false;
        }
        return true;
      case TargetKind::kRegion:
        if (!s_.regions().contains(t.name)) {
          error(2, path + ": unknown region \"" + t.name + "\"");
          return false;
        }
        return true;
      case TargetKind::kEdges:
        return true;
    }
    return true;
  }

  void pass2() {
    const int n = s_.node_count();
    const int planes = s_.config().planes;
    for (std::size_t i = 0; i < p_.flow_selectors.size(); ++i) {
      const auto& f = p_.flow_selectors[i];
      const std::string path = fpath(i);
      auto bad = [&](const std::string& field, const std::string& msg) {
        error(2, path + "." + field + ": " + msg);
        sel_ok_[i] = false;
      };
      if (f.traffic_class && !is_traffic_class(*f.traffic_class))
        bad("traffic_class", "unknown traffic class \"" + *f.traffic_class + "\"");
      for (auto [field, region] : {std::pair{"src_region", &f.src_region},
                                   std::pair{"dst_region", &f.dst_region}}) {
        if (*region && !s_.regions().contains(**region))
          bad(field, "unknown region \"" + **region + "\"");
      }
      for (auto [field, node] : {std::pair{"src_node", &f.src_node},
                                 std::pair{"dst_node", &f.dst_node}}) {
        if (*node && !s_.valid_node(**node))
          bad(field, "node " + std::to_string(**node) + " out of range [0, " +
                         std::to_string(n) + ")");
      }
      for (auto [field, plane] : {std::pair{"src_plane", &f.src_plane},
                                  std::pair{"dst_plane", &f.dst_plane}}) {
        if (*plane && (**plane < 0 || **plane >= planes))
          bad(field, "plane " + std::to_string(**plane) + " out of range [0, " +
                         std::to_string(planes) + ")");
      }
    }

    for (std::size_t i = 0; i < p_.event_conditions.size(); ++i) {
      if (!is_event(p_.event_conditions[i]))
        error(2, "event_conditions[" + std::to_string(i) +
                     "]: unknown event \"" + p_.event_conditions[i] + "\"");
    }

    for (std::size_t i = 0; i < p_.hard_constraints.size(); ++i) {
      const auto& h = p_.hard_constraints[i];
      if (!check_target_entity(hpath(i) + ".target", h.target))
        hard_ok_[i] = false;
      if (h.condition) {
        const auto& ev = *h.condition;
        if (!is_event(ev)) {
          error(2, hpath(i) + ".condition: unknown event \"" + ev + "\"");
          hard_ok_[i] = false;
        } else if (std::find(p_.event_conditions.begin(),
                             p_.event_conditions.end(),
                             ev) == p_.event_conditions.end()) {
          error(2, hpath(i) + ".condition: event \"" + ev +
                       "\" is not declared in event_conditions");
          hard_ok_[i] = false;
        }
      }
    }
    for (std::size_t i = 0; i < p_.soft_constraints.size(); ++i) {
      if (!check_target_entity(spath(i) + ".target",
                               p_.soft_constraints[i].target))
        soft_ok_[i] = false;
    }
  }

  void pass3() {
    for (std::size_t i = 0; i < p_.hard_constraints.size(); ++i) {
      const auto& h = p_.hard_constraints[i];
      const TargetKind want = required_target_kind(h.type);
      if (h.target.kind != want) {
        error(3, hpath(i) + ".target: " + std::string(to_string(h.type)) +
                     " requires a " + std::string(to_string(want)) +
                     " target, got " + h.target.to_string());
        hard_ok_[i] = false;
      }
    }
    for (std::size_t i = 0; i < p_.soft_constraints.size(); ++i) {
      const auto& sc = p_.soft_constraints[i];
      if (!soft_target_allowed(sc.type, sc.target.kind)) {
        error(3, spath(i) + ".target: " + std::string(to_string(sc.type)) +
                     " cannot target " + sc.target.to_string());
        soft_ok_[i] = false;
      }
    }
    for (std::size_t i = 0; i < p_.flow_selectors.size(); ++i) {
      const auto& f = p_.flow_selectors[i];
      const int src_kinds = f.src_node.has_value() + f.src_plane.has_value() +
                            f.src_region.has_value();
      const int dst_kinds = f.dst_node.has_value() + f.dst_plane.has_value() +
                            f.dst_region.has_value();
      if (src_kinds > 1) {
        error(3, fpath(i) + ": source endpoint must be one of src_node, " +
                     "src_plane, src_region");
        sel_ok_[i] = false;
      }
      if (dst_kinds > 1) {
        error(3, fpath(i) + ": destination endpoint must be one of dst_node, " +
                     "dst_plane, dst_region");
        sel_ok_[i] = false;
      }
    }
  }

  void pass4() {
    for (std::size_t i = 0; i < p_.hard_constraints.size(); ++i) {
      const auto& h = p_.hard_constraints[i];
      if (!h.value) continue;
      const double v = *h.value;
      const std::string path = hpath(i) + ".value";
      auto bad = [&](const std::string& msg) {
        error(4, path + ": " + msg);
        hard_ok_[i] = false;
      };
      if (!std::isfinite(v)) {
        bad("value must be finite");
        continue;
      }
      switch (h.type) {
        case HardType::kAvoidLatitude:
          if (v < -90.0 || v > 90.0)
            bad("latitude " + fmt(v) + " outside [-90, 90]");
          break;
        case HardType::kMaxLatencyMs:
          if (!(v > 0.0)) bad("latency " + fmt(v) + " ms must be positive");
          break;
        case HardType::kMaxHops:
        case HardType::kKEdgeDisjoint:
          if (!is_integral(v) || v < 1.0)
            bad(std::string(to_string(h.type)) + " " + fmt(v) +
                " must be an integer >= 1");
          else if (v > 1e6)
            bad(std::string(to_string(h.type)) + " " + fmt(v) + " too large");
          break;
        case HardType::kMinCapReserve:
          if (!(v > 0.0 && v <= 1.0))
            bad("reserve fraction " + fmt(v) + " outside (0, 1]");
          break;
        default:
          break;
      }
    }
    for (std::size_t i = 0; i < p_.soft_constraints.size(); ++i) {
      const auto& sc = p_.soft_constraints[i];
      auto bad = [&](const std::string& field, const std::string& msg) {
        error(4, spath(i) + "." + field + ": " + msg);
        soft_ok_[i] = false;
      };
      if (!std::isfinite(sc.value)) {
        bad("value", "value must be finite");
      } else if (sc.type == SoftType::kMaxUtilization) {
        if (!(sc.value > 0.0 && sc.value <= 1.0))
          bad("value", "utilization " + fmt(sc.value) + " outside (0, 1]");
      } else if (sc.value < 0.0) {
        bad("value", "value " + fmt(sc.value) + " must be >= 0");
      }
      if (!std::isfinite(sc.penalty_weight) || sc.penalty_weight < 0.0)
        bad("penalty_weight",
            "penalty weight " + fmt(sc.penalty_weight) + " must be >= 0");
    }
    for (const auto& [k, v] : p_.objective_weights) {
      if (!std::isfinite(v) || v < 0.0)
        error(4, "objective_weights." + k + ": weight " + fmt(v) +
                     " must be >= 0");
    }
  }

  // Constraints and selectors that survived passes 1-4. Flow constraints that
  // point at a broken selector are dropped with it.
  ConstraintProgram sanitized() const {
    ConstraintProgram c = p_;
    c.hard_constraints.clear();
    c.soft_constraints.clear();
    auto flow_ok = [&](const Target& t) {
      return t.kind != TargetKind::kFlowSelector || sel_ok_[t.id];
    };
    for (std::size_t i = 0; i < p_.hard_constraints.size(); ++i)
      if (hard_ok_[i] && flow_ok(p_.hard_constraints[i].target))
        c.hard_constraints.push_back(p_.hard_constraints[i]);
    for (std::size_t i = 0; i < p_.soft_constraints.size(); ++i)
      if (soft_ok_[i] && flow_ok(p_.soft_constraints[i].target))
        c.soft_constraints.push_back(p_.soft_constraints[i]);
    return c;
  }

  void pass5(const ConstraintProgram&) {
    const int S = s_.config().sats_per_plane;
    std::map<NodeId, std::size_t> node_off;  // node -> disabling constraint
    std::map<int, std::size_t> plane_off;
    for (std::size_t i = 0; i < p_.hard_constraints.size(); ++i) {
      if (!hard_ok_[i]) continue;
      const auto& h = p_.hard_constraints[i];
      if (h.type == HardType::kDisableNode)
        node_off.try_emplace(static_cast<NodeId>(h.target.id), i);
      else if (h.type == HardType::kDisablePlane)
        plane_off.try_emplace(static_cast<int>(h.target.id), i);
    }
    auto disabled_by = [&](NodeId n) -> std::optional<std::size_t> {
      if (auto it = node_off.find(n); it != node_off.end()) return it->second;
      if (auto it = plane_off.find(n / S); it != plane_off.end())
        return it->second;
      return std::nullopt;
    };

    for (std::size_t i = 0; i < p_.flow_selectors.size(); ++i) {
      if (!sel_ok_[i]) continue;
      const auto& f = p_.flow_selectors[i];
      for (auto [field, node] : {std::pair{"src_node", &f.src_node},
                                 std::pair{"dst_node", &f.dst_node}}) {
        if (!*node) continue;
        if (auto by = disabled_by(static_cast<NodeId>(**node)))
          error(5, fpath(i) + "." + field + ": node " + std::to_string(**node) +
                       " is used as a flow endpoint but disabled by " +
                       hpath(*by));
      }
      for (auto [field, plane] : {std::pair{"src_plane", &f.src_plane},
                                  std::pair{"dst_plane", &f.dst_plane}}) {
        if (!*plane) continue;
        if (auto it = plane_off.find(static_cast<int>(**plane));
            it != plane_off.end())
          error(5, fpath(i) + "." + field + ": plane " +
                       std::to_string(**plane) +
                       " is used as a flow endpoint but disabled by " +
                       hpath(it->second));
      }
      for (auto [field, region] : {std::pair{"src_region", &f.src_region},
                                   std::pair{"dst_region", &f.dst_region}}) {
        if (!*region) continue;
        auto nodes = region_nodes(s_, **region);
        if (nodes.empty()) continue;
        if (std::all_of(nodes.begin(), nodes.end(),
                        [&](NodeId n) { return disabled_by(n).has_value(); }))
          error(5, fpath(i) + "." + field + ": every satellite in region \"" +
                       **region + "\" is disabled by this program");
      }
    }

    // Duplicate bounds on the same flow under the same condition.
    auto selector_key = [&](long long idx) {
      const auto& f = p_.flow_selectors[idx];
      ConstraintProgram tmp;
      tmp.flow_selectors = {f};
      return serialize_program(tmp);
    };
    for (HardType type : {HardType::kMaxLatencyMs, HardType::kMaxHops}) {
      std::map<std::string, std::size_t> first;
      for (std::size_t i = 0; i < p_.hard_constraints.size(); ++i) {
        const auto& h = p_.hard_constraints[i];
        if (!hard_ok_[i] || h.type != type || !sel_ok_[h.target.id]) continue;
        const std::string key =
            selector_key(h.target.id) + "|" + h.condition.value_or("");
        auto [it, fresh] = first.try_emplace(key, i);
        if (fresh) continue;
        const auto& prev = p_.hard_constraints[it->second];
        if (*prev.value != *h.value) {
          error(5, hpath(i) + ".value: conflicting " +
                       std::string(to_string(type)) + " bounds " +
                       fmt(*prev.value) + " and " + fmt(*h.value) +
                       " on the same flow (" + hpath(it->second) + ")");
        } else {
          warning(5, hpath(i) + ": duplicate " + std::string(to_string(type)) +
                         " bound " + fmt(*h.value) + " (" + hpath(it->second) +
                         ")");
        }
      }
    }
  }

  void pass6(const GroundingResult& g) {
    r_.min_edge_delay_ms = s_.min_edge_delay_ms();
    for (std::size_t i = 0; i < p_.hard_constraints.size(); ++i) {
      const auto& h = p_.hard_constraints[i];
      if (!hard_ok_[i] || h.type != HardType::kMaxLatencyMs) continue;
      if (*h.value < opt_.latency_floor_ms)
        error(6, hpath(i) + ".value: deadline " + fmt(*h.value) +
                     " ms is below the " + fmt(opt_.latency_floor_ms) +
                     " ms single-hop delay floor");
    }
    if (s_.edge_count() > 0) {
      const double lost =
          static_cast<double>(g.masked_edges()) / s_.edge_count();
      if (lost > opt_.edge_loss_warning)
        warning(6, "$: grounded program removes " + fmt_ms(100.0 * lost) +
                       "% of ISLs (more than " +
                       fmt(100.0 * opt_.edge_loss_warning) + "%)");
    }
  }

  void pass7(const ConstraintProgram& clean, const GroundingResult& g) {
    const int n = s_.node_count();
    if (n == 0) return;
    const double lost = static_cast<double>(g.masked_nodes()) / n;
    if (lost >= opt_.node_loss_strong_warning) {
      warning(7, "$: strong warning: " + fmt_ms(100.0 * lost) +
                     "% of nodes disabled");
    } else if (lost >= opt_.node_loss_warning) {
      warning(7, "$: " + fmt_ms(100.0 * lost) + "% of nodes disabled");
    }
    const RoutingGraph graph = constrained_graph(s_, g);
    std::vector<int> comp(n, -1);
    int components = 0;
    for (NodeId start = 0; start < n; ++start) {
      if (!graph.routable(start) || comp[start] >= 0) continue;
      std::queue<NodeId> q;
      q.push(start);
      comp[start] = components;
      while (!q.empty()) {
        NodeId v = q.front();
        q.pop();
        for (const auto& a : graph.arcs(v)) {
          if (comp[a.to] < 0) {
            comp[a.to] = components;
            q.push(a.to);
          }
        }
      }
      ++components;
    }
    if (components > 1)
      warning(7, "$: constrained graph is disconnected (" +
                     std::to_string(components) + " components)");
    for (std::size_t i = 0; i < clean.flow_selectors.size(); ++i) {
      if (!sel_ok_[i]) continue;
      const auto& f = clean.flow_selectors[i];
      for (auto [field, region] : {std::pair{"src_region", &f.src_region},
                                   std::pair{"dst_region", &f.dst_region}}) {
        if (*region && region_nodes(s_, **region).empty())
          warning(7, fpath(i) + "." + field + ": no satellite is over \"" +
                         **region + "\" in this snapshot");
      }
    }
  }

  void pass8(const ConstraintProgram& clean, const GroundingResult& g) {
    PassResult& pr = r_.passes[7];
    if (has_errors_through(6)) {
      pr.status = PassStatus::kSkipped;
      r_.outcome = Outcome::kReject;
      return;
    }
    if (!opt_.certify) {
      pr.status = PassStatus::kSkipped;
      r_.outcome = Outcome::kAbstain;
      return;
    }
    if (clean.flow_selectors.empty()) {
      pr.warnings.push_back("$: no flow selectors; topology-only program");
      r_.outcome = Outcome::kAbstain;
      return;
    }
    r_.certificates = certify_feasibility(clean, s_, g, opt_);
    bool any_reject = false;
    bool any_abstain = false;
    for (const auto& c : r_.certificates) {
      const std::string where = fpath(c.flow) + " [" +
                                std::string(to_string(c.fragment)) + "]: ";
      if (c.decision == Outcome::kReject) {
        any_reject = true;
        pr.errors.push_back(where + c.note);
      } else if (c.decision == Outcome::kAbstain) {
        any_abstain = true;
        pr.warnings.push_back(where + "abstain: " + c.note);
      }
    }
    if (any_reject) {
      r_.outcome = Outcome::kReject;
      return;
    }
    if (any_abstain) {
      r_.outcome = Outcome::kAbstain;
      return;
    }
    Witness w;
    w.mode = opt_.mode;
    for (const auto& c : r_.certificates) w.flows.push_back(c.witness);
    const WitnessCheck check = verify_witness(w, clean, s_, g, opt_.max_pairs);
    if (!check.ok) {
      // Defensive: never accept on a witness the checker disputes.
      for (const auto& v : check.violations)
        pr.warnings.push_back("$: witness check failed: " + v);
      r_.outcome = Outcome::kAbstain;
      return;
    }
    r_.witness = std::move(w);
    r_.outcome = Outcome::kAccept;
  }
};

struct EndpointSet {
  std::vector<NodeId> nodes;
  bool explicit_node = false;
};

EndpointSet resolve_side(const TopologySnapshot& s,
                         const std::optional<long long>& node,
                         const std::optional<long long>& plane,
                         const std::optional<std::string>& region) {
  EndpointSet e;
  if (node) {
    e.nodes = {static_cast<NodeId>(*node)};
    e.explicit_node = true;
  } else if (plane) {
    const int S = s.config().sats_per_plane;
    for (int k = 0; k < S; ++k)
      e.nodes.push_back(static_cast<NodeId>(*plane * S + k));
  } else if (region) {
    e.nodes = region_nodes(s, *region);
  } else {
    for (NodeId n = 0; n < s.node_count(); ++n) e.nodes.push_back(n);
  }
  return e;
}

struct Demand {
  std::optional<double> deadline;
  std::optional<int> hops;
  std::optional<int> k;
  std::optional<double> reserve;
};

Demand demand_of(const GroundingResult& g, int flow) {
  Demand d;
  if (auto it = g.deadlines.find(flow); it != g.deadlines.end())
    d.deadline = it->second;
  if (auto it = g.hop_limits.find(flow); it != g.hop_limits.end())
    d.hops = it->second;
  if (auto it = g.disjoint_demands.find(flow); it != g.disjoint_demands.end())
    d.k = it->second;
  if (auto it = g.cap_reserves.find(flow); it != g.cap_reserves.end())
    d.reserve = it->second;
  return d;
}

Fragment select_fragment(const Demand& d, std::string* why) {
  if (d.reserve) {
    *why = "min_cap_reserve is outside the certified fragments";
    return Fragment::kNone;
  }
  if (d.k && (d.deadline || d.hops)) {
    *why = "k_edge_disjoint combined with latency or hop bounds is outside "
           "the certified fragments";
    return Fragment::kNone;
  }
  if (d.k) return Fragment::kF5;
  if (d.deadline && d.hops) return Fragment::kF4;
  if (d.deadline) return Fragment::kF2;
  if (d.hops) return Fragment::kF3;
  return Fragment::kF1;
}

WitnessPath to_witness(const Path& p) { return {p.nodes, p.delay_ms}; }

// Per-source search state reused across destinations.
class SourceSearch {
 public:
  SourceSearch(const RoutingGraph& g, NodeId src, Fragment f, const Demand& d)
      : g_(g), src_(src), f_(f), d_(d) {
    switch (f) {
      case Fragment::kF1:
      case Fragment::kF3:
        hop_ = hop_tree(g, src);
        break;
      case Fragment::kF2:
        sp_ = shortest_path_tree(g, src);
        break;
      case Fragment::kF4:
        layered_ = hop_layered_tree(g, src, *d.hops);
        break;
      default:
        break;
    }
  }

  // Returns a witness pair or fills *why and returns nullopt.
  std::optional<PairWitness> certify(NodeId dst, std::string* why) const {
    PairWitness pw{src_, dst, {}};
    const std::string od =
        std::to_string(src_) + " -> " + std::to_string(dst);
    switch (f_) {
      case Fragment::kF1: {
        auto path = hop_->path_to(dst);
        if (!path) {
          *why = "no path " + od + " in the constrained graph";
          return std::nullopt;
        }
        pw.paths.push_back(to_witness(*path));
        return pw;
      }
      case Fragment::kF2: {
        auto path = sp_->path_to(dst);
        if (!path) {
          *why = "no path " + od + " in the constrained graph";
          return std::nullopt;
        }
        if (path->delay_ms > *d_.deadline) {
          *why = "minimum delay " + od + " is " + fmt_ms(path->delay_ms) +
                 " ms, above the " + fmt(*d_.deadline) + " ms deadline";
          return std::nullopt;
        }
        pw.paths.push_back(to_witness(*path));
        return pw;
      }
      case Fragment::kF3: {
        auto path = hop_->path_to(dst);
        if (!path) {
          *why = "no path " + od + " in the constrained graph";
          return std::nullopt;
        }
        if (path->hops() > *d_.hops) {
          *why = "minimum hop count " + od + " is " +
                 std::to_string(path->hops()) + ", above the limit of " +
                 std::to_string(*d_.hops);
          return std::nullopt;
        }
        pw.paths.push_back(to_witness(*path));
        return pw;
      }
      case Fragment::kF4: {
        auto path = layered_->path_to(dst);
        if (!path) {
          *why = "no path " + od + " within " + std::to_string(*d_.hops) +
                 " hops";
          return std::nullopt;
        }
        if (path->delay_ms > *d_.deadline) {
          *why = "minimum delay " + od + " within " +
                 std::to_string(*d_.hops) + " hops is " +
                 fmt_ms(path->delay_ms) + " ms, above the " +
                 fmt(*d_.deadline) + " ms deadline";
          return std::nullopt;
        }
        pw.paths.push_back(to_witness(*path));
        return pw;
      }
      case Fragment::kF5: {
        auto paths = edge_disjoint_paths(g_, src_, dst, *d_.k);
        if (!paths) {
          *why = "only " +
                 std::to_string(max_edge_disjoint(g_, src_, dst, *d_.k)) +
                 " edge-disjoint paths " + od + ", " +
                 std::to_string(*d_.k) + " required";
          return std::nullopt;
        }
        for (const auto& p : *paths) pw.paths.push_back(to_witness(p));
        return pw;
      }
      case Fragment::kNone:
        break;
    }
    *why = "no fragment";
    return std::nullopt;
  }

 private:
  const RoutingGraph& g_;
  NodeId src_;
  Fragment f_;
  Demand d_;
  std::optional<HopTree> hop_;
  std::optional<ShortestPathTree> sp_;
  std::optional<HopLayeredTree> layered_;
};

FlowCertificate certify_flow(const ConstraintProgram& p, int flow,
                             const TopologySnapshot& s, const RoutingGraph& g,
                             const GroundingResult& grounding,
                             const ValidateOptions& opt) {
  FlowCertificate c;
  c.flow = flow;
  c.witness.flow = flow;
  const Demand d = demand_of(grounding, flow);
  std::string why;
  c.fragment = select_fragment(d, &why);
  c.witness.fragment = c.fragment;
  if (c.fragment == Fragment::kNone) {
    c.decision = Outcome::kAbstain;
    c.note = why;
    return c;
  }

  const FlowSelector& f = p.flow_selectors[flow];
  const EndpointSet src = resolve_side(s, f.src_node, f.src_plane, f.src_region);
  const EndpointSet dst = resolve_side(s, f.dst_node, f.dst_plane, f.dst_region);
  const bool allow_self = src.explicit_node && dst.explicit_node;
  long long pairs = 0;
  for (NodeId a : src.nodes)
    for (NodeId b : dst.nodes)
      pairs += (a != b || allow_self);
  if (pairs == 0) {
    c.decision = Outcome::kAbstain;
    c.note = "endpoint sets resolve to no node pair in this snapshot";
    return c;
  }
  if (pairs > opt.max_pairs) {
    c.decision = Outcome::kAbstain;
    c.note = "endpoint sets resolve to " + std::to_string(pairs) +
             " node pairs (cap " + std::to_string(opt.max_pairs) + ")";
    return c;
  }

  const bool universal = opt.mode == EndpointMode::kUniversal;
  long long checked = 0;
  std::string first_failure;
  for (NodeId a : src.nodes) {
    std::optional<SourceSearch> search;
    for (NodeId b : dst.nodes) {
      if (a == b && !allow_self) continue;
      ++checked;
      std::string fail;
      std::optional<PairWitness> pw;
      if (!g.routable(a)) {
        fail = "endpoint node " + std::to_string(a) + " is disabled";
      } else if (!g.routable(b)) {
        fail = "endpoint node " + std::to_string(b) + " is disabled";
      } else if (a == b) {
        pw = PairWitness{a, b, {}};
        const int copies = c.fragment == Fragment::kF5 ? *d.k : 1;
        for (int i = 0; i < copies; ++i) pw->paths.push_back({{a}, 0.0});
      } else {
        if (!search) search.emplace(g, a, c.fragment, d);
        pw = search->certify(b, &fail);
      }
      if (pw) {
        c.witness.pairs.push_back(std::move(*pw));
        if (!universal) {
          c.decision = Outcome::kAccept;
          c.note = "pair " + std::to_string(a) + " -> " + std::to_string(b) +
                   " certified";
          return c;
        }
      } else if (universal) {
        c.decision = Outcome::kReject;
        c.note = fail;
        c.witness.pairs.clear();
        return c;
      } else if (first_failure.empty()) {
        first_failure = fail;
      }
    }
  }
  if (universal) {
    c.decision = Outcome::kAccept;
    c.note = std::to_string(checked) + " pair(s) certified";
  } else {
    c.decision = Outcome::kReject;
    c.note = "no endpoint pair admits a compliant path (" +
             std::to_string(checked) + " checked; first: " + first_failure +
             ")";
  }
  return c;
}

json witness_json(const FlowWitness& fw) {
  json pairs = json::array();
  for (const auto& pw : fw.pairs) {
    json paths = json::array();
    for (const auto& wp : pw.paths)
      paths.push_back(
          {{"nodes", wp.nodes}, {"delay_ms", wp.delay_ms}, {"hops", wp.hops()}});
    pairs.push_back({{"src", pw.src}, {"dst", pw.dst}, {"paths", paths}});
  }
  return {{"flow", fw.flow},
          {"fragment", to_string(fw.fragment)},
          {"pairs", pairs}};
}

}  // namespace

std::string_view to_string(PassStatus s) {
  switch (s) {
    case PassStatus::kOk: return "ok";
    case PassStatus::kWarning: return "warning";
    case PassStatus::kError: return "error";
    case PassStatus::kSkipped: return "skipped";
  }
  return "?";
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::kAccept: return "accept";
    case Outcome::kReject: return "reject";
    case Outcome::kAbstain: return "abstain";
  }
  return "?";
}

std::string_view to_string(EndpointMode m) {
  return m == EndpointMode::kUniversal ? "universal" : "existential";
}

std::optional<EndpointMode> endpoint_mode_from_string(std::string_view s) {
  if (s == "universal") return EndpointMode::kUniversal;
  if (s == "existential") return EndpointMode::kExistential;
  return std::nullopt;
}

std::string_view to_string(Fragment f) {
  switch (f) {
    case Fragment::kNone: return "none";
    case Fragment::kF1: return "F1";
    case Fragment::kF2: return "F2";
    case Fragment::kF3: return "F3";
    case Fragment::kF4: return "F4";
    case Fragment::kF5: return "F5";
  }
  return "?";
}

std::string_view to_string(ResolutionKind k) {
  switch (k) {
    case ResolutionKind::kRoutedAsIs: return "routed_as_is";
    case ResolutionKind::kRelaxed: return "relaxed";
    case ResolutionKind::kUnsatCore: return "unsat_core";
    case ResolutionKind::kRefusal: return "refusal";
  }
  return "?";
}

std::vector<std::string> ValidationReport::errors_through(int last) const {
  std::vector<std::string> out;
  for (int i = 0; i < std::min(last, kPassCount); ++i)
    out.insert(out.end(), passes[i].errors.begin(), passes[i].errors.end());
  return out;
}

bool ValidationReport::clean_through(int last) const {
  for (int i = 0; i < std::min(last, kPassCount); ++i)
    if (!passes[i].errors.empty()) return false;
  return true;
}

json ValidationReport::to_json() const {
  json j;
  j["outcome"] = to_string(outcome);
  j["passes"] = json::array();
  for (const auto& pr : passes) {
    j["passes"].push_back({{"pass", pr.pass},
                           {"name", pr.name},
                           {"status", to_string(pr.status)},
                           {"errors", pr.errors},
                           {"warnings", pr.warnings}});
  }
  j["errors"] = errors;
  j["warnings"] = warnings;
  j["certificates"] = json::array();
  for (const auto& c : certificates) {
    j["certificates"].push_back({{"flow", c.flow},
                                 {"fragment", to_string(c.fragment)},
                                 {"decision", to_string(c.decision)},
                                 {"note", c.note}});
  }
  if (witness) {
    json w = {{"mode", to_string(witness->mode)}, {"flows", json::array()}};
    for (const auto& fw : witness->flows) w["flows"].push_back(witness_json(fw));
    j["witness"] = w;
  } else {
    j["witness"] = nullptr;
  }
  j["unsat_core"] = unsat_core ? json(*unsat_core) : json(nullptr);
  j["min_edge_delay_ms"] = min_edge_delay_ms;
  j["elapsed_ms"] = elapsed_ms;
  return j;
}

ValidationReport validate(const ConstraintProgram& p,
                          const TopologySnapshot& snapshot,
                          const EventSet& active_events,
                          const ValidateOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  ValidationReport r = fresh_report();
  Checker(p, snapshot, active_events, options, r).run();
  finalize_statuses(r);
  r.elapsed_ms = std::chrono::duration<double, std::milli>(
                     std::chrono::steady_clock::now() - start)
                     .count();
  return r;
}

ValidationReport validate_text(std::string_view text,
                               const TopologySnapshot& snapshot,
                               const EventSet& active_events,
                               const ValidateOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  ParseResult parsed = parse_program(text);
  if (!parsed.ok()) {
    ValidationReport r = fresh_report();
    r.passes[0].errors = parsed.errors;
    for (int i = 1; i < kPassCount; ++i)
      r.passes[i].status = PassStatus::kSkipped;
    r.outcome = Outcome::kReject;
    finalize_statuses(r);
    r.elapsed_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - start)
                       .count();
    return r;
  }
  ValidationReport r = validate(*parsed.program, snapshot, active_events,
                                options);
  r.elapsed_ms = std::chrono::duration<double, std::milli>(
                     std::chrono::steady_clock::now() - start)
                     .count();
  return r;
}

std::vector<FlowCertificate> certify_feasibility(
    const ConstraintProgram& p, const TopologySnapshot& snapshot,
    const GroundingResult& grounding, const ValidateOptions& options) {
  const RoutingGraph g = constrained_graph(snapshot, grounding);
  std::vector<FlowCertificate> out;
  for (int i = 0; i < static_cast<int>(p.flow_selectors.size()); ++i)
    out.push_back(certify_flow(p, i, snapshot, g, grounding, options));
  return out;
}

WitnessCheck verify_witness(const Witness& w, const ConstraintProgram& p,
                            const TopologySnapshot& s,
                            const GroundingResult& g, int max_pairs) {
  WitnessCheck out;
  auto fail = [&](std::string msg) {
    out.ok = false;
    out.violations.push_back(std::move(msg));
  };
  std::vector<int> seen(p.flow_selectors.size(), 0);

  for (const auto& fw : w.flows) {
    if (fw.flow < 0 || fw.flow >= static_cast<int>(p.flow_selectors.size())) {
      fail("witness names unknown flow " + std::to_string(fw.flow));
      continue;
    }
    ++seen[fw.flow];
    const std::string tag = "flow " + std::to_string(fw.flow) + ": ";
    const FlowSelector& f = p.flow_selectors[fw.flow];

    std::optional<double> deadline;
    std::optional<int> hop_limit;
    std::optional<int> k;
    if (auto it = g.deadlines.find(fw.flow); it != g.deadlines.end())
      deadline = it->second;
    if (auto it = g.hop_limits.find(fw.flow); it != g.hop_limits.end())
      hop_limit = it->second;
    if (auto it = g.disjoint_demands.find(fw.flow);
        it != g.disjoint_demands.end())
      k = it->second;
    if (g.cap_reserves.contains(fw.flow)) {
      fail(tag + "min_cap_reserve demands cannot be witnessed");
      continue;
    }
    if (k && (deadline || hop_limit)) {
      fail(tag + "mixed disjoint and bounded demands cannot be witnessed");
      continue;
    }
    const Fragment expected = k                      ? Fragment::kF5
                              : deadline && hop_limit ? Fragment::kF4
                              : deadline             ? Fragment::kF2
                              : hop_limit            ? Fragment::kF3
                                                     : Fragment::kF1;
    if (fw.fragment != expected)
      fail(tag + "fragment " + std::string(to_string(fw.fragment)) +
           " does not match the demand (" + std::string(to_string(expected)) +
           ")");
    if (fw.pairs.empty()) fail(tag + "no witnessed pair");

    std::set<std::pair<NodeId, NodeId>> witnessed;
    for (const auto& pw : fw.pairs) {
      const std::string ptag = tag + std::to_string(pw.src) + " -> " +
                               std::to_string(pw.dst) + ": ";
      if (!s.valid_node(pw.src) || !s.valid_node(pw.dst)) {
        fail(ptag + "endpoint out of range");
        continue;
      }
      if (!witnessed.insert({pw.src, pw.dst}).second)
        fail(ptag + "pair witnessed twice");
      bool matches = false;
      try {
        matches = selector_matches(f, pw.src, pw.dst, f.traffic_class, s);
      } catch (const EntityError& e) {
        fail(ptag + e.what());
      }
      if (!matches) fail(ptag + "pair does not match the flow selector");

      const std::size_t want = k ? static_cast<std::size_t>(*k) : 1;
      if (pw.paths.size() < want)
        fail(ptag + std::to_string(pw.paths.size()) + " path(s), " +
             std::to_string(want) + " required");

      std::vector<std::set<EdgeId>> used;
      for (std::size_t i = 0; i < pw.paths.size(); ++i) {
        const auto& wp = pw.paths[i];
        if (wp.nodes.empty() || wp.nodes.front() != pw.src ||
            wp.nodes.back() != pw.dst) {
          fail(ptag + "path " + std::to_string(i) +
               " does not join the pair's endpoints");
          used.emplace_back();
          continue;
        }
        for (const auto& v : check_path(wp.nodes, s, g, deadline, hop_limit))
          fail(ptag + "path " + std::to_string(i) + ": " + v);
        double delay = 0.0;
        std::set<EdgeId> edges;
        for (std::size_t j = 1; j < wp.nodes.size(); ++j) {
          if (!s.valid_node(wp.nodes[j - 1]) || !s.valid_node(wp.nodes[j]))
            continue;
          if (auto e = s.find_edge(wp.nodes[j - 1], wp.nodes[j])) {
            delay += s.edge(*e).delay_ms;
            edges.insert(*e);
          }
        }
        if (std::abs(delay - wp.delay_ms) > 1e-9 * std::max(1.0, delay))
          fail(ptag + "path " + std::to_string(i) + " reports " +
               fmt(wp.delay_ms) + " ms but its edges sum to " + fmt(delay) +
               " ms");
        used.push_back(std::move(edges));
      }
      if (k) {
        for (std::size_t a = 0; a < used.size(); ++a) {
          for (std::size_t b = a + 1; b < used.size(); ++b) {
            for (EdgeId e : used[a]) {
              if (used[b].contains(e)) {
                fail(ptag + "shared edge (" + std::to_string(s.edge(e).u) +
                     "," + std::to_string(s.edge(e).v) + ") between paths " +
                     std::to_string(a) + " and " + std::to_string(b));
              }
            }
          }
        }
      }
    }

    if (w.mode == EndpointMode::kUniversal) {
      // Expected pairs: every node matching each side of the selector.
      FlowSelector src_side = f;
      src_side.dst_node.reset();
      src_side.dst_plane.reset();
      src_side.dst_region.reset();
      FlowSelector dst_side = f;
      dst_side.src_node.reset();
      dst_side.src_plane.reset();
      dst_side.src_region.reset();
      std::vector<NodeId> S, D;
      try {
        for (NodeId n = 0; n < s.node_count(); ++n) {
          if (selector_matches(src_side, n, 0, f.traffic_class, s))
            S.push_back(n);
          if (selector_matches(dst_side, 0, n, f.traffic_class, s))
            D.push_back(n);
        }
      } catch (const EntityError& e) {
        fail(tag + e.what());
      }
      const bool allow_self = f.src_node && f.dst_node;
      long long expected_pairs = 0;
      for (NodeId a : S) {
        for (NodeId b : D) {
          if (a == b && !allow_self) continue;
          ++expected_pairs;
          if (expected_pairs <= max_pairs && !witnessed.contains({a, b}))
            fail(tag + "pair " + std::to_string(a) + " -> " +
                 std::to_string(b) + " is not covered");
        }
      }
      if (expected_pairs > max_pairs)
        fail(tag + "endpoint sets exceed the pair cap");
      if (static_cast<long long>(witnessed.size()) > expected_pairs)
        fail(tag + "witness covers pairs outside the selector");
    }
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (seen[i] == 0) fail("flow " + std::to_string(i) + ": missing witness");
    if (seen[i] > 1) fail("flow " + std::to_string(i) + ": witnessed twice");
  }
  return out;
}

json Resolution::to_json() const {
  json j = {{"kind", intentroute::to_string(kind)},
            {"message", message},
            {"dropped_soft", dropped_soft},
            {"unsat_core", unsat_core},
            {"final_outcome", intentroute::to_string(final_report.outcome)}};
  j["program"] = program ? json::parse(serialize_program(*program))
                         : json(nullptr);
  return j;
}

Resolution resolve_fallback(const ConstraintProgram& p,
                            const ValidationReport& report,
                            const TopologySnapshot& snapshot,
                            const EventSet& active_events,
                            const ValidateOptions& options) {
  Resolution res;
  res.final_report = report;
  if (report.outcome != Outcome::kReject) {
    res.kind = ResolutionKind::kRoutedAsIs;
    res.program = p;
    res.message = "outcome " + std::string(to_string(report.outcome)) +
                  "; no fallback needed";
    return res;
  }

  auto refuse = [&](std::string why) {
    res.kind = ResolutionKind::kRefusal;
    res.program.reset();
    std::string msg = std::move(why);
    for (const auto& e : report.errors) msg += "\n  " + e;
    res.message = msg;
    return res;
  };

  switch (p.fallback_policy) {
    case FallbackPolicy::kRejectIfHardInfeasible:
      return refuse("refused: program is infeasible");

    case FallbackPolicy::kRelaxSoftFirst: {
      std::vector<std::size_t> order(p.soft_constraints.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) {
                         return p.soft_constraints[a].penalty_weight <
                                p.soft_constraints[b].penalty_weight;
                       });
      std::vector<bool> keep(p.soft_constraints.size(), true);
      for (std::size_t idx : order) {
        keep[idx] = false;
        res.dropped_soft.push_back(soft_constraint_key(p.soft_constraints[idx]));
        ConstraintProgram relaxed = p;
        relaxed.soft_constraints.clear();
        for (std::size_t i = 0; i < keep.size(); ++i)
          if (keep[i]) relaxed.soft_constraints.push_back(p.soft_constraints[i]);
        ValidationReport r = validate(relaxed, snapshot, active_events, options);
        if (r.outcome != Outcome::kReject) {
          res.kind = ResolutionKind::kRelaxed;
          res.program = std::move(relaxed);
          res.final_report = std::move(r);
          res.message = "relaxed " + std::to_string(res.dropped_soft.size()) +
                        " soft constraint(s)";
          return res;
        }
        res.final_report = std::move(r);
      }
      return refuse(
          "refused: still infeasible after relaxing every soft constraint; "
          "hard constraints are never relaxed");
    }

    case FallbackPolicy::kReportUnsatCore: {
      std::vector<int> core(p.hard_constraints.size());
      for (std::size_t i = 0; i < core.size(); ++i) core[i] = static_cast<int>(i);
      auto with_hard = [&](const std::vector<int>& keep) {
        ConstraintProgram q = p;
        q.hard_constraints.clear();
        for (int i : keep) q.hard_constraints.push_back(p.hard_constraints[i]);
        return q;
      };
      for (int idx : std::vector<int>(core)) {
        std::vector<int> trial;
        for (int i : core)
          if (i != idx) trial.push_back(i);
        if (validate(with_hard(trial), snapshot, active_events, options)
                .outcome == Outcome::kReject)
          core = std::move(trial);
      }
      res.kind = ResolutionKind::kUnsatCore;
      res.unsat_core = core;
      res.final_report.unsat_core = core;
      if (core.empty()) {
        res.message =
            "infeasible without any hard constraint; the cause lies in the "
            "flow selectors or program structure";
      } else {
        res.message = "minimal infeasible subset:";
        for (int i : core)
          res.message += "\n  " + hpath(i) + " " +
                         hard_constraint_key(p.hard_constraints[i]);
      }
      return res;
    }
  }
  return refuse("refused");
}

}  // namespace intentroute
