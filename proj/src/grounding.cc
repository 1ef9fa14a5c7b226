#include "intentroute/grounding.h"

#include <algorithm>
#include <cmath>

namespace intentroute {
namespace {

NodeId checked_node(const TopologySnapshot& s, long long n) {
  if (!s.valid_node(n))
    throw GroundingError("node " + std::to_string(n) + " out of range");
  return static_cast<NodeId>(n);
}

int checked_plane(const TopologySnapshot& s, long long p) {
  if (p < 0 || p >= s.config().planes)
    throw GroundingError("plane " + std::to_string(p) + " out of range");
  return static_cast<int>(p);
}

int checked_flow(const ConstraintProgram& prog, const Target& t) {
  if (t.kind != TargetKind::kFlowSelector)
    throw GroundingError("expected flow_selector target, got " +
                         t.to_string());
  if (t.id < 0 || t.id >= static_cast<long long>(prog.flow_selectors.size()))
    throw GroundingError("flow selector index out of range: " + t.to_string());
  return static_cast<int>(t.id);
}

double checked_value(const HardConstraint& h) {
  if (!h.value || !std::isfinite(*h.value))
    throw GroundingError(std::string(to_string(h.type)) + " needs a value");
  return *h.value;
}

void expect_kind(const Target& t, TargetKind k, HardType type) {
  if (t.kind != k)
    throw GroundingError(std::string(to_string(type)) + " cannot target " +
                         t.to_string());
}

// Edges selected by a soft constraint target.
std::vector<EdgeId> soft_target_edges(const TopologySnapshot& s,
                                      const Target& t) {
  std::vector<EdgeId> out;
  switch (t.kind) {
    case TargetKind::kEdges:
      for (EdgeId e = 0; e < s.edge_count(); ++e) out.push_back(e);
      break;
    case TargetKind::kEdge: {
      auto e = s.find_edge(checked_node(s, t.id), checked_node(s, t.id2));
      if (!e) throw GroundingError("no ISL " + t.to_string());
      out.push_back(*e);
      break;
    }
    case TargetKind::kNode:
      for (const auto& n : s.neighbors(checked_node(s, t.id)))
        out.push_back(n.edge);
      break;
    case TargetKind::kRegion: {
      const Region* r = s.regions().find(t.name);
      if (!r) throw GroundingError("unknown region " + t.name);
      std::vector<bool> in(s.node_count(), false);
      for (NodeId n : region_nodes(s, *r)) in[n] = true;
      for (EdgeId e = 0; e < s.edge_count(); ++e)
        if (in[s.edge(e).u] || in[s.edge(e).v]) out.push_back(e);
      break;
    }
    default:
      break;
  }
  return out;
}

}  // namespace

int GroundingResult::masked_nodes() const {
  return static_cast<int>(std::count(node_mask.begin(), node_mask.end(), false));
}

int GroundingResult::masked_edges() const {
  return static_cast<int>(std::count(edge_mask.begin(), edge_mask.end(), false));
}

bool GroundingResult::is_transit_excluded(NodeId n) const {
  return std::binary_search(transit_excluded.begin(), transit_excluded.end(), n);
}

std::vector<HardConstraint> active_constraints(const ConstraintProgram& p,
                                               const EventSet& active_events) {
  std::vector<HardConstraint> out;
  for (const auto& h : p.hard_constraints)
    if (!h.condition || active_events.contains(*h.condition)) out.push_back(h);
  return out;
}

GroundingResult empty_grounding(const TopologySnapshot& snapshot) {
  GroundingResult g;
  g.node_mask.assign(snapshot.node_count(), true);
  g.edge_mask.assign(snapshot.edge_count(), true);
  g.util_caps.assign(snapshot.edge_count(), 1.0);
  return g;
}

GroundingResult ground(const ConstraintProgram& p,
                       const TopologySnapshot& s,
                       const EventSet& active_events) {
  GroundingResult g = empty_grounding(s);
  const int S = s.config().sats_per_plane;
  std::set<NodeId> transit;

  for (const auto& h : active_constraints(p, active_events)) {
    expect_kind(h.target, required_target_kind(h.type), h.type);
    switch (h.type) {
      case HardType::kDisableNode:
        g.node_mask[checked_node(s, h.target.id)] = false;
        break;
      case HardType::kDisablePlane: {
        const int plane = checked_plane(s, h.target.id);
        for (int slot = 0; slot < S; ++slot) g.node_mask[plane * S + slot] = false;
        break;
      }
      case HardType::kDisableEdge: {
        auto e = s.find_edge(checked_node(s, h.target.id),
                             checked_node(s, h.target.id2));
        if (!e) throw GroundingError("no ISL " + h.target.to_string());
        g.edge_mask[*e] = false;
        break;
      }
      case HardType::kAvoidLatitude: {
        const double theta = checked_value(h);
        for (EdgeId e = 0; e < s.edge_count(); ++e) {
          const Isl& isl = s.edge(e);
          if (!isl.inter_plane) continue;
          if (std::abs(s.node(isl.u).latitude_deg) > theta ||
              std::abs(s.node(isl.v).latitude_deg) > theta)
            g.edge_mask[e] = false;
        }
        break;
      }
      case HardType::kAvoidRegion: {
        const Region* r = s.regions().find(h.target.name);
        if (!r) throw GroundingError("unknown region " + h.target.name);
        std::vector<bool> in(s.node_count(), false);
        for (NodeId n : region_nodes(s, *r)) in[n] = true;
        for (EdgeId e = 0; e < s.edge_count(); ++e)
          if (in[s.edge(e).u] || in[s.edge(e).v]) g.edge_mask[e] = false;
        break;
      }
      case HardType::kRerouteAway:
        transit.insert(checked_node(s, h.target.id));
        break;
      case HardType::kMaxLatencyMs: {
        const int f = checked_flow(p, h.target);
        const double v = checked_value(h);
        auto [it, fresh] = g.deadlines.emplace(f, v);
        if (!fresh) it->second = std::min(it->second, v);
        break;
      }
      case HardType::kMaxHops: {
        const int f = checked_flow(p, h.target);
        const int v = static_cast<int>(std::llround(checked_value(h)));
        auto [it, fresh] = g.hop_limits.emplace(f, v);
        if (!fresh) it->second = std::min(it->second, v);
        break;
      }
      case HardType::kKEdgeDisjoint: {
        const int f = checked_flow(p, h.target);
        const int v = static_cast<int>(std::llround(checked_value(h)));
        auto [it, fresh] = g.disjoint_demands.emplace(f, v);
        if (!fresh) it->second = std::max(it->second, v);
        break;
      }
      case HardType::kMinCapReserve: {
        const int f = checked_flow(p, h.target);
        const double v = checked_value(h);
        auto [it, fresh] = g.cap_reserves.emplace(f, v);
        if (!fresh) it->second = std::max(it->second, v);
        break;
      }
    }
  }

  for (const auto& sc : p.soft_constraints) {
    if (sc.type != SoftType::kMaxUtilization) continue;
    for (EdgeId e : soft_target_edges(s, sc.target))
      g.util_caps[e] = std::min(g.util_caps[e], sc.value);
  }

  // Masked nodes take their incident edges with them.
  for (EdgeId e = 0; e < s.edge_count(); ++e) {
    const Isl& isl = s.edge(e);
    if (!g.node_mask[isl.u] || !g.node_mask[isl.v]) g.edge_mask[e] = false;
  }
  g.transit_excluded.assign(transit.begin(), transit.end());
  return g;
}

RoutingGraph constrained_graph(const TopologySnapshot& s,
                               const GroundingResult& g) {
  RoutingGraph graph(s.node_count());
  for (NodeId n = 0; n < s.node_count(); ++n) {
    graph.set_routable(n, g.node_mask[n]);
    graph.set_transit_excluded(n, g.is_transit_excluded(n));
  }
  for (EdgeId e = 0; e < s.edge_count(); ++e) {
    if (!g.edge_mask[e]) continue;
    const Isl& isl = s.edge(e);
    if (!g.node_mask[isl.u] || !g.node_mask[isl.v]) continue;
    graph.add_edge(isl.u, isl.v, isl.delay_ms, e);
  }
  return graph;
}

nlohmann::json grounding_report(const TopologySnapshot& s,
                                const GroundingResult& g) {
  using nlohmann::json;
  json j;
  j["time_s"] = s.time_s();
  j["nodes"] = s.node_count();
  j["edges"] = s.edge_count();
  j["masked_nodes"] = g.masked_nodes();
  j["masked_edges"] = g.masked_edges();
  j["masked_edge_fraction"] =
      s.edge_count() ? static_cast<double>(g.masked_edges()) / s.edge_count()
                     : 0.0;
  int capped = 0;
  for (double u : g.util_caps) capped += u < 1.0;
  j["utilization_capped_edges"] = capped;
  auto map_json = [](const auto& m) {
    json out = json::object();
    for (const auto& [k, v] : m) out[std::to_string(k)] = v;
    return out;
  };
  j["deadlines_ms"] = map_json(g.deadlines);
  j["hop_limits"] = map_json(g.hop_limits);
  j["disjoint_demands"] = map_json(g.disjoint_demands);
  j["cap_reserves"] = map_json(g.cap_reserves);
  j["transit_excluded"] = g.transit_excluded;
  return j;
}

}  // namespace intentroute
