#ifndef INTENTROUTE_TESTS_SUPPORT_H_
#define INTENTROUTE_TESTS_SUPPORT_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include "intentroute/constellation.h"
#include "intentroute/graph.h"
#include "intentroute/ir.h"

// Reference implementations used as oracles. Everything here is written
// from the definitions, independently of the library's grounding and
// search code.
namespace intentroute::testing {

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}
inline double uniform_real(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}
inline bool coin(std::mt19937_64& rng, double p) {
  return std::bernoulli_distribution(p)(rng);
}

// Small arbitrary graph dressed up as a snapshot: n = planes * sats nodes at
// random positions, a random spanning forest plus extra chords.
inline TopologySnapshot random_snapshot(std::mt19937_64& rng, int min_nodes,
                                        int max_nodes, double extra_ratio = 0.5,
                                        double tree_edge_prob = 0.95) {
  WalkerConfig cfg;
  for (;;) {
    cfg.planes = uniform_int(rng, 1, 6);
    cfg.sats_per_plane = uniform_int(rng, 2, 6);
    const int n = cfg.node_count();
    if (n >= min_nodes && n <= max_nodes) break;
  }
  const int n = cfg.node_count();
  std::vector<SatelliteState> nodes(n);
  for (int i = 0; i < n; ++i) {
    nodes[i].node_id = i;
    nodes[i].plane = i / cfg.sats_per_plane;
    nodes[i].slot = i % cfg.sats_per_plane;
    nodes[i].latitude_deg = uniform_real(rng, -75.0, 75.0);
    nodes[i].longitude_deg = uniform_real(rng, -180.0, 180.0);
    nodes[i].altitude_km = cfg.altitude_km;
  }
  std::set<std::pair<int, int>> seen;
  std::vector<Isl> edges;
  auto add = [&](int a, int b) {
    if (a == b) return;
    if (a > b) std::swap(a, b);
    if (!seen.insert({a, b}).second) return;
    Isl e;
    e.u = a;
    e.v = b;
    e.delay_ms = uniform_real(rng, 2.5, 20.0);
    e.inter_plane = nodes[a].plane != nodes[b].plane;
    edges.push_back(e);
  };
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  for (int i = 1; i < n; ++i)
    if (coin(rng, tree_edge_prob)) add(order[i], order[uniform_int(rng, 0, i - 1)]);
  const int extra = static_cast<int>(extra_ratio * n);
  for (int i = 0; i < extra; ++i) add(uniform_int(rng, 0, n - 1), uniform_int(rng, 0, n - 1));
  std::sort(edges.begin(), edges.end(), [](const Isl& a, const Isl& b) {
    return std::pair(a.u, a.v) < std::pair(b.u, b.v);
  });
  return TopologySnapshot(cfg, 0.0, std::move(nodes), std::move(edges),
                          std::make_shared<const RegionCatalog>(RegionCatalog::builtin()));
}

// Masks computed straight from the constraint definitions.
struct OracleMasks {
  std::vector<bool> node_ok;
  std::vector<bool> edge_ok;
  std::vector<bool> no_transit;
};

inline OracleMasks oracle_masks(const ConstraintProgram& p,
                                const TopologySnapshot& s,
                                const std::set<std::string>& active = {}) {
  const int n = s.node_count();
  OracleMasks m{std::vector<bool>(n, true),
                std::vector<bool>(s.edge_count(), true),
                std::vector<bool>(n, false)};
  std::optional<double> lat;
  std::set<std::pair<int, int>> cut;
  std::set<int> in_region;
  for (const auto& h : p.hard_constraints) {
    if (h.condition && !active.count(*h.condition)) continue;
    switch (h.type) {
      case HardType::kDisableNode:
        m.node_ok[h.target.id] = false;
        break;
      case HardType::kDisablePlane:
        for (int i = 0; i < n; ++i)
          if (s.plane_of(i) == h.target.id) m.node_ok[i] = false;
        break;
      case HardType::kDisableEdge:
        cut.insert({std::min(h.target.id, h.target.id2),
                    std::max(h.target.id, h.target.id2)});
        break;
      case HardType::kRerouteAway:
        m.no_transit[h.target.id] = true;
        break;
      case HardType::kAvoidLatitude:
        lat = lat ? std::min(*lat, *h.value) : *h.value;
        break;
      case HardType::kAvoidRegion: {
        // Satellites over the region keep their identity but lose every ISL.
        const Region* r = s.regions().find(h.target.name);
        for (int i = 0; i < n; ++i)
          if (r->contains(s.node(i).latitude_deg, s.node(i).longitude_deg))
            in_region.insert(i);
        break;
      }
      default:
        break;
    }
  }
  for (int e = 0; e < s.edge_count(); ++e) {
    const Isl& isl = s.edge(e);
    bool ok = m.node_ok[isl.u] && m.node_ok[isl.v] &&
              !cut.count({isl.u, isl.v}) && !in_region.count(isl.u) &&
              !in_region.count(isl.v);
    if (ok && lat && isl.inter_plane &&
        (std::abs(s.node(isl.u).latitude_deg) > *lat ||
         std::abs(s.node(isl.v).latitude_deg) > *lat))
      ok = false;
    m.edge_ok[e] = ok;
  }
  return m;
}

// Depth-first enumeration of simple paths src -> dst, pruned by the bounds.
// `visit` returns true to stop the enumeration.
inline void enumerate_simple_paths(
    const TopologySnapshot& s, const OracleMasks& m, NodeId src, NodeId dst,
    std::optional<double> deadline, std::optional<int> hop_limit,
    const std::function<bool(const std::vector<EdgeId>&, double)>& visit) {
  if (!m.node_ok[src] || !m.node_ok[dst]) return;
  std::vector<bool> on_path(s.node_count(), false);
  std::vector<EdgeId> edges;
  bool stop = false;
  std::function<void(NodeId, double)> dfs = [&](NodeId u, double delay) {
    if (stop) return;
    if (u == dst) {
      stop = visit(edges, delay);
      return;
    }
    if (u != src && m.no_transit[u]) return;
    if (hop_limit && static_cast<int>(edges.size()) >= *hop_limit) return;
    on_path[u] = true;
    for (const auto& nb : s.neighbors(u)) {
      if (!m.edge_ok[nb.edge] || on_path[nb.node] || !m.node_ok[nb.node])
        continue;
      const double d = delay + s.edge(nb.edge).delay_ms;
      if (deadline && d > *deadline) continue;
      edges.push_back(nb.edge);
      dfs(nb.node, d);
      edges.pop_back();
      if (stop) break;
    }
    on_path[u] = false;
  };
  if (src == dst) {
    visit(edges, 0.0);
    return;
  }
  dfs(src, 0.0);
}

inline bool oracle_feasible(const TopologySnapshot& s, const OracleMasks& m,
                            NodeId src, NodeId dst,
                            std::optional<double> deadline,
                            std::optional<int> hop_limit) {
  bool found = false;
  enumerate_simple_paths(s, m, src, dst, deadline, hop_limit,
                         [&](const std::vector<EdgeId>&, double) {
                           found = true;
                           return true;
                         });
  return found;
}

// Exhaustive search for k pairwise edge-disjoint simple paths.
inline bool oracle_disjoint(const TopologySnapshot& s, const OracleMasks& m,
                            NodeId src, NodeId dst, int k) {
  if (!m.node_ok[src] || !m.node_ok[dst]) return false;
  if (src == dst) return true;
  std::vector<std::vector<EdgeId>> paths;
  enumerate_simple_paths(s, m, src, dst, std::nullopt, std::nullopt,
                         [&](const std::vector<EdgeId>& e, double) {
                           auto sorted = e;
                           std::sort(sorted.begin(), sorted.end());
                           paths.push_back(std::move(sorted));
                           return false;
                         });
  std::vector<bool> used(s.edge_count(), false);
  std::function<bool(std::size_t, int)> pick = [&](std::size_t from, int need) {
    if (need == 0) return true;
    for (std::size_t i = from; i < paths.size(); ++i) {
      bool clash = false;
      for (EdgeId e : paths[i]) clash = clash || used[e];
      if (clash) continue;
      for (EdgeId e : paths[i]) used[e] = true;
      const bool ok = pick(i + 1, need - 1);
      for (EdgeId e : paths[i]) used[e] = false;
      if (ok) return true;
    }
    return false;
  };
  return pick(0, k);
}

// Bellman-Ford over a RoutingGraph with the same transit rule as the router:
// only the source or a transit-capable node may be left.
inline std::vector<double> bellman_ford(const RoutingGraph& g, NodeId src) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(g.node_count(), inf);
  if (!g.routable(src)) return dist;
  dist[src] = 0.0;
  for (int round = 0; round < g.node_count(); ++round) {
    bool changed = false;
    for (NodeId u = 0; u < g.node_count(); ++u) {
      if (dist[u] == inf || (u != src && !g.can_transit(u))) continue;
      for (const Arc& a : g.arcs(u)) {
        if (!g.routable(a.to)) continue;
        if (dist[u] + a.delay_ms < dist[a.to]) {
          dist[a.to] = dist[u] + a.delay_ms;
          changed = true;
        }
      }
    }
    if (!changed) break;
  }
  return dist;
}

// Endpoint candidates for a selector side, mirroring the selector semantics:
// an explicit node, every node of a plane, or every node.
inline std::vector<NodeId> side_nodes(const TopologySnapshot& s,
                                      std::optional<long long> node,
                                      std::optional<long long> plane) {
  std::vector<NodeId> out;
  if (node) return {static_cast<NodeId>(*node)};
  for (NodeId i = 0; i < s.node_count(); ++i)
    if (!plane || s.plane_of(i) == *plane) out.push_back(i);
  return out;
}

struct DemandMix {
  bool allow_deadline = true;
  bool allow_hops = true;
  bool allow_disjoint = false;
  double plane_endpoint_prob = 0.25;
};

// One-flow program over a snapshot: random disables and a random demand.
inline ConstraintProgram random_program(std::mt19937_64& rng,
                                        const TopologySnapshot& s,
                                        const DemandMix& mix) {
  ConstraintProgram p;
  p.intent_id = "rand-" + std::to_string(rng() % 1000000);
  const int n = s.node_count();
  const int planes = s.config().planes;
  auto node = [&] { return uniform_int(rng, 0, n - 1); };

  for (int i = uniform_int(rng, 0, 2); i > 0; --i)
    p.hard_constraints.push_back(
        {HardType::kDisableNode, Target::node(node()), std::nullopt, std::nullopt});
  if (coin(rng, 0.3) && s.edge_count() > 0) {
    const Isl& e = s.edge(uniform_int(rng, 0, s.edge_count() - 1));
    p.hard_constraints.push_back(
        {HardType::kDisableEdge, Target::edge(e.u, e.v), std::nullopt, std::nullopt});
  }
  if (coin(rng, 0.15))
    p.hard_constraints.push_back({HardType::kDisablePlane,
                                  Target::plane(uniform_int(rng, 0, planes - 1)),
                                  std::nullopt, std::nullopt});
  if (coin(rng, 0.3))
    p.hard_constraints.push_back(
        {HardType::kRerouteAway, Target::node(node()), std::nullopt, std::nullopt});
  if (coin(rng, 0.15)) {
    const auto& regions = s.regions().regions();
    p.hard_constraints.push_back(
        {HardType::kAvoidRegion,
         Target::region(regions[uniform_int(rng, 0, regions.size() - 1)].name),
         std::nullopt, std::nullopt});
  }
  if (coin(rng, 0.3))
    p.hard_constraints.push_back({HardType::kAvoidLatitude, Target::edges(),
                                  std::round(uniform_real(rng, 20.0, 70.0)),
                                  std::nullopt});

  FlowSelector f;
  if (coin(rng, mix.plane_endpoint_prob)) f.src_plane = uniform_int(rng, 0, planes - 1);
  else f.src_node = node();
  if (coin(rng, mix.plane_endpoint_prob)) f.dst_plane = uniform_int(rng, 0, planes - 1);
  else f.dst_node = node();
  p.flow_selectors.push_back(f);

  const int scale = std::max(2, static_cast<int>(std::sqrt(n)));
  if (mix.allow_disjoint && coin(rng, 0.3)) {
    p.hard_constraints.push_back({HardType::kKEdgeDisjoint, Target::flow(0),
                                  static_cast<double>(uniform_int(rng, 1, 3)),
                                  std::nullopt});
  } else {
    if (mix.allow_deadline && coin(rng, 0.5))
      p.hard_constraints.push_back(
          {HardType::kMaxLatencyMs, Target::flow(0),
           uniform_real(rng, 2.0, 12.0 * scale), std::nullopt});
    if (mix.allow_hops && coin(rng, 0.5))
      p.hard_constraints.push_back(
          {HardType::kMaxHops, Target::flow(0),
           static_cast<double>(uniform_int(rng, 1, 2 * scale)), std::nullopt});
  }
  return p;
}

inline std::optional<double> first_value(const ConstraintProgram& p, HardType t) {
  for (const auto& h : p.hard_constraints)
    if (h.type == t) return h.value;
  return std::nullopt;
}

}  // namespace intentroute::testing

#endif  // INTENTROUTE_TESTS_SUPPORT_H_
