#include "intentroute/router.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <random>

namespace intentroute {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using QueueEntry = std::pair<double, NodeId>;
using MinQueue = std::priority_queue<QueueEntry, std::vector<QueueEntry>,
                                     std::greater<QueueEntry>>;

bool expandable(const RoutingGraph& g, NodeId v, NodeId src) {
  return v == src ? g.routable(v) : g.can_transit(v);
}

void require_endpoint(const RoutingGraph& g, NodeId v, const char* which) {
  if (!g.valid(v))
    throw EndpointError(std::string(which) + " node " + std::to_string(v) +
                        " out of range");
  if (!g.routable(v))
    throw EndpointError(std::string(which) + " node " + std::to_string(v) +
                        " is masked");
}

// Reverse tree rooted at dst; parent[n] is n's next hop toward dst.
ShortestPathTree tree_toward(const RoutingGraph& g, NodeId dst) {
  ShortestPathTree t;
  t.source = dst;
  t.dist.assign(g.node_count(), kInf);
  t.parent.assign(g.node_count(), kUnreachable);
  if (!g.routable(dst)) return t;
  std::vector<bool> done(g.node_count(), false);
  MinQueue q;
  t.dist[dst] = 0.0;
  q.push({0.0, dst});
  while (!q.empty()) {
    auto [d, v] = q.top();
    q.pop();
    if (done[v]) continue;
    done[v] = true;
    if (!expandable(g, v, dst)) continue;
    for (const auto& a : g.arcs(v)) {
      if (!g.routable(a.to)) continue;
      const double nd = d + a.delay_ms;
      if (nd < t.dist[a.to]) {
        t.dist[a.to] = nd;
        t.parent[a.to] = v;
        q.push({nd, a.to});
      }
    }
  }
  return t;
}

}  // namespace

bool ShortestPathTree::reaches(NodeId v) const {
  return v >= 0 && v < static_cast<NodeId>(dist.size()) && dist[v] < kInf;
}

std::optional<Path> ShortestPathTree::path_to(NodeId v) const {
  if (!reaches(v)) return std::nullopt;
  Path p;
  for (NodeId cur = v; cur != kUnreachable; cur = parent[cur]) {
    p.nodes.push_back(cur);
    if (cur == source) break;
  }
  std::reverse(p.nodes.begin(), p.nodes.end());
  p.delay_ms = dist[v];
  return p;
}

std::optional<Path> HopTree::path_to(NodeId v) const {
  if (v < 0 || v >= static_cast<NodeId>(hops.size()) || hops[v] < 0)
    return std::nullopt;
  Path p;
  for (NodeId cur = v; cur != kUnreachable; cur = parent[cur]) {
    p.nodes.push_back(cur);
    if (cur == source) break;
  }
  std::reverse(p.nodes.begin(), p.nodes.end());
  p.delay_ms = delay[v];
  return p;
}

std::optional<Path> HopLayeredTree::path_to(NodeId v) const {
  if (dist.empty() || v < 0 || v >= static_cast<NodeId>(dist[0].size()) ||
      !(best(v) < kInf))
    return std::nullopt;
  Path p;
  NodeId cur = v;
  p.nodes.push_back(cur);
  for (std::size_t layer = dist.size() - 1; layer > 0; --layer) {
    if (parent[layer][cur] == kUnreachable) continue;
    cur = parent[layer][cur];
    p.nodes.push_back(cur);
  }
  if (cur != source) return std::nullopt;
  std::reverse(p.nodes.begin(), p.nodes.end());
  p.delay_ms = best(v);
  return p;
}

ShortestPathTree shortest_path_tree(const RoutingGraph& g, NodeId src) {
  require_endpoint(g, src, "source");
  ShortestPathTree t;
  t.source = src;
  t.dist.assign(g.node_count(), kInf);
  t.parent.assign(g.node_count(), kUnreachable);
  std::vector<bool> done(g.node_count(), false);
  MinQueue q;
  t.dist[src] = 0.0;
  q.push({0.0, src});
  while (!q.empty()) {
    auto [d, v] = q.top();
    q.pop();
    if (done[v]) continue;
    done[v] = true;
    if (!expandable(g, v, src)) continue;
    for (const auto& a : g.arcs(v)) {
      if (!g.routable(a.to)) continue;
      const double nd = d + a.delay_ms;
      if (nd < t.dist[a.to]) {
        t.dist[a.to] = nd;
        t.parent[a.to] = v;
        q.push({nd, a.to});
      }
    }
  }
  return t;
}

HopTree hop_tree(const RoutingGraph& g, NodeId src) {
  require_endpoint(g, src, "source");
  HopTree t;
  t.source = src;
  t.hops.assign(g.node_count(), -1);
  t.parent.assign(g.node_count(), kUnreachable);
  t.delay.assign(g.node_count(), kInf);
  std::queue<NodeId> q;
  t.hops[src] = 0;
  t.delay[src] = 0.0;
  q.push(src);
  while (!q.empty()) {
    NodeId v = q.front();
    q.pop();
    if (!expandable(g, v, src)) continue;
    for (const auto& a : g.arcs(v)) {
      if (!g.routable(a.to) || t.hops[a.to] >= 0) continue;
      t.hops[a.to] = t.hops[v] + 1;
      t.parent[a.to] = v;
      t.delay[a.to] = t.delay[v] + a.delay_ms;
      q.push(a.to);
    }
  }
  return t;
}

HopLayeredTree hop_layered_tree(const RoutingGraph& g, NodeId src,
                                int max_hops) {
  require_endpoint(g, src, "source");
  if (max_hops < 0) throw std::invalid_argument("max_hops must be >= 0");
  const int n = g.node_count();
  const int layers = std::min(max_hops, std::max(n - 1, 0));
  HopLayeredTree t;
  t.source = src;
  t.max_hops = max_hops;
  t.dist.emplace_back(n, kInf);
  t.parent.emplace_back(n, kUnreachable);
  t.dist[0][src] = 0.0;
  for (int h = 1; h <= layers; ++h) {
    const auto& prev = t.dist.back();
    std::vector<double> cur = prev;
    std::vector<NodeId> par(n, kUnreachable);
    bool changed = false;
    for (NodeId u = 0; u < n; ++u) {
      if (!(prev[u] < kInf) || !expandable(g, u, src)) continue;
      for (const auto& a : g.arcs(u)) {
        if (!g.routable(a.to)) continue;
        const double nd = prev[u] + a.delay_ms;
        if (nd < cur[a.to]) {
          cur[a.to] = nd;
          par[a.to] = u;
          changed = true;
        }
      }
    }
    if (!changed) break;  // later layers would repeat this one
    t.dist.push_back(std::move(cur));
    t.parent.push_back(std::move(par));
  }
  return t;
}

std::optional<Path> shortest_path(const RoutingGraph& g, NodeId src,
                                  NodeId dst) {
  require_endpoint(g, src, "source");
  require_endpoint(g, dst, "destination");
  if (src == dst) return Path{{src}, 0.0};
  return shortest_path_tree(g, src).path_to(dst);
}

std::optional<Path> hop_layered_shortest_path(const RoutingGraph& g,
                                              NodeId src, NodeId dst,
                                              int max_hops) {
  require_endpoint(g, src, "source");
  require_endpoint(g, dst, "destination");
  if (src == dst) return Path{{src}, 0.0};
  return hop_layered_tree(g, src, max_hops).path_to(dst);
}

namespace {

struct FlowNetwork {
  struct Arc {
    NodeId to;
    int cap;
    int rev;
  };
  std::vector<std::vector<Arc>> adj;

  explicit FlowNetwork(int n) : adj(n) {}
  void add(NodeId u, NodeId v) {
    adj[u].push_back({v, 1, static_cast<int>(adj[v].size())});
    adj[v].push_back({u, 0, static_cast<int>(adj[u].size()) - 1});
  }
};

// Unit-capacity arc pair per live undirected edge, honoring transit rules.
FlowNetwork build_flow_network(const RoutingGraph& g, NodeId src,
                               NodeId dst) {
  FlowNetwork net(g.node_count());
  auto may_leave = [&](NodeId v) { return v == src || g.can_transit(v); };
  auto may_enter = [&](NodeId v) { return v == dst || g.can_transit(v); };
  for (NodeId u = 0; u < g.node_count(); ++u) {
    if (!g.routable(u)) continue;
    for (const auto& a : g.arcs(u)) {
      if (!g.routable(a.to)) continue;
      if (may_leave(u) && may_enter(a.to)) net.add(u, a.to);
    }
  }
  return net;
}

int augment_up_to(FlowNetwork& net, NodeId src, NodeId dst, int limit) {
  const int n = static_cast<int>(net.adj.size());
  int flow = 0;
  while (flow < limit) {
    std::vector<std::pair<NodeId, int>> via(n, {kUnreachable, -1});
    std::vector<bool> seen(n, false);
    std::queue<NodeId> q;
    q.push(src);
    seen[src] = true;
    while (!q.empty() && !seen[dst]) {
      NodeId v = q.front();
      q.pop();
      for (int i = 0; i < static_cast<int>(net.adj[v].size()); ++i) {
        const auto& a = net.adj[v][i];
        if (a.cap <= 0 || seen[a.to]) continue;
        seen[a.to] = true;
        via[a.to] = {v, i};
        q.push(a.to);
      }
    }
    if (!seen[dst]) break;
    for (NodeId v = dst; v != src;) {
      auto [u, i] = via[v];
      auto& a = net.adj[u][i];
      a.cap -= 1;
      net.adj[v][a.rev].cap += 1;
      v = u;
    }
    ++flow;
  }
  return flow;
}

}  // namespace

int max_edge_disjoint(const RoutingGraph& g, NodeId src, NodeId dst,
                      int limit) {
  require_endpoint(g, src, "source");
  require_endpoint(g, dst, "destination");
  if (src == dst) return limit;
  FlowNetwork net = build_flow_network(g, src, dst);
  return augment_up_to(net, src, dst, limit);
}

std::optional<std::vector<Path>> edge_disjoint_paths(const RoutingGraph& g,
                                                     NodeId src, NodeId dst,
                                                     int k) {
  require_endpoint(g, src, "source");
  require_endpoint(g, dst, "destination");
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (src == dst) return std::vector<Path>(k, Path{{src}, 0.0});

  FlowNetwork net = build_flow_network(g, src, dst);
  if (augment_up_to(net, src, dst, k) < k) return std::nullopt;

  // Net flow per node pair; opposite units on the same edge cancel.
  const int n = g.node_count();
  // A forward arc (built with cap 1, same index in a fresh build) carries
  // flow iff its residual cap is now 0.
  std::vector<std::vector<NodeId>> out(n);
  const FlowNetwork fresh = build_flow_network(g, src, dst);
  for (NodeId u = 0; u < n; ++u) {
    for (std::size_t i = 0; i < fresh.adj[u].size(); ++i) {
      if (fresh.adj[u][i].cap != 1) continue;
      if (net.adj[u][i].cap == 0) out[u].push_back(net.adj[u][i].to);
    }
  }
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v : std::vector<NodeId>(out[u])) {
      auto it = std::find(out[v].begin(), out[v].end(), u);
      if (it != out[v].end()) {
        out[v].erase(it);
        out[u].erase(std::find(out[u].begin(), out[u].end(), v));
      }
    }
    std::sort(out[u].begin(), out[u].end());
  }

  std::vector<Path> paths;
  for (int i = 0; i < k; ++i) {
    std::vector<NodeId> walk = {src};
    NodeId cur = src;
    while (cur != dst) {
      if (out[cur].empty()) return std::nullopt;  // conservation broken
      NodeId next = out[cur].front();
      out[cur].erase(out[cur].begin());
      auto seen = std::find(walk.begin(), walk.end(), next);
      if (seen != walk.end()) {
        walk.erase(seen + 1, walk.end());  // drop the circulation
      } else {
        walk.push_back(next);
      }
      cur = next;
    }
    Path p;
    p.nodes = std::move(walk);
    for (std::size_t j = 1; j < p.nodes.size(); ++j)
      p.delay_ms += g.find_arc(p.nodes[j - 1], p.nodes[j])->delay_ms;
    paths.push_back(std::move(p));
  }
  return paths;
}

RoutingTable build_routing_tables(const RoutingGraph& g) {
  RoutingTable table(g.node_count());
  for (NodeId dst = 0; dst < g.node_count(); ++dst) {
    if (!g.routable(dst)) continue;
    ShortestPathTree t = tree_toward(g, dst);
    for (NodeId n = 0; n < g.node_count(); ++n)
      if (n != dst && t.reaches(n)) table.set(n, dst, t.parent[n]);
  }
  return table;
}

void DijkstraRouter::prepare(const RoutingGraph& g) {
  table_ = build_routing_tables(g);
}

std::optional<NodeId> DijkstraRouter::next_hop(NodeId current, NodeId dst,
                                               const RoutingGraph&) const {
  NodeId hop = table_.next_hop(current, dst);
  if (hop == kUnreachable) return std::nullopt;
  return hop;
}

std::vector<std::string> check_path(const std::vector<NodeId>& nodes,
                                    const TopologySnapshot& s,
                                    const GroundingResult& g,
                                    std::optional<double> deadline_ms,
                                    std::optional<int> hop_limit) {
  std::vector<std::string> v;
  if (nodes.empty()) {
    v.push_back("empty path");
    return v;
  }
  std::vector<NodeId> seen;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const NodeId n = nodes[i];
    if (!s.valid_node(n)) {
      v.push_back("node " + std::to_string(n) + " out of range");
      return v;
    }
    if (!g.node_mask[n])
      v.push_back("disabled node on path: " + std::to_string(n));
    if (i > 0 && i + 1 < nodes.size() && g.is_transit_excluded(n))
      v.push_back("transit-excluded node used as intermediate hop: " +
                  std::to_string(n));
    if (std::find(seen.begin(), seen.end(), n) != seen.end())
      v.push_back("path revisits node " + std::to_string(n));
    seen.push_back(n);
  }
  double delay = 0.0;
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    auto e = s.find_edge(nodes[i - 1], nodes[i]);
    const std::string hop =
        "(" + std::to_string(nodes[i - 1]) + "," + std::to_string(nodes[i]) + ")";
    if (!e) {
      v.push_back("no ISL for hop " + hop);
      continue;
    }
    if (!g.edge_mask[*e]) v.push_back("masked edge on path: " + hop);
    delay += s.edge(*e).delay_ms;
  }
  if (deadline_ms && delay > *deadline_ms)
    v.push_back("deadline exceeded: " + std::to_string(delay) + " ms > " +
                std::to_string(*deadline_ms) + " ms");
  const int hops = static_cast<int>(nodes.size()) - 1;
  if (hop_limit && hops > *hop_limit)
    v.push_back("hop limit exceeded: " + std::to_string(hops) + " > " +
                std::to_string(*hop_limit));
  return v;
}

std::vector<std::string> check_violations(
    const std::vector<NodeId>& path, const ConstraintProgram& p,
    const GroundingResult& g, const TopologySnapshot& s,
    const std::optional<std::string>& traffic_class) {
  if (path.empty()) return {"empty path"};
  std::optional<double> deadline;
  std::optional<int> hops;
  for (int i = 0; i < static_cast<int>(p.flow_selectors.size()); ++i) {
    if (!s.valid_node(path.front()) || !s.valid_node(path.back())) break;
    if (!selector_matches(p.flow_selectors[i], path.front(), path.back(),
                          traffic_class, s))
      continue;
    if (auto it = g.deadlines.find(i); it != g.deadlines.end())
      deadline = deadline ? std::min(*deadline, it->second) : it->second;
    if (auto it = g.hop_limits.find(i); it != g.hop_limits.end())
      hops = hops ? std::min(*hops, it->second) : it->second;
  }
  return check_path(path, s, g, deadline, hops);
}

nlohmann::json EvalResult::to_json() const {
  return {{"scenario", scenario},
          {"router", router},
          {"seeds", seeds},
          {"steps", steps},
          {"pairs_per_step", pairs_per_step},
          {"total_pairs", total_pairs},
          {"delivered", delivered},
          {"reachable", reachable},
          {"delivered_reachable", delivered_reachable},
          {"loops", loops},
          {"violations", violations},
          {"raw_pdr", raw_pdr},
          {"reachable_pdr", reachable_pdr},
          {"reachability", reachability},
          {"delay_ms",
           {{"mean", delay_mean_ms},
            {"p50", delay_p50_ms},
            {"p95", delay_p95_ms},
            {"max", delay_max_ms}}}};
}

namespace {

std::vector<bool> reachable_from(const RoutingGraph& g, NodeId src) {
  std::vector<bool> seen(g.node_count(), false);
  if (!g.routable(src)) return seen;
  std::queue<NodeId> q;
  seen[src] = true;
  q.push(src);
  while (!q.empty()) {
    NodeId v = q.front();
    q.pop();
    if (!expandable(g, v, src)) continue;
    for (const auto& a : g.arcs(v)) {
      if (!g.routable(a.to) || seen[a.to]) continue;
      seen[a.to] = true;
      q.push(a.to);
    }
  }
  return seen;
}

double percentile(std::vector<double> sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * (sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  return sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo);
}

}  // namespace

EvalResult evaluate_scenario(const ScenarioSpec& scenario, Router& router,
                             const EvalOptions& opt) {
  EvalResult r;
  r.scenario = scenario.name;
  r.router = router.name();
  r.seeds = opt.seeds;
  r.steps = opt.steps;
  r.pairs_per_step = opt.pairs_per_step;

  const WalkerConfig& cfg = scenario.config;
  const double a = kEarthRadiusKm + cfg.altitude_km;
  const double period_s =
      2.0 * std::numbers::pi / std::sqrt(kEarthMuKm3PerS2 / (a * a * a));
  const auto classes = traffic_class_catalog();
  std::vector<double> delays;

  for (std::uint64_t seed : opt.seeds) {
    std::mt19937_64 rng(seed);
    const double phase =
        std::uniform_real_distribution<double>(0.0, period_s)(rng);
    for (int step = 0; step < opt.steps; ++step) {
      const TopologySnapshot snap =
          build_snapshot(cfg, phase + step * opt.step_interval_s);
      const GroundingResult g =
          ground(scenario.program, snap, scenario.active_events);
      const RoutingGraph graph = constrained_graph(snap, g);
      router.prepare(graph);
      const int n = snap.node_count();
      if (n < 2) continue;
      std::uniform_int_distribution<NodeId> pick_src(0, n - 1);
      std::uniform_int_distribution<NodeId> pick_dst(0, n - 2);
      std::uniform_int_distribution<std::size_t> pick_class(
          0, classes.size() - 1);
      std::map<NodeId, std::vector<bool>> reach_cache;

      for (int k = 0; k < opt.pairs_per_step; ++k) {
        const NodeId src = pick_src(rng);
        NodeId dst = pick_dst(rng);
        if (dst >= src) ++dst;
        const std::string cls(classes[pick_class(rng)]);
        ++r.total_pairs;

        auto [it, fresh] = reach_cache.try_emplace(src);
        if (fresh) it->second = reachable_from(graph, src);
        const bool reachable = g.node_mask[dst] && it->second[dst];
        r.reachable += reachable;

        std::vector<NodeId> path = {src};
        std::vector<bool> visited(n, false);
        NodeId cur = src;
        bool dropped = !graph.routable(src);
        while (!dropped && cur != dst) {
          visited[cur] = true;
          auto hop = router.next_hop(cur, dst, graph);
          if (!hop) {
            dropped = true;
            break;
          }
          if (!graph.find_arc(cur, *hop)) {
            ++r.violations;  // router tried a link outside the graph
            dropped = true;
            break;
          }
          if (visited[*hop]) {
            ++r.loops;
            dropped = true;
            break;
          }
          path.push_back(*hop);
          cur = *hop;
        }
        if (dropped) continue;
        ++r.delivered;
        r.delivered_reachable += reachable;
        if (!check_violations(path, scenario.program, g, snap, cls).empty())
          ++r.violations;
        double d = 0.0;
        for (std::size_t i = 1; i < path.size(); ++i)
          d += graph.find_arc(path[i - 1], path[i])->delay_ms;
        delays.push_back(d);
      }
    }
  }
  if (r.total_pairs > 0) {
    r.raw_pdr = static_cast<double>(r.delivered) / r.total_pairs;
    r.reachability = static_cast<double>(r.reachable) / r.total_pairs;
  }
  r.reachable_pdr = r.reachable > 0 ? static_cast<double>(r.delivered_reachable) /
                                          r.reachable
                                    : 1.0;
  if (!delays.empty()) {
    std::sort(delays.begin(), delays.end());
    double sum = 0.0;
    for (double d : delays) sum += d;
    r.delay_mean_ms = sum / delays.size();
    r.delay_p50_ms = percentile(delays, 0.50);
    r.delay_p95_ms = percentile(delays, 0.95);
    r.delay_max_ms = delays.back();
  }
  return r;
}

std::vector<ScenarioSpec> standard_scenarios(const WalkerConfig& config) {
  auto program = [](std::string id) {
    ConstraintProgram p;
    p.intent_id = std::move(id);
    return p;
  };
  std::vector<ScenarioSpec> out;

  ScenarioSpec node_failure{"node_failure", program("e2e-node-failure"), {},
                            config};
  for (long long n : {17, 142, 203, 288, 371})
    if (n < config.node_count())
      node_failure.program.hard_constraints.push_back(
          {HardType::kDisableNode, Target::node(n), std::nullopt, std::nullopt});
  out.push_back(std::move(node_failure));

  ScenarioSpec plane{"plane_maintenance", program("e2e-plane-maintenance"), {},
                     config};
  plane.program.hard_constraints.push_back(
      {HardType::kDisablePlane, Target::plane(7 % config.planes), std::nullopt,
       std::nullopt});
  out.push_back(std::move(plane));

  ScenarioSpec polar{"polar_avoidance", program("e2e-polar-avoidance"), {},
                     config};
  polar.program.hard_constraints.push_back(
      {HardType::kAvoidLatitude, Target::edges(), 45.0, std::nullopt});
  out.push_back(std::move(polar));

  ScenarioSpec comp{"compositional", program("e2e-compositional"), {}, config};
  comp.program.hard_constraints.push_back(
      {HardType::kDisablePlane, Target::plane(7 % config.planes), std::nullopt,
       std::nullopt});
  comp.program.hard_constraints.push_back(
      {HardType::kAvoidLatitude, Target::edges(), 45.0, std::nullopt});
  comp.program.soft_constraints.push_back(
      {SoftType::kMaxUtilization, Target::edges(), 0.8, 1.0});
  out.push_back(std::move(comp));
  return out;
}

}  // namespace intentroute
