#ifndef INTENTROUTE_ROUTER_H_
#define INTENTROUTE_ROUTER_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "intentroute/graph.h"
#include "intentroute/grounding.h"
#include "intentroute/ir.h"
#include "json.hpp"

namespace intentroute {

inline constexpr NodeId kUnreachable = -1;

// Source or destination is masked out of the graph.
class EndpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Single-source Dijkstra result. Ties pop the lowest node id first.
struct ShortestPathTree {
  NodeId source = 0;
  std::vector<double> dist;  // +inf when unreachable
  std::vector<NodeId> parent;

  bool reaches(NodeId v) const;
  std::optional<Path> path_to(NodeId v) const;
};

struct HopTree {
  NodeId source = 0;
  std::vector<int> hops;  // -1 when unreachable
  std::vector<NodeId> parent;
  std::vector<double> delay;  // delay along the BFS tree path

  std::optional<Path> path_to(NodeId v) const;
};

// Minimum delay over paths with at most max_hops edges, per destination.
struct HopLayeredTree {
  NodeId source = 0;
  int max_hops = 0;
  std::vector<std::vector<double>> dist;     // [layer][node]
  std::vector<std::vector<NodeId>> parent;   // kUnreachable = carried over

  double best(NodeId v) const { return dist.back()[v]; }
  std::optional<Path> path_to(NodeId v) const;
};

ShortestPathTree shortest_path_tree(const RoutingGraph& g, NodeId src);
HopTree hop_tree(const RoutingGraph& g, NodeId src);
HopLayeredTree hop_layered_tree(const RoutingGraph& g, NodeId src,
                                int max_hops);

// Throws EndpointError when src or dst is unroutable.
std::optional<Path> shortest_path(const RoutingGraph& g, NodeId src,
                                  NodeId dst);
std::optional<Path> hop_layered_shortest_path(const RoutingGraph& g,
                                              NodeId src, NodeId dst,
                                              int max_hops);
// Edmonds-Karp on unit-capacity arc pairs. Returns k pairwise edge-disjoint
// paths or nullopt when the max flow is below k.
std::optional<std::vector<Path>> edge_disjoint_paths(const RoutingGraph& g,
                                                     NodeId src, NodeId dst,
                                                     int k);
int max_edge_disjoint(const RoutingGraph& g, NodeId src, NodeId dst,
                      int limit);

class RoutingTable {
 public:
  RoutingTable() = default;
  explicit RoutingTable(int n)
      : n_(n), next_(static_cast<std::size_t>(n) * n, kUnreachable) {}

  int node_count() const { return n_; }
  NodeId next_hop(NodeId node, NodeId dst) const {
    return next_[static_cast<std::size_t>(dst) * n_ + node];
  }
  void set(NodeId node, NodeId dst, NodeId hop) {
    next_[static_cast<std::size_t>(dst) * n_ + node] = hop;
  }

 private:
  int n_ = 0;
  std::vector<NodeId> next_;
};

RoutingTable build_routing_tables(const RoutingGraph& g);

// Next-hop routing behind an interface so other routers can be swapped in.
class Router {
 public:
  virtual ~Router() = default;
  virtual std::string name() const = 0;
  virtual void prepare(const RoutingGraph& g) = 0;
  virtual std::optional<NodeId> next_hop(NodeId current, NodeId dst,
                                         const RoutingGraph& g) const = 0;
};

class DijkstraRouter : public Router {
 public:
  std::string name() const override { return "dijkstra"; }
  void prepare(const RoutingGraph& g) override;
  std::optional<NodeId> next_hop(NodeId current, NodeId dst,
                                 const RoutingGraph& g) const override;

 private:
  RoutingTable table_;
};

// Checks one path against masks, transit exclusion, and optional bounds.
// Empty result means compliant.
std::vector<std::string> check_path(const std::vector<NodeId>& nodes,
                                    const TopologySnapshot& snapshot,
                                    const GroundingResult& g,
                                    std::optional<double> deadline_ms,
                                    std::optional<int> hop_limit);

std::vector<std::string> check_violations(
    const std::vector<NodeId>& path, const ConstraintProgram& p,
    const GroundingResult& g, const TopologySnapshot& snapshot,
    const std::optional<std::string>& traffic_class = std::nullopt);

struct ScenarioSpec {
  std::string name;
  ConstraintProgram program;
  EventSet active_events;
  WalkerConfig config;
};

struct EvalOptions {
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  int steps = 20;
  int pairs_per_step = 100;
  double step_interval_s = 300.0;
};

struct EvalResult {
  std::string scenario;
  std::string router;
  std::vector<std::uint64_t> seeds;
  int steps = 0;
  int pairs_per_step = 0;
  long long total_pairs = 0;
  long long delivered = 0;
  long long reachable = 0;
  long long delivered_reachable = 0;
  long long loops = 0;
  long long violations = 0;
  double raw_pdr = 0.0;
  double reachable_pdr = 0.0;
  double reachability = 0.0;
  double delay_mean_ms = 0.0;
  double delay_p50_ms = 0.0;
  double delay_p95_ms = 0.0;
  double delay_max_ms = 0.0;

  nlohmann::json to_json() const;
};

EvalResult evaluate_scenario(const ScenarioSpec& scenario, Router& router,
                             const EvalOptions& options = {});

// The four constrained scenarios used for end-to-end evaluation.
std::vector<ScenarioSpec> standard_scenarios(const WalkerConfig& config);

}  // namespace intentroute

#endif  // INTENTROUTE_ROUTER_H_
