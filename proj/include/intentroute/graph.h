#ifndef INTENTROUTE_GRAPH_H_
#define INTENTROUTE_GRAPH_H_

#include <span>
#include <vector>

#include "intentroute/constellation.h"

namespace intentroute {

struct Arc {
  NodeId to = 0;
  EdgeId edge = 0;
  double delay_ms = 0.0;
};

struct WeightedEdge {
  NodeId u = 0;
  NodeId v = 0;
  double delay_ms = 1.0;
};

// Undirected routing graph. Holds only live arcs; masked nodes stay in the
// index space but are flagged unroutable and carry no arcs. Transit-excluded
// nodes may be path endpoints but never interior hops.
class RoutingGraph {
 public:
  RoutingGraph() = default;
  explicit RoutingGraph(int node_count);

  static RoutingGraph from_edges(int node_count,
                                 std::span<const WeightedEdge> edges);

  // Arcs are kept sorted by neighbor id so every search is deterministic.
  void add_edge(NodeId u, NodeId v, double delay_ms, EdgeId id);
  void set_routable(NodeId v, bool routable) { routable_[v] = routable; }
  void set_transit_excluded(NodeId v, bool excluded) {
    transit_excluded_[v] = excluded;
  }

  int node_count() const { return static_cast<int>(arcs_.size()); }
  int edge_count() const { return edge_count_; }
  int routable_count() const;
  bool valid(NodeId v) const { return v >= 0 && v < node_count(); }
  bool routable(NodeId v) const { return routable_[v]; }
  bool transit_excluded(NodeId v) const { return transit_excluded_[v]; }
  bool can_transit(NodeId v) const {
    return routable_[v] && !transit_excluded_[v];
  }
  const std::vector<Arc>& arcs(NodeId v) const { return arcs_[v]; }
  const Arc* find_arc(NodeId u, NodeId v) const;

 private:
  std::vector<std::vector<Arc>> arcs_;
  std::vector<bool> routable_;
  std::vector<bool> transit_excluded_;
  int edge_count_ = 0;
};

struct Path {
  std::vector<NodeId> nodes;
  double delay_ms = 0.0;

  int hops() const {
    return nodes.empty() ? 0 : static_cast<int>(nodes.size()) - 1;
  }
  bool operator==(const Path&) const = default;
};

}  // namespace intentroute

#endif  // INTENTROUTE_GRAPH_H_
