#include "intentroute/graph.h"

#include <algorithm>
#include <stdexcept>

namespace intentroute {

RoutingGraph::RoutingGraph(int node_count)
    : arcs_(node_count),
      routable_(node_count, true),
      transit_excluded_(node_count, false) {}

RoutingGraph RoutingGraph::from_edges(int node_count,
                                      std::span<const WeightedEdge> edges) {
  RoutingGraph g(node_count);
  EdgeId id = 0;
  for (const auto& e : edges) g.add_edge(e.u, e.v, e.delay_ms, id++);
  return g;
}

void RoutingGraph::add_edge(NodeId u, NodeId v, double delay_ms, EdgeId id) {
  if (!valid(u) || !valid(v) || u == v)
    throw std::invalid_argument("RoutingGraph::add_edge: bad endpoints");
  if (!(delay_ms > 0.0))
    throw std::invalid_argument("RoutingGraph::add_edge: delay must be > 0");
  auto insert = [](std::vector<Arc>& list, Arc arc) {
    auto pos = std::lower_bound(
        list.begin(), list.end(), arc,
        [](const Arc& a, const Arc& b) { return a.to < b.to; });
    list.insert(pos, arc);
  };
  insert(arcs_[u], {v, id, delay_ms});
  insert(arcs_[v], {u, id, delay_ms});
  ++edge_count_;
}

int RoutingGraph::routable_count() const {
  return static_cast<int>(
      std::count(routable_.begin(), routable_.end(), true));
}

const Arc* RoutingGraph::find_arc(NodeId u, NodeId v) const {
  if (!valid(u) || !valid(v)) return nullptr;
  for (const auto& a : arcs_[u])
    if (a.to == v) return &a;
  return nullptr;
}

}  // namespace intentroute
