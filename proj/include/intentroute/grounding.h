#ifndef INTENTROUTE_GROUNDING_H_
#define INTENTROUTE_GROUNDING_H_

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "intentroute/constellation.h"
#include "intentroute/graph.h"
#include "intentroute/ir.h"
#include "json.hpp"

namespace intentroute {

using EventSet = std::set<std::string, std::less<>>;

// Raised when a program reaches grounding with entities that passes 1-4
// should have rejected.
class GroundingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GroundingResult {
  std::vector<bool> node_mask;    // true = usable
  std::vector<bool> edge_mask;    // indexed by snapshot EdgeId
  std::vector<double> util_caps;  // per edge, in (0, 1]
  std::map<int, double> deadlines;        // flow selector -> ms
  std::map<int, int> hop_limits;          // flow selector -> hops
  std::map<int, int> disjoint_demands;    // flow selector -> k
  std::map<int, double> cap_reserves;     // flow selector -> fraction
  std::vector<NodeId> transit_excluded;   // sorted, unique

  int masked_nodes() const;
  int masked_edges() const;
  bool is_transit_excluded(NodeId n) const;
  bool operator==(const GroundingResult&) const = default;
};

// Constraints with no condition plus those whose condition is active, in
// program order.
std::vector<HardConstraint> active_constraints(const ConstraintProgram& p,
                                               const EventSet& active_events);

GroundingResult ground(const ConstraintProgram& p,
                       const TopologySnapshot& snapshot,
                       const EventSet& active_events);

// Identity grounding: everything usable, no demands.
GroundingResult empty_grounding(const TopologySnapshot& snapshot);

RoutingGraph constrained_graph(const TopologySnapshot& snapshot,
                               const GroundingResult& g);

nlohmann::json grounding_report(const TopologySnapshot& snapshot,
                                const GroundingResult& g);

}  // namespace intentroute

#endif  // INTENTROUTE_GROUNDING_H_
