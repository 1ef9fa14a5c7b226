#ifndef INTENTROUTE_IR_H_
#define INTENTROUTE_IR_H_

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "intentroute/constellation.h"

namespace intentroute {

enum class HardType {
  kDisableNode,
  kDisablePlane,
  kDisableEdge,
  kAvoidRegion,
  kAvoidLatitude,
  kRerouteAway,
  kMaxLatencyMs,
  kMaxHops,
  kKEdgeDisjoint,
  kMinCapReserve,
};

enum class SoftType {
  kMaxUtilization,
  kMinimizeLatency,
  kMinimizeHops,
  kLoadBalance,
  kPathStability,
};

enum class Priority { kCritical, kHigh, kMedium, kLow };

enum class FallbackPolicy {
  kRejectIfHardInfeasible,
  kRelaxSoftFirst,
  kReportUnsatCore,
};

enum class TargetKind { kNode, kPlane, kEdge, kFlowSelector, kEdges, kRegion };

std::string_view to_string(HardType t);
std::string_view to_string(SoftType t);
std::string_view to_string(Priority p);
std::string_view to_string(FallbackPolicy f);
std::string_view to_string(TargetKind k);
std::optional<HardType> hard_type_from_string(std::string_view s);
std::optional<SoftType> soft_type_from_string(std::string_view s);
std::optional<Priority> priority_from_string(std::string_view s);
std::optional<FallbackPolicy> fallback_from_string(std::string_view s);

std::span<const HardType> all_hard_types();
std::span<const SoftType> all_soft_types();
std::span<const std::string_view> traffic_class_catalog();
std::span<const std::string_view> event_catalog();
bool is_traffic_class(std::string_view s);
bool is_event(std::string_view s);

// The target kind each hard constraint type must attach to.
TargetKind required_target_kind(HardType t);
bool hard_type_needs_value(HardType t);

struct Target {
  TargetKind kind = TargetKind::kEdges;
  long long id = 0;   // node, plane, flow selector index, or edge endpoint u
  long long id2 = 0;  // edge endpoint v
  std::string name;   // region name

  static Target node(long long n) { return {TargetKind::kNode, n, 0, {}}; }
  static Target plane(long long p) { return {TargetKind::kPlane, p, 0, {}}; }
  static Target edge(long long u, long long v) {
    return {TargetKind::kEdge, u, v, {}};
  }
  static Target flow(long long i) {
    return {TargetKind::kFlowSelector, i, 0, {}};
  }
  static Target edges() { return {TargetKind::kEdges, 0, 0, {}}; }
  static Target region(std::string r) {
    return {TargetKind::kRegion, 0, 0, std::move(r)};
  }

  std::string to_string() const;
  bool operator==(const Target&) const = default;
};

struct TargetParse {
  std::optional<Target> target;
  std::string error;
};
TargetParse parse_target(std::string_view text);

struct FlowSelector {
  std::optional<std::string> traffic_class;
  std::optional<std::string> src_region;
  std::optional<std::string> dst_region;
  std::optional<long long> src_node;
  std::optional<long long> dst_node;
  std::optional<long long> src_plane;
  std::optional<long long> dst_plane;

  bool empty() const;
  bool operator==(const FlowSelector&) const = default;
};

struct HardConstraint {
  HardType type = HardType::kDisableNode;
  Target target;
  std::optional<double> value;
  std::optional<std::string> condition;
  bool operator==(const HardConstraint&) const = default;
};

struct SoftConstraint {
  SoftType type = SoftType::kMaxUtilization;
  Target target;
  double value = 0.0;
  double penalty_weight = 1.0;
  bool operator==(const SoftConstraint&) const = default;
};

struct ConstraintProgram {
  std::string intent_id;
  std::vector<FlowSelector> flow_selectors;
  std::vector<HardConstraint> hard_constraints;
  std::vector<SoftConstraint> soft_constraints;
  std::vector<std::string> event_conditions;
  std::map<std::string, double> objective_weights;
  Priority priority = Priority::kMedium;
  FallbackPolicy fallback_policy = FallbackPolicy::kRejectIfHardInfeasible;

  bool operator==(const ConstraintProgram&) const = default;
};

// Either a typed program or a non-empty list of "<field path>: <problem>"
// messages. Never throws.
struct ParseResult {
  std::optional<ConstraintProgram> program;
  std::vector<std::string> errors;
  bool ok() const { return program.has_value(); }
};
ParseResult parse_program(std::string_view text);

struct SerializeOptions {
  bool pretty = false;
  // Sorts constraint lists and event names so that programs differing only
  // in list order serialize identically. Flow selectors keep their order
  // because constraint targets index into them.
  bool canonical_order = false;
};
std::string serialize_program(const ConstraintProgram& p,
                              SerializeOptions opts = {});
ConstraintProgram canonicalize(ConstraintProgram p);

std::string hard_constraint_key(const HardConstraint& h);
std::string soft_constraint_key(const SoftConstraint& s);

// True iff every populated field of the selector matches. `traffic_class`
// is the class of the flow being tested; nullopt never matches a selector
// that pins a class.
bool selector_matches(const FlowSelector& f, NodeId src, NodeId dst,
                      const std::optional<std::string>& traffic_class,
                      const TopologySnapshot& snapshot);

}  // namespace intentroute

#endif  // INTENTROUTE_IR_H_
