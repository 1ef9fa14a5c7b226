#include "intentroute/ir.h"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>

#include "json.hpp"

namespace intentroute {
namespace {

using nlohmann::json;

constexpr std::array<std::string_view, 10> kHardNames = {
    "disable_node",   "disable_plane", "disable_edge",   "avoid_region",
    "avoid_latitude", "reroute_away",  "max_latency_ms", "max_hops",
    "k_edge_disjoint", "min_cap_reserve"};
constexpr std::array<HardType, 10> kHardTypes = {
    HardType::kDisableNode,   HardType::kDisablePlane,
    HardType::kDisableEdge,   HardType::kAvoidRegion,
    HardType::kAvoidLatitude, HardType::kRerouteAway,
    HardType::kMaxLatencyMs,  HardType::kMaxHops,
    HardType::kKEdgeDisjoint, HardType::kMinCapReserve};
constexpr std::array<std::string_view, 5> kSoftNames = {
    "max_utilization", "minimize_latency", "minimize_hops", "load_balance",
    "path_stability"};
constexpr std::array<SoftType, 5> kSoftTypes = {
    SoftType::kMaxUtilization, SoftType::kMinimizeLatency,
    SoftType::kMinimizeHops, SoftType::kLoadBalance, SoftType::kPathStability};
constexpr std::array<std::string_view, 4> kPriorityNames = {
    "critical", "high", "medium", "low"};
constexpr std::array<std::string_view, 3> kFallbackNames = {
    "reject_if_hard_infeasible", "relax_soft_first", "report_unsat_core"};
constexpr std::array<std::string_view, 6> kTargetKindNames = {
    "node", "plane", "edge", "flow_selector", "edges", "region"};
constexpr std::array<std::string_view, 8> kTrafficClasses = {
    "financial", "emergency", "military", "consumer",
    "iot",       "video",     "voice",    "bulk"};
constexpr std::array<std::string_view, 6> kEvents = {
    "solar_storm",      "eclipse",         "ground_station_outage",
    "traffic_surge",    "link_degradation", "debris_warning"};

template <typename E, std::size_t N>
std::optional<E> lookup(const std::array<std::string_view, N>& names,
                        std::string_view s) {
  for (std::size_t i = 0; i < N; ++i)
    if (names[i] == s) return static_cast<E>(i);
  return std::nullopt;
}

std::optional<long long> parse_id(std::string_view s) {
  if (s.empty()) return std::nullopt;
  for (char c : s)
    if (c < '0' || c > '9') return std::nullopt;
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string type_name(const json& j) {
  switch (j.type()) {
    case json::value_t::null: return "null";
    case json::value_t::boolean: return "boolean";
    case json::value_t::string: return "string";
    case json::value_t::array: return "array";
    case json::value_t::object: return "object";
    default: return "number";
  }
}

class ProgramReader {
 public:
  ParseResult read(const json& doc) {
    ConstraintProgram p;
    if (!doc.is_object()) {
      err("$", "expected a JSON object, got " + type_name(doc));
      return finish(std::move(p));
    }
    static constexpr std::array<std::string_view, 8> kKeys = {
        "intent_id",        "flow_selectors",   "hard_constraints",
        "soft_constraints", "event_conditions", "objective_weights",
        "priority",         "fallback_policy"};
    reject_unknown(doc, "", kKeys);

    if (auto it = doc.find("intent_id"); it == doc.end()) {
      err("intent_id", "missing required field");
    } else if (!it->is_string() || it->get<std::string>().empty()) {
      err("intent_id", "expected a non-empty string");
    } else {
      p.intent_id = it->get<std::string>();
    }

    if (auto it = doc.find("priority"); it == doc.end()) {
      err("priority", "missing required field");
    } else if (!it->is_string()) {
      err("priority", "expected a string, got " + type_name(*it));
    } else if (auto pr = priority_from_string(it->get<std::string>())) {
      p.priority = *pr;
    } else {
      err("priority", "invalid priority \"" + it->get<std::string>() +
                          "\" (expected critical|high|medium|low)");
    }

    if (auto it = doc.find("fallback_policy"); it != doc.end()) {
      if (!it->is_string()) {
        err("fallback_policy", "expected a string, got " + type_name(*it));
      } else if (auto fb = fallback_from_string(it->get<std::string>())) {
        p.fallback_policy = *fb;
      } else {
        err("fallback_policy",
            "invalid fallback policy \"" + it->get<std::string>() + "\"");
      }
    }

    if (auto it = doc.find("flow_selectors"); it != doc.end()) {
      if (!it->is_array()) {
        err("flow_selectors", "expected an array");
      } else {
        for (std::size_t i = 0; i < it->size(); ++i)
          p.flow_selectors.push_back(
              read_selector((*it)[i], "flow_selectors[" + std::to_string(i) +
                                          "]"));
      }
    }

    if (auto it = doc.find("hard_constraints"); it == doc.end()) {
      err("hard_constraints", "missing required field");
    } else if (!it->is_array()) {
      err("hard_constraints", "expected an array");
    } else {
      for (std::size_t i = 0; i < it->size(); ++i)
        if (auto h = read_hard((*it)[i], "hard_constraints[" +
                                             std::to_string(i) + "]"))
          p.hard_constraints.push_back(std::move(*h));
    }

    if (auto it = doc.find("soft_constraints"); it != doc.end()) {
      if (!it->is_array()) {
        err("soft_constraints", "expected an array");
      } else {
        for (std::size_t i = 0; i < it->size(); ++i)
          if (auto s = read_soft((*it)[i], "soft_constraints[" +
                                               std::to_string(i) + "]"))
            p.soft_constraints.push_back(std::move(*s));
      }
    }

    if (auto it = doc.find("event_conditions"); it != doc.end()) {
      if (!it->is_array()) {
        err("event_conditions", "expected an array");
      } else {
        for (std::size_t i = 0; i < it->size(); ++i) {
          const json& e = (*it)[i];
          std::string path = "event_conditions[" + std::to_string(i) + "]";
          if (e.is_string()) {
            p.event_conditions.push_back(e.get<std::string>());
          } else if (e.is_object() && e.size() == 1 && e.contains("name") &&
                     e["name"].is_string()) {
            p.event_conditions.push_back(e["name"].get<std::string>());
          } else {
            err(path, "expected an event name string");
          }
        }
      }
    }

    if (auto it = doc.find("objective_weights"); it != doc.end()) {
      if (!it->is_object()) {
        err("objective_weights", "expected an object of numbers");
      } else {
        for (const auto& [k, v] : it->items()) {
          if (!v.is_number())
            err("objective_weights." + k, "expected a number");
          else
            p.objective_weights[k] = v.get<double>();
        }
      }
    }
    return finish(std::move(p));
  }

 private:
  std::vector<std::string> errors_;

  void err(const std::string& path, const std::string& msg) {
    errors_.push_back(path + ": " + msg);
  }

  template <std::size_t N>
  void reject_unknown(const json& obj, const std::string& prefix,
                      const std::array<std::string_view, N>& allowed) {
    for (const auto& [k, v] : obj.items()) {
      if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
        err(prefix.empty() ? k : prefix + "." + k, "unknown field");
    }
  }

  ParseResult finish(ConstraintProgram p) {
    ParseResult r;
    if (errors_.empty())
      r.program = std::move(p);
    else
      r.errors = std::move(errors_);
    return r;
  }

  std::optional<std::string> opt_string(const json& obj, const char* key,
                                        const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_string() || it->get<std::string>().empty()) {
      err(path + "." + key, "expected a non-empty string");
      return std::nullopt;
    }
    return it->get<std::string>();
  }

  std::optional<long long> opt_int(const json& obj, const char* key,
                                   const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (it->is_number_integer()) return it->get<long long>();
    err(path + "." + key, "expected an integer, got " + type_name(*it) +
                              (it->is_number() ? " " + it->dump() : ""));
    return std::nullopt;
  }

  FlowSelector read_selector(const json& j, const std::string& path) {
    FlowSelector f;
    if (!j.is_object()) {
      err(path, "expected an object");
      return f;
    }
    static constexpr std::array<std::string_view, 7> kKeys = {
        "traffic_class", "src_region", "dst_region", "src_node",
        "dst_node",      "src_plane",  "dst_plane"};
    reject_unknown(j, path, kKeys);
    f.traffic_class = opt_string(j, "traffic_class", path);
    f.src_region = opt_string(j, "src_region", path);
    f.dst_region = opt_string(j, "dst_region", path);
    f.src_node = opt_int(j, "src_node", path);
    f.dst_node = opt_int(j, "dst_node", path);
    f.src_plane = opt_int(j, "src_plane", path);
    f.dst_plane = opt_int(j, "dst_plane", path);
    return f;
  }

  std::optional<Target> read_target(const json& j, const std::string& path) {
    auto it = j.find("target");
    if (it == j.end()) {
      err(path + ".target", "missing required field");
      return std::nullopt;
    }
    if (!it->is_string() || it->get<std::string>().empty()) {
      err(path + ".target", "expected a non-empty target string");
      return std::nullopt;
    }
    auto t = parse_target(it->get<std::string>());
    if (!t.target) err(path + ".target", t.error);
    return t.target;
  }

  std::optional<HardConstraint> read_hard(const json& j,
                                          const std::string& path) {
    if (!j.is_object()) {
      err(path, "expected an object");
      return std::nullopt;
    }
    static constexpr std::array<std::string_view, 4> kKeys = {
        "type", "target", "value", "condition"};
    reject_unknown(j, path, kKeys);
    HardConstraint h;
    bool ok = true;
    if (auto it = j.find("type"); it == j.end()) {
      err(path + ".type", "missing required field");
      ok = false;
    } else if (!it->is_string() || it->get<std::string>().empty()) {
      err(path + ".type", "expected a non-empty string");
      ok = false;
    } else if (auto t = hard_type_from_string(it->get<std::string>())) {
      h.type = *t;
    } else {
      err(path + ".type",
          "unknown hard constraint type \"" + it->get<std::string>() + "\"");
      ok = false;
    }
    auto target = read_target(j, path);
    if (target)
      h.target = *target;
    else
      ok = false;
    if (auto it = j.find("value"); it != j.end() && !it->is_null()) {
      if (!it->is_number()) {
        err(path + ".value", "expected a number, got " + type_name(*it));
        ok = false;
      } else {
        h.value = it->get<double>();
      }
    }
    h.condition = opt_string(j, "condition", path);
    if (!ok) return std::nullopt;
    return h;
  }

  std::optional<SoftConstraint> read_soft(const json& j,
                                          const std::string& path) {
    if (!j.is_object()) {
      err(path, "expected an object");
      return std::nullopt;
    }
    static constexpr std::array<std::string_view, 4> kKeys = {
        "type", "target", "value", "penalty_weight"};
    reject_unknown(j, path, kKeys);
    SoftConstraint s;
    bool ok = true;
    if (auto it = j.find("type"); it == j.end()) {
      err(path + ".type", "missing required field");
      ok = false;
    } else if (!it->is_string()) {
      err(path + ".type", "expected a string");
      ok = false;
    } else if (auto t = soft_type_from_string(it->get<std::string>())) {
      s.type = *t;
    } else {
      err(path + ".type",
          "unknown soft constraint type \"" + it->get<std::string>() + "\"");
      ok = false;
    }
    auto target = read_target(j, path);
    if (target)
      s.target = *target;
    else
      ok = false;
    if (auto it = j.find("value"); it == j.end()) {
      err(path + ".value", "missing required field");
      ok = false;
    } else if (!it->is_number()) {
      err(path + ".value", "expected a number, got " + type_name(*it));
      ok = false;
    } else {
      s.value = it->get<double>();
    }
    if (auto it = j.find("penalty_weight"); it != j.end()) {
      if (!it->is_number()) {
        err(path + ".penalty_weight", "expected a number");
        ok = false;
      } else {
        s.penalty_weight = it->get<double>();
      }
    }
    if (!ok) return std::nullopt;
    return s;
  }
};

json selector_to_json(const FlowSelector& f) {
  json j = json::object();
  if (f.traffic_class) j["traffic_class"] = *f.traffic_class;
  if (f.src_region) j["src_region"] = *f.src_region;
  if (f.dst_region) j["dst_region"] = *f.dst_region;
  if (f.src_node) j["src_node"] = *f.src_node;
  if (f.dst_node) j["dst_node"] = *f.dst_node;
  if (f.src_plane) j["src_plane"] = *f.src_plane;
  if (f.dst_plane) j["dst_plane"] = *f.dst_plane;
  return j;
}

json hard_to_json(const HardConstraint& h) {
  json j = {{"type", to_string(h.type)}, {"target", h.target.to_string()}};
  if (h.value) j["value"] = *h.value;
  if (h.condition) j["condition"] = *h.condition;
  return j;
}

json soft_to_json(const SoftConstraint& s) {
  return {{"type", to_string(s.type)},
          {"target", s.target.to_string()},
          {"value", s.value},
          {"penalty_weight", s.penalty_weight}};
}

std::string fmt_number(double v) {
  return json(v).dump();
}

}  // namespace

std::string_view to_string(HardType t) {
  return kHardNames[static_cast<std::size_t>(t)];
}
std::string_view to_string(SoftType t) {
  return kSoftNames[static_cast<std::size_t>(t)];
}
std::string_view to_string(Priority p) {
  return kPriorityNames[static_cast<std::size_t>(p)];
}
std::string_view to_string(FallbackPolicy f) {
  return kFallbackNames[static_cast<std::size_t>(f)];
}
std::string_view to_string(TargetKind k) {
  return kTargetKindNames[static_cast<std::size_t>(k)];
}
std::optional<HardType> hard_type_from_string(std::string_view s) {
  return lookup<HardType>(kHardNames, s);
}
std::optional<SoftType> soft_type_from_string(std::string_view s) {
  return lookup<SoftType>(kSoftNames, s);
}
std::optional<Priority> priority_from_string(std::string_view s) {
  return lookup<Priority>(kPriorityNames, s);
}
std::optional<FallbackPolicy> fallback_from_string(std::string_view s) {
  return lookup<FallbackPolicy>(kFallbackNames, s);
}

std::span<const HardType> all_hard_types() { return kHardTypes; }
std::span<const SoftType> all_soft_types() { return kSoftTypes; }
std::span<const std::string_view> traffic_class_catalog() {
  return kTrafficClasses;
}
std::span<const std::string_view> event_catalog() { return kEvents; }
bool is_traffic_class(std::string_view s) {
  return std::find(kTrafficClasses.begin(), kTrafficClasses.end(), s) !=
         kTrafficClasses.end();
}
bool is_event(std::string_view s) {
  return std::find(kEvents.begin(), kEvents.end(), s) != kEvents.end();
}

TargetKind required_target_kind(HardType t) {
  switch (t) {
    case HardType::kDisableNode:
    case HardType::kRerouteAway:
      return TargetKind::kNode;
    case HardType::kDisablePlane:
      return TargetKind::kPlane;
    case HardType::kDisableEdge:
      return TargetKind::kEdge;
    case HardType::kAvoidRegion:
      return TargetKind::kRegion;
    case HardType::kAvoidLatitude:
      return TargetKind::kEdges;
    case HardType::kMaxLatencyMs:
    case HardType::kMaxHops:
    case HardType::kKEdgeDisjoint:
    case HardType::kMinCapReserve:
      return TargetKind::kFlowSelector;
  }
  return TargetKind::kEdges;
}

bool hard_type_needs_value(HardType t) {
  switch (t) {
    case HardType::kAvoidLatitude:
    case HardType::kMaxLatencyMs:
    case HardType::kMaxHops:
    case HardType::kKEdgeDisjoint:
    case HardType::kMinCapReserve:
      return true;
    default:
      return false;
  }
}

std::string Target::to_string() const {
  switch (kind) {
    case TargetKind::kNode: return "node:" + std::to_string(id);
    case TargetKind::kPlane: return "plane:" + std::to_string(id);
    case TargetKind::kEdge:
      return "edge:(" + std::to_string(id) + "," + std::to_string(id2) + ")";
    case TargetKind::kFlowSelector:
      return "flow_selector:" + std::to_string(id);
    case TargetKind::kEdges: return "edges";
    case TargetKind::kRegion: return "region:" + name;
  }
  return {};
}

TargetParse parse_target(std::string_view text) {
  auto fail = [&](std::string why) {
    return TargetParse{std::nullopt, "invalid target \"" + std::string(text) +
                                         "\": " + std::move(why)};
  };
  if (text == "edges") return {Target::edges(), {}};
  auto colon = text.find(':');
  if (colon == std::string_view::npos) return fail("unknown target kind");
  std::string_view kind = text.substr(0, colon);
  std::string_view rest = text.substr(colon + 1);
  if (kind == "node" || kind == "plane" || kind == "flow_selector") {
    auto id = parse_id(rest);
    if (!id) return fail("expected a non-negative base-10 integer id");
    if (kind == "node") return {Target::node(*id), {}};
    if (kind == "plane") return {Target::plane(*id), {}};
    return {Target::flow(*id), {}};
  }
  if (kind == "edge") {
    if (rest.size() < 5 || rest.front() != '(' || rest.back() != ')')
      return fail("expected edge:(<u>,<v>)");
    std::string_view inner = rest.substr(1, rest.size() - 2);
    auto comma = inner.find(',');
    if (comma == std::string_view::npos) return fail("expected edge:(<u>,<v>)");
    auto u = parse_id(inner.substr(0, comma));
    auto v = parse_id(inner.substr(comma + 1));
    if (!u || !v) return fail("malformed edge endpoints");
    return {Target::edge(*u, *v), {}};
  }
  if (kind == "region") {
    if (rest.empty()) return fail("empty region name");
    for (char c : rest)
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r')
        return fail("whitespace in region name");
    return {Target::region(std::string(rest)), {}};
  }
  return fail("unknown target kind \"" + std::string(kind) + "\"");
}

bool FlowSelector::empty() const {
  return !traffic_class && !src_region && !dst_region && !src_node &&
         !dst_node && !src_plane && !dst_plane;
}

ParseResult parse_program(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    ParseResult r;
    r.errors.push_back(std::string("$: syntax error: ") + e.what());
    return r;
  }
  try {
    return ProgramReader().read(doc);
  } catch (const json::exception& e) {
    ParseResult r;
    r.errors.push_back(std::string("$: ") + e.what());
    return r;
  }
}

std::string hard_constraint_key(const HardConstraint& h) {
  std::string k = std::string(to_string(h.type)) + "|" + h.target.to_string() +
                  "|" + (h.value ? fmt_number(*h.value) : "null");
  if (h.condition) k += "|" + *h.condition;
  return k;
}

std::string soft_constraint_key(const SoftConstraint& s) {
  return std::string(to_string(s.type)) + "|" + s.target.to_string() + "|" +
         fmt_number(s.value) + "|" + fmt_number(s.penalty_weight);
}

ConstraintProgram canonicalize(ConstraintProgram p) {
  std::stable_sort(p.hard_constraints.begin(), p.hard_constraints.end(),
                   [](const HardConstraint& a, const HardConstraint& b) {
                     return hard_constraint_key(a) < hard_constraint_key(b);
                   });
  std::stable_sort(p.soft_constraints.begin(), p.soft_constraints.end(),
                   [](const SoftConstraint& a, const SoftConstraint& b) {
                     return soft_constraint_key(a) < soft_constraint_key(b);
                   });
  std::sort(p.event_conditions.begin(), p.event_conditions.end());
  return p;
}

std::string serialize_program(const ConstraintProgram& program,
                              SerializeOptions opts) {
  const ConstraintProgram& p =
      opts.canonical_order ? canonicalize(program) : program;
  json j;
  j["intent_id"] = p.intent_id;
  j["flow_selectors"] = json::array();
  for (const auto& f : p.flow_selectors)
    j["flow_selectors"].push_back(selector_to_json(f));
  j["hard_constraints"] = json::array();
  for (const auto& h : p.hard_constraints)
    j["hard_constraints"].push_back(hard_to_json(h));
  j["soft_constraints"] = json::array();
  for (const auto& s : p.soft_constraints)
    j["soft_constraints"].push_back(soft_to_json(s));
  j["event_conditions"] = p.event_conditions;
  j["objective_weights"] = json::object();
  for (const auto& [k, v] : p.objective_weights) j["objective_weights"][k] = v;
  j["priority"] = to_string(p.priority);
  j["fallback_policy"] = to_string(p.fallback_policy);
  return opts.pretty ? j.dump(2) : j.dump();
}

bool selector_matches(const FlowSelector& f, NodeId src, NodeId dst,
                      const std::optional<std::string>& traffic_class,
                      const TopologySnapshot& snapshot) {
  if (f.traffic_class && traffic_class != f.traffic_class) return false;
  if (f.src_node && *f.src_node != src) return false;
  if (f.dst_node && *f.dst_node != dst) return false;
  if (f.src_plane && *f.src_plane != snapshot.plane_of(src)) return false;
  if (f.dst_plane && *f.dst_plane != snapshot.plane_of(dst)) return false;
  auto in_region = [&](const std::string& name, NodeId n) {
    const Region* r = snapshot.regions().find(name);
    if (!r) throw EntityError("unknown region '" + name + "'");
    const auto& st = snapshot.node(n);
    return r->contains(st.latitude_deg, st.longitude_deg);
  };
  if (f.src_region && !in_region(*f.src_region, src)) return false;
  if (f.dst_region && !in_region(*f.dst_region, dst)) return false;
  return true;
}

}  // namespace intentroute
