#include "intentroute/harness.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "embedded_data.h"

namespace intentroute {
namespace {

using nlohmann::json;

std::string lower(std::string s) {
  for (char& c : s)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Nearest-rank percentile.
double percentile_of(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  auto rank = static_cast<std::size_t>(std::ceil(q * v.size()));
  rank = std::clamp<std::size_t>(rank, 1, v.size());
  return v[rank - 1];
}

constexpr std::array<CorruptionType, 8> kCorruptions = {
    CorruptionType::kMissingIntentId,   CorruptionType::kInvalidPriority,
    CorruptionType::kOutOfRangeNode,    CorruptionType::kInvalidTrafficClass,
    CorruptionType::kTypeMismatch,      CorruptionType::kNegativeLatency,
    CorruptionType::kLatencyBelowMinimum, CorruptionType::kInvalidPlane};

}  // namespace

std::string_view to_string(Category c) {
  switch (c) {
    case Category::kSingle: return "single";
    case Category::kCompositional: return "compositional";
    case Category::kConditional: return "conditional";
    case Category::kInfeasible: return "infeasible";
  }
  return "?";
}

std::optional<Category> category_from_string(std::string_view s) {
  for (Category c : kAllCategories)
    if (to_string(c) == s) return c;
  return std::nullopt;
}

bool BenchmarkEntry::has_tag(std::string_view t) const {
  return std::find(tags.begin(), tags.end(), t) != tags.end();
}

EventSet BenchmarkEntry::declared_events() const {
  return EventSet(truth.event_conditions.begin(), truth.event_conditions.end());
}

std::vector<BenchmarkEntry> parse_benchmark(std::string_view text) {
  json doc = json::parse(text.begin(), text.end(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("entries"))
    throw ConfigError("benchmark must be an object with an entries array");
  std::vector<BenchmarkEntry> out;
  try {
    for (const auto& e : doc.at("entries")) {
      BenchmarkEntry b;
      b.id = e.at("id").get<std::string>();
      auto cat = category_from_string(e.at("category").get<std::string>());
      if (!cat) throw ConfigError(b.id + ": unknown category");
      b.category = *cat;
      b.intent_text = e.at("intent_text").get<std::string>();
      ParseResult parsed = parse_program(e.at("constraint_program").dump());
      if (!parsed.ok())
        throw ConfigError(b.id + ": ground truth does not parse: " +
                          parsed.errors.front());
      b.truth = std::move(*parsed.program);
      b.difficulty = e.value("difficulty", "medium");
      b.tags = e.value("tags", std::vector<std::string>{});
      out.push_back(std::move(b));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("benchmark: ") + e.what());
  }
  return out;
}

std::vector<BenchmarkEntry> load_benchmark(const std::string& path) {
  return parse_benchmark(read_file(path));
}

const std::vector<BenchmarkEntry>& builtin_benchmark() {
  static const std::vector<BenchmarkEntry> bench =
      parse_benchmark(embedded::kBenchmarkJson);
  return bench;
}

bool numeric_eq(double a, double b) {
  if (a == b) return true;
  if (!std::isfinite(a) || !std::isfinite(b)) return false;
  const double diff = std::abs(a - b);
  return diff <= std::max(1e-6 * std::max(std::abs(a), std::abs(b)), 1e-6);
}

json ScoreReport::to_json() const {
  return {{"compiled", compiled},
          {"types_match", types_match},
          {"targets_match", targets_match},
          {"full_match", full_match},
          {"diffs", diffs}};
}

namespace {

struct Item {
  std::string type;
  std::string target;
  std::optional<double> value;
  std::string condition;
};

std::vector<Item> items_of(const ConstraintProgram& p) {
  std::vector<Item> out;
  for (const auto& h : p.hard_constraints)
    out.push_back({"hard:" + std::string(to_string(h.type)),
                   lower(h.target.to_string()), h.value,
                   lower(h.condition.value_or(""))});
  for (const auto& s : p.soft_constraints)
    out.push_back({"soft:" + std::string(to_string(s.type)),
                   lower(s.target.to_string()), s.value, ""});
  std::sort(out.begin(), out.end(), [](const Item& a, const Item& b) {
    if (a.type != b.type) return a.type < b.type;
    if (a.target != b.target) return a.target < b.target;
    return a.value.value_or(-1e300) < b.value.value_or(-1e300);
  });
  return out;
}

std::string selector_text(const FlowSelector& f) {
  ConstraintProgram tmp;
  tmp.flow_selectors = {f};
  return lower(json::parse(serialize_program(tmp))["flow_selectors"][0].dump());
}

}  // namespace

ScoreReport score_program(const std::optional<ConstraintProgram>& candidate,
                          bool compiled, const ConstraintProgram& truth) {
  ScoreReport r;
  if (!candidate || !compiled) {
    r.diffs.push_back("not compiled");
    return r;
  }
  r.compiled = true;
  const auto got = items_of(*candidate);
  const auto want = items_of(truth);

  std::vector<std::string> got_types, want_types;
  for (const auto& i : got) got_types.push_back(i.type);
  for (const auto& i : want) want_types.push_back(i.type);
  std::sort(got_types.begin(), got_types.end());
  std::sort(want_types.begin(), want_types.end());
  if (got_types != want_types) {
    r.diffs.push_back("constraint types differ");
    return r;
  }
  r.types_match = true;

  for (std::size_t i = 0; i < got.size(); ++i) {
    if (got[i].target != want[i].target)
      r.diffs.push_back(want[i].type + ": target " + got[i].target +
                        " != " + want[i].target);
  }
  if (!r.diffs.empty()) return r;
  r.targets_match = true;

  for (std::size_t i = 0; i < got.size(); ++i) {
    const auto& a = got[i];
    const auto& b = want[i];
    const bool same_value = a.value.has_value() == b.value.has_value() &&
                            (!a.value || numeric_eq(*a.value, *b.value));
    if (!same_value)
      r.diffs.push_back(b.type + " " + b.target + ": value differs");
    if (a.condition != b.condition)
      r.diffs.push_back(b.type + " " + b.target + ": condition differs");
  }
  if (candidate->flow_selectors.size() != truth.flow_selectors.size()) {
    r.diffs.push_back("flow selector count differs");
  } else {
    for (std::size_t i = 0; i < truth.flow_selectors.size(); ++i) {
      if (selector_text(candidate->flow_selectors[i]) !=
          selector_text(truth.flow_selectors[i]))
        r.diffs.push_back("flow_selectors[" + std::to_string(i) +
                          "] differs");
    }
  }
  r.full_match = r.diffs.empty();
  return r;
}

std::string_view to_string(CorruptionType t) {
  switch (t) {
    case CorruptionType::kMissingIntentId: return "missing_intent_id";
    case CorruptionType::kInvalidPriority: return "invalid_priority";
    case CorruptionType::kOutOfRangeNode: return "out_of_range_node";
    case CorruptionType::kInvalidTrafficClass: return "invalid_traffic_class";
    case CorruptionType::kTypeMismatch: return "type_mismatch";
    case CorruptionType::kNegativeLatency: return "negative_latency";
    case CorruptionType::kLatencyBelowMinimum: return "latency_below_minimum";
    case CorruptionType::kInvalidPlane: return "invalid_plane";
  }
  return "?";
}

std::span<const CorruptionType> all_corruption_types() { return kCorruptions; }

CorruptedProgram corrupt_program(const ConstraintProgram& p,
                                 CorruptionType type, std::uint64_t seed,
                                 const WalkerConfig& constellation) {
  json doc = json::parse(serialize_program(p));
  CorruptedProgram out;
  out.spec.type = type;
  out.spec.seed = seed;
  std::mt19937_64 rng(seed);

  // Candidate sites: (json pointer to the field, reported field path).
  struct Site {
    json::json_pointer ptr;
    std::string path;
    json value;
  };
  std::vector<Site> sites;
  auto hard_site = [&](std::size_t i, const char* field, json value) {
    const std::string base = "/hard_constraints/" + std::to_string(i) + "/";
    sites.push_back({json::json_pointer(base + field),
                     "hard_constraints[" + std::to_string(i) + "]." + field,
                     std::move(value)});
  };
  auto selector_site = [&](std::size_t i, const char* field, json value) {
    sites.push_back(
        {json::json_pointer("/flow_selectors/" + std::to_string(i) + "/" +
                            field),
         "flow_selectors[" + std::to_string(i) + "]." + field,
         std::move(value)});
  };
  const long long bad_node = constellation.node_count() + 54;
  const long long bad_plane = constellation.planes + 5;

  switch (type) {
    case CorruptionType::kMissingIntentId:
      doc.erase("intent_id");
      out.spec.field_path = "intent_id";
      out.spec.injected_value = nullptr;
      out.text = doc.dump();
      return out;
    case CorruptionType::kInvalidPriority:
      doc["priority"] = "urgent";
      out.spec.field_path = "priority";
      out.spec.injected_value = "urgent";
      out.text = doc.dump();
      return out;
    case CorruptionType::kOutOfRangeNode:
      for (std::size_t i = 0; i < p.hard_constraints.size(); ++i)
        if (p.hard_constraints[i].target.kind == TargetKind::kNode)
          hard_site(i, "target", "node:" + std::to_string(bad_node));
      for (std::size_t i = 0; i < p.flow_selectors.size(); ++i) {
        if (p.flow_selectors[i].src_node) selector_site(i, "src_node", bad_node);
        if (p.flow_selectors[i].dst_node) selector_site(i, "dst_node", bad_node);
      }
      break;
    case CorruptionType::kInvalidTrafficClass:
      for (std::size_t i = 0; i < p.flow_selectors.size(); ++i)
        selector_site(i, "traffic_class", "gaming");
      break;
    case CorruptionType::kTypeMismatch:
      for (std::size_t i = 0; i < p.hard_constraints.size(); ++i) {
        const auto kind = required_target_kind(p.hard_constraints[i].type);
        hard_site(i, "target", kind == TargetKind::kNode ? "edges" : "node:42");
      }
      break;
    case CorruptionType::kNegativeLatency:
    case CorruptionType::kLatencyBelowMinimum:
      for (std::size_t i = 0; i < p.hard_constraints.size(); ++i)
        if (p.hard_constraints[i].type == HardType::kMaxLatencyMs)
          hard_site(i, "value",
                    type == CorruptionType::kNegativeLatency ? -50.0 : 0.5);
      break;
    case CorruptionType::kInvalidPlane:
      for (std::size_t i = 0; i < p.hard_constraints.size(); ++i)
        if (p.hard_constraints[i].target.kind == TargetKind::kPlane)
          hard_site(i, "target", "plane:" + std::to_string(bad_plane));
      for (std::size_t i = 0; i < p.flow_selectors.size(); ++i) {
        if (p.flow_selectors[i].src_plane)
          selector_site(i, "src_plane", bad_plane);
        if (p.flow_selectors[i].dst_plane)
          selector_site(i, "dst_plane", bad_plane);
      }
      break;
  }
  if (sites.empty())
    throw InapplicableCorruption(std::string(to_string(type)) +
                                 ": program has no applicable field");
  const Site& s =
      sites[std::uniform_int_distribution<std::size_t>(0, sites.size() - 1)(rng)];
  doc[s.ptr] = s.value;
  out.spec.field_path = s.path;
  out.spec.injected_value = s.value;
  out.text = doc.dump();
  return out;
}

std::vector<int> AuditResult::covering_passes() const {
  std::set<int> passes;
  for (const auto& t : types)
    for (const auto& [pass, n] : t.caught_by_pass)
      if (n > 0) passes.insert(pass);
  return {passes.begin(), passes.end()};
}

json AuditResult::to_json() const {
  json j;
  j["schema_version"] = kResultsSchemaVersion;
  j["seed"] = seed;
  j["eligible_programs"] = eligible_programs;
  j["injections"] = injections;
  j["detected"] = detected;
  j["detection_rate"] = injections ? static_cast<double>(detected) / injections : 0.0;
  j["covering_passes"] = covering_passes();
  j["types"] = json::array();
  for (const auto& t : types) {
    json by_pass = json::object();
    for (const auto& [pass, n] : t.caught_by_pass) by_pass[std::to_string(pass)] = n;
    j["types"].push_back({{"type", to_string(t.type)},
                          {"injections", t.injections},
                          {"detected", t.detected},
                          {"caught_by_pass", by_pass},
                          {"misses", t.misses}});
  }
  return j;
}

AuditResult run_corruption_audit(const std::vector<BenchmarkEntry>& bench,
                                 const TopologySnapshot& snapshot,
                                 int n_per_type, std::uint64_t seed) {
  AuditResult audit;
  audit.seed = seed;
  // Only programs that are clean through pass 6 can attribute a detection to
  // the injected field.
  std::vector<const BenchmarkEntry*> eligible;
  for (const auto& e : bench) {
    ValidationReport r = validate(e.truth, snapshot, e.declared_events());
    if (r.clean_through(6)) eligible.push_back(&e);
  }
  audit.eligible_programs = static_cast<int>(eligible.size());

  for (std::size_t ti = 0; ti < kCorruptions.size(); ++ti) {
    const CorruptionType type = kCorruptions[ti];
    CorruptionTypeResult tr;
    tr.type = type;
    std::mt19937_64 rng(seed * 1000003ULL + ti);
    for (int j = 0; j < n_per_type && !eligible.empty(); ++j) {
      std::optional<CorruptedProgram> c;
      const BenchmarkEntry* entry = nullptr;
      for (int tries = 0; tries < 10000 && !c; ++tries) {
        entry = eligible[std::uniform_int_distribution<std::size_t>(
            0, eligible.size() - 1)(rng)];
        try {
          c = corrupt_program(entry->truth, type, rng(), snapshot.config());
        } catch (const InapplicableCorruption&) {
        }
      }
      if (!c) break;
      ++tr.injections;
      ValidationReport r =
          validate_text(c->text, snapshot, entry->declared_events());
      bool named = false;
      for (const auto& pr : r.passes) {
        bool here = false;
        for (const auto& e : pr.errors)
          if (e.find(c->spec.field_path) != std::string::npos) here = true;
        if (here) {
          ++tr.caught_by_pass[pr.pass];
          named = true;
        }
      }
      if (r.outcome == Outcome::kReject && named) {
        ++tr.detected;
      } else {
        tr.misses.push_back(entry->id + " " + c->spec.field_path + " -> " +
                            std::string(to_string(r.outcome)));
      }
    }
    audit.injections += tr.injections;
    audit.detected += tr.detected;
    audit.types.push_back(std::move(tr));
  }
  return audit;
}

void OutcomeCounts::add(Outcome o) {
  switch (o) {
    case Outcome::kAccept: ++accept; break;
    case Outcome::kReject: ++reject; break;
    case Outcome::kAbstain: ++abstain; break;
  }
}

int ConfusionResult::total() const {
  int n = 0;
  for (const auto& [c, cell] : cells) n += cell.total();
  return n;
}

double ConfusionResult::decided_rate() const {
  int decided = 0;
  for (const auto& [c, cell] : cells) decided += cell.accept + cell.reject;
  const int n = total();
  return n ? static_cast<double>(decided) / n : 0.0;
}

json ConfusionResult::to_json() const {
  json j;
  j["schema_version"] = kResultsSchemaVersion;
  j["categories"] = json::object();
  for (Category c : kAllCategories) {
    auto it = cells.find(c);
    const OutcomeCounts cell = it == cells.end() ? OutcomeCounts{} : it->second;
    j["categories"][std::string(to_string(c))] = {{"accept", cell.accept},
                                                  {"reject", cell.reject},
                                                  {"abstain", cell.abstain},
                                                  {"total", cell.total()}};
  }
  j["total"] = total();
  j["unsafe_accepts"] = unsafe;
  j["decided_rate"] = decided_rate();
  j["entries"] = json::array();
  for (const auto& e : entries)
    j["entries"].push_back({{"id", e.id},
                            {"category", to_string(e.category)},
                            {"outcome", to_string(e.outcome)},
                            {"has_program", e.has_program}});
  return j;
}

ConfusionResult confusion_from(const std::vector<EntryOutcome>& entries) {
  ConfusionResult c;
  for (Category cat : kAllCategories) c.cells[cat];
  for (const auto& e : entries) {
    c.cells[e.category].add(e.outcome);
    if (e.category == Category::kInfeasible && e.outcome == Outcome::kAccept)
      ++c.unsafe;
  }
  c.entries = entries;
  return c;
}

ConfusionResult run_confusion(const std::vector<BenchmarkEntry>& bench,
                              const TopologySnapshot& snapshot,
                              const ValidateOptions& options) {
  std::vector<EntryOutcome> outcomes;
  for (const auto& e : bench) {
    ValidationReport r = validate(e.truth, snapshot, e.declared_events(), options);
    outcomes.push_back({e.id, e.category, r.outcome, true});
  }
  return confusion_from(outcomes);
}

double BenchRunResult::rate(bool ScoreReport::*field) const {
  if (entries.empty()) return 0.0;
  int n = 0;
  for (const auto& e : entries) n += e.score.*field;
  return static_cast<double>(n) / entries.size();
}

double BenchRunResult::rate_in(Category c, bool ScoreReport::*field) const {
  int n = 0, total = 0;
  for (const auto& e : entries) {
    if (e.category != c) continue;
    ++total;
    n += e.score.*field;
  }
  return total ? static_cast<double>(n) / total : 0.0;
}

json BenchRunResult::to_json() const {
  json j;
  j["schema_version"] = kResultsSchemaVersion;
  j["mode"] = mode;
  j["backend"] = backend;
  j["rates"] = {{"compiled", rate(&ScoreReport::compiled)},
                {"types_match", rate(&ScoreReport::types_match)},
                {"targets_match", rate(&ScoreReport::targets_match)},
                {"full_match", rate(&ScoreReport::full_match)}};
  j["by_category"] = json::object();
  for (Category c : kAllCategories)
    j["by_category"][std::string(to_string(c))] = {
        {"compiled", rate_in(c, &ScoreReport::compiled)},
        {"full_match", rate_in(c, &ScoreReport::full_match)}};
  int first_try = 0;
  for (const auto& e : entries) first_try += e.first_try;
  j["first_try"] = first_try;
  j["confusion"] = confusion.to_json();
  j["entries"] = json::array();
  for (const auto& e : entries)
    j["entries"].push_back(
        {{"id", e.id},
         {"category", to_string(e.category)},
         {"score", e.score.to_json()},
         {"outcome", e.outcome ? json(to_string(*e.outcome)) : json(nullptr)},
         {"attempts", e.attempts},
         {"first_try", e.first_try}});
  return j;
}

BenchRunResult run_benchmark(const std::vector<BenchmarkEntry>& bench,
                             const CompilerConfig& config,
                             const TopologySnapshot& snapshot,
                             ChatBackend* backend, std::string mode) {
  BenchRunResult run;
  run.mode = std::move(mode);
  run.backend = std::string(to_string(config.backend));
  std::vector<EntryOutcome> outcomes;
  for (const auto& e : bench) {
    CompileResult cr = compile(e.intent_text, config, snapshot, backend);
    BenchEntryResult br;
    br.id = e.id;
    br.category = e.category;
    br.attempts = static_cast<int>(cr.trace.attempts.size());
    br.first_try = cr.trace.first_try;

    const std::optional<ConstraintProgram>& cand =
        cr.program ? cr.program : cr.last_parsed;
    // Structural success: the candidate parsed and passes schema checks.
    const bool compiled =
        cand && validate(*cand, snapshot,
                         EventSet(cand->event_conditions.begin(),
                                  cand->event_conditions.end()),
                         {.certify = false})
                    .pass(1)
                    .errors.empty();
    br.score = score_program(cand, compiled, e.truth);

    if (cr.program) {
      ValidationReport r =
          validate(*cr.program, snapshot,
                   EventSet(cr.program->event_conditions.begin(),
                            cr.program->event_conditions.end()));
      br.outcome = r.outcome;
      outcomes.push_back({e.id, e.category, r.outcome, true});
    } else {
      outcomes.push_back({e.id, e.category, Outcome::kReject, false});
    }
    run.entries.push_back(std::move(br));
  }
  run.confusion = confusion_from(outcomes);
  return run;
}

LookupBackend truth_backend(const std::vector<BenchmarkEntry>& bench) {
  std::map<std::string, std::string> answers;
  for (const auto& e : bench) answers[e.intent_text] = serialize_program(e.truth);
  return LookupBackend(std::move(answers));
}

std::vector<AdversarialCase> parse_adversarial(std::string_view text) {
  json doc = json::parse(text.begin(), text.end(), nullptr, false);
  if (doc.is_discarded() || !doc.contains("cases"))
    throw ConfigError("adversarial suite must be an object with cases");
  std::vector<AdversarialCase> out;
  try {
    for (const auto& c : doc.at("cases")) {
      AdversarialCase a;
      a.id = c.at("id").get<std::string>();
      a.family = c.at("family").get<std::string>();
      a.description = c.value("description", "");
      ParseResult parsed = parse_program(c.at("program").dump());
      if (!parsed.ok())
        throw ConfigError(a.id + ": program does not parse: " +
                          parsed.errors.front());
      a.program = std::move(*parsed.program);
      const json& ex = c.at("expect");
      for (const auto& o : ex.value("outcome_in", json::array())) {
        const std::string s = o.get<std::string>();
        if (s == "accept") a.outcome_in.push_back(Outcome::kAccept);
        else if (s == "reject") a.outcome_in.push_back(Outcome::kReject);
        else if (s == "abstain") a.outcome_in.push_back(Outcome::kAbstain);
        else throw ConfigError(a.id + ": unknown outcome " + s);
      }
      if (ex.contains("error_pass")) a.error_pass = ex["error_pass"].get<int>();
      if (ex.contains("warning_pass"))
        a.warning_pass = ex["warning_pass"].get<int>();
      a.warning_contains = ex.value("warning_contains", "");
      out.push_back(std::move(a));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("adversarial suite: ") + e.what());
  }
  return out;
}

const std::vector<AdversarialCase>& builtin_adversarial() {
  static const std::vector<AdversarialCase> cases =
      parse_adversarial(embedded::kAdversarialJson);
  return cases;
}

int AdversarialResult::flagged() const {
  return static_cast<int>(std::count_if(rows.begin(), rows.end(),
                                        [](const Row& r) { return r.flagged; }));
}

json AdversarialResult::to_json() const {
  json j;
  j["schema_version"] = kResultsSchemaVersion;
  j["flagged"] = flagged();
  j["total"] = rows.size();
  j["cases"] = json::array();
  for (const auto& r : rows)
    j["cases"].push_back({{"id", r.id},
                          {"family", r.family},
                          {"flagged", r.flagged},
                          {"outcome", to_string(r.outcome)},
                          {"reasons", r.reasons}});
  return j;
}

AdversarialResult run_adversarial(const std::vector<AdversarialCase>& cases,
                                  const TopologySnapshot& snapshot,
                                  const ValidateOptions& options) {
  AdversarialResult result;
  for (const auto& c : cases) {
    EventSet events(c.program.event_conditions.begin(),
                    c.program.event_conditions.end());
    ValidationReport r = validate(c.program, snapshot, events, options);
    AdversarialResult::Row row;
    row.id = c.id;
    row.family = c.family;
    row.outcome = r.outcome;
    row.flagged = true;
    if (!c.outcome_in.empty() &&
        std::find(c.outcome_in.begin(), c.outcome_in.end(), r.outcome) ==
            c.outcome_in.end()) {
      row.flagged = false;
      row.reasons.push_back("unexpected outcome " +
                            std::string(to_string(r.outcome)));
    }
    if (c.error_pass) {
      const auto& errs = r.pass(*c.error_pass).errors;
      if (errs.empty()) {
        row.flagged = false;
        row.reasons.push_back("no error in pass " +
                              std::to_string(*c.error_pass));
      } else {
        row.reasons.push_back(errs.front());
      }
    }
    if (c.warning_pass) {
      const auto& warns = r.pass(*c.warning_pass).warnings;
      auto hit = std::find_if(warns.begin(), warns.end(), [&](const auto& w) {
        return w.find(c.warning_contains) != std::string::npos;
      });
      if (hit == warns.end()) {
        row.flagged = false;
        row.reasons.push_back("no matching warning in pass " +
                              std::to_string(*c.warning_pass));
      } else {
        row.reasons.push_back(*hit);
      }
    }
    result.rows.push_back(std::move(row));
  }
  return result;
}

const LatencyRow* RuntimeResult::row(std::string_view label) const {
  for (const auto& r : rows)
    if (r.label == label) return &r;
  return nullptr;
}

json RuntimeResult::to_json() const {
  json j;
  j["schema_version"] = kResultsSchemaVersion;
  j["reps"] = reps;
  j["rows"] = json::array();
  for (const auto& r : rows)
    j["rows"].push_back({{"label", r.label},
                         {"n", r.n},
                         {"median_ms", r.median_ms},
                         {"p95_ms", r.p95_ms},
                         {"max_ms", r.max_ms}});
  return j;
}

RuntimeResult measure_runtime(const std::vector<BenchmarkEntry>& bench,
                              const TopologySnapshot& snapshot, int reps,
                              const ValidateOptions& options) {
  RuntimeResult result;
  result.reps = reps;
  std::map<std::string, std::vector<double>> groups;
  const std::vector<std::string> labels = {
      "all", "with_flow_selectors", "topology_only",
      "accepted", "rejected_pass8", "abstain"};
  for (const auto& l : labels) groups[l];
  for (const auto& e : bench) {
    const EventSet events = e.declared_events();
    std::vector<double> times;
    ValidationReport last;
    for (int i = 0; i < std::max(reps, 1); ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      last = validate(e.truth, snapshot, events, options);
      times.push_back(std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count());
    }
    const double t = median_of(times);
    groups["all"].push_back(t);
    groups[e.truth.flow_selectors.empty() ? "topology_only"
                                          : "with_flow_selectors"]
        .push_back(t);
    if (last.outcome == Outcome::kAccept) groups["accepted"].push_back(t);
    if (last.outcome == Outcome::kAbstain) groups["abstain"].push_back(t);
    if (last.outcome == Outcome::kReject && last.clean_through(6))
      groups["rejected_pass8"].push_back(t);
  }
  for (const auto& l : labels) {
    const auto& v = groups[l];
    result.rows.push_back({l, static_cast<int>(v.size()), median_of(v),
                           percentile_of(v, 0.95),
                           v.empty() ? 0.0 : *std::max_element(v.begin(), v.end())});
  }
  return result;
}

std::vector<SweepRow> sweep_planes_off(const WalkerConfig& config,
                                       const std::vector<int>& counts,
                                       const EvalOptions& options) {
  std::vector<SweepRow> rows;
  DijkstraRouter router;
  for (int c : counts) {
    if (c < 0 || c > config.planes)
      throw ConfigError("planes-off count " + std::to_string(c) +
                        " outside [0, " + std::to_string(config.planes) + "]");
    ScenarioSpec s;
    s.name = "planes_off_" + std::to_string(c);
    s.config = config;
    s.program.intent_id = s.name;
    // Spread the disabled planes evenly around the constellation.
    for (int i = 0; i < c; ++i)
      s.program.hard_constraints.push_back(
          {HardType::kDisablePlane,
           Target::plane(static_cast<long long>(i) * config.planes / c),
           std::nullopt, std::nullopt});
    rows.push_back({c, evaluate_scenario(s, router, options)});
  }
  return rows;
}

json sweep_to_json(const std::vector<SweepRow>& rows) {
  json j;
  j["schema_version"] = kResultsSchemaVersion;
  j["rows"] = json::array();
  for (const auto& r : rows) {
    json e = r.eval.to_json();
    e["planes_off"] = r.planes_off;
    j["rows"].push_back(e);
  }
  return j;
}

EdgeRemovalRow latitude_edge_removal(const WalkerConfig& config,
                                     double threshold_deg, int snapshots) {
  if (snapshots < 1) throw ConfigError("snapshots must be >= 1");
  EdgeRemovalRow row;
  row.threshold_deg = threshold_deg;
  const double a = kEarthRadiusKm + config.altitude_km;
  const double period_s =
      2.0 * std::numbers::pi / std::sqrt(kEarthMuKm3PerS2 / (a * a * a));
  ConstraintProgram p;
  p.intent_id = "latitude-sweep";
  p.hard_constraints.push_back({HardType::kAvoidLatitude, Target::edges(),
                                threshold_deg, std::nullopt});
  double sum = 0.0;
  for (int i = 0; i < snapshots; ++i) {
    const double t = period_s * i / snapshots;
    const TopologySnapshot snap = build_snapshot(config, t);
    const GroundingResult g = ground(p, snap, {});
    const double f = snap.edge_count()
                         ? static_cast<double>(g.masked_edges()) / snap.edge_count()
                         : 0.0;
    row.times_s.push_back(t);
    row.fractions.push_back(f);
    sum += f;
  }
  row.mean = sum / snapshots;
  return row;
}

json edge_removal_to_json(const std::vector<EdgeRemovalRow>& rows) {
  json j;
  j["schema_version"] = kResultsSchemaVersion;
  j["rows"] = json::array();
  for (const auto& r : rows)
    j["rows"].push_back({{"threshold_deg", r.threshold_deg},
                         {"mean_fraction", r.mean},
                         {"times_s", r.times_s},
                         {"fractions", r.fractions}});
  return j;
}

std::vector<EvalResult> run_e2e(const WalkerConfig& config,
                                const EvalOptions& options) {
  std::vector<EvalResult> out;
  DijkstraRouter router;
  for (const auto& s : standard_scenarios(config))
    out.push_back(evaluate_scenario(s, router, options));
  return out;
}

json e2e_to_json(const std::vector<EvalResult>& results,
                 const EvalOptions& options) {
  json j;
  j["schema_version"] = kResultsSchemaVersion;
  j["seeds"] = options.seeds;
  j["steps"] = options.steps;
  j["pairs_per_step"] = options.pairs_per_step;
  j["step_interval_s"] = options.step_interval_s;
  j["scenarios"] = json::array();
  long long violations = 0;
  for (const auto& r : results) {
    j["scenarios"].push_back(r.to_json());
    violations += r.violations;
  }
  j["total_violations"] = violations;
  return j;
}

}  // namespace intentroute
