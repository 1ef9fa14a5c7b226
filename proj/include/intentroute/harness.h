#ifndef INTENTROUTE_HARNESS_H_
#define INTENTROUTE_HARNESS_H_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "intentroute/compiler.h"
#include "intentroute/constellation.h"
#include "intentroute/ir.h"
#include "intentroute/router.h"
#include "intentroute/validator.h"
#include "json.hpp"

namespace intentroute {

inline constexpr int kResultsSchemaVersion = 1;

enum class Category { kSingle, kCompositional, kConditional, kInfeasible };
std::string_view to_string(Category c);
std::optional<Category> category_from_string(std::string_view s);
inline constexpr std::array<Category, 4> kAllCategories = {
    Category::kSingle, Category::kCompositional, Category::kConditional,
    Category::kInfeasible};

struct BenchmarkEntry {
  std::string id;
  Category category = Category::kSingle;
  std::string intent_text;
  ConstraintProgram truth;
  std::string difficulty;
  std::vector<std::string> tags;

  bool has_tag(std::string_view t) const;
  EventSet declared_events() const;
};

// Throws ConfigError on malformed documents or ground truths that fail to
// parse.
std::vector<BenchmarkEntry> parse_benchmark(std::string_view json_text);
std::vector<BenchmarkEntry> load_benchmark(const std::string& path);
const std::vector<BenchmarkEntry>& builtin_benchmark();

// math.isclose(a, b, rel_tol=1e-6, abs_tol=1e-6)
bool numeric_eq(double a, double b);

struct ScoreReport {
  bool compiled = false;
  bool types_match = false;
  bool targets_match = false;
  bool full_match = false;
  std::vector<std::string> diffs;
  nlohmann::json to_json() const;
};

ScoreReport score_program(const std::optional<ConstraintProgram>& candidate,
                          bool compiled, const ConstraintProgram& truth);

enum class CorruptionType {
  kMissingIntentId,
  kInvalidPriority,
  kOutOfRangeNode,
  kInvalidTrafficClass,
  kTypeMismatch,
  kNegativeLatency,
  kLatencyBelowMinimum,
  kInvalidPlane,
};
std::string_view to_string(CorruptionType t);
std::span<const CorruptionType> all_corruption_types();

class InapplicableCorruption : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CorruptionSpec {
  CorruptionType type = CorruptionType::kMissingIntentId;
  std::uint64_t seed = 0;
  std::string field_path;
  nlohmann::json injected_value;  // null for a removed field
};

struct CorruptedProgram {
  std::string text;
  CorruptionSpec spec;
};

// Single-field injection. Throws InapplicableCorruption when the program has
// no field of the required kind.
CorruptedProgram corrupt_program(const ConstraintProgram& p,
                                 CorruptionType type, std::uint64_t seed,
                                 const WalkerConfig& constellation);

struct CorruptionTypeResult {
  CorruptionType type = CorruptionType::kMissingIntentId;
  int injections = 0;
  int detected = 0;
  std::map<int, int> caught_by_pass;  // pass id -> injections it flagged
  std::vector<std::string> misses;
};

struct AuditResult {
  std::vector<CorruptionTypeResult> types;
  int injections = 0;
  int detected = 0;
  int eligible_programs = 0;
  std::uint64_t seed = 0;

  // Passes that flagged at least one injection of some type.
  std::vector<int> covering_passes() const;
  nlohmann::json to_json() const;
};

AuditResult run_corruption_audit(const std::vector<BenchmarkEntry>& bench,
                                 const TopologySnapshot& snapshot,
                                 int n_per_type, std::uint64_t seed = 0);

struct OutcomeCounts {
  int accept = 0;
  int reject = 0;
  int abstain = 0;
  int total() const { return accept + reject + abstain; }
  void add(Outcome o);
};

struct EntryOutcome {
  std::string id;
  Category category = Category::kSingle;
  Outcome outcome = Outcome::kReject;
  bool has_program = true;
};

struct ConfusionResult {
  std::map<Category, OutcomeCounts> cells;
  std::vector<EntryOutcome> entries;
  int unsafe = 0;  // Accepts in the infeasible category

  int total() const;
  double decided_rate() const;
  nlohmann::json to_json() const;
};

ConfusionResult confusion_from(const std::vector<EntryOutcome>& entries);

// Validator-only: ground-truth programs with their declared events active.
ConfusionResult run_confusion(const std::vector<BenchmarkEntry>& bench,
                              const TopologySnapshot& snapshot,
                              const ValidateOptions& options = {});

struct BenchEntryResult {
  std::string id;
  Category category = Category::kSingle;
  ScoreReport score;
  std::optional<Outcome> outcome;  // nullopt when nothing compiled
  int attempts = 0;
  bool first_try = false;
};

struct BenchRunResult {
  std::string mode;
  std::string backend;
  std::vector<BenchEntryResult> entries;
  ConfusionResult confusion;

  double rate(bool ScoreReport::*field) const;
  double rate_in(Category c, bool ScoreReport::*field) const;
  nlohmann::json to_json() const;
};

// End-to-end: compile each intent, score it, validate what compiled.
// Entries without a usable program count as Reject in the confusion matrix.
BenchRunResult run_benchmark(const std::vector<BenchmarkEntry>& bench,
                             const CompilerConfig& config,
                             const TopologySnapshot& snapshot,
                             ChatBackend* backend, std::string mode = "full");

// A backend that answers each benchmark intent with its ground truth.
LookupBackend truth_backend(const std::vector<BenchmarkEntry>& bench);

struct AdversarialCase {
  std::string id;
  std::string family;  // resource_exhaustion | semantic_conflict | boundary
  std::string description;
  ConstraintProgram program;
  std::vector<Outcome> outcome_in;
  std::optional<int> error_pass;
  std::optional<int> warning_pass;
  std::string warning_contains;
};

std::vector<AdversarialCase> parse_adversarial(std::string_view json_text);
const std::vector<AdversarialCase>& builtin_adversarial();

struct AdversarialResult {
  struct Row {
    std::string id;
    std::string family;
    bool flagged = false;
    Outcome outcome = Outcome::kReject;
    std::vector<std::string> reasons;
  };
  std::vector<Row> rows;
  int flagged() const;
  nlohmann::json to_json() const;
};

AdversarialResult run_adversarial(const std::vector<AdversarialCase>& cases,
                                  const TopologySnapshot& snapshot,
                                  const ValidateOptions& options = {});

struct LatencyRow {
  std::string label;
  int n = 0;
  double median_ms = 0.0;
  double p95_ms = 0.0;
  double max_ms = 0.0;
};

struct RuntimeResult {
  std::vector<LatencyRow> rows;  // All, with-flow, topology-only, accepted,
                                 // rejected (pass 8), abstain
  int reps = 0;
  const LatencyRow* row(std::string_view label) const;
  nlohmann::json to_json() const;
};

// Median of `reps` timed validate calls per program.
RuntimeResult measure_runtime(const std::vector<BenchmarkEntry>& bench,
                              const TopologySnapshot& snapshot, int reps = 5,
                              const ValidateOptions& options = {});

struct SweepRow {
  int planes_off = 0;
  EvalResult eval;
};

std::vector<SweepRow> sweep_planes_off(const WalkerConfig& config,
                                       const std::vector<int>& counts,
                                       const EvalOptions& options);
nlohmann::json sweep_to_json(const std::vector<SweepRow>& rows);

struct EdgeRemovalRow {
  double threshold_deg = 0.0;
  std::vector<double> times_s;
  std::vector<double> fractions;  // masked ISLs / all ISLs per snapshot
  double mean = 0.0;
};

// Snapshots spaced evenly over one orbital period.
EdgeRemovalRow latitude_edge_removal(const WalkerConfig& config,
                                     double threshold_deg, int snapshots = 20);
nlohmann::json edge_removal_to_json(const std::vector<EdgeRemovalRow>& rows);

std::vector<EvalResult> run_e2e(const WalkerConfig& config,
                                const EvalOptions& options);
nlohmann::json e2e_to_json(const std::vector<EvalResult>& results,
                           const EvalOptions& options);

}  // namespace intentroute

#endif  // INTENTROUTE_HARNESS_H_
