#ifndef INTENTROUTE_VALIDATOR_H_
#define INTENTROUTE_VALIDATOR_H_

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "intentroute/constellation.h"
#include "intentroute/grounding.h"
#include "intentroute/ir.h"
#include "json.hpp"

namespace intentroute {

enum class PassStatus { kOk, kWarning, kError, kSkipped };
enum class Outcome { kAccept, kReject, kAbstain };
enum class EndpointMode { kUniversal, kExistential };
enum class Fragment { kNone, kF1, kF2, kF3, kF4, kF5 };

std::string_view to_string(PassStatus s);
std::string_view to_string(Outcome o);
std::string_view to_string(EndpointMode m);
std::string_view to_string(Fragment f);
std::optional<EndpointMode> endpoint_mode_from_string(std::string_view s);

inline constexpr int kPassCount = 8;

struct PassResult {
  int pass = 0;
  std::string name;
  PassStatus status = PassStatus::kOk;
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
};

struct WitnessPath {
  std::vector<NodeId> nodes;
  double delay_ms = 0.0;
  int hops() const {
    return nodes.empty() ? 0 : static_cast<int>(nodes.size()) - 1;
  }
};

struct PairWitness {
  NodeId src = 0;
  NodeId dst = 0;
  std::vector<WitnessPath> paths;  // k paths for F5, otherwise one
};

struct FlowWitness {
  int flow = 0;
  Fragment fragment = Fragment::kNone;
  std::vector<PairWitness> pairs;
};

struct Witness {
  EndpointMode mode = EndpointMode::kUniversal;
  std::vector<FlowWitness> flows;
};

struct FlowCertificate {
  int flow = 0;
  Fragment fragment = Fragment::kNone;
  Outcome decision = Outcome::kAbstain;
  std::string note;
  FlowWitness witness;  // populated on accept
};

struct ValidateOptions {
  EndpointMode mode = EndpointMode::kUniversal;
  int max_pairs = 400;
  bool certify = true;
  double latency_floor_ms = 2.0;
  double edge_loss_warning = 0.5;
  double node_loss_warning = 0.5;
  double node_loss_strong_warning = 0.75;
};

struct ValidationReport {
  std::array<PassResult, kPassCount> passes;
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  Outcome outcome = Outcome::kReject;
  std::optional<Witness> witness;
  std::vector<FlowCertificate> certificates;
  std::optional<std::vector<int>> unsat_core;
  double min_edge_delay_ms = 0.0;
  double elapsed_ms = 0.0;

  const PassResult& pass(int id) const { return passes.at(id - 1); }
  // Errors raised by passes 1..last, in pass order.
  std::vector<std::string> errors_through(int last) const;
  bool clean_through(int last) const;
  nlohmann::json to_json() const;
};

ValidationReport validate(const ConstraintProgram& p,
                          const TopologySnapshot& snapshot,
                          const EventSet& active_events,
                          const ValidateOptions& options = {});

// Parses first; a parse failure is a fatal Pass-1 error.
ValidationReport validate_text(std::string_view program_json,
                               const TopologySnapshot& snapshot,
                               const EventSet& active_events,
                               const ValidateOptions& options = {});

// Pass 8 alone. Requires a program whose entities are in range.
std::vector<FlowCertificate> certify_feasibility(
    const ConstraintProgram& p, const TopologySnapshot& snapshot,
    const GroundingResult& grounding, const ValidateOptions& options = {});

struct WitnessCheck {
  bool ok = true;
  std::vector<std::string> violations;
};

// Re-checks a witness against the snapshot and grounding without using any
// of the certification search code.
WitnessCheck verify_witness(const Witness& w, const ConstraintProgram& p,
                            const TopologySnapshot& snapshot,
                            const GroundingResult& grounding,
                            int max_pairs = 400);

enum class ResolutionKind { kRoutedAsIs, kRelaxed, kUnsatCore, kRefusal };
std::string_view to_string(ResolutionKind k);

struct Resolution {
  ResolutionKind kind = ResolutionKind::kRefusal;
  std::string message;
  std::optional<ConstraintProgram> program;  // routed or relaxed program
  std::vector<std::string> dropped_soft;     // soft_constraint_key values
  std::vector<int> unsat_core;               // hard constraint indices
  ValidationReport final_report;

  nlohmann::json to_json() const;
};

Resolution resolve_fallback(const ConstraintProgram& p,
                            const ValidationReport& report,
                            const TopologySnapshot& snapshot,
                            const EventSet& active_events,
                            const ValidateOptions& options = {});

}  // namespace intentroute

#endif  // INTENTROUTE_VALIDATOR_H_
