#ifndef INTENTROUTE_COMPILER_H_
#define INTENTROUTE_COMPILER_H_

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "intentroute/constellation.h"
#include "intentroute/ir.h"
#include "intentroute/validator.h"
#include "json.hpp"

namespace intentroute {

enum class Backend { kRuleBased, kLlm, kMock };
enum class Shots { kZero, kSix };

std::string_view to_string(Backend b);
std::string_view to_string(Shots s);
std::optional<Backend> backend_from_string(std::string_view s);
std::optional<Shots> shots_from_string(std::string_view s);

struct CompilerConfig {
  Backend backend = Backend::kRuleBased;
  std::string endpoint_url = "http://127.0.0.1:8000/v1/chat/completions";
  std::string model_name = "local-model";
  std::string api_key;
  double temperature = 0.1;
  int max_tokens = 2048;
  int max_retries = 3;
  double timeout_s = 120.0;
  Shots shots = Shots::kSix;
  // Off = accept the first parseable program without running the validator.
  bool use_verifier = true;

  void validate() const;  // throws ConfigError
};

// Overlays INTENTROUTE_LLM_URL, INTENTROUTE_LLM_MODEL, INTENTROUTE_LLM_API_KEY,
// INTENTROUTE_LLM_TIMEOUT_S when set.
CompilerConfig apply_environment(CompilerConfig base);
// JSON object with any of: backend, endpoint_url, model_name, api_key,
// temperature, max_tokens, max_retries, timeout_s, shots, use_verifier.
CompilerConfig parse_compiler_config(std::string_view json_text,
                                     CompilerConfig base = {});
CompilerConfig load_compiler_config(const std::string& path,
                                    CompilerConfig base = {});

// The four ablation configurations: full, no_verifier, no_repair, zero_shot.
CompilerConfig ablation_config(std::string_view mode, CompilerConfig base);

struct ChatMessage {
  std::string role;
  std::string content;
  bool operator==(const ChatMessage&) const = default;
};

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  // Returns the assistant text. Throws TransportError.
  virtual std::string complete(const std::vector<ChatMessage>& messages,
                               const CompilerConfig& config) = 0;
};

// OpenAI-compatible chat completions over HTTP.
class HttpChatBackend : public ChatBackend {
 public:
  std::string complete(const std::vector<ChatMessage>& messages,
                       const CompilerConfig& config) override;
};

// Replays scripted responses by attempt index; the last one repeats.
class MockBackend : public ChatBackend {
 public:
  explicit MockBackend(std::vector<std::string> script)
      : script_(std::move(script)) {}
  std::string complete(const std::vector<ChatMessage>& messages,
                       const CompilerConfig& config) override;
  int calls() const { return calls_; }
  const std::vector<std::vector<ChatMessage>>& seen() const { return seen_; }

 private:
  std::vector<std::string> script_;
  std::vector<std::vector<ChatMessage>> seen_;
  int calls_ = 0;
};

// Answers each intent with a fixed program text, looked up by the final user
// message. Unknown intents get an empty object.
class LookupBackend : public ChatBackend {
 public:
  explicit LookupBackend(std::map<std::string, std::string> answers)
      : answers_(std::move(answers)) {}
  std::string complete(const std::vector<ChatMessage>& messages,
                       const CompilerConfig& config) override;

 private:
  std::map<std::string, std::string> answers_;
};

struct PromptExample {
  std::string category;
  std::string intent;
  std::string program_json;  // compact, as the assistant would answer
};
const std::vector<PromptExample>& prompt_examples();

std::string system_prompt(const WalkerConfig& constellation,
                          const RegionCatalog& regions);
std::vector<ChatMessage> build_prompt(
    const CompilerConfig& config, std::string_view intent_text,
    const WalkerConfig& constellation = {},
    const RegionCatalog& regions = RegionCatalog::builtin());
std::string repair_message(const std::vector<std::string>& errors);

struct ExtractResult {
  std::optional<std::string> payload;
  std::string error;
};
std::string strip_think(std::string_view text);
ExtractResult extract_payload(std::string_view response_text);

ConstraintProgram rule_based_compile(std::string_view intent_text,
                                     const TopologySnapshot& snapshot);

struct CompileAttempt {
  std::vector<ChatMessage> prompt;
  std::string raw_response;
  std::string extracted;
  std::vector<std::string> errors;
};

struct CompileTrace {
  std::vector<CompileAttempt> attempts;
  bool compiled = false;
  bool first_try = false;
  std::string failure;
  double wall_ms = 0.0;

  nlohmann::json to_json() const;
};

struct CompileResult {
  std::optional<ConstraintProgram> program;  // set when the gate passed
  std::optional<ConstraintProgram> last_parsed;
  CompileTrace trace;
};

// Runs the chosen backend with the repair loop. `backend` is required for
// llm/mock and ignored for rule_based. The gate is passes 1-7; events named
// by the program count as active.
CompileResult compile(std::string_view intent_text,
                      const CompilerConfig& config,
                      const TopologySnapshot& snapshot,
                      ChatBackend* backend,
                      const ValidateOptions& validate_options = {});

}  // namespace intentroute

#endif  // INTENTROUTE_COMPILER_H_
