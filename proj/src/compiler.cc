#include "intentroute/compiler.h"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "embedded_data.h"
#include "httplib.h"

namespace intentroute {
namespace {

using nlohmann::json;

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

bool is_json_object(std::string_view text) {
  json j = json::parse(text.begin(), text.end(), nullptr, false);
  return !j.is_discarded() && j.is_object();
}

std::string hex64(std::uint64_t v) {
  static const char* kDigits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) out[i] = kDigits[v & 0xf];
  return out;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::string_view to_string(Backend b) {
  switch (b) {
    case Backend::kRuleBased: return "rule_based";
    case Backend::kLlm: return "llm";
    case Backend::kMock: return "mock";
  }
  return "?";
}

std::string_view to_string(Shots s) {
  return s == Shots::kSix ? "six" : "zero";
}

std::optional<Backend> backend_from_string(std::string_view s) {
  if (s == "rule_based") return Backend::kRuleBased;
  if (s == "llm") return Backend::kLlm;
  if (s == "mock") return Backend::kMock;
  return std::nullopt;
}

std::optional<Shots> shots_from_string(std::string_view s) {
  if (s == "six" || s == "6") return Shots::kSix;
  if (s == "zero" || s == "0") return Shots::kZero;
  return std::nullopt;
}

void CompilerConfig::validate() const {
  if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
  if (!(timeout_s > 0.0)) throw ConfigError("timeout_s must be > 0");
  if (max_tokens <= 0) throw ConfigError("max_tokens must be > 0");
  if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
}

CompilerConfig apply_environment(CompilerConfig c) {
  if (const char* v = std::getenv("INTENTROUTE_LLM_URL")) c.endpoint_url = v;
  if (const char* v = std::getenv("INTENTROUTE_LLM_MODEL")) c.model_name = v;
  if (const char* v = std::getenv("INTENTROUTE_LLM_API_KEY")) c.api_key = v;
  if (const char* v = std::getenv("INTENTROUTE_LLM_TIMEOUT_S")) {
    try {
      c.timeout_s = std::stod(v);
    } catch (const std::exception&) {
      throw ConfigError(std::string("bad INTENTROUTE_LLM_TIMEOUT_S: ") + v);
    }
  }
  return c;
}

CompilerConfig parse_compiler_config(std::string_view text,
                                     CompilerConfig c) {
  json j = json::parse(text.begin(), text.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw ConfigError("compiler config must be a JSON object");
  try {
    for (const auto& [k, v] : j.items()) {
      if (k == "backend") {
        auto b = backend_from_string(v.get<std::string>());
        if (!b) throw ConfigError("unknown backend " + v.dump());
        c.backend = *b;
      } else if (k == "endpoint_url") {
        c.endpoint_url = v.get<std::string>();
      } else if (k == "model_name") {
        c.model_name = v.get<std::string>();
      } else if (k == "api_key") {
        c.api_key = v.get<std::string>();
      } else if (k == "temperature") {
        c.temperature = v.get<double>();
      } else if (k == "max_tokens") {
        c.max_tokens = v.get<int>();
      } else if (k == "max_retries") {
        c.max_retries = v.get<int>();
      } else if (k == "timeout_s") {
        c.timeout_s = v.get<double>();
      } else if (k == "shots") {
        auto s = shots_from_string(v.is_string() ? v.get<std::string>()
                                                 : v.dump());
        if (!s) throw ConfigError("unknown shots " + v.dump());
        c.shots = *s;
      } else if (k == "use_verifier") {
        c.use_verifier = v.get<bool>();
      } else {
        throw ConfigError("unknown compiler config key: " + k);
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("compiler config: ") + e.what());
  }
  c.validate();
  return c;
}

CompilerConfig load_compiler_config(const std::string& path,
                                    CompilerConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open compiler config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_compiler_config(ss.str(), std::move(base));
}

CompilerConfig ablation_config(std::string_view mode, CompilerConfig c) {
  if (mode == "full") {
    c.shots = Shots::kSix;
    c.use_verifier = true;
    c.max_retries = 3;
  } else if (mode == "no_verifier") {
    c.shots = Shots::kSix;
    c.use_verifier = false;
    c.max_retries = 0;
  } else if (mode == "no_repair") {
    c.shots = Shots::kSix;
    c.use_verifier = true;
    c.max_retries = 0;
  } else if (mode == "zero_shot") {
    c.shots = Shots::kZero;
    c.use_verifier = true;
    c.max_retries = 3;
  } else {
    throw ConfigError("unknown ablation mode: " + std::string(mode));
  }
  return c;
}

std::string HttpChatBackend::complete(const std::vector<ChatMessage>& messages,
                                      const CompilerConfig& config) {
  const std::string& url = config.endpoint_url;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw TransportError("endpoint_url needs a scheme: " + url);
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http")
    throw TransportError("only http:// endpoints are supported (got " +
                         scheme + "://)");
  const auto path_start = url.find('/', scheme_end + 3);
  const std::string origin = url.substr(0, path_start);
  const std::string path =
      path_start == std::string::npos ? "/" : url.substr(path_start);

  json body = {{"model", config.model_name},
               {"temperature", config.temperature},
               {"max_tokens", config.max_tokens},
               {"messages", json::array()}};
  for (const auto& m : messages)
    body["messages"].push_back({{"role", m.role}, {"content", m.content}});

  httplib::Client cli(origin);
  const auto secs = static_cast<time_t>(config.timeout_s);
  const auto usecs = static_cast<time_t>((config.timeout_s - secs) * 1e6);
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);
  httplib::Headers headers;
  if (!config.api_key.empty())
    headers.emplace("Authorization", "Bearer " + config.api_key);

  auto res = cli.Post(path, headers, body.dump(), "application/json");
  if (!res)
    throw TransportError("request to " + url + " failed: " +
                         httplib::to_string(res.error()));
  if (res->status != 200)
    throw TransportError("HTTP " + std::to_string(res->status) + " from " +
                         url + ": " + res->body.substr(0, 200));
  json reply = json::parse(res->body, nullptr, false);
  if (reply.is_discarded())
    throw TransportError("response body is not JSON");
  try {
    return reply.at("choices").at(0).at("message").at("content")
        .get<std::string>();
  } catch (const json::exception& e) {
    throw TransportError(std::string("unexpected response shape: ") +
                         e.what());
  }
}

std::string MockBackend::complete(const std::vector<ChatMessage>& messages,
                                  const CompilerConfig&) {
  seen_.push_back(messages);
  if (script_.empty()) throw TransportError("mock backend has no script");
  const std::size_t i =
      std::min(static_cast<std::size_t>(calls_), script_.size() - 1);
  ++calls_;
  return script_[i];
}

std::string LookupBackend::complete(const std::vector<ChatMessage>& messages,
                                    const CompilerConfig&) {
  // The intent is the first user message after the examples; repair turns
  // come later, so take the last user message that is a known intent.
  for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
    if (it->role != "user") continue;
    if (auto hit = answers_.find(it->content); hit != answers_.end())
      return hit->second;
  }
  return "{}";
}

const std::vector<PromptExample>& prompt_examples() {
  static const std::vector<PromptExample> examples = [] {
    std::vector<PromptExample> out;
    json doc = json::parse(embedded::kPromptExamplesJson);
    for (const auto& e : doc.at("examples")) {
      // Round-trip through the IR so answers use canonical serialization.
      ParseResult parsed = parse_program(e.at("program").dump());
      if (!parsed.ok())
        throw ConfigError("prompt example does not parse: " +
                          parsed.errors.front());
      out.push_back({e.at("category").get<std::string>(),
                     e.at("intent").get<std::string>(),
                     serialize_program(*parsed.program)});
    }
    return out;
  }();
  return examples;
}

std::string system_prompt(const WalkerConfig& c, const RegionCatalog& regions) {
  auto join = [](auto&& items) {
    std::string out;
    for (const auto& s : items) {
      if (!out.empty()) out += ", ";
      out += std::string(s);
    }
    return out;
  };
  std::vector<std::string_view> hard, soft;
  for (HardType t : all_hard_types()) hard.push_back(to_string(t));
  for (SoftType t : all_soft_types()) soft.push_back(to_string(t));
  std::vector<std::string> region_names;
  for (const auto& r : regions.regions()) region_names.push_back(r.name);

  std::ostringstream p;
  p << "You translate satellite routing intents into a ConstraintProgram.\n"
    << "\n"
    << "Constellation: Walker Delta, " << c.planes << " planes x "
    << c.sats_per_plane << " satellites = " << c.node_count() << " nodes, "
    << c.altitude_km << " km altitude, " << c.inclination_deg
    << " deg inclination.\n"
    << "Node ids run 0.." << c.node_count() - 1 << "; node id = plane * "
    << c.sats_per_plane << " + slot. Planes run 0.." << c.planes - 1
    << ".\n"
    << "Each satellite links to its two in-plane neighbours and to the same\n"
    << "slot in the two adjacent planes (4 ISLs per node).\n"
    << "\n"
    << "Schema (JSON object, no other keys allowed):\n"
    << "{\n"
    << "  \"intent_id\": string, required, non-empty\n"
    << "  \"flow_selectors\": [ {\"traffic_class\", \"src_node\", \"dst_node\",\n"
    << "      \"src_plane\", \"dst_plane\", \"src_region\", \"dst_region\"} ]\n"
    << "      all selector fields optional; at most one of node/plane/region\n"
    << "      per side\n"
    << "  \"hard_constraints\": [ {\"type\", \"target\", \"value\"?, "
       "\"condition\"?} ], required\n"
    << "  \"soft_constraints\": [ {\"type\", \"target\", \"value\", "
       "\"penalty_weight\"} ]\n"
    << "  \"event_conditions\": [ event name ]\n"
    << "  \"objective_weights\": { name: number }\n"
    << "  \"priority\": critical | high | medium | low, required\n"
    << "  \"fallback_policy\": reject_if_hard_infeasible | relax_soft_first |\n"
    << "      report_unsat_core\n"
    << "}\n"
    << "\n"
    << "Hard constraint types: " << join(hard) << "\n"
    << "Soft constraint types: " << join(soft) << "\n"
    << "Traffic classes: " << join(traffic_class_catalog()) << "\n"
    << "Events: " << join(event_catalog()) << "\n"
    << "Regions: " << join(region_names) << "\n"
    << "\n"
    << "Targets:\n"
    << "  node:<id>             disable_node, reroute_away\n"
    << "  plane:<id>            disable_plane\n"
    << "  edge:(<u>,<v>)        disable_edge (u and v must share an ISL)\n"
    << "  region:<name>         avoid_region\n"
    << "  edges                 avoid_latitude (value = latitude limit, deg)\n"
    << "  flow_selector:<i>     max_latency_ms, max_hops, k_edge_disjoint,\n"
    << "                        min_cap_reserve (i indexes flow_selectors)\n"
    << "Soft max_utilization targets edges, edge:(u,v), node:<id> or "
       "region:<name>.\n"
    << "\n"
    << "Priority: critical for safety or emergency traffic, high for SLA\n"
    << "commitments and failures, medium by default, low for best effort.\n"
    << "\n"
    << "Rules:\n"
    << "1. Answer with exactly one JSON object and nothing else.\n"
    << "2. Use only the listed types, classes, regions and events.\n"
    << "3. Keep node and plane ids inside the ranges above.\n"
    << "4. Every flow constraint needs a matching flow selector.\n"
    << "5. Event-triggered constraints carry \"condition\" and the event is\n"
    << "   listed in event_conditions.\n"
    << "6. Latency is in ms, latitude in degrees, percentages become\n"
    << "   fractions in (0, 1].\n";
  return p.str();
}

std::vector<ChatMessage> build_prompt(const CompilerConfig& config,
                                      std::string_view intent_text,
                                      const WalkerConfig& constellation,
                                      const RegionCatalog& regions) {
  std::vector<ChatMessage> out;
  out.push_back({"system", system_prompt(constellation, regions)});
  if (config.shots == Shots::kSix) {
    for (const auto& ex : prompt_examples()) {
      out.push_back({"user", ex.intent});
      out.push_back({"assistant", ex.program_json});
    }
  }
  out.push_back({"user", std::string(intent_text)});
  return out;
}

std::string repair_message(const std::vector<std::string>& errors) {
  std::string msg = "The validator rejected that program:\n";
  for (const auto& e : errors) msg += e + "\n";
  msg += "Return a corrected ConstraintProgram as a single JSON object.";
  return msg;
}

std::string strip_think(std::string_view text) {
  std::string s(text);
  static constexpr std::string_view kOpen = "<think>";
  static constexpr std::string_view kClose = "</think>";
  for (;;) {
    auto open = s.find(kOpen);
    if (open == std::string::npos) break;
    auto close = s.find(kClose, open);
    if (close == std::string::npos) break;
    s.erase(open, close + kClose.size() - open);
  }
  // A dangling close tag means the opening tag was eaten upstream.
  if (auto close = s.find(kClose); close != std::string::npos)
    s.erase(0, close + kClose.size());
  return s;
}

ExtractResult extract_payload(std::string_view response_text) {
  const std::string text = strip_think(response_text);

  const std::string whole = trim(text);
  if (is_json_object(whole)) return {whole, {}};

  for (std::size_t pos = 0;;) {
    auto open = text.find("```", pos);
    if (open == std::string::npos) break;
    auto body = text.find('\n', open + 3);
    if (body == std::string::npos) break;
    auto close = text.find("```", body + 1);
    if (close == std::string::npos) break;
    std::string inner = trim(std::string_view(text).substr(body + 1, close - body - 1));
    if (is_json_object(inner)) return {inner, {}};
    pos = close + 3;
  }

  for (std::size_t start = text.find('{'); start != std::string::npos;
       start = text.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      const char c = text[i];
      if (in_string) {
        if (escaped) escaped = false;
        else if (c == '\\') escaped = true;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}' && --depth == 0) {
        std::string candidate = text.substr(start, i - start + 1);
        if (is_json_object(candidate)) return {candidate, {}};
        break;
      }
    }
  }
  return {std::nullopt, "no JSON object found in the response"};
}

namespace {

// Working copy of the intent; matched spans are blanked so later patterns do
// not see them again.
class IntentText {
 public:
  explicit IntentText(std::string_view s) : text_(lower(s)) {}

  template <typename F>
  void consume(const std::regex& re, F&& on_match) {
    std::smatch m;
    std::string::const_iterator from = text_.cbegin();
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    while (std::regex_search(from, text_.cend(), m, re)) {
      on_match(m);
      const auto pos = static_cast<std::size_t>(m[0].first - text_.cbegin());
      spans.emplace_back(pos, static_cast<std::size_t>(m.length(0)));
      from = m[0].second;
      if (m.length(0) == 0) {
        if (from == text_.cend()) break;
        ++from;
      }
    }
    for (auto [pos, len] : spans) text_.replace(pos, len, len, ' ');
  }

  bool contains(const std::regex& re) const {
    return std::regex_search(text_, re);
  }
  const std::string& str() const { return text_; }

 private:
  std::string text_;
};

double to_number(const std::string& s) { return std::stod(s); }

std::vector<long long> all_ints(const std::string& s) {
  std::vector<long long> out;
  static const std::regex kInt(R"(\d+)");
  for (auto it = std::sregex_iterator(s.begin(), s.end(), kInt);
       it != std::sregex_iterator(); ++it)
    out.push_back(std::stoll(it->str()));
  return out;
}

std::optional<int> word_number(const std::string& s) {
  static const std::map<std::string, int> kWords = {
      {"two", 2}, {"three", 3}, {"four", 4}, {"five", 5}, {"six", 6}};
  if (auto it = kWords.find(s); it != kWords.end()) return it->second;
  if (!s.empty() && std::all_of(s.begin(), s.end(), ::isdigit))
    return std::stoi(s);
  return std::nullopt;
}

std::string region_alternation(const RegionCatalog& catalog) {
  std::vector<std::string> alts;
  for (const auto& r : catalog.regions()) {
    alts.push_back(r.name);
    std::string spaced = r.name;
    std::replace(spaced.begin(), spaced.end(), '_', ' ');
    if (spaced != r.name) alts.push_back(spaced);
  }
  // Longest first so "north america" wins over a shorter prefix.
  std::sort(alts.begin(), alts.end(), [](const auto& a, const auto& b) {
    return a.size() != b.size() ? a.size() > b.size() : a < b;
  });
  std::string out;
  for (const auto& a : alts) {
    if (!out.empty()) out += "|";
    out += a;
  }
  return out;
}

std::string region_name(std::string matched) {
  std::replace(matched.begin(), matched.end(), ' ', '_');
  return matched;
}

}  // namespace

ConstraintProgram rule_based_compile(std::string_view intent_text,
                                     const TopologySnapshot& snapshot) {
  using std::regex;
  const auto kFlags = regex::ECMAScript | regex::optimize;
  ConstraintProgram p;
  p.intent_id = "rb-" + hex64(fnv1a(intent_text));
  IntentText t(intent_text);
  const std::string regions = region_alternation(snapshot.regions());

  // Events, in order of appearance.
  std::vector<std::pair<std::size_t, std::string>> events;
  for (std::string_view ev : event_catalog()) {
    std::string spaced(ev);
    std::replace(spaced.begin(), spaced.end(), '_', ' ');
    for (const std::string& form : {std::string(ev), spaced}) {
      if (auto pos = t.str().find(form); pos != std::string::npos) {
        events.emplace_back(pos, std::string(ev));
        break;
      }
    }
  }
  std::sort(events.begin(), events.end());
  for (const auto& [pos, ev] : events) p.event_conditions.push_back(ev);

  auto add_hard = [&](HardType type, Target target,
                      std::optional<double> value = std::nullopt) {
    p.hard_constraints.push_back({type, std::move(target), value, std::nullopt});
  };

  static const regex kReroute(
      R"((?:reroute|route|divert|steer|move)\s+(?:all\s+)?(?:traffic\s+)?away\s+from\s+(?:satellite|node|sat)\s+#?(\d+))",
      kFlags);
  t.consume(kReroute, [&](const std::smatch& m) {
    add_hard(HardType::kRerouteAway, Target::node(std::stoll(m[1])));
  });
  static const regex kNoTransit(
      R"((?:avoid|no)\s+(?:transiting|transit\s+through|relaying\s+through|relaying\s+via)\s+(?:satellite|node|sat)\s+#?(\d+))",
      kFlags);
  t.consume(kNoTransit, [&](const std::smatch& m) {
    add_hard(HardType::kRerouteAway, Target::node(std::stoll(m[1])));
  });

  static const regex kEdge(
      R"((?:disable|cut|remove|take\s+down|drop|shut\s*down)\s+(?:the\s+)?(?:link|isl|edge)\s+(?:between\s+)?(?:nodes?|satellites?)?\s*(\d+)\s*(?:and|to|-)\s*(?:nodes?|satellites?)?\s*(\d+))",
      kFlags);
  t.consume(kEdge, [&](const std::smatch& m) {
    add_hard(HardType::kDisableEdge,
             Target::edge(std::stoll(m[1]), std::stoll(m[2])));
  });

  static const regex kPlaneVerb(
      R"((?:disable|shut\s*down|take\s+(?:down|offline)|deactivate|turn\s+off)\s+(?:orbital\s+)?plane\s+#?(\d+))",
      kFlags);
  static const regex kPlaneState(
      R"((?:orbital\s+)?plane\s+#?(\d+)\s+(?:is\s+|goes\s+|going\s+)?(?:down|offline|(?:into|under|in)\s+maintenance))",
      kFlags);
  static const regex kPlaneMaint(
      R"(maintenance\s+(?:on|for)\s+(?:orbital\s+)?plane\s+#?(\d+))", kFlags);
  std::set<long long> planes_off;
  auto plane_off = [&](const std::smatch& m) {
    const long long plane = std::stoll(m[1]);
    if (planes_off.insert(plane).second)
      add_hard(HardType::kDisablePlane, Target::plane(plane));
  };
  t.consume(kPlaneVerb, plane_off);
  t.consume(kPlaneState, plane_off);
  t.consume(kPlaneMaint, plane_off);

  static const regex kNodeVerb(
      R"((?:disable|shut\s*down|take\s+(?:down|offline)|deactivate|turn\s+off)\s+(?:satellites?|nodes?|sats?)\s+#?(\d+(?:\s*(?:,|and|&)\s*(?:node\s+|satellite\s+)?#?\d+)*))",
      kFlags);
  static const regex kNodeState(
      R"((?:satellite|node|sat)\s+#?(\d+)\s+(?:is\s+|has\s+)?(?:down|offline|failed|failing|dead))",
      kFlags);
  std::set<long long> nodes_off;
  auto node_off = [&](const std::smatch& m) {
    for (long long n : all_ints(m[1]))
      if (nodes_off.insert(n).second)
        add_hard(HardType::kDisableNode, Target::node(n));
  };
  t.consume(kNodeVerb, node_off);
  t.consume(kNodeState, node_off);

  FlowSelector sel;
  static const regex kSrcNode(R"(from\s+(?:satellite|node|sat)\s+#?(\d+))",
                              kFlags);
  static const regex kDstNode(R"(to\s+(?:satellite|node|sat)\s+#?(\d+))",
                              kFlags);
  static const regex kSrcPlane(R"(from\s+(?:orbital\s+)?plane\s+#?(\d+))",
                               kFlags);
  static const regex kDstPlane(R"(to\s+(?:orbital\s+)?plane\s+#?(\d+))",
                               kFlags);
  t.consume(kSrcNode, [&](const std::smatch& m) {
    if (!sel.src_node) sel.src_node = std::stoll(m[1]);
  });
  t.consume(kDstNode, [&](const std::smatch& m) {
    if (!sel.dst_node) sel.dst_node = std::stoll(m[1]);
  });
  t.consume(kSrcPlane, [&](const std::smatch& m) {
    if (!sel.src_plane) sel.src_plane = std::stoll(m[1]);
  });
  t.consume(kDstPlane, [&](const std::smatch& m) {
    if (!sel.dst_plane) sel.dst_plane = std::stoll(m[1]);
  });
  const regex src_region("from\\s+(?:the\\s+)?(" + regions + ")\\b", kFlags);
  const regex dst_region("to\\s+(?:the\\s+)?(" + regions + ")\\b", kFlags);
  t.consume(src_region, [&](const std::smatch& m) {
    if (!sel.src_region) sel.src_region = region_name(m[1]);
  });
  t.consume(dst_region, [&](const std::smatch& m) {
    if (!sel.dst_region) sel.dst_region = region_name(m[1]);
  });

  const regex avoid_region(
      "(?:avoid(?:ing)?|bypass(?:ing)?|steer\\s+clear\\s+of|stay\\s+out\\s+of|"
      "route\\s+around|keep\\s+out\\s+of|away\\s+from|exclude)\\s+"
      "(?:the\\s+)?(?:airspace\\s+(?:of|over)\\s+)?(?:the\\s+)?(" +
          regions + ")((?:\\s*(?:,|and|or)\\s*(?:the\\s+)?(?:" + regions +
          "))*)",
      kFlags);
  const regex one_region("(" + regions + ")", kFlags);
  std::set<std::string> avoided;
  t.consume(avoid_region, [&](const std::smatch& m) {
    std::vector<std::string> names = {region_name(m[1])};
    const std::string rest = m[2];
    for (auto it = std::sregex_iterator(rest.begin(), rest.end(), one_region);
         it != std::sregex_iterator(); ++it)
      names.push_back(region_name((*it)[1]));
    for (const auto& n : names)
      if (avoided.insert(n).second)
        add_hard(HardType::kAvoidRegion, Target::region(n));
  });

  static const regex kLatitude(
      R"((?:above|beyond|over|exceeding|higher\s+than|poleward\s+of|greater\s+than)\s+(\d+(?:\.\d+)?)\s*(?:°|degrees?|deg)(?:\s+(?:of\s+)?latitude)?)",
      kFlags);
  static const regex kLatitude2(
      R"(latitudes?\s+(?:above|beyond|over|of|exceeding)\s+(\d+(?:\.\d+)?))",
      kFlags);
  bool latitude_set = false;
  auto latitude = [&](const std::smatch& m) {
    if (latitude_set) return;
    latitude_set = true;
    add_hard(HardType::kAvoidLatitude, Target::edges(), to_number(m[1]));
  };
  t.consume(kLatitude, latitude);
  t.consume(kLatitude2, latitude);
  static const regex kPolar(R"(\bpolar\b)", kFlags);
  if (!latitude_set && t.contains(kPolar)) {
    add_hard(HardType::kAvoidLatitude, Target::edges(), 60.0);
    latitude_set = true;
  }

  bool flow = false;
  static const regex kReserve(
      R"(reserve\s+(?:at\s+least\s+)?(\d+(?:\.\d+)?)\s*%|(\d+(?:\.\d+)?)\s*%\s+(?:of\s+)?(?:capacity\s+)?(?:reserve|headroom))",
      kFlags);
  t.consume(kReserve, [&](const std::smatch& m) {
    const std::string v = m[1].matched ? m[1].str() : m[2].str();
    add_hard(HardType::kMinCapReserve, Target::flow(0), to_number(v) / 100.0);
    flow = true;
  });
  static const regex kDisjoint(
      R"((\d+|two|three|four|five|six)\s+(?:edge[-\s]?)?disjoint\s+(?:paths?|routes?))",
      kFlags);
  t.consume(kDisjoint, [&](const std::smatch& m) {
    if (auto k = word_number(m[1])) {
      add_hard(HardType::kKEdgeDisjoint, Target::flow(0),
               static_cast<double>(*k));
      flow = true;
    }
  });
  static const regex kLatency(R"((\d+(?:\.\d+)?)\s*(?:ms|milliseconds?)\b)",
                              kFlags);
  t.consume(kLatency, [&](const std::smatch& m) {
    add_hard(HardType::kMaxLatencyMs, Target::flow(0), to_number(m[1]));
    flow = true;
  });
  static const regex kHops(R"((\d+)\s+hops?\b)", kFlags);
  t.consume(kHops, [&](const std::smatch& m) {
    add_hard(HardType::kMaxHops, Target::flow(0), to_number(m[1]));
    flow = true;
  });

  static const regex kUtil(
      R"(utili[sz]ation[^%\d]{0,30}?(\d+(?:\.\d+)?)\s*%)", kFlags);
  t.consume(kUtil, [&](const std::smatch& m) {
    p.soft_constraints.push_back(
        {SoftType::kMaxUtilization, Target::edges(), to_number(m[1]) / 100.0,
         1.0});
  });

  const bool endpoints = sel.src_node || sel.dst_node || sel.src_plane ||
                         sel.dst_plane || sel.src_region || sel.dst_region;
  static const regex kClass(
      R"(\b(financial|emergency|military|consumer|iot|video|voice|bulk)\b)",
      kFlags);
  std::smatch cm;
  if (std::regex_search(t.str(), cm, kClass)) sel.traffic_class = cm[1];
  if (flow || endpoints) p.flow_selectors.push_back(sel);
  const Target soft_flow_target =
      p.flow_selectors.empty() ? Target::edges() : Target::flow(0);

  static const regex kMinLatency(
      R"(minimi[sz]e\s+(?:the\s+)?(?:end-to-end\s+)?latency|lowest\s+latency)",
      kFlags);
  static const regex kMinHops(R"(minimi[sz]e\s+(?:the\s+)?hops|fewest\s+hops)",
                              kFlags);
  static const regex kBalance(R"(load[-\s]balanc|balance\s+(?:the\s+)?load)",
                              kFlags);
  static const regex kStable(
      R"(stable\s+(?:paths|routes)|path\s+stability|route\s+stability)", kFlags);
  if (t.contains(kMinLatency))
    p.soft_constraints.push_back(
        {SoftType::kMinimizeLatency, soft_flow_target, 1.0, 1.0});
  if (t.contains(kMinHops))
    p.soft_constraints.push_back(
        {SoftType::kMinimizeHops, soft_flow_target, 1.0, 1.0});
  if (t.contains(kBalance))
    p.soft_constraints.push_back(
        {SoftType::kLoadBalance, Target::edges(), 1.0, 1.0});
  if (t.contains(kStable))
    p.soft_constraints.push_back(
        {SoftType::kPathStability, soft_flow_target, 1.0, 1.0});

  static const regex kCritical(R"(\bcritical\b)", kFlags);
  static const regex kHigh(R"(high[-\s]priority|\burgent\b|\bimportant\b)",
                           kFlags);
  static const regex kLow(R"(low[-\s]priority|best[-\s]effort)", kFlags);
  if (t.contains(kCritical)) p.priority = Priority::kCritical;
  else if (t.contains(kHigh)) p.priority = Priority::kHigh;
  else if (t.contains(kLow)) p.priority = Priority::kLow;

  if (!p.event_conditions.empty())
    for (auto& h : p.hard_constraints) h.condition = p.event_conditions.front();
  return p;
}

json CompileTrace::to_json() const {
  json j;
  j["compiled"] = compiled;
  j["first_try"] = first_try;
  j["failure"] = failure;
  j["wall_ms"] = wall_ms;
  j["attempts"] = json::array();
  for (const auto& a : attempts) {
    j["attempts"].push_back({{"prompt_messages", a.prompt.size()},
                             {"raw_response", a.raw_response},
                             {"extracted", a.extracted},
                             {"errors", a.errors}});
  }
  return j;
}

CompileResult compile(std::string_view intent_text,
                      const CompilerConfig& config,
                      const TopologySnapshot& snapshot, ChatBackend* backend,
                      const ValidateOptions& validate_options) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  CompileResult result;
  CompileTrace& trace = result.trace;
  auto finish = [&]() {
    trace.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - start)
                        .count();
    return result;
  };
  ValidateOptions vopt = validate_options;
  vopt.certify = false;  // the gate stops at pass 7
  auto gate = [&](const ConstraintProgram& prog) {
    if (!config.use_verifier) return std::vector<std::string>{};
    EventSet events(prog.event_conditions.begin(), prog.event_conditions.end());
    return validate(prog, snapshot, events, vopt).errors_through(7);
  };

  if (config.backend == Backend::kRuleBased) {
    ConstraintProgram prog = rule_based_compile(intent_text, snapshot);
    CompileAttempt a;
    a.raw_response = serialize_program(prog);
    a.extracted = a.raw_response;
    a.errors = gate(prog);
    trace.compiled = a.errors.empty();
    trace.first_try = trace.compiled;
    if (!trace.compiled) trace.failure = "rule-based program failed validation";
    trace.attempts.push_back(std::move(a));
    result.last_parsed = prog;
    if (trace.compiled) result.program = std::move(prog);
    return finish();
  }

  if (!backend) {
    trace.failure = "no chat backend supplied";
    return finish();
  }
  std::vector<ChatMessage> messages =
      build_prompt(config, intent_text, snapshot.config(), snapshot.regions());
  for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
    CompileAttempt a;
    a.prompt = messages;
    try {
      a.raw_response = backend->complete(messages, config);
    } catch (const TransportError& e) {
      a.errors.push_back(std::string("transport: ") + e.what());
      trace.attempts.push_back(std::move(a));
      trace.failure = std::string("transport error: ") + e.what();
      return finish();
    }
    ExtractResult ex = extract_payload(a.raw_response);
    std::optional<ConstraintProgram> prog;
    if (!ex.payload) {
      a.errors.push_back("$: " + ex.error);
    } else {
      a.extracted = *ex.payload;
      ParseResult parsed = parse_program(*ex.payload);
      if (!parsed.ok()) {
        a.errors = parsed.errors;
      } else {
        a.errors = gate(*parsed.program);
        prog = std::move(parsed.program);
        result.last_parsed = prog;
      }
    }
    const bool ok = a.errors.empty();
    const std::vector<std::string> errors = a.errors;
    const std::string raw = a.raw_response;
    trace.attempts.push_back(std::move(a));
    if (ok) {
      trace.compiled = true;
      trace.first_try = attempt == 0;
      result.program = std::move(prog);
      return finish();
    }
    messages.push_back({"assistant", raw});
    messages.push_back({"user", repair_message(errors)});
  }
  trace.failure = "no valid program after " +
                  std::to_string(trace.attempts.size()) + " attempt(s)";
  return finish();
}

}  // namespace intentroute
