#pragma once

/**
 * @file engine.hpp
 * @brief Entropy-adaptive generation loop and its JSON-lines trace format.
 *
 * Each step: the active model scores prompt + generated tokens, entropy of the
 * raw logits goes to the controller window, temperature is applied, a token is
 * sampled (or argmax'd in greedy mode), and the controller decides whether the
 * next token comes from the other model.
 */

#include <fstream>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ead/controller.hpp"
#include "ead/error.hpp"
#include "ead/logits.hpp"
#include "ead/provider.hpp"

namespace ead {

struct GenerationConfig {
  SwitchConfig switching;
  Temperature temperature{1.0};
  std::size_t max_tokens = 256;
  std::optional<TokenId> stop_token;
  std::uint64_t seed = 0;
  bool greedy = false;

  void validate() const {
    switching.validate();
    if (max_tokens < 1) throw Error(ErrorKind::InvalidConfig, "max_tokens must be >= 1");
  }

  friend bool operator==(const GenerationConfig&, const GenerationConfig&) = default;
};

struct TokenEvent {
  std::size_t step = 0;
  TokenId token_id = 0;
  ModelRole role = ModelRole::Small;
  double entropy_bits = 0.0;
  double rolling_mean_bits = 0.0;
  std::size_t c_after = 0;
  bool switched = false;

  friend bool operator==(const TokenEvent&, const TokenEvent&) = default;
};

struct GenerationTrace {
  Context prompt;
  GenerationConfig config;
  ModelMeta meta_small;
  ModelMeta meta_large;
  std::vector<TokenEvent> events;
  bool complete = true;
  std::string error;  // set when a backend outage cut the run short

  std::vector<double> entropies() const {
    std::vector<double> out;
    out.reserve(events.size());
    for (const auto& e : events) out.push_back(e.entropy_bits);
    return out;
  }

  std::vector<ModelRole> roles() const {
    std::vector<ModelRole> out;
    out.reserve(events.size());
    for (const auto& e : events) out.push_back(e.role);
    return out;
  }

  Context tokens() const {
    Context out;
    out.reserve(events.size());
    for (const auto& e : events) out.push_back(e.token_id);
    return out;
  }

  friend bool operator==(const GenerationTrace&, const GenerationTrace&) = default;
};

/// Called once per step with the raw (pre-temperature) logits of the active model.
using StepObserver = std::function<void(const TokenEvent&, const LogitVector&)>;

template <TokenScorer Small, TokenScorer Large>
GenerationTrace generate(const Context& prompt, const Small& small, const Large& large,
                         const GenerationConfig& cfg, const StepObserver& observer = {}) {
  cfg.validate();
  validate_pair(small.meta(), large.meta());
  check_context(prompt, small.meta().vocab_size);
  if (cfg.stop_token && *cfg.stop_token >= small.meta().vocab_size) {
    throw Error(ErrorKind::InvalidConfig, "stop_token outside vocabulary");
  }

  GenerationTrace trace{prompt, cfg, small.meta(), large.meta(), {}, true, {}};
  trace.events.reserve(cfg.max_tokens);

  ControllerState state(cfg.switching);
  Rng rng(cfg.seed);
  Context context = prompt;

  for (std::size_t i = 0; i < cfg.max_tokens; ++i) {
    std::optional<LogitVector> raw;
    try {
      raw = state.active == ModelRole::Small ? small.score(context) : large.score(context);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::BackendUnavailable) throw;
      trace.complete = false;
      trace.error = e.what();
      return trace;
    }
    if (raw->size() != small.meta().vocab_size) {
      throw Error(ErrorKind::BackendCorrupt, "provider returned " + std::to_string(raw->size()) +
                                                 " logits for vocab_size " +
                                                 std::to_string(small.meta().vocab_size));
    }

    const double h = entropy_bits(softmax(*raw));
    const TokenId token = cfg.greedy ? argmax(*raw)
                                     : sample(softmax(apply_temperature(*raw, cfg.temperature)), rng);
    const StepResult r = step(state, h, cfg.switching);

    TokenEvent ev{i, token, r.produced_by, h, r.mean_bits, state.tokens_since_switch,
                  r.decision != Decision::Stay};
    if (observer) observer(ev, *raw);
    trace.events.push_back(ev);
    context.push_back(token);

    if (cfg.stop_token && token == *cfg.stop_token) break;
  }
  return trace;
}

// ---------------------------------------------------------------------------
// Trace file: one header line, then one TokenEvent per line.
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::json tau_to_json(double tau) {
  if (std::isinf(tau)) return "inf";
  return tau;
}

inline double tau_from_json(const nlohmann::json& j) {
  if (j.is_string()) return parse_tau(j.get<std::string>());
  const double v = j.get<double>();
  if (std::isnan(v) || v < 0.0) throw Error(ErrorKind::Parse, "tau must be >= 0");
  return v;
}

inline ModelRole role_from_string(const std::string& s) {
  if (s == "small") return ModelRole::Small;
  if (s == "large") return ModelRole::Large;
  throw Error(ErrorKind::Parse, "unknown role '" + s + "'");
}

}  // namespace detail

inline nlohmann::json config_to_json(const GenerationConfig& c) {
  nlohmann::json j{{"tau", detail::tau_to_json(c.switching.tau)},
                   {"window", c.switching.window},
                   {"min_duration", c.switching.min_duration},
                   {"initial_role", to_string(c.switching.initial_role)},
                   {"reset_window_on_switch", c.switching.reset_window_on_switch},
                   {"temperature", c.temperature.value()},
                   {"max_tokens", c.max_tokens},
                   {"stop_token", nullptr},
                   {"seed", c.seed},
                   {"greedy", c.greedy}};
  if (c.stop_token) j["stop_token"] = *c.stop_token;
  return j;
}

inline GenerationConfig config_from_json(const nlohmann::json& j) {
  GenerationConfig c;
  c.switching.tau = detail::tau_from_json(j.at("tau"));
  c.switching.window = j.at("window").get<std::size_t>();
  c.switching.min_duration = j.at("min_duration").get<std::size_t>();
  c.switching.initial_role = detail::role_from_string(j.at("initial_role").get<std::string>());
  c.switching.reset_window_on_switch = j.at("reset_window_on_switch").get<bool>();
  c.temperature = Temperature(j.at("temperature").get<double>());
  c.max_tokens = j.at("max_tokens").get<std::size_t>();
  if (!j.at("stop_token").is_null()) c.stop_token = j.at("stop_token").get<TokenId>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.greedy = j.at("greedy").get<bool>();
  return c;
}

inline nlohmann::json event_to_json(const TokenEvent& e) {
  return {{"step", e.step},
          {"token_id", e.token_id},
          {"role", to_string(e.role)},
          {"entropy_bits", e.entropy_bits},
          {"rolling_mean_bits", e.rolling_mean_bits},
          {"c_after", e.c_after},
          {"switched", e.switched}};
}

inline TokenEvent event_from_json(const nlohmann::json& j) {
  TokenEvent e;
  e.step = j.at("step").get<std::size_t>();
  e.token_id = j.at("token_id").get<TokenId>();
  e.role = detail::role_from_string(j.at("role").get<std::string>());
  e.entropy_bits = j.at("entropy_bits").get<double>();
  e.rolling_mean_bits = j.at("rolling_mean_bits").get<double>();
  e.c_after = j.at("c_after").get<std::size_t>();
  e.switched = j.at("switched").get<bool>();
  return e;
}

inline void write_trace(const GenerationTrace& t, std::ostream& out) {
  nlohmann::json header{{"kind", "ead-trace"},
                        {"prompt", t.prompt},
                        {"config", config_to_json(t.config)},
                        {"meta_small", t.meta_small},
                        {"meta_large", t.meta_large},
                        {"complete", t.complete},
                        {"error", t.error}};
  out << header.dump() << '\n';
  for (const auto& e : t.events) out << event_to_json(e).dump() << '\n';
}

inline void write_trace(const GenerationTrace& t, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::InvalidInput, "cannot write trace " + path);
  write_trace(t, out);
  if (!out) throw Error(ErrorKind::InvalidInput, "write failed for " + path);
}

/// Parse errors carry "<name>:<line>:" so a truncated tail is easy to locate.
inline GenerationTrace read_trace(std::istream& in, const std::string& name = "<trace>") {
  GenerationTrace t;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (!have_header) {
        if (j.value("kind", "") != "ead-trace") throw Error(ErrorKind::Parse, "missing trace header");
        t.prompt = j.at("prompt").get<Context>();
        t.config = config_from_json(j.at("config"));
        t.meta_small = j.at("meta_small").get<ModelMeta>();
        t.meta_large = j.at("meta_large").get<ModelMeta>();
        t.complete = j.at("complete").get<bool>();
        t.error = j.at("error").get<std::string>();
        have_header = true;
        continue;
      }
      t.events.push_back(event_from_json(j));
    } catch (const std::exception& e) {
      throw Error(ErrorKind::Parse, name + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_header) throw Error(ErrorKind::Parse, name + ":1: empty trace file");
  return t;
}

inline GenerationTrace read_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidConfig, "cannot open trace " + path);
  return read_trace(in, path);
}

}  // namespace ead
