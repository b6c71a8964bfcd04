#pragma once

/**
 * @file controller.hpp
 * @brief Rolling-entropy switching automaton between a small and a large model.
 *
 * Per generated token the controller
 *   1. pushes the token's entropy into a window and takes the mean of the
 *      last min(w, n) values,
 *   2. counts the token against the model that produced it,
 *   3. once at least d_min tokens were produced since the last switch,
 *      moves Small -> Large when mean > tau and Large -> Small when mean <= tau.
 *
 * The window is shared by both models unless reset_window_on_switch is set.
 */

#include <cctype>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ead/detail/format.hpp"
#include "ead/error.hpp"
#include "ead/usage.hpp"

namespace ead {

/// Threshold that can never be exceeded; spelled `inf` in config files.
inline constexpr double kTauNever = std::numeric_limits<double>::infinity();

struct SwitchConfig {
  double tau = 0.25;
  std::size_t window = 5;
  std::size_t min_duration = 10;
  ModelRole initial_role = ModelRole::Small;
  bool reset_window_on_switch = false;

  void validate() const {
    if (std::isnan(tau) || tau < 0.0) throw Error(ErrorKind::InvalidConfig, "tau must be >= 0");
    if (window < 1) throw Error(ErrorKind::InvalidConfig, "window must be >= 1");
    if (min_duration < 1) throw Error(ErrorKind::InvalidConfig, "min_duration must be >= 1");
  }

  friend bool operator==(const SwitchConfig&, const SwitchConfig&) = default;
};

class EntropyWindow {
 public:
  explicit EntropyWindow(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ < 1) throw Error(ErrorKind::InvalidConfig, "window must be >= 1");
  }

  /// Appends h and returns the mean of the most recent min(capacity, count) values.
  double push_and_mean(double h) {
    recent_.push_back(h);
    if (recent_.size() > capacity_) recent_.pop_front();
    ++count_;
    return mean();
  }

  double mean() const {
    if (recent_.empty()) return 0.0;
    double sum = 0.0;
    for (double v : recent_) sum += v;
    return sum / static_cast<double>(recent_.size());
  }

  void clear() { recent_.clear(); }

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t count() const noexcept { return count_; }
  const std::deque<double>& recent() const noexcept { return recent_; }

 private:
  std::size_t capacity_;
  std::size_t count_ = 0;
  std::deque<double> recent_;
};

enum class Decision : unsigned char { Stay, SwitchToLarge, SwitchToSmall };

constexpr const char* to_string(Decision d) {
  switch (d) {
    case Decision::Stay: return "stay";
    case Decision::SwitchToLarge: return "switch-to-large";
    case Decision::SwitchToSmall: return "switch-to-small";
  }
  return "?";
}

struct ControllerState {
  ModelRole active;
  std::size_t tokens_since_switch = 0;
  EntropyWindow window;
  std::size_t switch_count = 0;

  explicit ControllerState(const SwitchConfig& cfg)
      : active(cfg.initial_role), window(cfg.window) {}
};

/// Pure switching rule; never mutates the state.
inline Decision decide(const ControllerState& state, double mean_bits, const SwitchConfig& cfg) {
  if (state.tokens_since_switch < cfg.min_duration) return Decision::Stay;
  if (state.active == ModelRole::Small && mean_bits > cfg.tau) return Decision::SwitchToLarge;
  if (state.active == ModelRole::Large && mean_bits <= cfg.tau) return Decision::SwitchToSmall;
  return Decision::Stay;
}

struct StepResult {
  ModelRole produced_by;  // role that generated the token this step accounts for
  Decision decision;
  double mean_bits;
};

/// Accounts one generated token with entropy `h` and applies the switching rule.
inline StepResult step(ControllerState& state, double h, const SwitchConfig& cfg) {
  const ModelRole producer = state.active;
  const double mean = state.window.push_and_mean(h);
  ++state.tokens_since_switch;
  const Decision d = decide(state, mean, cfg);
  if (d != Decision::Stay) {
    state.active = (d == Decision::SwitchToLarge) ? ModelRole::Large : ModelRole::Small;
    state.tokens_since_switch = 0;
    ++state.switch_count;
    if (cfg.reset_window_on_switch) state.window.clear();
  }
  return {producer, d, mean};
}

struct ReplayResult {
  std::vector<ModelRole> schedule;
  std::vector<Decision> decisions;
  std::vector<double> means;
  UsageStats usage;
};

/// Runs the automaton over a recorded entropy sequence without any model calls.
inline ReplayResult replay(std::span<const double> entropies, const SwitchConfig& cfg) {
  if (entropies.empty()) throw Error(ErrorKind::InvalidInput, "replay needs a non-empty entropy trace");
  cfg.validate();
  ControllerState state(cfg);
  ReplayResult out;
  out.schedule.reserve(entropies.size());
  out.decisions.reserve(entropies.size());
  out.means.reserve(entropies.size());
  for (double h : entropies) {
    if (!std::isfinite(h) || h < 0.0) {
      throw Error(ErrorKind::InvalidInput, "entropy values must be finite and >= 0");
    }
    const StepResult r = step(state, h, cfg);
    out.schedule.push_back(r.produced_by);
    out.decisions.push_back(r.decision);
    out.means.push_back(r.mean_bits);
  }
  out.usage = usage_from_roles(out.schedule, state.switch_count);
  return out;
}

/// Accepts a decimal number or `inf` (any case, optional leading '+').
inline double parse_tau(std::string_view text) {
  std::string s(text);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.pop_back();
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
  std::string lower;
  for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "inf" || lower == "+inf" || lower == "infinity") return kTauNever;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw Error(ErrorKind::InvalidConfig, "cannot parse tau '" + s + "'");
  }
  if (used != s.size() || std::isnan(v) || v < 0.0) {
    throw Error(ErrorKind::InvalidConfig, "cannot parse tau '" + s + "'");
  }
  return v;
}

inline std::string format_tau(double tau) {
  return std::isinf(tau) ? std::string("inf") : detail::shortest(tau);
}

}  // namespace ead
