#pragma once

/**
 * @file provider.hpp
 * @brief Token-scoring backends behind one contract.
 *
 * A provider maps a full context (prompt plus everything generated so far,
 * by either model) to a logit vector. There is no per-stream state in the
 * contract, so the engine may hand the context to whichever model is active
 * without migrating caches.
 */

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ead/error.hpp"
#include "ead/logits.hpp"

namespace ead {

using Context = std::vector<TokenId>;

/// 64-bit FNV-1a of a vocabulary definition.
constexpr std::uint64_t vocab_fingerprint(std::string_view definition) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : definition) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t synthetic_fingerprint(std::size_t vocab_size) {
  return vocab_fingerprint("synthetic:" + std::to_string(vocab_size));
}

inline std::string fingerprint_hex(std::uint64_t fp) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fp));
  return buf;
}

inline std::uint64_t parse_fingerprint_hex(std::string_view hex) {
  if (hex.starts_with("0x") || hex.starts_with("0X")) hex.remove_prefix(2);
  if (hex.empty() || hex.size() > 16) {
    throw Error(ErrorKind::InvalidConfig, "bad vocab fingerprint '" + std::string(hex) + "'");
  }
  std::uint64_t v = 0;
  for (char c : hex) {
    int d = 0;
    if (c >= '0' && c <= '9') d = c - '0';
    else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
    else throw Error(ErrorKind::InvalidConfig, "bad vocab fingerprint '" + std::string(hex) + "'");
    v = (v << 4) | static_cast<std::uint64_t>(d);
  }
  return v;
}

struct ModelMeta {
  std::string name;
  std::size_t vocab_size = 0;
  double param_count_b = 0.0;  // billions
  std::uint64_t vocab_fingerprint = 0;

  void validate() const {
    if (vocab_size < 2) throw Error(ErrorKind::InvalidConfig, name + ": vocab_size must be >= 2");
    if (!(param_count_b > 0.0) || !std::isfinite(param_count_b)) {
      throw Error(ErrorKind::InvalidConfig, name + ": param_count must be > 0");
    }
  }

  friend bool operator==(const ModelMeta&, const ModelMeta&) = default;
};

inline void to_json(nlohmann::json& j, const ModelMeta& m) {
  j = nlohmann::json{{"name", m.name},
                     {"vocab_size", m.vocab_size},
                     {"param_count_b", m.param_count_b},
                     {"vocab_fingerprint", fingerprint_hex(m.vocab_fingerprint)}};
}

inline void from_json(const nlohmann::json& j, ModelMeta& m) {
  m.name = j.at("name").get<std::string>();
  m.vocab_size = j.at("vocab_size").get<std::size_t>();
  m.param_count_b = j.at("param_count_b").get<double>();
  m.vocab_fingerprint = parse_fingerprint_hex(j.at("vocab_fingerprint").get<std::string>());
}

/// Throws invalid-input if any id is outside the vocabulary.
inline void check_context(std::span<const TokenId> ctx, std::size_t vocab_size) {
  for (std::size_t i = 0; i < ctx.size(); ++i) {
    if (ctx[i] >= vocab_size) {
      throw Error(ErrorKind::InvalidInput, "token id " + std::to_string(ctx[i]) + " at position " +
                                               std::to_string(i) + " outside vocab of " +
                                               std::to_string(vocab_size));
    }
  }
}

/// Anything the engine can generate from.
template <typename T>
concept TokenScorer = requires(const T& m, std::span<const TokenId> ctx) {
  { m.meta() } -> std::convertible_to<const ModelMeta&>;
  { m.score(ctx) } -> std::same_as<LogitVector>;
};

/// Runtime-polymorphic provider, for backends chosen from configuration.
class ModelProvider {
 public:
  virtual ~ModelProvider() = default;
  virtual const ModelMeta& meta() const = 0;
  virtual LogitVector score(std::span<const TokenId> ctx) const = 0;
};

/// Small and large must share a vocabulary, and small must really be smaller.
inline void validate_pair(const ModelMeta& small, const ModelMeta& large) {
  if (small.vocab_size != large.vocab_size || small.vocab_fingerprint != large.vocab_fingerprint) {
    throw Error(ErrorKind::IncompatiblePair,
                "vocabularies differ: " + small.name + " (V=" + std::to_string(small.vocab_size) +
                    ", fp=" + fingerprint_hex(small.vocab_fingerprint) + ") vs " + large.name +
                    " (V=" + std::to_string(large.vocab_size) +
                    ", fp=" + fingerprint_hex(large.vocab_fingerprint) + ")");
  }
  if (!(small.param_count_b < large.param_count_b)) {
    throw Error(ErrorKind::MisconfiguredPair,
                "small model " + small.name + " (" + std::to_string(small.param_count_b) +
                    "B) is not smaller than large model " + large.name + " (" +
                    std::to_string(large.param_count_b) + "B)");
  }
}

// ---------------------------------------------------------------------------
// Synthetic provider
// ---------------------------------------------------------------------------

struct EntropySegment {
  std::size_t length = 1;
  double bits = 0.0;

  friend bool operator==(const EntropySegment&, const EntropySegment&) = default;
};

/// Target entropy per context position. The segment plan repeats once exhausted.
struct SyntheticProfile {
  std::vector<EntropySegment> segments;
  std::uint64_t seed = 0;
  double floor_bits = 0.0;

  double target_at(std::size_t position) const {
    std::size_t period = 0;
    for (const auto& s : segments) period += s.length;
    std::size_t offset = position % period;
    for (const auto& s : segments) {
      if (offset < s.length) return std::max(s.bits, floor_bits);
      offset -= s.length;
    }
    return std::max(segments.back().bits, floor_bits);
  }

  void validate(std::size_t vocab_size) const {
    if (segments.empty()) throw Error(ErrorKind::InvalidConfig, "synthetic profile has no segments");
    const double max_bits = log2_vocab(vocab_size);
    auto check_bits = [&](double b, const char* what) {
      if (!std::isfinite(b) || b < 0.0 || b > max_bits + 1e-12) {
        throw Error(ErrorKind::InvalidConfig, std::string(what) + " " + std::to_string(b) +
                                                  " bits outside [0, log2 V = " +
                                                  std::to_string(max_bits) + "]");
      }
    };
    for (const auto& s : segments) {
      if (s.length < 1) throw Error(ErrorKind::InvalidConfig, "segment length must be >= 1");
      check_bits(s.bits, "segment entropy");
    }
    check_bits(floor_bits, "entropy floor");
  }

  friend bool operator==(const SyntheticProfile&, const SyntheticProfile&) = default;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Entropy in bits of (1 - lambda) * one_hot + lambda * uniform over V.
inline double mixture_entropy(double lambda, std::size_t vocab_size) {
  const double v = static_cast<double>(vocab_size);
  const double q = lambda / v;
  const double top = 1.0 - lambda + q;
  double h = 0.0;
  if (top > 0.0) h -= top * std::log2(top);
  if (q > 0.0) h -= (v - 1.0) * q * std::log2(q);
  return h;
}

// Keeps every logit finite (log(1e-15 / V) is about -40 for V = 256).
inline constexpr double kMinLambda = 1e-15;

/// Bisection for the mixture weight hitting `target_bits`.
inline double solve_mixture_lambda(double target_bits, std::size_t vocab_size) {
  if (target_bits >= log2_vocab(vocab_size)) return 1.0;
  double lo = kMinLambda;
  double hi = 1.0;
  if (mixture_entropy(lo, vocab_size) >= target_bits) return lo;
  for (int i = 0; i < 200 && hi - lo > 1e-17; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double h = mixture_entropy(mid, vocab_size);
    if (std::abs(h - target_bits) < 1e-9) return mid;
    (h < target_bits ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Deterministic stand-in for a language model: entropy follows the profile,
/// and the preferred token is a seeded hash of the context.
class SyntheticProvider final : public ModelProvider {
 public:
  SyntheticProvider(SyntheticProfile profile, ModelMeta meta)
      : profile_(std::move(profile)), meta_(std::move(meta)) {
    meta_.validate();
    profile_.validate(meta_.vocab_size);
  }

  const ModelMeta& meta() const override { return meta_; }
  const SyntheticProfile& profile() const noexcept { return profile_; }

  LogitVector score(std::span<const TokenId> ctx) const override {
    check_context(ctx, meta_.vocab_size);
    const std::size_t position = ctx.size();
    const double lambda = detail::solve_mixture_lambda(profile_.target_at(position), meta_.vocab_size);
    const double v = static_cast<double>(meta_.vocab_size);
    if (lambda >= 1.0) return LogitVector(std::vector<double>(meta_.vocab_size, 0.0));

    const double q = lambda / v;
    std::vector<double> logits(meta_.vocab_size, std::log(q));
    logits[preferred_token(ctx)] = std::log(1.0 - lambda + q);
    return LogitVector(std::move(logits));
  }

  TokenId preferred_token(std::span<const TokenId> ctx) const {
    std::uint64_t h = detail::splitmix64(profile_.seed ^ 0x5eed5eed5eed5eedULL);
    h = detail::splitmix64(h ^ ctx.size());
    for (TokenId t : ctx) h = detail::splitmix64(h ^ t);
    return static_cast<TokenId>(h % meta_.vocab_size);
  }

 private:
  SyntheticProfile profile_;
  ModelMeta meta_;
};

inline std::unique_ptr<ModelProvider> make_synthetic(SyntheticProfile profile, ModelMeta meta) {
  return std::make_unique<SyntheticProvider>(std::move(profile), std::move(meta));
}

// ---------------------------------------------------------------------------
// Recorded logits
// ---------------------------------------------------------------------------

/// Logit vectors captured from a run, keyed by context length.
///
/// File layout (JSON lines):
///   {"kind":"logit-recording","meta":{...},"context_offset":N}
///   {"position":0,"logits":[...]}
///   ...
/// Entry k answers a context of length context_offset + k.
struct LogitRecording {
  ModelMeta meta;
  std::size_t context_offset = 0;
  std::vector<LogitVector> steps;
};

inline void write_logit_recording(const LogitRecording& rec, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::InvalidInput, "cannot write " + path);
  nlohmann::json header{{"kind", "logit-recording"}, {"meta", rec.meta}, {"context_offset", rec.context_offset}};
  out << header.dump() << '\n';
  for (std::size_t i = 0; i < rec.steps.size(); ++i) {
    out << nlohmann::json{{"position", i}, {"logits", rec.steps[i].vector()}}.dump() << '\n';
  }
  if (!out) throw Error(ErrorKind::InvalidInput, "write failed for " + path);
}

inline LogitRecording read_logit_recording(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidConfig, "cannot open logit recording " + path);
  LogitRecording rec;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (!have_header) {
        if (j.value("kind", "") != "logit-recording") {
          throw Error(ErrorKind::Parse, "missing logit-recording header");
        }
        rec.meta = j.at("meta").get<ModelMeta>();
        rec.context_offset = j.at("context_offset").get<std::size_t>();
        have_header = true;
        continue;
      }
      if (j.at("position").get<std::size_t>() != rec.steps.size()) {
        throw Error(ErrorKind::Parse, "positions must be consecutive from 0");
      }
      LogitVector lv(j.at("logits").get<std::vector<double>>());
      if (lv.size() != rec.meta.vocab_size) throw Error(ErrorKind::Parse, "logit row length != vocab_size");
      rec.steps.push_back(std::move(lv));
    } catch (const std::exception& e) {
      throw Error(ErrorKind::Parse, path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_header) throw Error(ErrorKind::Parse, path + ": empty logit recording");
  return rec;
}

class RecordedProvider final : public ModelProvider {
 public:
  explicit RecordedProvider(LogitRecording rec) : rec_(std::move(rec)) { rec_.meta.validate(); }

  const ModelMeta& meta() const override { return rec_.meta; }

  LogitVector score(std::span<const TokenId> ctx) const override {
    check_context(ctx, rec_.meta.vocab_size);
    if (ctx.size() < rec_.context_offset || ctx.size() - rec_.context_offset >= rec_.steps.size()) {
      throw Error(ErrorKind::InvalidInput, "no recorded logits for context length " + std::to_string(ctx.size()));
    }
    return rec_.steps[ctx.size() - rec_.context_offset];
  }

 private:
  LogitRecording rec_;
};

}  // namespace ead
