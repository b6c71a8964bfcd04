#pragma once

/**
 * @file logits.hpp
 * @brief Probability, entropy and sampling kernels over next-token logits.
 *
 * Everything here is a pure function of its arguments. Entropies are in bits.
 * Switching decisions must be driven by entropy of the *raw* logits; the
 * temperature only shapes the sampling distribution.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ead/error.hpp"

namespace ead {

using TokenId = std::uint32_t;

/// Unnormalized next-token scores. Always at least two entries, all finite.
class LogitVector {
 public:
  explicit LogitVector(std::vector<double> scores) : scores_(std::move(scores)) {
    if (scores_.size() < 2) {
      throw Error(ErrorKind::InvalidInput,
                  "logit vector needs at least 2 entries, got " + std::to_string(scores_.size()));
    }
    for (std::size_t i = 0; i < scores_.size(); ++i) {
      if (!std::isfinite(scores_[i])) {
        throw Error(ErrorKind::InvalidInput, "non-finite logit at index " + std::to_string(i));
      }
    }
  }

  std::size_t size() const noexcept { return scores_.size(); }
  double operator[](std::size_t i) const { return scores_[i]; }
  std::span<const double> values() const noexcept { return scores_; }
  const std::vector<double>& vector() const noexcept { return scores_; }

  friend bool operator==(const LogitVector&, const LogitVector&) = default;

 private:
  std::vector<double> scores_;
};

/// A normalized distribution over token ids.
class ProbDist {
 public:
  static constexpr double kSumTolerance = 1e-9;

  explicit ProbDist(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw Error(ErrorKind::InvalidInput, "empty distribution");
    double sum = 0.0;
    for (double p : probs_) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw Error(ErrorKind::InvalidInput, "probability outside [0, 1]");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kSumTolerance) {
      throw Error(ErrorKind::InvalidInput, "probabilities sum to " + std::to_string(sum));
    }
  }

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> values() const noexcept { return probs_; }

 private:
  std::vector<double> probs_;
};

class Temperature {
 public:
  explicit Temperature(double value = 1.0) : value_(value) {
    if (!(value > 0.0) || !std::isfinite(value)) {
      throw Error(ErrorKind::InvalidConfig, "temperature must be finite and > 0");
    }
  }
  double value() const noexcept { return value_; }

  friend bool operator==(const Temperature&, const Temperature&) = default;

 private:
  double value_;
};

/// Max-subtracted softmax; cannot overflow for finite input.
inline ProbDist softmax(const LogitVector& logits) {
  const auto values = logits.values();
  const double max = *std::max_element(values.begin(), values.end());
  std::vector<double> probs(values.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    probs[i] = std::exp(values[i] - max);
    sum += probs[i];
  }
  // sum >= 1 because the max element contributes exp(0).
  for (double& p : probs) p /= sum;
  return ProbDist(std::move(probs));
}

/// Shannon entropy in bits, with 0 * log2(0) taken as 0.
inline double entropy_bits(const ProbDist& dist) {
  double h = 0.0;
  for (double p : dist.values()) {
    if (p > 0.0) h -= p * std::log2(p);
  }
  const double upper = std::log2(static_cast<double>(dist.size()));
  // Rounding can push a near-uniform result a hair past the bound.
  return std::clamp(h, 0.0, upper);
}

inline LogitVector apply_temperature(const LogitVector& logits, Temperature t) {
  if (t.value() == 1.0) return logits;
  std::vector<double> scaled(logits.vector());
  for (double& l : scaled) l /= t.value();
  return LogitVector(std::move(scaled));
}

/// The one random source of a generation stream. Algorithm is fixed to
/// mt19937_64 so traces replay bit-identically for a given seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform double in [0, 1) built from the top 53 bits of one draw.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

/// Inverse-CDF draw: index i is returned with probability p_i.
inline TokenId sample(const ProbDist& dist, Rng& rng) {
  const double u = rng.uniform();
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] <= 0.0) continue;
    cumulative += dist[i];
    last_positive = i;
    if (u < cumulative) return static_cast<TokenId>(i);
  }
  // u landed in the rounding gap above the accumulated sum.
  return static_cast<TokenId>(last_positive);
}

/// Lowest index among the maxima.
inline TokenId argmax(const LogitVector& logits) {
  const auto values = logits.values();
  return static_cast<TokenId>(std::max_element(values.begin(), values.end()) - values.begin());
}

inline double log2_vocab(std::size_t vocab_size) {
  return std::log2(static_cast<double>(vocab_size));
}

}  // namespace ead
