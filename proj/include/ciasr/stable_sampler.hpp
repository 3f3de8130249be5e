#pragma once

// Stable random variates by the Chambers-Mallows-Stuck transform, in the
// parameterisation whose characteristic function is
//
//   alpha != 1: exp(i delta w - gamma^alpha |w|^alpha (1 - i beta sgn(w) tan(pi alpha / 2)))
//   alpha == 1: exp(i delta w - gamma |w| (1 + i beta sgn(w) (2/pi) log|w|))
//
// so beta = 1 with alpha < 1 is supported on the positive half line.
//
// Isotropic amplitudes use the sub-Gaussian representation: with
// A ~ S_{alpha/2}(cos(pi alpha / 4)^{2/alpha}, 1, 0) and G1, G2 ~ N(0, 2 gamma^2),
// |(sqrt(A) G1 + delta1, sqrt(A) G2 + delta2)| has the CIaSR law.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <utility>

#include "ciasr/errors.hpp"
#include "ciasr/rng.hpp"
#include "ciasr/samples.hpp"

namespace ciasr {

struct StableParams {
  double alpha = 2.0;
  double beta = 0.0;
  double gamma = 1.0;
  double delta = 0.0;

  void validate() const {
    if (!(alpha > 0.0 && alpha <= 2.0)) throw DomainError("StableParams: alpha must be in (0, 2]");
    if (!(beta >= -1.0 && beta <= 1.0)) throw DomainError("StableParams: beta must be in [-1, 1]");
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw DomainError("StableParams: gamma must be > 0");
    if (!std::isfinite(delta)) throw DomainError("StableParams: delta must be finite");
  }
};

struct CiasrGenConfig {
  double alpha = 2.0;
  double gamma = 1.0;
  double delta = 0.0;
  // (delta1, delta2) with delta1^2 + delta2^2 = delta^2; (delta, 0) when unset.
  std::optional<std::pair<double, double>> delta_split;
  std::size_t n = 1;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = stream::ciasr;

  std::pair<double, double> split() const { return delta_split.value_or(std::pair{delta, 0.0}); }

  void validate() const {
    if (!(alpha > 0.0 && alpha <= 2.0)) throw DomainError("CiasrGenConfig: alpha must be in (0, 2]");
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw DomainError("CiasrGenConfig: gamma must be > 0");
    if (!(delta >= 0.0) || !std::isfinite(delta)) throw DomainError("CiasrGenConfig: delta must be >= 0");
    if (n < 1) throw DomainError("CiasrGenConfig: n must be >= 1");
    const auto [d1, d2] = split();
    const double d2sum = d1 * d1 + d2 * d2;
    if (std::abs(d2sum - delta * delta) > 1e-12 * std::max(1.0, delta * delta))
      throw DomainError("CiasrGenConfig: delta_split must satisfy d1^2 + d2^2 = delta^2");
  }
};

namespace detail {

// One standard draw S_alpha(1, beta, 0).
inline double cms_standard(double alpha, double beta, Rng& rng) {
  const double v = std::numbers::pi * (rng.uniform_open() - 0.5);
  const double w = rng.exponential();
  constexpr double half_pi = 0.5 * std::numbers::pi;
  if (alpha == 1.0) {
    const double bv = half_pi + beta * v;
    return (bv * std::tan(v) - beta * std::log(half_pi * w * std::cos(v) / bv)) / half_pi;
  }
  const double t = beta * std::tan(half_pi * alpha);
  const double b = std::atan(t) / alpha;
  const double s = std::pow(1.0 + t * t, 1.0 / (2.0 * alpha));
  const double arg = alpha * (v + b);
  return s * std::sin(arg) / std::pow(std::cos(v), 1.0 / alpha) *
         std::pow(std::cos(v - arg) / w, (1.0 - alpha) / alpha);
}

inline double stable_draw(const StableParams& p, Rng& rng) {
  const double x = cms_standard(p.alpha, p.beta, rng);
  if (p.alpha == 1.0)
    return p.gamma * x + 2.0 / std::numbers::pi * p.beta * p.gamma * std::log(p.gamma) + p.delta;
  return p.gamma * x + p.delta;
}

// Totally skewed positive law with Laplace transform exp(-s^{alpha/2}).
inline double subordinator_draw(double alpha, Rng& rng) {
  const double scale = std::pow(std::cos(std::numbers::pi * alpha / 4.0), 2.0 / alpha);
  const double a = scale * cms_standard(alpha / 2.0, 1.0, rng);
  return a > 0.0 ? a : std::numeric_limits<double>::min();
}

inline nlohmann::json stable_json(const StableParams& p, std::size_t n) {
  return {{"kind", "stable"}, {"alpha", p.alpha}, {"beta", p.beta}, {"gamma", p.gamma},
          {"delta", p.delta}, {"n", n}};
}

}  // namespace detail

inline SampleSet sample_stable(const StableParams& p, std::size_t n, std::uint64_t seed,
                               std::uint64_t stream_id = stream::stable) {
  p.validate();
  Rng rng(seed, stream_id);
  SampleSet out;
  out.values.resize(n);
  for (auto& v : out.values) v = detail::stable_draw(p, rng);
  out.seed = seed;
  out.config = detail::stable_json(p, n);
  return out;
}

/// Positive variates A ~ S_{alpha/2}(cos(pi alpha/4)^{2/alpha}, 1, 0), 0 < alpha < 2.
inline SampleSet sample_one_sided(double alpha, std::size_t n, std::uint64_t seed,
                                  std::uint64_t stream_id = stream::one_sided) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw DomainError("sample_one_sided: alpha must be in (0, 2)");
  Rng rng(seed, stream_id);
  SampleSet out;
  out.values.resize(n);
  for (auto& v : out.values) v = detail::subordinator_draw(alpha, rng);
  out.seed = seed;
  out.config = {{"kind", "one_sided"}, {"alpha", alpha}, {"n", n}};
  return out;
}

/// At alpha = 2 the subordinator is replaced by A = 1 (plain Rician).
inline SampleSet sample_ciasr(const CiasrGenConfig& cfg) {
  cfg.validate();
  const auto [d1, d2] = cfg.split();
  const double sd = std::sqrt(2.0) * cfg.gamma;
  Rng rng(cfg.seed, cfg.stream_id);
  SampleSet out;
  out.values.resize(cfg.n);
  for (auto& v : out.values) {
    const double a = cfg.alpha == 2.0 ? 1.0 : detail::subordinator_draw(cfg.alpha, rng);
    const double root = std::sqrt(a);
    const double re = root * sd * rng.normal() + d1;
    const double im = root * sd * rng.normal() + d2;
    v = std::hypot(re, im);
  }
  out.seed = cfg.seed;
  out.config = {{"kind", "ciasr"},   {"alpha", cfg.alpha}, {"gamma", cfg.gamma},
                {"delta", cfg.delta}, {"delta1", d1},       {"delta2", d2},
                {"n", cfg.n},         {"stream", cfg.stream_id}};
  return out;
}

}  // namespace ciasr
