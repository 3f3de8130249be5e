#pragma once

// Method of Bessel moments. For the CIaSR law
//
//   E[J0(a X)] = exp(-(gamma a)^alpha) J0(a delta),
//
// whose first zero in a sits at j01 / delta because the exponential factor
// never vanishes. delta is found by stepping a upward until the empirical
// moment turns nonpositive (then bisecting the last step), after which
// alpha and gamma have closed forms in the moments at three arguments.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ciasr/errors.hpp"
#include "ciasr/model.hpp"
#include "ciasr/samples.hpp"
#include "ciasr/special_fn.hpp"

namespace ciasr {

/// Amplitude that sets the units of the scan step and of a1..a3.
enum class ScaleReference { sample_median, sample_mean, fixed };

inline std::string to_string(ScaleReference r) {
  switch (r) {
    case ScaleReference::sample_median: return "median";
    case ScaleReference::sample_mean: return "mean";
    case ScaleReference::fixed: return "fixed";
  }
  return "?";
}

inline ScaleReference scale_reference_from_string(const std::string& s) {
  if (s == "median") return ScaleReference::sample_median;
  if (s == "mean") return ScaleReference::sample_mean;
  if (s == "fixed") return ScaleReference::fixed;
  throw DomainError("unknown scale reference '" + s + "' (expected median, mean or fixed)");
}

struct MobmConfig {
  // Normalised moment arguments: the absolute argument is a_i * 100 / L,
  // L the reference amplitude. At L = 100 they are used as given.
  double a1 = 0.01;
  double a2 = 0.02;
  double a3 = 0.01;
  // Scan step in units of 1 / L.
  double step_fraction = 0.01;
  std::size_t max_iterations = 5000;
  ScaleReference reference = ScaleReference::sample_median;
  double fixed_scale = 100.0;  // L when reference == fixed
  // Bisection on the last scan step stops at this relative width.
  double refine_relative = 1e-10;

  void validate() const {
    if (!(a1 > 0.0 && a2 > 0.0 && a3 > 0.0)) throw DomainError("MobmConfig: a1, a2, a3 must be > 0");
    if (a1 == a2) throw DomainError("MobmConfig: a1 and a2 must differ");
    if (!(step_fraction > 0.0 && step_fraction < 1.0))
      throw DomainError("MobmConfig: step_fraction must be in (0, 1)");
    if (max_iterations < 1) throw DomainError("MobmConfig: max_iterations must be >= 1");
    if (!(fixed_scale > 0.0)) throw DomainError("MobmConfig: fixed_scale must be > 0");
    if (!(refine_relative > 0.0)) throw DomainError("MobmConfig: refine_relative must be > 0");
  }
};

/// Absolute moment arguments (inverse amplitude units).
struct MomentArgs {
  double a1 = 0.0;
  double a2 = 0.0;
  double a3 = 0.0;
};

inline MomentArgs resolve_moment_args(const MobmConfig& cfg, double scale) {
  const double k = 100.0 / scale;
  return {cfg.a1 * k, cfg.a2 * k, cfg.a3 * k};
}

/// (1/N) sum J0(a x_i). Summed in fixed blocks so the result does not depend
/// on how callers split work.
inline double empirical_bessel_moment(std::span<const double> x, double a) {
  if (x.empty()) throw DomainError("empirical_bessel_moment: empty sample set");
  if (!(a >= 0.0)) throw DomainError("empirical_bessel_moment: a must be >= 0");
  if (a == 0.0) return 1.0;
  constexpr std::size_t kBlock = 4096;
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); i += kBlock) {
    const std::size_t end = std::min(x.size(), i + kBlock);
    double block = 0.0;
    for (std::size_t j = i; j < end; ++j) block += boost::math::detail::bessel_j0(a * x[j]);
    total += block;
  }
  return total / static_cast<double>(x.size());
}

inline double empirical_bessel_moment(const SampleSet& s, double a) {
  return empirical_bessel_moment(s.view(), a);
}

/// Analytic moment exp(-(gamma a)^alpha) J0(a delta).
inline double analytic_bessel_moment(const ModelParams& p, double a) {
  return std::exp(-std::pow(p.gamma * a, p.alpha)) * bessel_j0(a * p.delta);
}

inline double reference_scale(std::span<const double> x, const MobmConfig& cfg) {
  switch (cfg.reference) {
    case ScaleReference::fixed: return cfg.fixed_scale;
    case ScaleReference::sample_mean: {
      const double m = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
      if (!(m > 0.0) || !std::isfinite(m)) throw DomainError("reference_scale: sample mean must be positive");
      return m;
    }
    case ScaleReference::sample_median: {
      std::vector<double> v(x.begin(), x.end());
      const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
      std::nth_element(v.begin(), mid, v.end());
      double med = *mid;
      if (v.size() % 2 == 0) med = 0.5 * (med + *std::max_element(v.begin(), mid));
      if (!(med > 0.0)) throw DomainError("reference_scale: sample median must be positive");
      return med;
    }
  }
  return cfg.fixed_scale;
}

struct DeltaEstimate {
  double delta_hat = 0.0;
  double root_a0 = 0.0;
  // Scan bracket: moment(bracket_lo) > 0 >= moment(bracket_hi), width = step.
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  double step = 0.0;
  std::size_t iterations = 0;
};

/// Scans a = step, 2 step, ... for the first nonpositive moment, then
/// bisects that step. `moment` is any callable a -> E[J0(a X)]; only the
/// sign is used, so it may return any type comparable with 0.0 and
/// convertible to double (e.g. a sign/log pair where exp would underflow).
template <class Moment>
DeltaEstimate scan_for_delta(Moment&& moment, double step, std::size_t max_iterations,
                             double refine_relative = 1e-10) {
  if (!(step > 0.0) || !std::isfinite(step)) throw DomainError("scan_for_delta: step must be > 0");
  DeltaEstimate out;
  out.step = step;
  double last = 1.0;
  for (std::size_t k = 1; k <= max_iterations; ++k) {
    const double a = step * static_cast<double>(k);
    const auto m = moment(a);
    last = static_cast<double>(m);
    if (!(m > 0.0)) {
      out.iterations = k;
      out.bracket_lo = step * static_cast<double>(k - 1);
      out.bracket_hi = a;
      double lo = out.bracket_lo;
      double hi = out.bracket_hi;
      for (int it = 0; it < 200 && hi - lo > refine_relative * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (moment(mid) > 0.0) lo = mid; else hi = mid;
      }
      out.root_a0 = 0.5 * (lo + hi);
      out.delta_hat = kJ0FirstZero / out.root_a0;
      return out;
    }
  }
  throw SearchFailure("estimate_delta: Bessel moment stayed positive for " +
                          std::to_string(max_iterations) + " steps",
                      last, step * static_cast<double>(max_iterations));
}

inline DeltaEstimate estimate_delta(const SampleSet& samples, const MobmConfig& cfg) {
  cfg.validate();
  if (samples.empty()) throw DomainError("estimate_delta: empty sample set");
  const double scale = reference_scale(samples.view(), cfg);
  const auto x = samples.view();
  return scan_for_delta([x](double a) { return empirical_bessel_moment(x, a); },
                        cfg.step_fraction / scale, cfg.max_iterations, cfg.refine_relative);
}

struct AlphaGamma {
  double alpha = 0.0;
  double gamma = 0.0;
  bool alpha_clamped = false;
};

inline constexpr double kMinAlpha = 1e-3;

/// Closed-form inversion given the three moments m_i = E[J0(a_i X)].
/// delta_hat = 0 turns the J0 factors into 1 (heavy-tailed Rayleigh case).
inline AlphaGamma alpha_gamma_from_moments(const MomentArgs& a, const std::array<double, 3>& m,
                                           double delta_hat) {
  const std::array<double, 3> args{a.a1, a.a2, a.a3};
  std::array<double, 3> log_gap{};  // ln m_i - ln J0(a_i delta)
  for (int i = 0; i < 3; ++i) {
    const double j = delta_hat > 0.0 ? bessel_j0(args[i] * delta_hat) : 1.0;
    if (!(m[i] > 0.0) || !(j > 0.0) || !(m[i] < j)) {
      throw MomentDomainError("estimate_alpha_gamma: need 0 < E[J0(a" + std::to_string(i + 1) +
                                  " x)] < J0(a" + std::to_string(i + 1) + " delta) (a" +
                                  std::to_string(i + 1) + "=" + std::to_string(args[i]) +
                                  ", moment=" + std::to_string(m[i]) + ", J0=" + std::to_string(j) + ")",
                              i + 1, args[i]);
    }
    log_gap[i] = std::log(m[i]) - std::log(j);
  }
  AlphaGamma out;
  double alpha = std::log(log_gap[0] / log_gap[1]) / std::log(a.a1 / a.a2);
  if (!(alpha > 0.0)) {
    alpha = kMinAlpha;
    out.alpha_clamped = true;
  } else if (alpha > 2.0) {
    alpha = 2.0;
    out.alpha_clamped = true;
  }
  out.alpha = alpha;
  out.gamma = std::pow(-log_gap[2], 1.0 / alpha) / a.a3;
  return out;
}

inline AlphaGamma estimate_alpha_gamma(const SampleSet& samples, double delta_hat, const MobmConfig& cfg) {
  cfg.validate();
  if (samples.empty()) throw DomainError("estimate_alpha_gamma: empty sample set");
  if (!(delta_hat > 0.0)) throw DomainError("estimate_alpha_gamma: delta_hat must be > 0");
  const auto a = resolve_moment_args(cfg, reference_scale(samples.view(), cfg));
  const std::array<double, 3> m{empirical_bessel_moment(samples, a.a1), empirical_bessel_moment(samples, a.a2),
                                empirical_bessel_moment(samples, a.a3)};
  return alpha_gamma_from_moments(a, m, delta_hat);
}

struct FitReport {
  ModelParams params;
  double root_a0 = 0.0;
  MomentArgs args;
  std::array<double, 3> moments{};
  std::size_t iterations = 0;
  double step = 0.0;
  double scale = 0.0;  // reference amplitude L
  bool delta_fallback = false;
  std::vector<std::string> warnings;
};

class FitError : public std::runtime_error {
 public:
  FitError(const std::string& what, FitReport partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const FitReport& partial() const noexcept { return partial_; }

 private:
  FitReport partial_;
};

namespace detail {

inline void add_fit_warnings(FitReport& r) {
  const std::array<double, 3> args{r.args.a1, r.args.a2, r.args.a3};
  if (r.params.delta > 0.0) {
    for (int i = 0; i < 3; ++i) {
      const double prod = args[i] * r.params.delta;
      if (!(prod > 0.0 && prod < kJ0FirstZero))
        r.warnings.push_back("a" + std::to_string(i + 1) + "*delta_hat=" + std::to_string(prod) +
                             " outside (0, j01)");
    }
  }
  if (r.params.alpha > 1.7 && r.params.delta < 0.1 * r.params.gamma)
    r.warnings.push_back("unstable regime: alpha_hat > 1.7 with delta_hat < 0.1 gamma_hat");
}

}  // namespace detail

/// Full estimator: delta by scan, then alpha and gamma in closed form. A scan
/// with no sign change falls back to delta_hat = 0.
template <class Moment>
FitReport fit_from_moments(Moment&& moment, double scale, const MobmConfig& cfg) {
  cfg.validate();
  FitReport r;
  r.scale = scale;
  r.args = resolve_moment_args(cfg, scale);
  r.step = cfg.step_fraction / scale;
  try {
    const auto d = scan_for_delta(moment, r.step, cfg.max_iterations, cfg.refine_relative);
    r.params.delta = d.delta_hat;
    r.root_a0 = d.root_a0;
    r.iterations = d.iterations;
  } catch (const SearchFailure& e) {
    r.params.delta = 0.0;
    r.root_a0 = e.last_a();
    r.iterations = cfg.max_iterations;
    r.delta_fallback = true;
    r.warnings.push_back("no zero crossing up to a=" + std::to_string(e.last_a()) +
                         "; delta_hat set to 0");
  }
  r.moments = {static_cast<double>(moment(r.args.a1)), static_cast<double>(moment(r.args.a2)),
               static_cast<double>(moment(r.args.a3))};
  try {
    const auto ag = alpha_gamma_from_moments(r.args, r.moments, r.params.delta);
    r.params.alpha = ag.alpha;
    r.params.gamma = ag.gamma;
    if (ag.alpha_clamped) r.warnings.push_back("alpha_hat clamped into (0, 2]");
  } catch (const MomentDomainError& e) {
    r.params.alpha = std::numeric_limits<double>::quiet_NaN();
    r.params.gamma = std::numeric_limits<double>::quiet_NaN();
    r.warnings.push_back(e.what());
    detail::add_fit_warnings(r);
    throw FitError(e.what(), r);
  }
  detail::add_fit_warnings(r);
  return r;
}

inline FitReport fit(const SampleSet& samples, const MobmConfig& cfg = {}) {
  cfg.validate();
  if (samples.empty()) throw DomainError("fit: empty sample set");
  for (double v : samples.values)
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("fit: samples must be finite and >= 0");
  const auto x = samples.view();
  return fit_from_moments([x](double a) { return empirical_bessel_moment(x, a); },
                          reference_scale(x, cfg), cfg);
}

inline nlohmann::json to_json(const FitReport& r) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  return {{"alpha", num(r.params.alpha)},
          {"gamma", num(r.params.gamma)},
          {"delta", num(r.params.delta)},
          {"root_a0", num(r.root_a0)},
          {"a1", r.args.a1},
          {"a2", r.args.a2},
          {"a3", r.args.a3},
          {"moment_a1", r.moments[0]},
          {"moment_a2", r.moments[1]},
          {"moment_a3", r.moments[2]},
          {"iterations", r.iterations},
          {"step", r.step},
          {"scale_reference", r.scale},
          {"delta_fallback", r.delta_fallback},
          {"warnings", r.warnings}};
}

inline FitReport fit_report_from_json(const nlohmann::json& j) {
  auto num = [&](const char* key) {
    if (!j.contains(key)) throw FormatError(std::string("FitReport JSON: missing '") + key + "'");
    return j[key].is_null() ? std::numeric_limits<double>::quiet_NaN() : j[key].get<double>();
  };
  FitReport r;
  r.params = {num("alpha"), num("gamma"), num("delta")};
  r.root_a0 = num("root_a0");
  r.args = {j.value("a1", 0.0), j.value("a2", 0.0), j.value("a3", 0.0)};
  r.moments = {j.value("moment_a1", 0.0), j.value("moment_a2", 0.0), j.value("moment_a3", 0.0)};
  r.iterations = j.value("iterations", std::size_t{0});
  r.step = j.value("step", 0.0);
  r.scale = j.value("scale_reference", 0.0);
  r.delta_fallback = j.value("delta_fallback", false);
  r.warnings = j.value("warnings", std::vector<std::string>{});
  return r;
}

}  // namespace ciasr
