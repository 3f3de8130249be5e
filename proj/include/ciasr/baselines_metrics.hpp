#pragma once

// Weibull and log-normal reference fits, and the goodness-of-fit measures
// used to compare them with CIaSR: binned KL divergence, the two-sided KS
// statistic and coordinate-wise parameter MSE.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ciasr/errors.hpp"
#include "ciasr/model.hpp"
#include "ciasr/samples.hpp"

namespace ciasr {

struct WeibullParams {
  double shape = 1.0;
  double scale = 1.0;
};

struct LognormalParams {
  double mu = 0.0;
  double sigma = 1.0;
};

namespace detail {

inline void require_positive(std::span<const double> x, const char* who) {
  if (x.empty()) throw DomainError(std::string(who) + ": empty sample set");
  for (double v : x)
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string(who) + ": samples must be finite and > 0");
}

// Weighted moments of ln y under weights y^k, computed with a max shift so
// heavy tails do not overflow. Returns (E_w[ln y], E_w[ln^2 y]).
inline std::pair<double, double> weibull_log_moments(std::span<const double> logs, double k) {
  const double top = k * *std::max_element(logs.begin(), logs.end());
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  for (double l : logs) {
    const double w = std::exp(k * l - top);
    s0 += w;
    s1 += w * l;
    s2 += w * l * l;
  }
  return {s1 / s0, s2 / s0};
}

}  // namespace detail

/// MLE scale at a fixed shape: (mean x^k)^(1/k).
inline double weibull_scale_for_shape(std::span<const double> x, double shape) {
  detail::require_positive(x, "weibull_scale_for_shape");
  if (!(shape > 0.0)) throw DomainError("weibull_scale_for_shape: shape must be > 0");
  // log-sum-exp for the same overflow reason as above
  double top = -std::numeric_limits<double>::infinity();
  for (double v : x) top = std::max(top, shape * std::log(v));
  double s = 0.0;
  for (double v : x) s += std::exp(shape * std::log(v) - top);
  return std::exp((top + std::log(s / static_cast<double>(x.size()))) / shape);
}

/// Maximum likelihood. The shape solves the profile equation
///   E_w[ln y] - 1/k - mean(ln y) = 0,  w = y^k,
/// by safeguarded Newton on data divided by its geometric mean.
inline WeibullParams fit_weibull(std::span<const double> x) {
  detail::require_positive(x, "fit_weibull");
  const double n = static_cast<double>(x.size());
  std::vector<double> logs(x.size());
  double mean_log = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    logs[i] = std::log(x[i]);
    mean_log += logs[i];
  }
  mean_log /= n;
  double var_log = 0.0;
  for (auto& l : logs) {
    l -= mean_log;
    var_log += l * l;
  }
  var_log /= n;
  if (!(var_log > 0.0)) throw ConvergenceError("fit_weibull: degenerate likelihood (all samples equal)", 0.0, 0);

  auto g = [&](double k) {
    const auto [m1, m2] = detail::weibull_log_moments(logs, k);
    return std::array<double, 2>{m1 - 1.0 / k, m2 - m1 * m1 + 1.0 / (k * k)};
  };
  // g is increasing in k, negative as k -> 0 and positive for large k.
  double k = std::numbers::pi / std::sqrt(6.0 * var_log);
  double lo = 0.0, hi = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 200; ++it) {
    const auto [val, der] = g(k);
    if (val < 0.0) lo = k; else hi = k;
    double next = k - val / der;
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * k;
    if (std::abs(next - k) <= 1e-10 * k) {
      k = next;
      const double scale = weibull_scale_for_shape(x, k);
      return {k, scale};
    }
    k = next;
  }
  throw ConvergenceError("fit_weibull: Newton iteration on the shape did not converge", k, 200);
}

inline WeibullParams fit_weibull(const SampleSet& s) { return fit_weibull(s.view()); }

inline LognormalParams fit_lognormal(std::span<const double> x) {
  detail::require_positive(x, "fit_lognormal");
  const double n = static_cast<double>(x.size());
  double mu = 0.0;
  for (double v : x) mu += std::log(v);
  mu /= n;
  double var = 0.0;
  for (double v : x) {
    const double d = std::log(v) - mu;
    var += d * d;
  }
  return {mu, std::sqrt(var / n)};
}

inline LognormalParams fit_lognormal(const SampleSet& s) { return fit_lognormal(s.view()); }

/// A fitted model as the metrics see it.
struct ModelFunctions {
  std::string name;
  std::function<double(double)> pdf;
  std::function<double(double)> cdf;
  // Optional 1 - cdf; used for bin masses in the upper tail where
  // differences of cdf values near 1 cancel.
  std::function<double(double)> sf;
  // Optional ln(1 - cdf), for tails that underflow even as 1 - cdf.
  std::function<double(double)> log_sf;
};

inline ModelFunctions weibull_model(const WeibullParams& w) {
  return {"weibull",
          [w](double x) {
            if (x <= 0.0) return 0.0;
            const double z = x / w.scale;
            return w.shape / w.scale * std::pow(z, w.shape - 1.0) * std::exp(-std::pow(z, w.shape));
          },
          [w](double x) { return x <= 0.0 ? 0.0 : -std::expm1(-std::pow(x / w.scale, w.shape)); },
          [w](double x) { return x <= 0.0 ? 1.0 : std::exp(-std::pow(x / w.scale, w.shape)); },
          [w](double x) { return x <= 0.0 ? 0.0 : -std::pow(x / w.scale, w.shape); }};
}

inline ModelFunctions lognormal_model(const LognormalParams& l) {
  return {"lognormal",
          [l](double x) {
            if (x <= 0.0) return 0.0;
            const double z = (std::log(x) - l.mu) / l.sigma;
            return std::exp(-0.5 * z * z) / (x * l.sigma * std::sqrt(2.0 * std::numbers::pi));
          },
          [l](double x) {
            if (x <= 0.0) return 0.0;
            return 0.5 * std::erfc(-(std::log(x) - l.mu) / (l.sigma * std::numbers::sqrt2));
          },
          [l](double x) {
            if (x <= 0.0) return 1.0;
            return 0.5 * std::erfc((std::log(x) - l.mu) / (l.sigma * std::numbers::sqrt2));
          }};
}

/// CIaSR with a tabulated cdf; the table is shared between copies.
inline ModelFunctions ciasr_model(const ModelParams& p, std::size_t table_nodes = 400) {
  auto table = std::make_shared<const CdfTable>(p, table_nodes);
  return {"ciasr", [p](double x) { return x < 0.0 ? 0.0 : ciasr::pdf(x, p); },
          [table](double x) { return x < 0.0 ? 0.0 : (*table)(x); },
          [table](double x) { return x < 0.0 ? 1.0 : table->sf(x); }};
}

struct HistogramSpec {
  std::size_t bin_count = 512;
  double lower = 0.0;
  double upper = 1.0;

  void validate() const {
    if (bin_count < 2) throw DomainError("HistogramSpec: bin_count must be >= 2");
    if (!(upper > lower) || !std::isfinite(upper) || !std::isfinite(lower))
      throw DomainError("HistogramSpec: need finite lower < upper");
  }
  double width() const { return (upper - lower) / static_cast<double>(bin_count); }
};

/// Default binning: 512 bins over [0, 1.01 * max].
inline HistogramSpec default_histogram(std::span<const double> x, std::size_t bins = 512) {
  if (x.empty()) throw DomainError("default_histogram: empty sample set");
  const double top = *std::max_element(x.begin(), x.end());
  HistogramSpec h{bins, 0.0, top > 0.0 ? 1.01 * top : 1.0};
  h.validate();
  return h;
}

/// Bin counts; every sample must lie in [lower, upper].
inline std::vector<double> histogram_counts(std::span<const double> x, const HistogramSpec& h) {
  h.validate();
  std::vector<double> c(h.bin_count, 0.0);
  const double w = h.width();
  for (double v : x) {
    if (!(v >= h.lower && v <= h.upper)) throw DomainError("histogram: sample outside the binning range");
    const auto i = std::min(static_cast<std::size_t>((v - h.lower) / w), h.bin_count - 1);
    c[i] += 1.0;
  }
  return c;
}

/// sum_b p_b ln(p_b / q_b), q_b the model mass of bin b from cdf differences.
/// Returns +inf (and appends a warning) if q_b = 0 where p_b > 0.
inline double kl_div(std::span<const double> x, const ModelFunctions& model, const HistogramSpec& h,
                     std::vector<std::string>* warnings = nullptr) {
  if (x.empty()) throw DomainError("kl_div: empty sample set");
  const auto counts = histogram_counts(x, h);
  const double n = static_cast<double>(x.size());
  const double w = h.width();
  // ln of the bin mass, from whichever of F or 1 - F is the small side.
  auto log_mass = [&](double a, double b) {
    const double fa = model.cdf(a);
    if (fa > 0.5 && model.log_sf) {
      const double la = model.log_sf(a);
      return la + std::log(-std::expm1(model.log_sf(b) - la));
    }
    if (fa > 0.5 && model.sf) return std::log(model.sf(a) - model.sf(b));
    return std::log(model.cdf(b) - fa);
  };
  double kl = 0.0;
  for (std::size_t b = 0; b < h.bin_count; ++b) {
    const double lo = h.lower + w * static_cast<double>(b);
    const double hi = b + 1 == h.bin_count ? h.upper : h.lower + w * static_cast<double>(b + 1);
    if (counts[b] == 0.0) continue;
    const double log_q = log_mass(lo, hi);
    const double p = counts[b] / n;
    if (!(log_q > -std::numeric_limits<double>::infinity())) {
      if (warnings)
        warnings->push_back(model.name + ": zero model mass in occupied bin " + std::to_string(b) +
                            "; KL set to +inf");
      return std::numeric_limits<double>::infinity();
    }
    kl += p * (std::log(p) - log_q);
  }
  // Mass outside [lower, upper] makes individual terms negative-biased; the
  // sum itself stays >= 0 by Gibbs' inequality up to rounding.
  return std::max(0.0, kl);
}

inline double kl_div(const SampleSet& s, const ModelFunctions& m, const HistogramSpec& h,
                     std::vector<std::string>* warnings = nullptr) {
  return kl_div(s.view(), m, h, warnings);
}

/// Two-sided KS statistic: max over sorted x_(i) of
/// max(i/n - F(x_(i)), F(x_(i)) - (i-1)/n).
template <class Cdf>
double ks_score(std::span<const double> x, Cdf&& cdf) {
  if (x.empty()) throw DomainError("ks_score: empty sample set");
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double f = cdf(s[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return std::clamp(d, 0.0, 1.0);
}

inline double ks_score(const SampleSet& s, const ModelFunctions& m) { return ks_score(s.view(), m.cdf); }

struct MetricReport {
  std::string scene_id;
  std::string model_name;
  double kl_div = 0.0;
  double ks_score = 0.0;
  std::vector<std::string> warnings;
};

inline MetricReport evaluate_model(const SampleSet& s, const ModelFunctions& m, const HistogramSpec& h,
                                   const std::string& scene_id = "") {
  MetricReport r;
  r.scene_id = scene_id;
  r.model_name = m.name;
  r.kl_div = kl_div(s, m, h, &r.warnings);
  r.ks_score = ks_score(s, m);
  return r;
}

inline void write_metrics_csv(std::ostream& out, std::span<const MetricReport> rows, bool header = true) {
  if (header) out << "scene-id,model,kl_div,ks_score\n";
  const auto old = out.precision(10);
  for (const auto& r : rows) out << r.scene_id << ',' << r.model_name << ',' << r.kl_div << ',' << r.ks_score << '\n';
  out.precision(old);
}

/// Coordinate-wise MSE of (alpha, gamma, delta).
inline std::array<double, 3> param_mse(std::span<const ModelParams> truth, std::span<const ModelParams> est) {
  if (truth.empty() || truth.size() != est.size())
    throw DomainError("param_mse: lists must be nonempty and of equal length");
  std::array<double, 3> m{};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double da = est[i].alpha - truth[i].alpha;
    const double dg = est[i].gamma - truth[i].gamma;
    const double dd = est[i].delta - truth[i].delta;
    m[0] += da * da;
    m[1] += dg * dg;
    m[2] += dd * dd;
  }
  for (auto& v : m) v /= static_cast<double>(truth.size());
  return m;
}

}  // namespace ciasr
