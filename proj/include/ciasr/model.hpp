#pragma once

// Density and distribution function of the complex isotropic alpha-stable
// Rician amplitude law
//
//   f(x) = x \int_0^\infty w exp(-(gamma w)^alpha) J0(w delta) J0(w x) dw
//   F(x) = x \int_0^\infty   exp(-(gamma w)^alpha) J0(w delta) J1(w x) dw
//
// F follows from \int_0^x t J0(w t) dt = x J1(w x) / w. Both integrals are
// evaluated with integrate_damped_bessel. Far in the tail (x well beyond
// delta and gamma) a term-by-term Hankel transform of the characteristic
// function gives a power series in x^-alpha that is used instead whenever
// it converges to the requested tolerance.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ciasr/errors.hpp"
#include "ciasr/special_fn.hpp"

namespace ciasr {

struct ModelParams {
  double alpha = 2.0;
  double gamma = 1.0;
  double delta = 0.0;

  bool valid() const {
    return alpha > 0.0 && alpha <= 2.0 && gamma > 0.0 && std::isfinite(gamma) && delta >= 0.0 &&
           std::isfinite(delta);
  }

  void validate() const {
    if (!valid())
      throw DomainError("ModelParams: need 0 < alpha <= 2, gamma > 0, delta >= 0 (got alpha=" +
                        std::to_string(alpha) + ", gamma=" + std::to_string(gamma) +
                        ", delta=" + std::to_string(delta) + ")");
  }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Rician density at alpha = 2, written with the scaled I0 so that large
/// x * delta / gamma^2 does not overflow.
inline double pdf_rician_closed(double x, double gamma, double delta) {
  if (!(x >= 0.0) || !(gamma > 0.0) || !(delta >= 0.0))
    throw DomainError("pdf_rician_closed: need x >= 0, gamma > 0, delta >= 0");
  const double g2 = 2.0 * gamma * gamma;
  const double d = x - delta;
  return x / g2 * std::exp(-d * d / (2.0 * g2)) * bessel_i0e(x * delta / g2);
}

namespace detail {

enum class TailKind { density, survival };

// Large-x expansion. With nu = alpha k / 2 and z = (delta / x)^2:
//   f(x) = sum_k (-1)^{k+1} (2/pi) sin(pi alpha k / 2) / k! (2 gamma / x)^{alpha k}
//          x^-1 sum_m Gamma(1 + nu + m)^2 / m!^2 z^m
//   1 - F(x) = same with x^-1 replaced by 1 / (alpha k + 2 m).
// Convergent for alpha <= 1, asymptotic for alpha > 1; returns nullopt when
// the smallest term is not below tol * |sum|.
inline std::optional<double> tail_series(TailKind kind, double x, const ModelParams& p, double tol) {
  if (p.alpha >= 2.0 || !(x > 0.0)) return std::nullopt;
  const double z = (p.delta / x) * (p.delta / x);
  if (z > 0.25) return std::nullopt;
  const double log_ratio = std::log(2.0 * p.gamma / x);

  double sum = 0.0;
  double prev_bound = std::numeric_limits<double>::infinity();
  int small_run = 0;
  for (int k = 1; k <= 400; ++k) {
    const double ak = p.alpha * k;
    const double nu = 0.5 * ak;
    // Inner sum over m, normalised by Gamma(1 + nu)^2.
    double t = 1.0;
    double inner = kind == TailKind::density ? 1.0 : 1.0 / ak;
    for (int m = 0; m < 100000; ++m) {
      const double r = (1.0 + nu + m) / (m + 1.0);
      t *= r * r * z;
      const double add = kind == TailKind::density ? t : t / (ak + 2.0 * (m + 1));
      inner += add;
      if (add <= 1e-17 * inner) break;
    }
    const double log_mag = ak * log_ratio - std::lgamma(k + 1.0) + 2.0 * std::lgamma(1.0 + nu);
    const double bound = 2.0 / std::numbers::pi * std::exp(log_mag) * inner;
    const double s = std::sin(0.5 * std::numbers::pi * ak);
    sum += (k % 2 == 1 ? 1.0 : -1.0) * s * bound;

    if (k > 2 && bound > prev_bound) break;  // asymptotic series started to diverge
    prev_bound = bound;
    if (bound <= tol * std::abs(sum)) {
      if (++small_run >= 2) {
        return kind == TailKind::density ? sum / x : sum;
      }
    } else {
      small_run = 0;
    }
  }
  return std::nullopt;
}

// Above this point the Rician density underflows to zero in double.
inline bool gaussian_core_underflows(double x, const ModelParams& p) {
  if (p.alpha != 2.0) return false;
  const double d = (x - p.delta) / (2.0 * p.gamma);
  return x > p.delta && d * d > 745.0;
}

inline double pdf_quadrature(double x, const ModelParams& p, const QuadratureSpec& spec) {
  const double a = p.alpha;
  const double g = p.gamma;
  const double d = p.delta;
  auto integrand = [=](double w) {
    return w * std::exp(-std::pow(g * w, a)) * bessel_j0(w * d) * bessel_j0(w * x);
  };
  const Oscillation osc{std::max(d, x), 0};
  return x * integrate_damped_bessel(integrand, StretchedExpDamping{a, g}, osc, spec);
}

inline double cdf_quadrature(double x, const ModelParams& p, const QuadratureSpec& spec) {
  const double a = p.alpha;
  const double g = p.gamma;
  const double d = p.delta;
  auto integrand = [=](double w) {
    return std::exp(-std::pow(g * w, a)) * bessel_j0(w * d) * bessel_j1(w * x);
  };
  const Oscillation osc = x >= d ? Oscillation{x, 1} : Oscillation{d, 0};
  return x * integrate_damped_bessel(integrand, StretchedExpDamping{a, g}, osc, spec);
}

// The tail expansion is only tried beyond both delta and the bulk of the
// stable spread.
inline bool in_tail_region(double x, const ModelParams& p) {
  return p.alpha < 2.0 && x >= 2.0 * p.delta && x >= p.delta + 4.0 * p.gamma;
}

inline void check_amplitude(double x, const char* who) {
  if (!(x >= 0.0) || std::isnan(x)) throw DomainError(std::string(who) + ": amplitude must be >= 0");
}

}  // namespace detail

/// Amplitude density. pdf(0) = 0.
inline double pdf(double x, const ModelParams& p, const QuadratureSpec& spec = {}) {
  detail::check_amplitude(x, "pdf");
  p.validate();
  if (x == 0.0 || std::isinf(x)) return 0.0;
  if (detail::gaussian_core_underflows(x, p)) return 0.0;
  if (detail::in_tail_region(x, p)) {
    if (auto s = detail::tail_series(detail::TailKind::density, x, p, 0.1 * spec.relative_tolerance))
      return std::max(0.0, *s);
  }
  return std::max(0.0, detail::pdf_quadrature(x, p, spec));
}

/// Distribution function, clamped to [0, 1].
inline double cdf(double x, const ModelParams& p, const QuadratureSpec& spec = {}) {
  detail::check_amplitude(x, "cdf");
  p.validate();
  if (x == 0.0) return 0.0;
  if (std::isinf(x) || detail::gaussian_core_underflows(x, p)) return 1.0;
  if (detail::in_tail_region(x, p)) {
    if (auto s = detail::tail_series(detail::TailKind::survival, x, p, 0.1 * spec.relative_tolerance))
      return std::clamp(1.0 - *s, 0.0, 1.0);
  }
  return std::clamp(detail::cdf_quadrature(x, p, spec), 0.0, 1.0);
}

/// Survival function 1 - F, accurate where F is close to 1.
inline double sf(double x, const ModelParams& p, const QuadratureSpec& spec = {}) {
  detail::check_amplitude(x, "sf");
  p.validate();
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (detail::in_tail_region(x, p)) {
    if (auto s = detail::tail_series(detail::TailKind::survival, x, p, 0.1 * spec.relative_tolerance))
      return std::clamp(*s, 0.0, 1.0);
  }
  return 1.0 - cdf(x, p, spec);
}

/// Heavy-tailed Rayleigh density: the delta = 0 member of the family.
inline double pdf_htr(double x, double alpha, double gamma, const QuadratureSpec& spec = {}) {
  return pdf(x, ModelParams{alpha, gamma, 0.0}, spec);
}

inline std::vector<double> pdf_grid(std::span<const double> xs, const ModelParams& p,
                                    const QuadratureSpec& spec = {}) {
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(pdf(x, p, spec));
  return out;
}

/// Distribution function tabulated on a grid uniform in t = x / (x + s),
/// s = delta + gamma, and interpolated with cubic Hermite segments that use
/// the density as derivative. Points past the last node go through cdf().
class CdfTable {
 public:
  CdfTable(const ModelParams& p, std::size_t nodes = 400, const QuadratureSpec& spec = {})
      : params_(p), spec_(spec), scale_(p.delta + p.gamma) {
    p.validate();
    if (nodes < 4) throw DomainError("CdfTable: need at least 4 nodes");
    // Far end: where the tail takes over or the mass is exhausted.
    x_end_ = std::max(2.0 * p.delta, p.delta + 4.0 * p.gamma);
    for (int i = 0; i < 200; ++i) {
      if (p.alpha == 2.0) {
        x_end_ = p.delta + 2.0 * p.gamma * std::sqrt(745.0);
        break;
      }
      if (detail::tail_series(detail::TailKind::survival, x_end_, p, 0.1 * spec.relative_tolerance))
        break;
      x_end_ *= 1.25;
    }
    t_end_ = x_end_ / (x_end_ + scale_);
    h_ = t_end_ / static_cast<double>(nodes - 1);
    t_.resize(nodes);
    f_.resize(nodes);
    d_.resize(nodes);
    for (std::size_t i = 0; i < nodes; ++i) {
      const double t = h_ * static_cast<double>(i);
      const double x = i + 1 == nodes ? x_end_ : scale_ * t / (1.0 - t);
      t_[i] = t;
      f_[i] = ciasr::cdf(x, p, spec);
      const double dxdt = scale_ / ((1.0 - t) * (1.0 - t));
      d_[i] = ciasr::pdf(x, p, spec) * dxdt;
    }
  }

  double operator()(double x) const {
    detail::check_amplitude(x, "CdfTable");
    if (x >= x_end_) return ciasr::cdf(x, params_, spec_);
    const double t = x / (x + scale_);
    std::size_t i = std::min(static_cast<std::size_t>(t / h_), t_.size() - 2);
    const double u = (t - t_[i]) / h_;
    const double u2 = u * u;
    const double u3 = u2 * u;
    const double v = (2 * u3 - 3 * u2 + 1) * f_[i] + (u3 - 2 * u2 + u) * h_ * d_[i] +
                     (-2 * u3 + 3 * u2) * f_[i + 1] + (u3 - u2) * h_ * d_[i + 1];
    return std::clamp(v, 0.0, 1.0);
  }

  /// 1 - F; past the table this keeps full relative precision in the tail.
  double sf(double x) const {
    if (x >= x_end_) return ciasr::sf(x, params_, spec_);
    return 1.0 - (*this)(x);
  }

  const ModelParams& params() const { return params_; }
  double tabulated_upper() const { return x_end_; }

 private:
  ModelParams params_;
  QuadratureSpec spec_;
  double scale_;
  double x_end_ = 0.0;
  double t_end_ = 0.0;
  double h_ = 0.0;
  std::vector<double> t_;
  std::vector<double> f_;
  std::vector<double> d_;
};

}  // namespace ciasr
