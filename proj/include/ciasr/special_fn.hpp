#pragma once

// Bessel functions J0, J1, I0, zeros of J0/J1 and a quadrature routine for
// damped oscillatory integrals of the form
//
//   \int_0^\infty g(w) exp(-(s w)^alpha) dw,
//
// where g is a product of bounded Bessel factors (possibly with a power of
// w in front). [0, inf) is cut at consecutive zeros of the fastest
// oscillating factor, each piece is integrated with a 15-point
// Gauss-Kronrod rule, and the sequence of partial sums is accelerated with
// Wynn's epsilon algorithm once the piece integrals alternate in sign.

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/detail/bessel_i0.hpp>
#include <boost/math/special_functions/detail/bessel_j0.hpp>
#include <boost/math/special_functions/detail/bessel_j1.hpp>

#include "ciasr/errors.hpp"

namespace ciasr {

/// First positive zero of J0.
inline constexpr double kJ0FirstZero = 2.404825557695772768621631879326454643;

/// Largest |x| accepted by bessel_i0; I0(713.98...) overflows a double.
inline constexpr double kI0OverflowBound = 700.0;

inline double bessel_j0(double x) {
  if (!std::isfinite(x)) throw DomainError("bessel_j0: non-finite argument");
  return boost::math::detail::bessel_j0(std::abs(x));
}

inline double bessel_j1(double x) {
  if (!std::isfinite(x)) throw DomainError("bessel_j1: non-finite argument");
  const double v = boost::math::detail::bessel_j1(std::abs(x));
  return x < 0 ? -v : v;
}

/// Exponentially scaled I0: exp(-|x|) * I0(x). Defined for every finite x.
inline double bessel_i0e(double x) {
  if (!std::isfinite(x)) throw DomainError("bessel_i0e: non-finite argument");
  const double ax = std::abs(x);
  if (ax <= kI0OverflowBound) return std::exp(-ax) * boost::math::detail::bessel_i0(ax);
  // Hankel expansion; at ax > 700 six terms are far below double epsilon.
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k <= 6; ++k) {
    const double m = 2.0 * k - 1.0;
    term *= m * m / (8.0 * k * ax);
    sum += term;
  }
  return sum / std::sqrt(2.0 * std::numbers::pi * ax);
}

/// I0(x) for |x| <= kI0OverflowBound; beyond that use bessel_i0e.
inline double bessel_i0(double x) {
  if (!std::isfinite(x)) throw DomainError("bessel_i0: non-finite argument");
  if (std::abs(x) > kI0OverflowBound)
    throw RangeError("bessel_i0: |x| exceeds overflow-safe bound 700");
  return boost::math::detail::bessel_i0(std::abs(x));
}

namespace detail {

// McMahon's expansion followed by Newton polishing.
inline double bessel_zero_uncached(int order, std::size_t k) {
  const double kd = static_cast<double>(k);
  double x;
  if (order == 0) {
    const double b = (kd - 0.25) * std::numbers::pi;
    const double ib = 1.0 / b;
    x = b + ib / 8.0 - 31.0 / 384.0 * ib * ib * ib + 3779.0 / 15360.0 * std::pow(ib, 5);
  } else {
    const double b = (kd + 0.25) * std::numbers::pi;
    const double ib = 1.0 / b;
    x = b - 0.375 * ib - 0.1171875 * ib * ib * ib;
  }
  for (int it = 0; it < 8; ++it) {
    double dx;
    if (order == 0) {
      dx = bessel_j0(x) / -bessel_j1(x);
    } else {
      const double j0 = bessel_j0(x);
      const double j1 = bessel_j1(x);
      dx = j1 / (j0 - j1 / x);
    }
    x -= dx;
    if (std::abs(dx) <= 4.0 * std::numeric_limits<double>::epsilon() * x) break;
  }
  return x;
}

inline constexpr std::size_t kZeroTableSize = 4096;

inline const std::vector<double>& zero_table(int order) {
  static const std::vector<double> j0 = [] {
    std::vector<double> t(kZeroTableSize);
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = bessel_zero_uncached(0, k + 1);
    return t;
  }();
  static const std::vector<double> j1 = [] {
    std::vector<double> t(kZeroTableSize);
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = bessel_zero_uncached(1, k + 1);
    return t;
  }();
  return order == 0 ? j0 : j1;
}

inline double bessel_zero(int order, std::size_t k) {
  if (k <= kZeroTableSize) return zero_table(order)[k - 1];
  return bessel_zero_uncached(order, k);
}

}  // namespace detail

/// k-th positive zero of J0 (k >= 1).
inline double j0_zero(std::size_t k) {
  if (k == 0) throw DomainError("j0_zero: k must be >= 1");
  return detail::bessel_zero(0, k);
}

/// k-th positive zero of J1, excluding the origin (k >= 1).
inline double j1_zero(std::size_t k) {
  if (k == 0) throw DomainError("j1_zero: k must be >= 1");
  return detail::bessel_zero(1, k);
}

struct QuadratureSpec {
  double relative_tolerance = 1e-8;
  std::size_t max_segments = 10000;
  // Truncate once the damping factor has fallen below this.
  double tail_cutoff_epsilon = 1e-14;

  void validate() const {
    if (!(relative_tolerance > 0.0)) throw DomainError("QuadratureSpec: relative_tolerance must be > 0");
    if (!(tail_cutoff_epsilon > 0.0 && tail_cutoff_epsilon < 1.0))
      throw DomainError("QuadratureSpec: tail_cutoff_epsilon must be in (0, 1)");
    if (max_segments < 1) throw DomainError("QuadratureSpec: max_segments must be >= 1");
  }
};

/// exp(-(scale * w)^alpha)
struct StretchedExpDamping {
  double alpha = 1.0;
  double scale = 1.0;

  double operator()(double w) const { return std::exp(-std::pow(scale * w, alpha)); }

  // Smallest w where the factor drops to eps.
  double cutoff(double eps) const { return std::pow(-std::log(eps), 1.0 / alpha) / scale; }
};

/// The fastest oscillating factor J_order(frequency * w). frequency == 0
/// means the integrand does not oscillate.
struct Oscillation {
  double frequency = 0.0;
  int order = 0;
};

struct QuadratureResult {
  double value = 0.0;
  std::size_t segments = 0;
  bool accelerated = false;
  double error_estimate = 0.0;
};

namespace detail {

// Wynn's epsilon algorithm on a sliding window of partial sums.
class WynnEpsilon {
 public:
  static constexpr std::size_t kWindow = 25;

  void push(double partial_sum) {
    sums_.push_back(partial_sum);
    if (sums_.size() > kWindow) sums_.erase(sums_.begin());
  }

  std::size_t size() const { return sums_.size(); }

  // Returns {estimate, error}; error is the gap between the two most
  // recent entries of the highest even column.
  std::pair<double, double> extrapolate() const {
    const std::size_t m = sums_.size();
    std::vector<double> prev(m + 1, 0.0);  // column k-1
    std::vector<double> cur(sums_.begin(), sums_.end());  // column k
    double best = sums_.back();
    double err = m >= 2 ? std::abs(sums_[m - 1] - sums_[m - 2]) : std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < m; ++k) {
      const std::size_t len = cur.size() - 1;
      std::vector<double> next(len);
      for (std::size_t n = 0; n < len; ++n) {
        const double diff = cur[n + 1] - cur[n];
        if (diff == 0.0) return {cur[n + 1], err};
        next[n] = (k == 0 ? 0.0 : prev[n + 1]) + 1.0 / diff;
      }
      prev = std::move(cur);
      cur = std::move(next);
      // Odd columns are auxiliary; even ones carry estimates.
      if ((k + 1) % 2 == 0 && cur.size() >= 2) {
        best = cur.back();
        err = std::abs(cur.back() - cur[cur.size() - 2]);
      }
    }
    return {best, err};
  }

 private:
  std::vector<double> sums_;
};

}  // namespace detail

/// Integrates f over [0, inf). f must already contain the damping factor;
/// `damping` is used only for truncation. Throws ConvergenceError when
/// spec.max_segments pieces do not reach the tolerance.
template <class F>
QuadratureResult integrate_damped_bessel_detailed(F&& f, const StretchedExpDamping& damping,
                                                  const Oscillation& osc, const QuadratureSpec& spec) {
  spec.validate();
  if (!(damping.alpha > 0.0) || !(damping.scale > 0.0))
    throw DomainError("integrate_damped_bessel: damping alpha and scale must be > 0");
  if (!(osc.frequency >= 0.0) || !std::isfinite(osc.frequency))
    throw DomainError("integrate_damped_bessel: oscillation frequency must be finite and >= 0");

  using Rule = boost::math::quadrature::gauss_kronrod<double, 15>;
  const double w_cut = damping.cutoff(spec.tail_cutoff_epsilon);
  const double piece_tol = spec.relative_tolerance * 0.1;
  const bool oscillates = osc.frequency > 0.0;
  const double uniform_width = w_cut / 32.0;

  QuadratureResult out;
  detail::WynnEpsilon wynn;
  std::vector<double> recent;  // last piece integrals, for the alternation test
  double sum = 0.0;
  double l1 = 0.0;
  double last_estimate = std::numeric_limits<double>::quiet_NaN();
  double lo = 0.0;

  for (std::size_t k = 1; k <= spec.max_segments; ++k) {
    double hi = oscillates ? detail::bessel_zero(osc.order, k) / osc.frequency
                           : static_cast<double>(k) * uniform_width;
    const bool last = hi >= w_cut;
    if (last) hi = w_cut;

    double piece_l1 = 0.0;
    const double piece = Rule::integrate(f, lo, hi, 12, piece_tol, nullptr, &piece_l1);
    sum += piece;
    l1 += piece_l1;
    out.segments = k;
    lo = hi;

    if (last || damping(hi) < spec.tail_cutoff_epsilon) {
      out.value = sum;
      out.error_estimate = spec.relative_tolerance * std::abs(sum);
      return out;
    }

    if (!oscillates) continue;
    wynn.push(sum);
    recent.push_back(piece);
    if (recent.size() > 8) recent.erase(recent.begin());
    if (k < 12 || recent.size() < 8) continue;

    bool alternating = true;
    for (std::size_t i = 1; i < recent.size(); ++i)
      if (!(recent[i] * recent[i - 1] < 0.0)) alternating = false;
    if (!alternating) {
      last_estimate = std::numeric_limits<double>::quiet_NaN();
      continue;
    }

    const auto [estimate, err] = wynn.extrapolate();
    const double tol = std::max(spec.relative_tolerance * std::abs(estimate),
                                spec.relative_tolerance * 1e-6 * l1);
    if (err <= tol && std::abs(estimate - last_estimate) <= tol) {
      out.value = estimate;
      out.accelerated = true;
      out.error_estimate = err;
      return out;
    }
    last_estimate = estimate;
  }
  throw ConvergenceError("integrate_damped_bessel: no convergence within " +
                             std::to_string(spec.max_segments) + " segments",
                         sum, spec.max_segments);
}

template <class F>
double integrate_damped_bessel(F&& f, const StretchedExpDamping& damping, const Oscillation& osc,
                               const QuadratureSpec& spec = {}) {
  return integrate_damped_bessel_detailed(std::forward<F>(f), damping, osc, spec).value;
}

}  // namespace ciasr
