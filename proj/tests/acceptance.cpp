// Acceptance run: one PASS/FAIL line per criterion 1-8.
// Usage: ciasr_acceptance [criterion numbers...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ciasr/ciasr.hpp"
#include "oracles.hpp"

using namespace ciasr;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double tail_constant(double alpha) {
  return std::pow(2.0, alpha) * std::tgamma(1.0 + alpha / 2.0) / std::tgamma(1.0 - alpha / 2.0);
}

// 1. Exact moments through the full estimator chain.
Outcome exact_moment_inversion() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> ua(0.3, 1.9), us(0.5, 150.0);
  MobmConfig cfg;
  cfg.step_fraction = 1e-4;
  cfg.max_iterations = 100000000;
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const ModelParams p{ua(rng), us(rng), us(rng)};
    // sign/log form: the damping factor underflows double near j01/delta when gamma >> delta
    auto m = [&](double a) { return oracle::signed_log_moment(a, p.alpha, p.gamma, p.delta, bessel_j0(a * p.delta)); };
    // no samples here, so the amplitude scale is delta + gamma
    const auto r = fit_from_moments(m, p.delta + p.gamma, cfg);
    worst = std::max({worst, std::abs(r.params.alpha / p.alpha - 1), std::abs(r.params.gamma / p.gamma - 1),
                      std::abs(r.params.delta / p.delta - 1)});
  }
  return {worst < 1e-4, fmt("50 random triples, max relative error %.2e (limit 1e-4)", worst)};
}

// 2. Special-case equivalence.
Outcome special_cases() {
  const std::pair<double, double> pairs[] = {{0.5, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {2.0, 1.0}, {0.5, 4.0},
                                             {3.0, 3.0}, {1.0, 10.0}, {10.0, 50.0}, {0.2, 1.0}, {5.0, 0.5}};
  double worst_rice = 0.0;
  for (auto [g, d] : pairs)
    for (int i = 0; i < 1000; ++i) {
      const double x = (d + 10 * g) * i / 999.0;
      worst_rice = std::max(worst_rice, std::abs(pdf(x, {2.0, g, d}) - pdf_rician_closed(x, g, d)));
    }
  double worst_htr = 0.0;
  for (double a : {0.5, 1.0, 1.5, 2.0})
    for (int i = 1; i <= 100; ++i) {
      const double x = 0.2 * i;
      worst_htr = std::max(worst_htr, std::abs(pdf(x, {a, 1.3, 0.0}) - pdf_htr(x, a, 1.3)));
    }
  // the delta = 0, alpha = 1 member also has a closed form
  double worst_cr = 0.0;
  for (int i = 1; i <= 200; ++i) {
    const double x = 0.05 * i;
    worst_cr = std::max(worst_cr, std::abs(pdf(x, {1.0, 1.0, 0.0}) - oracle::cauchy_rayleigh_pdf(x, 1.0)));
  }
  return {worst_rice < 1e-8 && worst_htr < 1e-12 && worst_cr < 1e-8,
          fmt("alpha=2 vs Rician max |err| %.2e (limit 1e-8); delta=0 vs HTR %.2e (limit 1e-12); "
              "alpha=1 vs closed form %.2e",
              worst_rice, worst_htr, worst_cr)};
}

// 3. Normalisation over a 3x3x3 grid.
Outcome normalisation() {
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  double worst_int = 0.0, worst_term = 0.0, worst_spec_point = 0.0;
  for (double a : {0.5, 1.25, 2.0})
    for (double g : {0.5, 1.0, 2.0})
      for (double d : {0.0, 1.0, 4.0}) {
        const ModelParams p{a, g, d};
        // out to where the analytic tail K (gamma/x)^alpha is below 1e-9
        const double top = a == 2.0 ? d + 20 * g : d + g * std::pow(tail_constant(a) * 1e9, 1.0 / a);
        const double total = GK::integrate([&](double u) { const double x = std::exp(u); return x * pdf(x, p); },
                                           std::log(1e-6 * g), std::log(top), 20, 1e-10);
        worst_int = std::max(worst_int, std::abs(total - 1.0));
        const double far = a == 2.0 ? d + 20 * g : d + g * std::pow(tail_constant(a) * 1e7, 1.0 / a);
        worst_term = std::max(worst_term, 1.0 - cdf(far, p));
        if (a < 2.0) {
          const double xs = d + g * std::pow(10.0, 4.0 / a);
          const double lead = tail_constant(a) * std::pow(g / xs, a);
          worst_spec_point = std::max(worst_spec_point, std::abs((1.0 - cdf(xs, p)) / lead - 1.0));
        }
      }
  return {worst_int < 1e-6 && worst_term < 1e-6,
          fmt("max |int pdf - 1| %.2e, max 1-F at tail<1e-7 point %.2e (limits 1e-6); at delta+gamma*10^(4/alpha) "
              "1-F follows K(gamma/x)^alpha to %.1e relative",
              worst_int, worst_term, worst_spec_point)};
}

// 4. Sampler validity.
Outcome sampler_validity() {
  const double ks_g = oracle::ks(sample_stable({2.0, 0.0, 1.0, 0.0}, 100000, 1).values,
                                 [](double x) { return oracle::gaussian_cdf(x, 1.0); });
  const double ks_c = oracle::ks(sample_stable({1.0, 0.0, 1.0, 0.0}, 100000, 2).values,
                                 [](double x) { return oracle::cauchy_cdf(x, 1.0); });
  const double ks_l = oracle::ks(sample_stable({0.5, 1.0, 1.0, 0.0}, 100000, 3).values,
                                 [](double x) { return oracle::levy_cdf(x, 1.0); });
  return {std::max({ks_g, ks_c, ks_l}) < 0.01,
          fmt("KS Gaussian %.4f, Cauchy %.4f, Levy %.4f (limit 0.01, n=1e5)", ks_g, ks_c, ks_l)};
}

struct CellResult {
  ModelParams truth, est;
  MetricReport ciasr, weibull, lognormal;
};

std::vector<CellResult>& grid_results() {
  static std::vector<CellResult> cells;
  if (!cells.empty()) return cells;
  std::uint64_t seed = 500;
  for (double a : {0.7, 1.1, 1.5})
    for (double g : {10.0, 50.0})
      for (double d : {50.0, 100.0}) {
        CiasrGenConfig cfg;
        cfg.alpha = a;
        cfg.gamma = g;
        cfg.delta = d;
        cfg.n = 1000000;
        cfg.seed = seed++;
        const auto s = sample_ciasr(cfg);
        CellResult c;
        c.truth = {a, g, d};
        const auto r = fit(s);
        c.est = r.params;
        const auto h = default_histogram(s.view());
        c.ciasr = evaluate_model(s, ciasr_model(r.params), h);
        c.weibull = evaluate_model(s, weibull_model(fit_weibull(s)), h);
        c.lognormal = evaluate_model(s, lognormal_model(fit_lognormal(s)), h);
        std::printf("   cell a=%.1f g=%.0f d=%.0f: fit (%.4f, %.3f, %.3f) KL %.2e/%.2e/%.2e KS %.4f/%.4f/%.4f\n", a,
                    g, d, c.est.alpha, c.est.gamma, c.est.delta, c.ciasr.kl_div, c.weibull.kl_div,
                    c.lognormal.kl_div, c.ciasr.ks_score, c.weibull.ks_score, c.lognormal.ks_score);
        std::fflush(stdout);
        cells.push_back(c);
      }
  return cells;
}

// 5. Synthetic round trip.
Outcome round_trip() {
  double worst_a = 0, worst_g = 0, worst_d = 0, worst_kl = 0;
  for (const auto& c : grid_results()) {
    worst_a = std::max(worst_a, std::abs(c.est.alpha - c.truth.alpha));
    worst_g = std::max(worst_g, std::abs(c.est.gamma / c.truth.gamma - 1));
    worst_d = std::max(worst_d, std::abs(c.est.delta / c.truth.delta - 1));
    worst_kl = std::max(worst_kl, c.ciasr.kl_div);
  }
  return {worst_a < 0.1 && worst_g < 0.1 && worst_d < 0.1 && worst_kl < 1e-3,
          fmt("12 cells: max |da| %.4f (0.1), rel dg %.4f (0.1), rel dd %.4f (0.1), KL %.2e (1e-3)", worst_a,
              worst_g, worst_d, worst_kl)};
}

// 6. CIaSR beats Weibull and log-normal on every cell.
Outcome beats_baselines() {
  int wins = 0, cells = 0;
  double worst_ratio = 0.0;
  for (const auto& c : grid_results()) {
    ++cells;
    const bool kl = c.ciasr.kl_div < c.weibull.kl_div && c.ciasr.kl_div < c.lognormal.kl_div;
    const bool ks = c.ciasr.ks_score < c.weibull.ks_score && c.ciasr.ks_score < c.lognormal.ks_score;
    wins += kl && ks;
    worst_ratio = std::max(worst_ratio, c.ciasr.kl_div / std::min(c.weibull.kl_div, c.lognormal.kl_div));
  }
  return {wins == cells, fmt("%d/%d cells with strictly lower KL and KS than both baselines; "
                             "worst KL ratio to best baseline %.2e",
                             wins, cells, worst_ratio)};
}

// 7. Pipeline end to end.
Outcome pipeline() {
  const std::size_t w = 2000, h = 1500, patch = 500;
  const auto img = synthesize_mosaic(
      w, h, patch,
      [](std::size_t, std::size_t c) { return c < 2 ? ModelParams{1.9, 10, 50} : ModelParams{1.1, 10, 50}; }, 7);
  const auto grid = segment_patches(img, patch);
  const auto one = fit_patches(grid, {}, 1);
  const auto eight = fit_patches(grid, {}, 8);
  const bool identical = to_json(one).dump() == to_json(eight).dump();
  const auto rgb = render_maps(one, RenderMode::pseudo_rgb);
  int heavy_min = 255, light_max = 0;
  for (std::size_t r = 0; r < grid.rows; ++r)
    for (std::size_t c = 0; c < grid.cols; ++c) {
      const int red = rgb.bytes[(r * grid.cols + c) * 3];
      if (c < 2) light_max = std::max(light_max, red); else heavy_min = std::min(heavy_min, red);
    }
  const int gap = heavy_min - light_max;
  const bool shape = grid.rows == 3 && grid.cols == 4;
  return {shape && identical && gap > 64,
          fmt("%zux%zu patches, red gap between regimes %d/255 (> 64), 1 vs 8 workers JSON %s", grid.cols,
              grid.rows, gap, identical ? "identical" : "DIFFERENT")};
}

// 8. Property suites.
Outcome properties() {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  // pdf scale equivariance
  double worst_scale = 0.0;
  for (int i = 0; i < 30; ++i) {
    const ModelParams p{0.5 + 1.5 * u(rng), 0.5 + 2 * u(rng), 5 * u(rng)};
    const double c = std::exp(6 * u(rng) - 3), x = 0.1 + 10 * u(rng);
    const double lhs = pdf(x, p);
    const double rhs = pdf(x / c, {p.alpha, p.gamma / c, p.delta / c}) / c;
    worst_scale = std::max(worst_scale, std::abs(lhs - rhs) / std::max(1.0, lhs));
  }
  // render order preservation
  bool order = true;
  for (int t = 0; t < 20; ++t) {
    ParamMap pm;
    pm.grid_rows = 3;
    pm.grid_cols = 4;
    for (int i = 0; i < 12; ++i) {
      pm.alpha_map.push_back(0.3 + 1.7 * u(rng));
      pm.gamma_map.push_back(100 * u(rng));
      pm.delta_map.push_back(100 * u(rng));
    }
    pm.failed.assign(12, false);
    pm.fit_warnings.assign(12, {});
    const auto ra = render_maps(pm, RenderMode::heatmap_alpha);
    const auto rg = render_maps(pm, RenderMode::heatmap_gamma);
    const auto& a = pm.alpha_map;
    const auto& g = pm.gamma_map;
    order &= ra.bytes[std::min_element(a.begin(), a.end()) - a.begin()] == 255;
    order &= ra.bytes[std::max_element(a.begin(), a.end()) - a.begin()] == 0;
    order &= rg.bytes[std::max_element(g.begin(), g.end()) - g.begin()] == 255;
    for (int i = 0; i < 12; ++i)
      for (int j = 0; j < 12; ++j) {
        if (a[i] < a[j]) order &= ra.bytes[i] >= ra.bytes[j];
        if (g[i] < g[j]) order &= rg.bytes[i] <= rg.bytes[j];
      }
  }
  // Bessel recurrence d/dx[x J1] = x J0 and zeros
  double worst_rec = 0.0, worst_zero = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double x = 50 * u(rng), hstep = 1e-5;
    const double lhs = ((x + hstep) * bessel_j1(x + hstep) - (x - hstep) * bessel_j1(x - hstep)) / (2 * hstep);
    worst_rec = std::max(worst_rec, std::abs(lhs - x * bessel_j0(x)));
  }
  for (std::size_t k = 1; k <= 100; ++k) worst_zero = std::max(worst_zero, std::abs(bessel_j0(j0_zero(k))));
  // scan bracketing
  bool bracket = true;
  for (int i = 0; i < 100; ++i) {
    const ModelParams p{0.3 + 1.6 * u(rng), 0.5 + 100 * u(rng), 0.5 + 100 * u(rng)};
    // sign/log form: the damping factor underflows double near j01/delta when gamma >> delta
    auto m = [&](double a) { return oracle::signed_log_moment(a, p.alpha, p.gamma, p.delta, bessel_j0(a * p.delta)); };
    const auto d = scan_for_delta(m, (1e-4 + 0.05 * u(rng)) / p.delta, 100000000);
    bracket &= m(d.bracket_lo) > 0.0 && !(m(d.bracket_hi) > 0.0) && d.root_a0 >= d.bracket_lo &&
               d.root_a0 <= d.bracket_hi;
  }
  const bool pass = worst_scale < 1e-8 && order && worst_rec < 1e-6 && worst_zero < 1e-9 && bracket;
  return {pass, fmt("pdf scale equivariance %.1e (1e-8), render order %s, recurrence %.1e (1e-6), "
                    "|J0(j0k)| %.1e (1e-9), scan bracket %s",
                    worst_scale, order ? "kept" : "BROKEN", worst_rec, worst_zero, bracket ? "holds" : "BROKEN")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"exact-moment inversion", exact_moment_inversion},
      {"special-case equivalence", special_cases},
      {"normalisation", normalisation},
      {"sampler validity", sampler_validity},
      {"synthetic round trip", round_trip},
      {"beats Weibull and log-normal", beats_baselines},
      {"pipeline end to end", pipeline},
      {"property suites", properties},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::stoi(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!wanted.empty() && !wanted.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("AC%d %s  %s: %s [%.1fs]\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first, o.detail.c_str(),
                secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
