#include <algorithm>
#include <cmath>
#include <numeric>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "ciasr/baselines_metrics.hpp"
#include "ciasr/estimator.hpp"
#include "ciasr/stable_sampler.hpp"
#include "oracles.hpp"

using namespace ciasr;

namespace {

std::vector<double> weibull_draws(double k, double lambda, std::size_t n, std::uint64_t seed) {
  Rng r(seed, 40);
  std::vector<double> v(n);
  for (auto& x : v) x = lambda * std::pow(-std::log(r.uniform_pos()), 1.0 / k);
  return v;
}

std::vector<double> normal_draws(double mu, double sigma, std::size_t n, std::uint64_t seed) {
  Rng r(seed, 41);
  std::vector<double> v(n);
  for (auto& x : v) x = mu + sigma * r.normal();
  return v;
}

double phi(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace

TEST(Weibull, ExponentialScaleAtUnitShape) {
  const auto x = weibull_draws(1.0, 3.0, 10000, 1);
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  EXPECT_NEAR(weibull_scale_for_shape(x, 1.0), mean, 1e-9 * mean);
}

TEST(Weibull, RecoversSyntheticParameters) {
  const auto w = fit_weibull(weibull_draws(2.0, 1.0, 1000000, 2));
  EXPECT_NEAR(w.shape, 2.0, 0.02);
  EXPECT_NEAR(w.scale, 1.0, 0.01);
  const auto h = fit_weibull(weibull_draws(0.4, 1e6, 200000, 3));
  EXPECT_NEAR(h.shape, 0.4, 0.01);
}

TEST(Weibull, DegenerateAndInvalid) {
  const std::vector<double> c(100, 2.5);
  EXPECT_THROW(fit_weibull(c), ConvergenceError);
  EXPECT_THROW(fit_weibull(std::vector<double>{1.0, 0.0, 2.0}), DomainError);
  EXPECT_THROW(fit_weibull(std::vector<double>{}), DomainError);
}

TEST(Lognormal, PointMassAndSynthetic) {
  const std::vector<double> e(50, std::numbers::e);
  const auto p = fit_lognormal(e);
  EXPECT_NEAR(p.mu, 1.0, 1e-15);
  EXPECT_EQ(p.sigma, 0.0);
  auto z = normal_draws(0.0, 1.0, 1000000, 4);
  for (auto& v : z) v = std::exp(v);
  const auto q = fit_lognormal(z);
  EXPECT_NEAR(q.mu, 0.0, 0.01);
  EXPECT_NEAR(q.sigma, 1.0, 0.01);
  EXPECT_THROW(fit_lognormal(std::vector<double>{-1.0}), DomainError);
}

TEST(Lognormal, ScaleShiftsMu) {
  auto z = normal_draws(0.3, 0.7, 10000, 5);
  for (auto& v : z) v = std::exp(v);
  const auto a = fit_lognormal(z);
  for (auto& v : z) v *= 20.0;
  const auto b = fit_lognormal(z);
  EXPECT_NEAR(b.mu - a.mu, std::log(20.0), 1e-12);
  EXPECT_NEAR(b.sigma, a.sigma, 1e-12);
}

TEST(Baselines, PermutationInvariant) {
  auto x = weibull_draws(1.7, 2.0, 5000, 6);
  const auto w1 = fit_weibull(x);
  const auto l1 = fit_lognormal(x);
  std::mt19937_64 g(1);
  std::shuffle(x.begin(), x.end(), g);
  const auto w2 = fit_weibull(x);
  const auto l2 = fit_lognormal(x);
  EXPECT_NEAR(w1.shape, w2.shape, 1e-9);
  EXPECT_NEAR(w1.scale, w2.scale, 1e-9);
  EXPECT_NEAR(l1.mu, l2.mu, 1e-12);
  EXPECT_NEAR(l1.sigma, l2.sigma, 1e-12);
}

TEST(KlDiv, ZeroWhenModelIsTheHistogram) {
  const auto x = weibull_draws(1.5, 1.0, 20000, 7);
  const auto h = default_histogram(x, 64);
  const auto counts = histogram_counts(x, h);
  std::vector<double> cum(counts.size() + 1, 0.0);
  for (std::size_t i = 0; i < counts.size(); ++i) cum[i + 1] = cum[i] + counts[i] / x.size();
  ModelFunctions m{"hist", nullptr, [&](double v) {
                     const double t = std::clamp((v - h.lower) / h.width(), 0.0, double(counts.size()));
                     const auto i = std::min<std::size_t>(std::size_t(t), counts.size() - 1);
                     return cum[i] + (t - i) * (cum[i + 1] - cum[i]);
                   }};
  EXPECT_NEAR(kl_div(x, m, h), 0.0, 1e-12);
}

TEST(KlDiv, ShiftedGaussians) {
  const auto x = normal_draws(0.0, 1.0, 1000000, 8);
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  const HistogramSpec h{4000, *lo - 1e-9, *hi + 1e-9};
  ModelFunctions m{"n(1,1)", nullptr, [](double v) { return phi(v - 1.0); }};
  EXPECT_NEAR(kl_div(x, m, h), 0.5, 0.01);
}

TEST(KlDiv, ZeroModelMassIsInfiniteWithWarning) {
  const std::vector<double> x{0.5, 1.5, 2.5};
  ModelFunctions m{"step", nullptr, [](double v) { return v < 2.0 ? v / 2.0 : 1.0; }};
  std::vector<std::string> warnings;
  EXPECT_TRUE(std::isinf(kl_div(x, m, {3, 0.0, 3.0}, &warnings)));
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("zero model mass"), std::string::npos);
}

TEST(KlDiv, NonNegativeAndRangeChecked) {
  const auto x = weibull_draws(1.2, 2.0, 5000, 9);
  const auto h = default_histogram(x);
  for (auto m : {weibull_model(fit_weibull(x)), lognormal_model(fit_lognormal(x))}) EXPECT_GE(kl_div(x, m, h), 0.0);
  EXPECT_THROW(kl_div(x, weibull_model({1, 1}), HistogramSpec{10, 0.0, 0.1}), DomainError);
  EXPECT_THROW((HistogramSpec{1, 0.0, 1.0}.validate()), DomainError);
}

TEST(KlDiv, TailMassUsesLogSurvival) {
  // a Weibull fitted to very heavy data: tail bins underflow even as 1 - F
  const auto x = weibull_draws(0.3, 1.0, 100000, 10);
  std::vector<std::string> warnings;
  const double v = kl_div(x, weibull_model({2.0, 1.0}), default_histogram(x), &warnings);
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_TRUE(warnings.empty());
}

TEST(KsScore, ModelSamplesAndTotalMismatch) {
  const auto x = weibull_draws(2.0, 1.0, 100000, 11);
  const auto m = weibull_model({2.0, 1.0});
  EXPECT_LT(ks_score(x, m.cdf), 0.01);
  EXPECT_NEAR(ks_score(x, [](double) { return 0.0; }), 1.0, 1e-12);
  EXPECT_THROW(ks_score(std::vector<double>{}, m.cdf), DomainError);
}

TEST(KsScore, InvariantUnderMonotoneMap) {
  const auto x = weibull_draws(1.3, 2.0, 5000, 12);
  std::vector<double> cubed(x);
  for (auto& v : cubed) v = v * v * v;
  const auto m = weibull_model({1.25, 2.1});
  const double a = ks_score(x, m.cdf);
  const double b = ks_score(cubed, [&](double y) { return m.cdf(std::cbrt(y)); });
  EXPECT_NEAR(a, b, 1e-12);
}

TEST(ParamMse, Definition) {
  const std::vector<ModelParams> t{{1.0, 2.0, 3.0}, {1.5, 1.0, 1.0}};
  EXPECT_EQ(param_mse(t, t), (std::array<double, 3>{0, 0, 0}));
  const std::vector<ModelParams> a{{1.0, 1.0, 1.0}}, b{{1.1, 1.0, 1.0}};
  const auto m = param_mse(a, b);
  EXPECT_NEAR(m[0], 0.01, 1e-15);
  EXPECT_EQ(m[1], 0.0);
  EXPECT_THROW(param_mse(t, a), DomainError);
  EXPECT_THROW(param_mse({}, {}), DomainError);
}

TEST(MetricReport, CsvLayout) {
  std::vector<MetricReport> rows{{"urban1", "ciasr", 0.001, 0.05, {}}, {"urban1", "weibull", 0.2, 0.3, {}}};
  std::ostringstream out;
  write_metrics_csv(out, rows);
  EXPECT_EQ(out.str(), "scene-id,model,kl_div,ks_score\nurban1,ciasr,0.001,0.05\nurban1,weibull,0.2,0.3\n");
}

TEST(Metrics, CiasrFitOnOwnSamples) {
  CiasrGenConfig cfg;
  cfg.alpha = 1.5;
  cfg.gamma = 10.0;
  cfg.delta = 50.0;
  cfg.n = 1000000;
  cfg.seed = 13;
  const auto s = sample_ciasr(cfg);
  const auto r = fit(s);
  const auto rep = evaluate_model(s, ciasr_model(r.params), default_histogram(s.view()), "synthetic");
  EXPECT_LT(rep.kl_div, 1e-3);
  EXPECT_LT(rep.ks_score, 0.01);
  const auto wb = evaluate_model(s, weibull_model(fit_weibull(s)), default_histogram(s.view()));
  EXPECT_LT(rep.kl_div, wb.kl_div);
  EXPECT_LT(rep.ks_score, wb.ks_score);
}
