// ciasr: sample, evaluate, fit and map CIaSR amplitude data from the shell.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <string>

#include <CLI11.hpp>

#include "ciasr/ciasr.hpp"

namespace fs = std::filesystem;
using namespace ciasr;

namespace {

struct SampleOpts {
  double alpha = 2.0, gamma = 1.0, delta = 0.0;
  std::size_t n = 100000;
  std::uint64_t seed = 0;
  double split_angle = 0.0;  // radians; delta1 = delta cos, delta2 = delta sin
  std::string out;
};

struct PdfOpts {
  double alpha = 2.0, gamma = 1.0, delta = 0.0;
  double xmin = 0.0, xmax = 10.0;
  std::size_t points = 101;
  bool with_cdf = false;
};

struct FitOpts {
  std::string in, out;
  MobmConfig cfg;
  std::string reference = "median";
};

struct MetricsOpts {
  std::string in, model, scene_id = "scene";
  std::size_t bins = 512;
};

struct SegmentOpts {
  std::string image, out, format = "auto";
  std::size_t patch = 500, workers = 1, cell_px = 16;
  MobmConfig cfg;
};

void add_mobm_flags(CLI::App* cmd, MobmConfig& cfg) {
  cmd->add_option("--a1", cfg.a1, "first moment argument, normalised units")->capture_default_str();
  cmd->add_option("--a2", cfg.a2, "second moment argument, normalised units")->capture_default_str();
  cmd->add_option("--a3", cfg.a3, "argument used for gamma, normalised units")->capture_default_str();
  cmd->add_option("--step-fraction", cfg.step_fraction, "scan step as a fraction of 1/L")->capture_default_str();
  cmd->add_option("--max-iterations", cfg.max_iterations, "scan step limit")->capture_default_str();
}

int run_sample(const SampleOpts& o) {
  CiasrGenConfig cfg;
  cfg.alpha = o.alpha;
  cfg.gamma = o.gamma;
  cfg.delta = o.delta;
  cfg.n = o.n;
  cfg.seed = o.seed;
  if (o.split_angle != 0.0)
    cfg.delta_split = std::pair{o.delta * std::cos(o.split_angle), o.delta * std::sin(o.split_angle)};
  const auto s = sample_ciasr(cfg);
  save_samples(o.out, s);
  std::cerr << "wrote " << s.size() << " samples to " << o.out << '\n';
  return 0;
}

int run_pdf(const PdfOpts& o) {
  if (o.points < 2 || !(o.xmax > o.xmin) || o.xmin < 0.0) throw DomainError("pdf: need 0 <= xmin < xmax, points >= 2");
  const ModelParams p{o.alpha, o.gamma, o.delta};
  p.validate();
  std::cout.precision(12);
  std::cout << (o.with_cdf ? "x,density,cdf\n" : "x,density\n");
  for (std::size_t i = 0; i < o.points; ++i) {
    const double x = o.xmin + (o.xmax - o.xmin) * static_cast<double>(i) / static_cast<double>(o.points - 1);
    std::cout << x << ',' << pdf(x, p);
    if (o.with_cdf) std::cout << ',' << cdf(x, p);
    std::cout << '\n';
  }
  return 0;
}

void emit_json(const nlohmann::json& j, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << j.dump(2) << '\n';
  } else {
    detail::write_json(out, j);
  }
}

int run_fit(FitOpts o) {
  o.cfg.reference = scale_reference_from_string(o.reference);
  const auto s = load_samples(o.in);
  try {
    const auto r = fit(s, o.cfg);
    emit_json(to_json(r), o.out);
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
    return 0;
  } catch (const FitError& e) {
    emit_json(to_json(e.partial()), o.out);
    std::cerr << "fit failed: " << e.what() << '\n';
    return 1;
  }
}

int run_metrics(const MetricsOpts& o) {
  const auto s = load_samples(o.in);
  ModelFunctions m;
  if (o.model == "weibull") {
    m = weibull_model(fit_weibull(s));
  } else if (o.model == "lognormal") {
    m = lognormal_model(fit_lognormal(s));
  } else {
    const auto r = fit_report_from_json(detail::read_json(o.model));
    r.params.validate();
    m = ciasr_model(r.params);
  }
  const auto rep = evaluate_model(s, m, default_histogram(s.view(), o.bins), o.scene_id);
  write_metrics_csv(std::cout, std::span(&rep, 1));
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';
  return 0;
}

int run_segment(const SegmentOpts& o) {
  const auto img = o.format == "auto"  ? load_raster(o.image)
                   : o.format == "pgm" ? load_raster(o.image, RasterFormat::pgm)
                                       : load_raster(o.image, RasterFormat::flat_f64);
  const auto grid = segment_patches(img, o.patch);
  for (const auto& w : grid.warnings) std::cerr << "warning: " << w << '\n';
  const auto pm = fit_patches(grid, o.cfg, o.workers);
  const fs::path dir(o.out);
  fs::create_directories(dir);
  detail::write_json(dir / "paramap.json", to_json(pm));

  std::size_t failed = 0;
  for (bool f : pm.failed) failed += f;
  std::cerr << grid.rows << "x" << grid.cols << " patches, " << failed << " failed\n";
  if (failed == pm.cells()) {
    std::cerr << "no successful cells; maps not rendered\n";
    return 1;
  }
  const std::pair<const char*, RenderMode> outputs[] = {{"alpha.pgm", RenderMode::heatmap_alpha},
                                                        {"gamma.pgm", RenderMode::heatmap_gamma},
                                                        {"delta.pgm", RenderMode::heatmap_delta},
                                                        {"pseudo_rgb.ppm", RenderMode::pseudo_rgb}};
  nlohmann::json meta = {{"cell_px", o.cell_px}, {"failed_cells", nlohmann::json::array()}};
  for (const auto& [name, mode] : outputs) {
    const auto r = render_maps(pm, mode, o.cell_px);
    save_rendered(dir / name, r);
    if (mode == RenderMode::pseudo_rgb)
      for (const auto& [row, col] : r.failed_cells) meta["failed_cells"].push_back({row, col});
  }
  detail::write_json(dir / "render.json", meta);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CIaSR amplitude model: sampling, density, MoBM fitting, metrics, patch maps"};
  app.require_subcommand(1);

  SampleOpts so;
  auto* sample = app.add_subcommand("sample", "draw CIaSR amplitudes to a flat f64 file + JSON sidecar");
  sample->add_option("--alpha", so.alpha, "characteristic exponent in (0, 2]")->capture_default_str();
  sample->add_option("--gamma", so.gamma, "scale > 0")->capture_default_str();
  sample->add_option("--delta", so.delta, "location >= 0")->capture_default_str();
  sample->add_option("--n", so.n, "sample count")->capture_default_str();
  sample->add_option("--seed", so.seed, "64-bit seed")->capture_default_str();
  sample->add_option("--split-angle", so.split_angle, "angle of (delta1, delta2) in radians")->capture_default_str();
  sample->add_option("--out", so.out, "output path")->required();

  PdfOpts po;
  auto* pdfc = app.add_subcommand("pdf", "density on a uniform grid as CSV (x,density)");
  pdfc->add_option("--alpha", po.alpha)->capture_default_str();
  pdfc->add_option("--gamma", po.gamma)->capture_default_str();
  pdfc->add_option("--delta", po.delta)->capture_default_str();
  pdfc->add_option("--xmin", po.xmin)->capture_default_str();
  pdfc->add_option("--xmax", po.xmax)->capture_default_str();
  pdfc->add_option("--points", po.points)->capture_default_str();
  pdfc->add_flag("--cdf", po.with_cdf, "add a cdf column");

  FitOpts fo;
  auto* fitc = app.add_subcommand("fit", "MoBM fit; prints the report as JSON");
  fitc->add_option("--in", fo.in, "samples (flat f64)")->required();
  fitc->add_option("--out", fo.out, "write JSON here instead of stdout");
  fitc->add_option("--scale-reference", fo.reference, "median, mean or fixed")->capture_default_str();
  fitc->add_option("--fixed-scale", fo.cfg.fixed_scale, "L for --scale-reference fixed")->capture_default_str();
  add_mobm_flags(fitc, fo.cfg);

  MetricsOpts mo;
  auto* met = app.add_subcommand("metrics", "KL and KS of a model against samples; CSV row");
  met->add_option("--in", mo.in, "samples (flat f64)")->required();
  met->add_option("--model", mo.model, "fit report JSON, 'weibull' or 'lognormal'")->required();
  met->add_option("--scene-id", mo.scene_id)->capture_default_str();
  met->add_option("--bins", mo.bins, "histogram bins over [0, 1.01 max]")->capture_default_str();

  SegmentOpts sg;
  auto* seg = app.add_subcommand("segment", "patch-wise fit of a raster; writes maps to --out");
  seg->add_option("--image", sg.image, "PGM (P5) or flat f64 with {width,height} sidecar")->required();
  seg->add_option("--format", sg.format, "auto, pgm or f64")->capture_default_str();
  seg->add_option("--patch", sg.patch, "patch edge in pixels")->capture_default_str();
  seg->add_option("--out", sg.out, "output directory")->required();
  seg->add_option("--workers", sg.workers, "fitting threads")->capture_default_str();
  seg->add_option("--cell-px", sg.cell_px, "rendered pixels per patch edge")->capture_default_str();
  add_mobm_flags(seg, sg.cfg);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sample) return run_sample(so);
    if (*pdfc) return run_pdf(po);
    if (*fitc) return run_fit(fo);
    if (*met) return run_metrics(mo);
    if (*seg) return run_segment(sg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
