#pragma once

// Raster in, parameter maps out: load an amplitude image, cut it into square
// patches, fit every patch independently and render the fitted alpha, gamma
// and delta as 8-bit heatmaps or a pseudo-RGB composite.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "ciasr/errors.hpp"
#include "ciasr/estimator.hpp"
#include "ciasr/parallel.hpp"
#include "ciasr/samples.hpp"
#include "ciasr/stable_sampler.hpp"

namespace ciasr {

struct RasterImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> pixels;  // row-major amplitudes
  int bit_depth = 64;          // 8 or 16 for PGM input, 64 for f64

  double at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }

  void validate() const {
    if (width == 0 || height == 0) throw FormatError("raster: zero dimension");
    if (pixels.size() != width * height) throw FormatError("raster: pixel count does not match width*height");
    for (double v : pixels)
      if (!(v >= 0.0) || !std::isfinite(v)) throw FormatError("raster: amplitudes must be finite and >= 0");
  }
};

enum class RasterFormat { pgm, flat_f64 };

namespace detail {

// Next header token of a PNM file, skipping whitespace and # comments.
inline std::string pnm_token(std::istream& in) {
  std::string tok;
  int c;
  for (;;) {
    c = in.get();
    if (c == EOF) throw FormatError("pgm: truncated header");
    if (c == '#') {
      while (c != '\n' && c != EOF) c = in.get();
      continue;
    }
    if (!std::isspace(c)) break;
  }
  while (c != EOF && !std::isspace(c)) {
    tok.push_back(static_cast<char>(c));
    c = in.get();
  }
  // exactly one whitespace byte separates maxval from the payload, consumed here
  return tok;
}

inline std::size_t pnm_number(std::istream& in, const char* what) {
  const auto tok = pnm_token(in);
  if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](char ch) { return std::isdigit(ch); }))
    throw FormatError(std::string("pgm: bad ") + what + " '" + tok + "'");
  return std::stoull(tok);
}

inline RasterImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  if (pnm_token(in) != "P5") throw FormatError(path.string() + ": not a binary PGM (P5)");
  RasterImage img;
  img.width = pnm_number(in, "width");
  img.height = pnm_number(in, "height");
  const auto maxval = pnm_number(in, "maxval");
  if (maxval == 0 || maxval > 65535) throw FormatError(path.string() + ": maxval out of range");
  img.bit_depth = maxval > 255 ? 16 : 8;
  const std::size_t bpp = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(img.width * img.height * bpp);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size())
    throw FormatError(path.string() + ": payload shorter than width*height");
  img.pixels.resize(img.width * img.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    img.pixels[i] = bpp == 2 ? static_cast<double>((raw[2 * i] << 8) | raw[2 * i + 1]) : raw[i];
  img.validate();
  return img;
}

inline RasterImage read_flat_f64(const std::filesystem::path& path) {
  const auto side = sidecar_path(path);
  if (!std::filesystem::exists(side)) throw FormatError(path.string() + ": missing sidecar " + side.string());
  const auto meta = read_json(side);
  if (!meta.contains("width") || !meta.contains("height"))
    throw FormatError(side.string() + ": need \"width\" and \"height\"");
  RasterImage img;
  img.width = meta["width"].get<std::size_t>();
  img.height = meta["height"].get<std::size_t>();
  img.bit_depth = 64;
  img.pixels = read_f64le(path);
  if (img.pixels.size() != img.width * img.height)
    throw FormatError(path.string() + ": sidecar declares " + std::to_string(img.width * img.height) +
                      " pixels, payload has " + std::to_string(img.pixels.size()));
  img.validate();
  return img;
}

}  // namespace detail

inline RasterFormat guess_raster_format(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".pgm" ? RasterFormat::pgm : RasterFormat::flat_f64;
}

inline RasterImage load_raster(const std::filesystem::path& path, RasterFormat fmt) {
  return fmt == RasterFormat::pgm ? detail::read_pgm(path) : detail::read_flat_f64(path);
}

inline RasterImage load_raster(const std::filesystem::path& path) {
  return load_raster(path, guess_raster_format(path));
}

/// Flat f64 payload plus {"width","height"} sidecar.
inline void save_raster_f64(const std::filesystem::path& path, const RasterImage& img) {
  img.validate();
  detail::write_f64le(path, img.pixels);
  detail::write_json(sidecar_path(path), {{"width", img.width}, {"height", img.height}, {"format", "f64le"}});
}

/// 16-bit big-endian P5; values are rounded and must fit in [0, 65535].
inline void save_pgm16(const std::filesystem::path& path, const RasterImage& img) {
  img.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << "P5\n" << img.width << ' ' << img.height << "\n65535\n";
  for (double v : img.pixels) {
    const double r = std::round(v);
    if (r > 65535.0) throw FormatError("save_pgm16: value above 65535");
    const auto u = static_cast<std::uint16_t>(r);
    out.put(static_cast<char>(u >> 8));
    out.put(static_cast<char>(u & 0xff));
  }
}

/// 8-bit PGM (channels = 1) or PPM (channels = 3).
inline void save_pnm8(const std::filesystem::path& path, std::size_t width, std::size_t height, int channels,
                      const std::vector<std::uint8_t>& bytes) {
  if (channels != 1 && channels != 3) throw DomainError("save_pnm8: channels must be 1 or 3");
  if (bytes.size() != width * height * static_cast<std::size_t>(channels))
    throw DomainError("save_pnm8: byte count does not match dimensions");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << (channels == 1 ? "P5\n" : "P6\n") << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed: " + path.string());
}

struct PatchGrid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t patch_size = 0;
  std::vector<SampleSet> patches;  // row-major, rows * cols
  std::vector<std::string> warnings;
};

inline constexpr std::size_t kMinPatchSize = 32;
inline constexpr std::size_t kSmallPatchPixels = 100000;

/// Non-overlapping square patches; trailing partial rows and columns are dropped.
inline PatchGrid segment_patches(const RasterImage& img, std::size_t patch_size) {
  if (patch_size < kMinPatchSize)
    throw DomainError("segment_patches: patch size must be >= " + std::to_string(kMinPatchSize));
  if (patch_size > img.width || patch_size > img.height)
    throw DomainError("segment_patches: patch size " + std::to_string(patch_size) + " exceeds image " +
                      std::to_string(img.width) + "x" + std::to_string(img.height));
  PatchGrid g;
  g.patch_size = patch_size;
  g.cols = img.width / patch_size;
  g.rows = img.height / patch_size;
  const std::size_t drop_x = img.width - g.cols * patch_size;
  const std::size_t drop_y = img.height - g.rows * patch_size;
  if (drop_x || drop_y)
    g.warnings.push_back("dropped partial margin: " + std::to_string(drop_x) + " columns, " +
                         std::to_string(drop_y) + " rows");
  if (patch_size * patch_size < kSmallPatchPixels)
    g.warnings.push_back("patches hold " + std::to_string(patch_size * patch_size) +
                         " pixels (< 1e5); estimates will be noisy");
  g.patches.resize(g.rows * g.cols);
  for (std::size_t r = 0; r < g.rows; ++r) {
    for (std::size_t c = 0; c < g.cols; ++c) {
      auto& s = g.patches[r * g.cols + c];
      s.values.reserve(patch_size * patch_size);
      for (std::size_t y = r * patch_size; y < (r + 1) * patch_size; ++y) {
        const double* row = img.pixels.data() + y * img.width + c * patch_size;
        s.values.insert(s.values.end(), row, row + patch_size);
      }
      s.config = {{"kind", "patch"}, {"row", r}, {"col", c}, {"patch_size", patch_size}};
    }
  }
  return g;
}

struct ParamMap {
  std::size_t grid_rows = 0;
  std::size_t grid_cols = 0;
  std::size_t patch_size = 0;
  // Row-major; NaN in failed cells.
  std::vector<double> alpha_map;
  std::vector<double> gamma_map;
  std::vector<double> delta_map;
  std::vector<bool> failed;
  std::vector<std::vector<std::string>> fit_warnings;
  std::vector<std::string> warnings;

  std::size_t cells() const { return grid_rows * grid_cols; }
  ModelParams cell(std::size_t i) const { return {alpha_map[i], gamma_map[i], delta_map[i]}; }
};

namespace detail {

struct CellFit {
  ModelParams params;
  bool failed = false;
  std::vector<std::string> warnings;
};

inline CellFit fit_cell(const SampleSet& s, const MobmConfig& cfg) {
  CellFit c;
  try {
    const auto r = fit(s, cfg);
    c.params = r.params;
    c.warnings = r.warnings;
    if (!r.params.valid()) {
      c.failed = true;
      c.warnings.push_back("fitted parameters outside the model domain");
    }
  } catch (const FitError& e) {
    c.failed = true;
    c.warnings = e.partial().warnings;
  } catch (const std::exception& e) {
    c.failed = true;
    c.warnings.push_back(e.what());
  }
  if (c.failed) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    c.params = {nan, nan, nan};
  }
  return c;
}

}  // namespace detail

/// Fits every patch. Failures are recorded per cell, never thrown.
inline ParamMap fit_patches(const PatchGrid& grid, const MobmConfig& cfg = {}, std::size_t workers = 1) {
  if (grid.patches.empty()) throw DomainError("fit_patches: no patches");
  cfg.validate();
  const auto fits = parallel_map(grid.patches, [&cfg](const SampleSet& s) { return detail::fit_cell(s, cfg); },
                                 workers);
  ParamMap pm;
  pm.grid_rows = grid.rows;
  pm.grid_cols = grid.cols;
  pm.patch_size = grid.patch_size;
  pm.warnings = grid.warnings;
  for (const auto& f : fits) {
    pm.alpha_map.push_back(f.params.alpha);
    pm.gamma_map.push_back(f.params.gamma);
    pm.delta_map.push_back(f.params.delta);
    pm.failed.push_back(f.failed);
    pm.fit_warnings.push_back(f.warnings);
  }
  return pm;
}

inline nlohmann::json to_json(const ParamMap& pm) {
  auto matrix = [&](const std::vector<double>& v) {
    nlohmann::json m = nlohmann::json::array();
    for (std::size_t r = 0; r < pm.grid_rows; ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (std::size_t c = 0; c < pm.grid_cols; ++c) {
        const std::size_t i = r * pm.grid_cols + c;
        row.push_back(pm.failed[i] ? nlohmann::json(nullptr) : nlohmann::json(v[i]));
      }
      m.push_back(row);
    }
    return m;
  };
  nlohmann::json failed = nlohmann::json::array();
  nlohmann::json cell_warnings = nlohmann::json::array();
  for (std::size_t i = 0; i < pm.cells(); ++i) {
    if (pm.failed[i]) failed.push_back({i / pm.grid_cols, i % pm.grid_cols});
    cell_warnings.push_back(pm.fit_warnings[i]);
  }
  return {{"grid_rows", pm.grid_rows}, {"grid_cols", pm.grid_cols}, {"patch_size", pm.patch_size},
          {"alpha", matrix(pm.alpha_map)}, {"gamma", matrix(pm.gamma_map)}, {"delta", matrix(pm.delta_map)},
          {"failed_cells", failed},      {"fit_warnings", cell_warnings}, {"warnings", pm.warnings}};
}

enum class RenderMode { heatmap_alpha, heatmap_gamma, heatmap_delta, pseudo_rgb };

inline RenderMode render_mode_from_string(const std::string& s) {
  if (s == "heatmap-alpha") return RenderMode::heatmap_alpha;
  if (s == "heatmap-gamma") return RenderMode::heatmap_gamma;
  if (s == "heatmap-delta") return RenderMode::heatmap_delta;
  if (s == "pseudo-rgb") return RenderMode::pseudo_rgb;
  throw DomainError("unknown render mode '" + s + "'");
}

struct RenderedMap {
  std::size_t width = 0;
  std::size_t height = 0;
  int channels = 1;
  std::vector<std::uint8_t> bytes;
  std::vector<std::pair<std::size_t, std::size_t>> failed_cells;  // (row, col)
};

namespace detail {

// Min-max normalisation over successful cells to 0..255; a constant map
// gives 128 everywhere, failed cells give 0.
inline std::vector<std::uint8_t> normalise_channel(const std::vector<double>& v, const std::vector<bool>& failed,
                                                   bool invert) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (failed[i]) continue;
    lo = std::min(lo, v[i]);
    hi = std::max(hi, v[i]);
  }
  std::vector<std::uint8_t> out(v.size(), 0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (failed[i]) continue;
    if (!(hi > lo)) {
      out[i] = 128;
      continue;
    }
    double t = (v[i] - lo) / (hi - lo);
    if (invert) t = 1.0 - t;
    out[i] = static_cast<std::uint8_t>(std::lround(255.0 * t));
  }
  return out;
}

}  // namespace detail

/// 8-bit rendering, one cell_px x cell_px block per patch. alpha is inverted
/// (low alpha, heavy tail, is bright) in both its heatmap and the red channel.
inline RenderedMap render_maps(const ParamMap& pm, RenderMode mode, std::size_t cell_px = 1) {
  if (cell_px == 0) throw DomainError("render_maps: cell_px must be >= 1");
  if (std::all_of(pm.failed.begin(), pm.failed.end(), [](bool f) { return f; }) || pm.cells() == 0)
    throw DomainError("render_maps: no successful cells to render");
  std::vector<std::vector<std::uint8_t>> planes;
  switch (mode) {
    case RenderMode::heatmap_alpha: planes.push_back(detail::normalise_channel(pm.alpha_map, pm.failed, true)); break;
    case RenderMode::heatmap_gamma: planes.push_back(detail::normalise_channel(pm.gamma_map, pm.failed, false)); break;
    case RenderMode::heatmap_delta: planes.push_back(detail::normalise_channel(pm.delta_map, pm.failed, false)); break;
    case RenderMode::pseudo_rgb:
      planes.push_back(detail::normalise_channel(pm.alpha_map, pm.failed, true));
      planes.push_back(detail::normalise_channel(pm.gamma_map, pm.failed, false));
      planes.push_back(detail::normalise_channel(pm.delta_map, pm.failed, false));
      break;
  }
  RenderedMap out;
  out.channels = static_cast<int>(planes.size());
  out.width = pm.grid_cols * cell_px;
  out.height = pm.grid_rows * cell_px;
  out.bytes.resize(out.width * out.height * planes.size());
  for (std::size_t y = 0; y < out.height; ++y) {
    for (std::size_t x = 0; x < out.width; ++x) {
      const std::size_t cell = (y / cell_px) * pm.grid_cols + x / cell_px;
      for (std::size_t ch = 0; ch < planes.size(); ++ch)
        out.bytes[(y * out.width + x) * planes.size() + ch] = planes[ch][cell];
    }
  }
  for (std::size_t i = 0; i < pm.cells(); ++i)
    if (pm.failed[i]) out.failed_cells.emplace_back(i / pm.grid_cols, i % pm.grid_cols);
  return out;
}

inline void save_rendered(const std::filesystem::path& path, const RenderedMap& m) {
  save_pnm8(path, m.width, m.height, m.channels, m.bytes);
}

/// Synthetic test scene: patch-aligned blocks, each filled with CIaSR
/// samples whose parameters come from regime(row, col). Each block draws from
/// its own stream so the image does not depend on evaluation order.
template <class Regime>
RasterImage synthesize_mosaic(std::size_t width, std::size_t height, std::size_t block, Regime&& regime,
                              std::uint64_t seed) {
  if (block == 0 || width % block || height % block)
    throw DomainError("synthesize_mosaic: image size must be a multiple of the block size");
  RasterImage img;
  img.width = width;
  img.height = height;
  img.pixels.resize(width * height);
  const std::size_t cols = width / block;
  for (std::size_t r = 0; r < height / block; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const ModelParams p = regime(r, c);
      CiasrGenConfig cfg;
      cfg.alpha = p.alpha;
      cfg.gamma = p.gamma;
      cfg.delta = p.delta;
      cfg.n = block * block;
      cfg.seed = seed;
      cfg.stream_id = (stream::mosaic << 32) | (r * cols + c);
      const auto s = sample_ciasr(cfg);
      for (std::size_t y = 0; y < block; ++y)
        std::copy_n(s.values.begin() + static_cast<std::ptrdiff_t>(y * block), block,
                    img.pixels.begin() + static_cast<std::ptrdiff_t>((r * block + y) * width + c * block));
    }
  }
  return img;
}

}  // namespace ciasr
