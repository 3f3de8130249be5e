#pragma once

// One-dimensional sample collections and their on-disk form: a flat file of
// little-endian IEEE-754 doubles plus a JSON sidecar at "<path>.json".

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ciasr/errors.hpp"

namespace ciasr {

struct SampleSet {
  std::vector<double> values;
  std::uint64_t seed = 0;
  // Generator name and parameters; null for data not produced by a sampler.
  nlohmann::json config;

  std::size_t size() const { return values.size(); }
  bool empty() const { return values.empty(); }
  std::span<const double> view() const { return values; }
};

inline std::filesystem::path sidecar_path(const std::filesystem::path& p) {
  return std::filesystem::path(p.string() + ".json");
}

namespace detail {

inline std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return r;
  }
  return v;
}

inline void write_f64le(const std::filesystem::path& path, std::span<const double> values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  for (double v : values) {
    const std::uint64_t le = to_little_endian(std::bit_cast<std::uint64_t>(v));
    out.write(reinterpret_cast<const char*>(&le), sizeof le);
  }
  if (!out) throw FormatError("write failed: " + path.string());
}

inline std::vector<double> read_f64le(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw FormatError("cannot open " + path.string());
  const auto bytes = static_cast<std::size_t>(in.tellg());
  if (bytes % 8 != 0) throw FormatError(path.string() + ": size is not a multiple of 8 bytes");
  in.seekg(0);
  std::vector<double> values(bytes / 8);
  for (auto& v : values) {
    std::uint64_t le = 0;
    in.read(reinterpret_cast<char*>(&le), sizeof le);
    v = std::bit_cast<double>(to_little_endian(le));
  }
  if (!in) throw FormatError("read failed: " + path.string());
  return values;
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

}  // namespace detail

inline void save_samples(const std::filesystem::path& path, const SampleSet& s) {
  detail::write_f64le(path, s.values);
  nlohmann::json meta = {{"format", "f64le"}, {"n", s.values.size()}, {"seed", s.seed}};
  meta["generator"] = s.config;
  detail::write_json(sidecar_path(path), meta);
}

/// Reads a flat f64 dump. The sidecar is optional; when present its "n"
/// must match the payload.
inline SampleSet load_samples(const std::filesystem::path& path) {
  SampleSet s;
  s.values = detail::read_f64le(path);
  const auto side = sidecar_path(path);
  if (std::filesystem::exists(side)) {
    const auto meta = detail::read_json(side);
    if (meta.contains("n") && meta["n"].get<std::size_t>() != s.values.size())
      throw FormatError(side.string() + ": declared n does not match payload");
    s.seed = meta.value("seed", std::uint64_t{0});
    if (meta.contains("generator")) s.config = meta["generator"];
  }
  return s;
}

}  // namespace ciasr
