#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace nea {

/// Voxel or block extents along x, y, z.
struct Dims3 {
  std::uint32_t x = 1;
  std::uint32_t y = 1;
  std::uint32_t z = 1;

  std::size_t volume() const noexcept {
    return std::size_t{x} * std::size_t{y} * std::size_t{z};
  }
  friend bool operator==(const Dims3&, const Dims3&) = default;
  friend auto operator<=>(const Dims3&, const Dims3&) = default;
};

std::string to_string(const Dims3& d);  // "XxYxZ"
Dims3 parse_dims(const std::string& text);  // accepts "XxYxZ"

/// Shape of the ensemble space: R runs by T timesteps of X*Y*Z volumes.
struct EnsembleShape {
  std::uint32_t runs = 1;
  std::uint32_t timesteps = 1;
  Dims3 volume_dims;
  float value_peak = 1.0f;

  std::size_t volume_count() const noexcept {
    return std::size_t{runs} * std::size_t{timesteps};
  }
  void validate() const;
};

struct EnsembleCoordinate {
  std::uint32_t r = 0;
  std::uint32_t t = 0;

  friend bool operator==(const EnsembleCoordinate&, const EnsembleCoordinate&) = default;
  friend auto operator<=>(const EnsembleCoordinate&, const EnsembleCoordinate&) = default;
};

/// Dense 32-bit scalar volume, x varies fastest.
struct Volume {
  Dims3 dims;
  std::vector<float> data;

  Volume() = default;
  explicit Volume(Dims3 d, float fill = 0.0f) : dims(d), data(d.volume(), fill) {}

  std::size_t index(std::size_t x, std::size_t y, std::size_t z) const noexcept {
    return x + dims.x * (y + std::size_t{dims.y} * z);
  }
  float at(std::size_t x, std::size_t y, std::size_t z) const noexcept {
    return data[index(x, y, z)];
  }
  float& at(std::size_t x, std::size_t y, std::size_t z) noexcept {
    return data[index(x, y, z)];
  }
};

struct ManifestEntry {
  std::filesystem::path path;  // absolute, resolved against the manifest directory
  std::uint64_t offset = 0;
};

struct EnsembleManifest {
  EnsembleShape shape;
  std::string variable_name;
  std::map<EnsembleCoordinate, ManifestEntry> entries;

  const ManifestEntry& entry(EnsembleCoordinate c) const;
  /// Every coordinate in (r, t) scan order: r slowest, t fastest.
  std::vector<EnsembleCoordinate> coordinates() const;
  std::uint64_t original_bytes() const noexcept {
    return std::uint64_t{4} * shape.volume_dims.volume() * shape.volume_count();
  }
};

/// Parses and fully validates a manifest document. Relative entry paths are
/// resolved against the manifest's directory.
EnsembleManifest load_manifest(const std::filesystem::path& path);

/// Serializes a manifest; entry paths are written relative to `path`'s
/// directory when they live beneath it.
void write_manifest(const EnsembleManifest& manifest, const std::filesystem::path& path);

/// Builds a manifest from an in-memory JSON text. Exposed for tests.
EnsembleManifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir);

/// Reads one raw little-endian float32 volume. Safe to call concurrently.
Volume read_volume(const EnsembleManifest& manifest, EnsembleCoordinate coord);

void write_volume_file(const Volume& volume, const std::filesystem::path& path);
Volume read_volume_file(const std::filesystem::path& path, Dims3 dims, std::uint64_t offset = 0);

struct SyntheticParams {
  EnsembleShape shape;
  double duplication_rate = 0.5;
  double perturbation = 1.0;
  std::uint64_t seed = 0;
  /// Regions on this lattice are either shared by every run or perturbed per run.
  Dims3 region_dims{4, 4, 4};
};

/// Writes run{r}_t{t}.raw files plus manifest.json into `out_dir` and returns
/// the loaded manifest. Output is a pure function of `params`.
EnsembleManifest generate_synthetic_ensemble(const SyntheticParams& params,
                                             const std::filesystem::path& out_dir);

/// In-memory variant of the generator used by tests and benchmarks.
Volume synthesize_volume(const SyntheticParams& params, EnsembleCoordinate coord);

}  // namespace nea
