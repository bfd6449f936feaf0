#pragma once

// Shared fixtures, hand-rolled generators and independent oracles for the
// unit and acceptance suites.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nea/blocks.hpp"
#include "nea/codebook.hpp"
#include "nea/dedup.hpp"
#include "nea/ensemble.hpp"
#include "nea/random.hpp"
#include "nea/reduction.hpp"

namespace nea::test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "nea");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

struct Gen {
  explicit Gen(std::uint64_t seed) : rng(seed) {}
  SplitMix64 rng;

  std::uint64_t below(std::uint64_t n) { return rng.below(n); }
  /// Inclusive range.
  std::int64_t between(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
  }
  double uniform(double lo = 0.0, double hi = 1.0) { return lo + (hi - lo) * rng.uniform(); }
  bool chance(double p) { return rng.uniform() < p; }
  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[rng.below(v.size())];
  }
  std::vector<float> floats(std::size_t n, double lo, double hi);
  /// Mostly zeros with occasional values of any magnitude class.
  std::vector<std::int16_t> sparse_int16(std::size_t n, double density);
};

/// Writes a synthetic ensemble into `dir` and loads its manifest.
EnsembleManifest make_ensemble(const std::filesystem::path& dir, std::uint32_t runs, std::uint32_t timesteps,
                               Dims3 dims, double dup_rate, std::uint64_t seed, double perturbation = 1.0);

/// Every (r, t) entry points at the same synthesized volume.
EnsembleManifest make_identical_ensemble(const std::filesystem::path& dir, std::uint32_t runs,
                                         std::uint32_t timesteps, Dims3 dims, std::uint64_t seed);

/// Every volume of a manifest, (r, t) scan order.
std::vector<Volume> load_all(const EnsembleManifest& manifest);

/// Round half to even of value * 10^d, computed with floor and an explicit
/// tie test instead of the library's nearbyint.
std::int64_t oracle_round(float value, std::int32_t decimals);

/// Brute-force grouping: every block is compared element-wise with the
/// rounded first member of each existing group; labels are assigned in
/// order of first appearance over (r, t, i, j, k). Returns one label grid
/// per volume in grid storage order.
std::vector<std::vector<std::uint32_t>> oracle_dedup(const std::vector<Volume>& volumes, GridDims grid,
                                                     const BlockSpec& spec, std::size_t* groups = nullptr);

/// Per cell count of runs whose ID equals the reference run's.
std::vector<std::uint32_t> oracle_agreement(const std::vector<std::vector<std::uint32_t>>& run_grids,
                                            std::size_t reference);

/// Dedup + write helper.
CodebookSummary build_codebook(const EnsembleManifest& manifest, const BlockSpec& spec,
                               const ReductionConfig& reduction, const std::filesystem::path& path,
                               DedupResult* dedup_out = nullptr);

std::vector<std::byte> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<std::byte>& data);

/// MSE computed with a plain two-index loop over (x, y, z).
double oracle_mse(const Volume& a, const Volume& b);

}  // namespace nea::test
