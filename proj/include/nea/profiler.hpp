#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nea/blocks.hpp"
#include "nea/ensemble.hpp"
#include "nea/kernels.hpp"
#include "nea/reduction.hpp"

namespace nea {

/// A rectangle of the ensemble space: runs [r0, r0+runs) x timesteps [t0, t0+timesteps).
struct SampleRegion {
  std::uint32_t r0 = 0, t0 = 0;
  std::uint32_t runs = 2, timesteps = 2;

  std::size_t cells() const noexcept { return std::size_t{runs} * timesteps; }
  bool contains(EnsembleCoordinate c) const noexcept {
    return c.r >= r0 && c.r < r0 + runs && c.t >= t0 && c.t < t0 + timesteps;
  }
  bool overlaps(const SampleRegion& o) const noexcept {
    return r0 < o.r0 + o.runs && o.r0 < r0 + runs && t0 < o.t0 + o.timesteps && o.t0 < t0 + timesteps;
  }
  friend bool operator==(const SampleRegion&, const SampleRegion&) = default;
};

/// Random non-overlapping regions with sides drawn from {2, 3} until their
/// area reaches coverage * R * T or no free placement is left.
std::vector<SampleRegion> sample_regions(const EnsembleShape& shape, double coverage = 0.10,
                                         std::uint64_t seed = 0);

/// Sorted union of the coordinates inside `regions`.
std::vector<EnsembleCoordinate> region_coordinates(std::span<const SampleRegion> regions);

/// S_cb = S_od * (B_rem / B_tot) * R + S_g, in bytes.
double estimate_codebook_size(double s_od, std::uint64_t b_rem, std::uint64_t b_tot, double s_g,
                              double reduction_factor);
/// Same, deriving R from the configuration: 1 for none, 2m/n for pca and
/// `wavelet_ratio` (measured encoded/raw bytes) for wavelet.
double estimate_codebook_size(double s_od, std::uint64_t b_rem, std::uint64_t b_tot, double s_g,
                              const ReductionConfig& reduction, std::size_t block_elements,
                              double wavelet_ratio = 1.0);
double reduction_factor(const ReductionConfig& reduction, std::size_t block_elements, double wavelet_ratio = 1.0);

/// M_vis = 115200 / E_tot + 200, in MB.
double estimate_vis_memory(std::size_t block_elements);

struct ProfileConfig {
  Dims3 block_dims{4, 4, 4};
  std::int32_t decimals = 0;
  ReductionConfig reduction;

  std::string describe() const;
};

/// Lexicographic order over (block dims, decimals, kind, components, quality).
bool config_less(const ProfileConfig& a, const ProfileConfig& b) noexcept;

struct ProfileEstimate {
  ProfileConfig config;
  double s_cb = 0.0;   // bytes
  double m_vis = 0.0;  // MB
  double s_od = 0.0;
  double s_g = 0.0;
  double reduction_factor = 1.0;
  std::uint64_t sample_b_rem = 0;
  std::uint64_t sample_b_tot = 0;

  double dedup_ratio() const noexcept {
    return sample_b_tot ? static_cast<double>(sample_b_rem) / static_cast<double>(sample_b_tot) : 0.0;
  }
};

/// Block sizes {4^3, 8^3, 16^3, 8x8x1} x decimals {-1, 0, 1, 2} x a per-kind
/// third axis: PCA keeps n/2, n/4, n/8, n/16 components, wavelet uses
/// quality 99, 90, 75, 50. "none" has no third axis (16 configurations).
std::vector<ProfileConfig> default_profile_grid(ReductionKind kind);

struct ProfileOptions {
  double coverage = 0.10;
  std::uint64_t seed = 0;
  std::size_t n_best = 3;
  kernels::Exec exec = kernels::Exec::Parallel;
};

struct ProfileResult {
  std::vector<SampleRegion> regions;
  std::vector<EnsembleCoordinate> sampled;
  /// Every configuration, ranked by S_cb, then M_vis, then parameters.
  std::vector<ProfileEstimate> ranked;

  std::span<const ProfileEstimate> best(std::size_t n) const noexcept {
    return {ranked.data(), std::min(n, ranked.size())};
  }
};

/// Trial deduplication of the sampled volumes for every configuration.
ProfileResult profile(const EnsembleManifest& manifest, std::span<const ProfileConfig> grid,
                      const ProfileOptions& options = {});

/// Evaluates one configuration against an explicit set of volumes.
ProfileEstimate profile_config(const EnsembleManifest& manifest, std::span<const EnsembleCoordinate> sampled,
                               const ProfileConfig& config, kernels::Exec exec = kernels::Exec::Parallel);

/// Aligned text table, one row per estimate.
std::string format_profile_table(std::span<const ProfileEstimate> rows);
/// JSON array, one object per estimate.
std::string profile_rows_json(std::span<const ProfileEstimate> rows);

}  // namespace nea
