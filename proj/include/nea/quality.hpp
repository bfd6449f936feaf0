#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

#include "nea/codebook.hpp"
#include "nea/ensemble.hpp"
#include "nea/kernels.hpp"

namespace nea {

/// Reported for bit-identical volumes.
inline constexpr double kIdenticalPsnr = std::numeric_limits<double>::infinity();

struct VolumeError {
  double mse = 0.0;
  double max_abs = 0.0;
  double psnr_db = kIdenticalPsnr;
};

double mean_squared_error(const Volume& a, const Volume& b);
/// 20 log10(peak) - 10 log10(MSE); kIdenticalPsnr when MSE is zero.
double psnr(const Volume& a, const Volume& b, double peak);
double psnr_from_mse(double mse, double peak);
VolumeError compare_volumes(const Volume& a, const Volume& b, double peak);

struct QualityReport {
  std::vector<EnsembleCoordinate> coords;
  std::vector<VolumeError> volumes;
  double worst_psnr_db = kIdenticalPsnr;
  double mean_psnr_db = kIdenticalPsnr;  // infinite if any volume is identical
  double max_abs_error = 0.0;
  double mean_squared_error = 0.0;  // over all compared voxels
  std::uint64_t original_bytes = 0;
  std::uint64_t codebook_bytes = 0;
  double compression_ratio = 0.0;  // S_od / S_cb from actual file sizes
  double dedup_ratio = 0.0;        // B_rem / B_tot

  bool identical() const noexcept { return mean_squared_error == 0.0; }
};

/// `count` coordinates spread evenly over the (r, t) scan order; all of them
/// when count is 0 or at least R*T.
std::vector<EnsembleCoordinate> evenly_spaced_sample(const EnsembleShape& shape, std::size_t count);

/// Reconstructs each sampled volume through a working set and compares it
/// with the manifest's source data, using the manifest's value peak.
QualityReport compare_codebook(const EnsembleManifest& manifest, const CodebookReader& reader,
                               std::span<const EnsembleCoordinate> sample,
                               kernels::Exec exec = kernels::Exec::Parallel);

std::string format_quality_report(const QualityReport& report);

}  // namespace nea
