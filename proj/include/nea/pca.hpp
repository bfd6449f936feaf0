#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace nea {

/// Centered PCA transform for flattened blocks of n scalars keeping m components.
///
/// Basis rows are orthonormal and ordered by descending variance of the
/// training set. Each row is sign-normalized so its largest-magnitude entry
/// is positive (earliest index wins ties), which makes fitting deterministic.
struct PcaModel {
  std::uint32_t n = 0;
  std::uint32_t m = 0;
  std::vector<float> mean;   // n
  std::vector<float> basis;  // m rows of n, row-major
  /// Set when m exceeds the numerical rank of the training set; rows past the
  /// rank are an arbitrary orthonormal completion.
  bool rank_deficient = false;

  std::span<const float> row(std::uint32_t c) const noexcept {
    return {basis.data() + std::size_t{c} * n, n};
  }
};

/// `blocks` holds count * n scalars.
PcaModel fit_pca(std::span<const float> blocks, std::uint32_t n, std::uint32_t m);

std::vector<float> pca_encode(std::span<const float> block, const PcaModel& model);
std::vector<float> pca_decode(std::span<const float> coeffs, const PcaModel& model);
void pca_decode_into(std::span<const float> coeffs, const PcaModel& model, std::span<float> out);

}  // namespace nea
