#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nea/ensemble.hpp"

namespace nea {

bool is_power_of_two(std::uint32_t v) noexcept;

/// Multi-level separable orthonormal Haar transform of an x-fastest block,
/// in place. Each level halves every axis of the current approximation
/// sub-cube that is still at least 2 long, so axis length L gets log2(L)
/// levels. Approximations land in the low half of each axis, details in the
/// high half; the final approximation coefficient is element 0.
void haar_forward(std::span<double> block, Dims3 dims);
void haar_inverse(std::span<double> coeffs, Dims3 dims);

struct ThresholdSpec {
  std::size_t n = 0;     // voxels per block
  double mad = 0.0;      // median absolute deviation of the detail coefficients
  double sigma_hat = 0.0;
  double lambda = 0.0;
};

double median(std::vector<double> values);
/// median(|v - median(v)|); zero for an empty input.
double median_absolute_deviation(std::span<const double> values);

/// sigma_hat = 2 (100 - q) / 100 * MAD, lambda = sqrt(2 ln n) * sigma_hat.
/// MAD is taken over the detail coefficients, i.e. every element but 0.
ThresholdSpec threshold_for(std::span<const double> coeffs, double quality);
ThresholdSpec threshold_from_mad(double mad, std::size_t n, double quality);

/// c -> sign(c) max(|c| - lambda, 0) applied to every element.
void soft_threshold_values(std::span<double> values, double lambda);

/// Thresholds the detail coefficients (element 0 exempt) and returns the spec used.
ThresholdSpec soft_threshold(std::span<double> coeffs, double quality);

struct QuantizedBlock {
  float scale = 0.0f;  // max|c| / 32767, zero for an all-zero input
  std::vector<std::int16_t> values;
};

QuantizedBlock quantize(std::span<const double> coeffs);
std::vector<double> dequantize(float scale, std::span<const std::int16_t> values);

}  // namespace nea
