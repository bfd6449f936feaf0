#include "nea/wavelet.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "nea/error.hpp"

namespace nea {

namespace {

constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;

struct Level {
  std::array<std::size_t, 3> len;  // sub-cube extent when the level was applied
};

std::vector<Level> plan_levels(Dims3 dims) {
  std::array<std::size_t, 3> len{dims.x, dims.y, dims.z};
  std::vector<Level> levels;
  while (len[0] > 1 || len[1] > 1 || len[2] > 1) {
    levels.push_back({len});
    for (auto& l : len) {
      if (l > 1) l /= 2;
    }
  }
  return levels;
}

void check_dims(std::span<double> data, Dims3 dims) {
  if (!is_power_of_two(dims.x) || !is_power_of_two(dims.y) || !is_power_of_two(dims.z)) {
    fail(Errc::InvalidArgument, "Haar transform needs power-of-two block dims, got " + to_string(dims));
  }
  if (data.size() != dims.volume()) fail(Errc::DimensionMismatch, "Haar block size does not match dims");
}

// Applies one analysis (forward) or synthesis step along `axis` over the
// sub-cube `len`, for every line of that axis.
void transform_axis(std::span<double> data, Dims3 dims, const std::array<std::size_t, 3>& len, int axis,
                    bool forward, std::vector<double>& line) {
  const std::array<std::size_t, 3> stride{1, dims.x, std::size_t{dims.x} * dims.y};
  const std::size_t n = len[axis];
  const std::size_t half = n / 2;
  const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
  line.resize(n);
  for (std::size_t u = 0; u < len[a1]; ++u) {
    for (std::size_t w = 0; w < len[a2]; ++w) {
      double* base = data.data() + u * stride[a1] + w * stride[a2];
      const std::size_t s = stride[axis];
      if (forward) {
        for (std::size_t p = 0; p < half; ++p) {
          const double a = base[(2 * p) * s], b = base[(2 * p + 1) * s];
          line[p] = (a + b) * kInvSqrt2;
          line[half + p] = (a - b) * kInvSqrt2;
        }
      } else {
        for (std::size_t p = 0; p < half; ++p) {
          const double a = base[p * s], d = base[(half + p) * s];
          line[2 * p] = (a + d) * kInvSqrt2;
          line[2 * p + 1] = (a - d) * kInvSqrt2;
        }
      }
      for (std::size_t p = 0; p < n; ++p) base[p * s] = line[p];
    }
  }
}

}  // namespace

bool is_power_of_two(std::uint32_t v) noexcept { return v != 0 && (v & (v - 1)) == 0; }

void haar_forward(std::span<double> block, Dims3 dims) {
  check_dims(block, dims);
  std::vector<double> line;
  for (const auto& level : plan_levels(dims)) {
    for (int axis = 0; axis < 3; ++axis) {
      if (level.len[axis] > 1) transform_axis(block, dims, level.len, axis, true, line);
    }
  }
}

void haar_inverse(std::span<double> coeffs, Dims3 dims) {
  check_dims(coeffs, dims);
  const auto levels = plan_levels(dims);
  std::vector<double> line;
  for (auto it = levels.rbegin(); it != levels.rend(); ++it) {
    for (int axis = 2; axis >= 0; --axis) {
      if (it->len[axis] > 1) transform_axis(coeffs, dims, it->len, axis, false, line);
    }
  }
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

double median_absolute_deviation(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double med = median({values.begin(), values.end()});
  std::vector<double> dev(values.size());
  std::transform(values.begin(), values.end(), dev.begin(), [med](double v) { return std::fabs(v - med); });
  return median(std::move(dev));
}

ThresholdSpec threshold_from_mad(double mad, std::size_t n, double quality) {
  if (!(quality >= 0.0 && quality <= 100.0)) fail(Errc::InvalidArgument, "wavelet quality must lie in [0, 100]");
  ThresholdSpec spec;
  spec.n = n;
  spec.mad = mad;
  spec.sigma_hat = 2.0 * ((100.0 - quality) / 100.0) * mad;
  spec.lambda = n > 1 ? std::sqrt(2.0 * std::log(static_cast<double>(n))) * spec.sigma_hat : 0.0;
  return spec;
}

ThresholdSpec threshold_for(std::span<const double> coeffs, double quality) {
  const auto details = coeffs.size() > 1 ? coeffs.subspan(1) : std::span<const double>{};
  return threshold_from_mad(median_absolute_deviation(details), coeffs.size(), quality);
}

void soft_threshold_values(std::span<double> values, double lambda) {
  for (auto& c : values) {
    const double mag = std::fabs(c) - lambda;
    c = mag > 0.0 ? std::copysign(mag, c) : 0.0;
  }
}

ThresholdSpec soft_threshold(std::span<double> coeffs, double quality) {
  const auto spec = threshold_for(coeffs, quality);
  if (spec.lambda > 0.0 && coeffs.size() > 1) soft_threshold_values(coeffs.subspan(1), spec.lambda);
  return spec;
}

QuantizedBlock quantize(std::span<const double> coeffs) {
  QuantizedBlock q;
  q.values.assign(coeffs.size(), 0);
  double peak = 0.0;
  for (const double c : coeffs) peak = std::max(peak, std::fabs(c));
  if (peak == 0.0) return q;
  q.scale = static_cast<float>(peak / 32767.0);
  if (q.scale == 0.0f) q.scale = std::numeric_limits<float>::denorm_min();
  // Quantize against the stored scale so dequantization error stays <= scale / 2.
  const double scale = q.scale;
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    const double v = std::nearbyint(coeffs[i] / scale);
    q.values[i] = static_cast<std::int16_t>(std::clamp(v, -32767.0, 32767.0));
  }
  return q;
}

std::vector<double> dequantize(float scale, std::span<const std::int16_t> values) {
  std::vector<double> out(values.size());
  const double s = scale;
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i] * s;
  return out;
}

}  // namespace nea
