#include "nea/blocks.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>

#include "nea/bytes.hpp"
#include "nea/error.hpp"

namespace nea {

namespace {

// Powers of ten up to 1e22 are exact in binary64.
double pow10_abs(std::int32_t d) {
  const std::int32_t a = d < 0 ? -d : d;
  double p = 1.0;
  for (std::int32_t i = 0; i < a; ++i) p *= 10.0;
  return p;
}

}  // namespace

void BlockSpec::validate() const {
  if (block_dims.x < 1 || block_dims.y < 1 || block_dims.z < 1) {
    fail(Errc::InvalidArgument, "block dims must be >= 1");
  }
  if (decimals < kMinDecimals || decimals > kMaxDecimals) {
    fail(Errc::InvalidArgument, "decimals must lie in [" + std::to_string(kMinDecimals) + ", " +
                                    std::to_string(kMaxDecimals) + "]");
  }
  if (!std::isfinite(fill_value)) fail(Errc::InvalidArgument, "fill value must be finite");
}

GridDims grid_dims(Dims3 v, Dims3 b) {
  if (v.volume() == 0 || b.volume() == 0) fail(Errc::InvalidArgument, "grid_dims needs dims >= 1");
  return {(v.x + b.x - 1) / b.x, (v.y + b.y - 1) / b.y, (v.z + b.z - 1) / b.z};
}

void extract_block(const Volume& volume, Dims3 b, std::uint32_t i, std::uint32_t j, std::uint32_t k,
                   float fill, std::span<float> out) {
  const Dims3 d = volume.dims;
  const std::size_t x0 = std::size_t{i} * b.x, y0 = std::size_t{j} * b.y, z0 = std::size_t{k} * b.z;
  const std::size_t nx = x0 < d.x ? std::min<std::size_t>(b.x, d.x - x0) : 0;
  std::size_t o = 0;
  for (std::size_t lz = 0; lz < b.z; ++lz) {
    for (std::size_t ly = 0; ly < b.y; ++ly, o += b.x) {
      const std::size_t y = y0 + ly, z = z0 + lz;
      if (y >= d.y || z >= d.z) {
        std::fill_n(out.begin() + o, b.x, fill);
        continue;
      }
      if (nx > 0) std::copy_n(volume.data.data() + volume.index(x0, y, z), nx, out.begin() + o);
      std::fill(out.begin() + o + nx, out.begin() + o + b.x, fill);
    }
  }
}

void place_block(Volume& volume, Dims3 b, std::uint32_t i, std::uint32_t j, std::uint32_t k,
                 std::span<const float> block) {
  const Dims3 d = volume.dims;
  const std::size_t x0 = std::size_t{i} * b.x, y0 = std::size_t{j} * b.y, z0 = std::size_t{k} * b.z;
  if (x0 >= d.x) return;
  const std::size_t nx = std::min<std::size_t>(b.x, d.x - x0);
  for (std::size_t lz = 0; lz < b.z && z0 + lz < d.z; ++lz) {
    for (std::size_t ly = 0; ly < b.y && y0 + ly < d.y; ++ly) {
      std::copy_n(block.begin() + (lz * b.y + ly) * b.x, nx,
                  volume.data.begin() + volume.index(x0, y0 + ly, z0 + lz));
    }
  }
}

std::vector<PartitionedBlock> partition_volume(const Volume& volume, const BlockSpec& spec) {
  const GridDims g = grid_dims(volume.dims, spec.block_dims);
  std::vector<PartitionedBlock> out;
  out.reserve(g.volume());
  for (std::uint32_t k = 0; k < g.z; ++k)
    for (std::uint32_t j = 0; j < g.y; ++j)
      for (std::uint32_t i = 0; i < g.x; ++i) {
        PartitionedBlock pb{i, j, k, std::vector<float>(spec.elements())};
        extract_block(volume, spec.block_dims, i, j, k, spec.fill_value, pb.data);
        out.push_back(std::move(pb));
      }
  return out;
}

std::vector<std::int64_t> round_vector(std::span<const float> values, std::int32_t decimals) {
  const double p = pow10_abs(decimals);
  constexpr double limit = 0x1.0p62;
  std::vector<std::int64_t> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (!std::isfinite(v)) fail(Errc::InvalidArgument, "cannot round a non-finite value");
    // Division keeps negative decimal places correctly rounded (17 / 10 == 1.7).
    const double scaled = decimals >= 0 ? v * p : v / p;
    if (!(std::fabs(scaled) < limit)) {
      fail(Errc::Overflow, "value " + std::to_string(v) + " overflows at " + std::to_string(decimals) +
                               " decimal places");
    }
    out[i] = static_cast<std::int64_t>(std::nearbyint(scaled));  // default mode: ties to even
  }
  return out;
}

float dequantize_decimal(std::int64_t q, std::int32_t decimals) noexcept {
  const double p = pow10_abs(decimals);
  return static_cast<float>(decimals >= 0 ? static_cast<double>(q) / p : static_cast<double>(q) * p);
}

BlockDigest hash_block(std::span<const std::int64_t> rounded, std::int32_t decimals) {
  std::vector<std::byte> buf(4 + 8 * rounded.size());
  bytes::store_le(buf.data(), decimals);
  for (std::size_t i = 0; i < rounded.size(); ++i) bytes::store_le(buf.data() + 4 + 8 * i, rounded[i]);
  BlockDigest digest{};
  unsigned int len = 0;
  if (EVP_Digest(buf.data(), buf.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != digest.size()) {
    fail(Errc::Io, "SHA-256 computation failed");
  }
  return digest;
}

}  // namespace nea
