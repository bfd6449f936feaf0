#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "nea/ensemble.hpp"

namespace nea {

/// Block partitioning and matching parameters.
struct BlockSpec {
  Dims3 block_dims{4, 4, 4};
  /// Decimal place applied before hashing; negative values round to tens, hundreds, ...
  std::int32_t decimals = 0;
  float fill_value = 0.0f;

  std::size_t elements() const noexcept { return block_dims.volume(); }
  void validate() const;
};

inline constexpr std::int32_t kMinDecimals = -30;
inline constexpr std::int32_t kMaxDecimals = 18;

/// Block counts per axis (gi, gj, gk).
using GridDims = Dims3;

GridDims grid_dims(Dims3 volume_dims, Dims3 block_dims);

struct BlockCoordinate {
  std::uint32_t r = 0, t = 0, i = 0, j = 0, k = 0;
  friend auto operator<=>(const BlockCoordinate&, const BlockCoordinate&) = default;
};

/// Grid cells are stored i fastest, k slowest.
inline std::size_t grid_cell(const GridDims& g, std::size_t i, std::size_t j, std::size_t k) noexcept {
  return i + g.x * (j + std::size_t{g.y} * k);
}

/// Copies block (i, j, k) out of `volume` (x-fastest), padding with `fill`.
void extract_block(const Volume& volume, Dims3 block_dims, std::uint32_t i, std::uint32_t j,
                   std::uint32_t k, float fill, std::span<float> out);

/// Writes block (i, j, k) into `volume`, dropping voxels that fall in padding.
void place_block(Volume& volume, Dims3 block_dims, std::uint32_t i, std::uint32_t j, std::uint32_t k,
                 std::span<const float> block);

struct PartitionedBlock {
  std::uint32_t i = 0, j = 0, k = 0;
  std::vector<float> data;
};

/// All gi*gj*gk blocks of `volume` in grid storage order.
std::vector<PartitionedBlock> partition_volume(const Volume& volume, const BlockSpec& spec);

/// round_half_to_even(value * 10^d) for every element.
std::vector<std::int64_t> round_vector(std::span<const float> values, std::int32_t decimals);

/// The scalar each rounded integer stands for: q * 10^-d.
float dequantize_decimal(std::int64_t q, std::int32_t decimals) noexcept;

using BlockDigest = std::array<std::uint8_t, 32>;

/// SHA-256 over [int32 d][int64 q0][int64 q1]..., all little-endian.
BlockDigest hash_block(std::span<const std::int64_t> rounded, std::int32_t decimals);

struct DigestHash {
  std::size_t operator()(const BlockDigest& d) const noexcept {
    std::size_t h;
    static_assert(sizeof(h) <= sizeof(BlockDigest));
    std::copy_n(d.begin(), sizeof(h), reinterpret_cast<std::uint8_t*>(&h));
    return h;
  }
};

}  // namespace nea
