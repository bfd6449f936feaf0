#pragma once

// Data-parallel inner loops of the pipeline. Every kernel has an OpenMP path
// and a serial reference path selected by `Exec`; both must produce
// bit-identical output, which the kernel tests check.

#include <cstdint>
#include <span>
#include <vector>

#include "nea/blocks.hpp"
#include "nea/ensemble.hpp"

namespace nea {
class BlockCodec;
}

namespace nea::kernels {

enum class Exec { Serial, Parallel };

struct HashedBlocks {
  std::vector<BlockDigest> digests;  // grid storage order
  std::vector<float> rounded;        // per block: the decimal-rounded scalars
};

/// Partition, round and hash every block of one volume.
HashedBlocks hash_volume_blocks(const Volume& volume, const BlockSpec& spec, Exec exec);

/// Encode `blocks` (count * codec.elements() scalars) into one payload each.
std::vector<std::vector<std::byte>> encode_blocks(const BlockCodec& codec, std::span<const float> blocks,
                                                  Exec exec);

/// Decode payloads into blocks of codec.elements() scalars.
std::vector<std::vector<float>> decode_payloads(const BlockCodec& codec,
                                                std::span<const std::vector<std::byte>> payloads, Exec exec);

/// Place one block per grid cell into `out` (already sized), cropping padding.
void assemble_volume(std::span<const float* const> cell_blocks, GridDims grid, Dims3 block_dims, Volume& out,
                     Exec exec);

/// Per cell, the number of grids whose ID equals grids[reference]'s ID.
std::vector<std::uint32_t> agreement_counts(std::span<const std::vector<std::uint32_t>> grids,
                                            std::size_t reference, Exec exec);

}  // namespace nea::kernels
