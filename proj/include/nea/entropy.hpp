#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace nea {

/// Run-length + canonical Huffman coder for sparse 16-bit coefficient blocks.
///
/// Each nonzero value becomes one symbol pairing the preceding zero run
/// (capped at 255; longer runs emit a value-less 255-run symbol) with the
/// value's magnitude class, followed by raw extra bits for the run and value.
/// A terminal end-of-block symbol implies the remaining values are zero.
///
/// Stream layout: u8 symbol count U, then U x (8-bit symbol, 4-bit code
/// length) for the canonical code table, then the MSB-first coded bits,
/// zero-padded to a byte boundary.
std::vector<std::byte> rle_huffman_encode(std::span<const std::int16_t> values);

/// Inverse of rle_huffman_encode. Throws Error(DecodeFailure) on a bad
/// table, invalid code, truncated stream or a value count other than `n`.
std::vector<std::int16_t> rle_huffman_decode(std::span<const std::byte> stream, std::size_t n);

}  // namespace nea
