#pragma once

// NEAC codebook container, version 1. All integers little-endian, scalars
// IEEE-754 float32.
//
//   [header 160 B][grids][block index][reduction metadata][block payloads]
//
// Header:
//    0 "NEAC"            4 u32 version
//    8 u32 runs         12 u32 timesteps
//   16 u32 X, Y, Z      28 u32 block x, y, z
//   40 i32 decimals     44 f32 fill value
//   48 u32 gi, gj, gk   60 u32 reduction kind (0 none, 1 pca, 2 wavelet)
//   64 u32 pca m        68 f32 wavelet quality
//   72 u32 flags (bit 0: PCA rank deficient)
//   76 u32 B_rem        80 u64 B_tot
//   88 f32 value peak   92 u32 reserved (0)
//   96 u64 offset, u64 size for: grids, index, metadata, payloads
//
// Grids: R*T grids in (r, t) scan order (t fastest), each gi*gj*gk u32 IDs
// with i fastest and k slowest.
// Index: B_rem x (u64 offset relative to the payload section, u64 length).
// Metadata: none -> empty; pca -> u32 n, u32 m, n f32 mean, m*n f32 basis;
// wavelet -> f32 quality, u32 levels per axis (x, y, z).

#include <array>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "nea/blocks.hpp"
#include "nea/dedup.hpp"
#include "nea/ensemble.hpp"
#include "nea/kernels.hpp"
#include "nea/reduction.hpp"

namespace nea {

inline constexpr std::array<char, 4> kCodebookMagic{'N', 'E', 'A', 'C'};
inline constexpr std::uint32_t kCodebookVersion = 1;
inline constexpr std::size_t kCodebookHeaderSize = 160;
inline constexpr std::size_t kIndexEntrySize = 16;

struct Section {
  std::uint64_t offset = 0;
  std::uint64_t size = 0;
  std::uint64_t end() const noexcept { return offset + size; }
};

struct CodebookHeader {
  std::uint32_t version = kCodebookVersion;
  EnsembleShape shape;
  BlockSpec spec;
  GridDims grid;
  ReductionConfig reduction;
  bool pca_rank_deficient = false;
  std::uint32_t b_rem = 0;
  std::uint64_t b_tot = 0;
  Section grids, index, metadata, payloads;

  std::size_t cells_per_grid() const noexcept { return grid.volume(); }
};

struct CodebookSummary {
  std::uint64_t file_bytes = 0;
  std::uint64_t header_bytes = 0;
  std::uint64_t grid_bytes = 0;  // S_g
  std::uint64_t index_bytes = 0;
  std::uint64_t metadata_bytes = 0;
  std::uint64_t payload_bytes = 0;
  std::uint32_t b_rem = 0;
  std::uint64_t b_tot = 0;

  std::uint64_t block_table_bytes() const noexcept { return index_bytes + metadata_bytes + payload_bytes; }
};

/// Grid section size for an ensemble: R*T*gi*gj*gk*4 bytes.
std::uint64_t grid_section_bytes(const EnsembleShape& shape, Dims3 block_dims);

/// Writes the container for a whole-ensemble dedup result. The file appears
/// atomically: output goes to "<path>.partial" and is renamed on success,
/// removed on failure. `cancel`, when set, is polled between block batches.
CodebookSummary write_codebook(const DedupResult& dedup, const ReductionConfig& reduction,
                               const std::filesystem::path& path, kernels::Exec exec = kernels::Exec::Parallel,
                               const std::atomic<bool>* cancel = nullptr);

/// Builds the block codec the writer would use (fits PCA for pca).
std::unique_ptr<BlockCodec> make_codec(const DedupResult& dedup, const ReductionConfig& reduction);

/// Byte and request counters for one caller; pass one to instrument reads.
struct ReadStats {
  std::uint64_t bytes = 0;
  std::uint64_t blocks = 0;
  std::uint64_t grids = 0;
};

struct IndexEntry {
  std::uint64_t offset = 0;
  std::uint64_t length = 0;
};

/// Read-only random access to a codebook. Grid and block reads are
/// independent positioned reads on a shared descriptor, so concurrent use
/// from several threads is safe.
class CodebookReader {
 public:
  static CodebookReader open(const std::filesystem::path& path);

  CodebookReader(CodebookReader&&) noexcept;
  CodebookReader& operator=(CodebookReader&&) noexcept;
  ~CodebookReader();

  const CodebookHeader& header() const noexcept;
  const BlockCodec& codec() const noexcept;
  std::uint64_t file_bytes() const noexcept;
  CodebookSummary summary() const noexcept;
  IndexEntry index_entry(std::uint32_t id) const;

  std::vector<std::uint32_t> read_grid(EnsembleCoordinate coord, ReadStats* stats = nullptr) const;
  std::vector<std::byte> read_payload(std::uint32_t id, ReadStats* stats = nullptr) const;
  std::vector<float> read_block(std::uint32_t id, ReadStats* stats = nullptr) const;

 private:
  struct Impl;
  explicit CodebookReader(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

/// Parses just the fixed header from raw bytes (validation included).
CodebookHeader parse_codebook_header(std::span<const std::byte> bytes, std::uint64_t file_bytes);

}  // namespace nea
