#pragma once

#include <functional>
#include <span>
#include <vector>

#include "nea/blocks.hpp"
#include "nea/ensemble.hpp"
#include "nea/kernels.hpp"

namespace nea {

/// Output of the deduplication stage: one grid of canonical IDs per volume
/// plus the minimum representative set.
struct DedupResult {
  EnsembleShape shape;
  BlockSpec spec;
  GridDims grid;
  /// Volumes covered, in the order the grids are stored.
  std::vector<EnsembleCoordinate> coords;
  /// grids[v][grid_cell(i, j, k)] is the canonical ID of block (i, j, k) of coords[v].
  std::vector<std::vector<std::uint32_t>> grids;
  /// B_rem blocks of spec.elements() scalars each. Stored values are the
  /// decimal-rounded block, so every group member is within 0.5*10^-d.
  std::vector<float> representatives;
  /// Lexicographically smallest member of each group.
  std::vector<BlockCoordinate> representative_coords;
  std::uint64_t b_tot = 0;

  std::size_t b_rem() const noexcept { return representative_coords.size(); }
  std::span<const float> representative(std::uint32_t id) const noexcept {
    return {representatives.data() + std::size_t{id} * spec.elements(), spec.elements()};
  }
};

/// (volumes processed, B_rem so far)
using DedupProgress = std::function<void(std::size_t, std::size_t)>;
using VolumeSource = std::function<Volume(EnsembleCoordinate)>;

/// Deduplicates the listed volumes. Canonical IDs are assigned densely in
/// order of first appearance over lexicographic (r, t, i, j, k); the result
/// is identical for every `exec`.
DedupResult deduplicate(const EnsembleShape& shape, std::span<const EnsembleCoordinate> coords,
                        const VolumeSource& source, const BlockSpec& spec,
                        const DedupProgress& progress = {}, kernels::Exec exec = kernels::Exec::Parallel);

/// Whole-ensemble deduplication reading volumes through the manifest.
DedupResult deduplicate(const EnsembleManifest& manifest, const BlockSpec& spec,
                        const DedupProgress& progress = {}, kernels::Exec exec = kernels::Exec::Parallel);

/// Rebuilds volume `v` of the result from its representatives.
Volume reassemble(const DedupResult& result, std::size_t v);

}  // namespace nea
