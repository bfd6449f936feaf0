#include "nea/dedup.hpp"

#include <limits>
#include <unordered_map>

#include "nea/error.hpp"

namespace nea {

DedupResult deduplicate(const EnsembleShape& shape, std::span<const EnsembleCoordinate> coords,
                        const VolumeSource& source, const BlockSpec& spec, const DedupProgress& progress,
                        kernels::Exec exec) {
  shape.validate();
  spec.validate();
  DedupResult result;
  result.shape = shape;
  result.spec = spec;
  result.grid = grid_dims(shape.volume_dims, spec.block_dims);
  result.coords.assign(coords.begin(), coords.end());
  const std::size_t cells = result.grid.volume();
  const std::size_t n = spec.elements();
  result.b_tot = std::uint64_t{cells} * coords.size();
  result.grids.reserve(coords.size());

  const GridDims g = result.grid;
  std::unordered_map<BlockDigest, std::uint32_t, DigestHash> ids;
  for (std::size_t v = 0; v < coords.size(); ++v) {
    const auto c = coords[v];
    if (v > 0 && !(coords[v - 1] < c)) {
      fail(Errc::InvalidArgument, "deduplicate expects coordinates in strictly increasing (r, t) order");
    }
    Volume volume;
    try {
      volume = source(c);
    } catch (const Error& e) {
      throw Error(e.code(), "volume (" + std::to_string(c.r) + "," + std::to_string(c.t) + "): " + e.what());
    }
    if (volume.dims != shape.volume_dims) {
      fail(Errc::DimensionMismatch, "volume (" + std::to_string(c.r) + "," + std::to_string(c.t) +
                                        ") has dims " + to_string(volume.dims));
    }
    const auto hashed = kernels::hash_volume_blocks(volume, spec, exec);

    // The merge runs in lexicographic (i, j, k) order so IDs never depend on exec.
    std::vector<std::uint32_t> grid(cells);
    for (std::uint32_t i = 0; i < g.x; ++i)
      for (std::uint32_t j = 0; j < g.y; ++j)
        for (std::uint32_t k = 0; k < g.z; ++k) {
          const std::size_t cell = grid_cell(g, i, j, k);
          auto [it, inserted] = ids.try_emplace(hashed.digests[cell], static_cast<std::uint32_t>(ids.size()));
          if (inserted) {
            if (ids.size() > std::numeric_limits<std::uint32_t>::max()) {
              fail(Errc::Overflow, "more than 2^32-1 unique blocks");
            }
            const float* src = hashed.rounded.data() + cell * n;
            result.representatives.insert(result.representatives.end(), src, src + n);
            result.representative_coords.push_back({c.r, c.t, i, j, k});
          }
          grid[cell] = it->second;
        }
    result.grids.push_back(std::move(grid));
    if (progress) progress(v + 1, result.b_rem());
  }
  return result;
}

DedupResult deduplicate(const EnsembleManifest& manifest, const BlockSpec& spec, const DedupProgress& progress,
                        kernels::Exec exec) {
  const auto coords = manifest.coordinates();
  return deduplicate(
      manifest.shape, coords, [&](EnsembleCoordinate c) { return read_volume(manifest, c); }, spec, progress, exec);
}

Volume reassemble(const DedupResult& result, std::size_t v) {
  Volume out(result.shape.volume_dims);
  const auto& grid = result.grids.at(v);
  std::vector<const float*> cells(grid.size());
  for (std::size_t c = 0; c < grid.size(); ++c) cells[c] = result.representative(grid[c]).data();
  kernels::assemble_volume(cells, result.grid, result.spec.block_dims, out, kernels::Exec::Serial);
  return out;
}

}  // namespace nea
