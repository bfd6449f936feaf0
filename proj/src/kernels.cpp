#include "nea/kernels.hpp"

#include <exception>
#include <optional>

#include "nea/error.hpp"
#include "nea/reduction.hpp"

namespace nea::kernels {

namespace {

// Exceptions must not escape an OpenMP region; the first one is kept and
// rethrown after the loop.
class FirstError {
 public:
  template <typename F>
  void run(F&& f) noexcept {
    try {
      f();
    } catch (...) {
#pragma omp critical(nea_kernel_error)
      if (!error_) error_ = std::current_exception();
    }
  }
  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::exception_ptr error_;
};

void hash_one(const Volume& volume, const BlockSpec& spec, const GridDims& g, std::size_t cell,
              std::span<float> scratch, HashedBlocks& out) {
  const std::size_t n = spec.elements();
  const auto i = static_cast<std::uint32_t>(cell % g.x);
  const auto j = static_cast<std::uint32_t>((cell / g.x) % g.y);
  const auto k = static_cast<std::uint32_t>(cell / (std::size_t{g.x} * g.y));
  extract_block(volume, spec.block_dims, i, j, k, spec.fill_value, scratch);
  const auto q = round_vector(scratch, spec.decimals);
  out.digests[cell] = hash_block(q, spec.decimals);
  float* dst = out.rounded.data() + cell * n;
  for (std::size_t e = 0; e < n; ++e) dst[e] = dequantize_decimal(q[e], spec.decimals);
}

}  // namespace

HashedBlocks hash_volume_blocks(const Volume& volume, const BlockSpec& spec, Exec exec) {
  const GridDims g = grid_dims(volume.dims, spec.block_dims);
  const std::size_t cells = g.volume();
  const std::size_t n = spec.elements();
  HashedBlocks out;
  out.digests.resize(cells);
  out.rounded.resize(cells * n);

  if (exec == Exec::Serial) {
    std::vector<float> scratch(n);
    for (std::size_t c = 0; c < cells; ++c) hash_one(volume, spec, g, c, scratch, out);
    return out;
  }
  FirstError err;
#pragma omp parallel
  {
    std::vector<float> scratch(n);
#pragma omp for schedule(static)
    for (std::int64_t c = 0; c < static_cast<std::int64_t>(cells); ++c) {
      err.run([&] { hash_one(volume, spec, g, static_cast<std::size_t>(c), scratch, out); });
    }
  }
  err.rethrow();
  return out;
}

std::vector<std::vector<std::byte>> encode_blocks(const BlockCodec& codec, std::span<const float> blocks,
                                                  Exec exec) {
  const std::size_t n = codec.elements();
  const std::size_t count = n ? blocks.size() / n : 0;
  std::vector<std::vector<std::byte>> out(count);
  if (exec == Exec::Serial) {
    for (std::size_t b = 0; b < count; ++b) out[b] = codec.encode(blocks.subspan(b * n, n));
    return out;
  }
  FirstError err;
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t b = 0; b < static_cast<std::int64_t>(count); ++b) {
    err.run([&] {
      const auto i = static_cast<std::size_t>(b);
      out[i] = codec.encode(blocks.subspan(i * n, n));
    });
  }
  err.rethrow();
  return out;
}

std::vector<std::vector<float>> decode_payloads(const BlockCodec& codec,
                                                std::span<const std::vector<std::byte>> payloads, Exec exec) {
  const std::size_t n = codec.elements();
  std::vector<std::vector<float>> out(payloads.size(), std::vector<float>(n));
  if (exec == Exec::Serial) {
    for (std::size_t b = 0; b < payloads.size(); ++b) codec.decode(payloads[b], out[b]);
    return out;
  }
  FirstError err;
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t b = 0; b < static_cast<std::int64_t>(payloads.size()); ++b) {
    err.run([&] {
      const auto i = static_cast<std::size_t>(b);
      codec.decode(payloads[i], out[i]);
    });
  }
  err.rethrow();
  return out;
}

void assemble_volume(std::span<const float* const> cell_blocks, GridDims g, Dims3 block_dims, Volume& out,
                     Exec exec) {
  if (cell_blocks.size() != g.volume()) fail(Errc::DimensionMismatch, "assemble_volume: grid/cell count mismatch");
  const std::size_t n = block_dims.volume();
  auto place = [&](std::size_t c) {
    const auto i = static_cast<std::uint32_t>(c % g.x);
    const auto j = static_cast<std::uint32_t>((c / g.x) % g.y);
    const auto k = static_cast<std::uint32_t>(c / (std::size_t{g.x} * g.y));
    place_block(out, block_dims, i, j, k, {cell_blocks[c], n});
  };
  if (exec == Exec::Serial) {
    for (std::size_t c = 0; c < cell_blocks.size(); ++c) place(c);
    return;
  }
  // Blocks cover disjoint voxels, so cells are independent.
#pragma omp parallel for schedule(static)
  for (std::int64_t c = 0; c < static_cast<std::int64_t>(cell_blocks.size()); ++c) {
    place(static_cast<std::size_t>(c));
  }
}

std::vector<std::uint32_t> agreement_counts(std::span<const std::vector<std::uint32_t>> grids,
                                            std::size_t reference, Exec exec) {
  if (reference >= grids.size()) fail(Errc::OutOfRange, "agreement reference outside the grid list");
  const auto& ref = grids[reference];
  for (const auto& g : grids) {
    if (g.size() != ref.size()) fail(Errc::DimensionMismatch, "agreement grids differ in size");
  }
  std::vector<std::uint32_t> counts(ref.size(), 0);
  if (exec == Exec::Serial) {
    for (const auto& g : grids)
      for (std::size_t c = 0; c < ref.size(); ++c) counts[c] += g[c] == ref[c];
    return counts;
  }
#pragma omp parallel for schedule(static)
  for (std::int64_t ci = 0; ci < static_cast<std::int64_t>(ref.size()); ++ci) {
    const auto c = static_cast<std::size_t>(ci);
    std::uint32_t total = 0;
    for (const auto& g : grids) total += g[c] == ref[c];
    counts[c] = total;
  }
  return counts;
}

}  // namespace nea::kernels
