#include "doctest.h"
#include "nea/kernels.hpp"
#include "nea/reduction.hpp"
#include "support.hpp"

using namespace nea;
using kernels::Exec;

TEST_CASE("hash kernel: serial and parallel agree") {
  test::Gen gen(11);
  for (int round = 0; round < 6; ++round) {
    SyntheticParams p;
    p.shape.volume_dims = {static_cast<std::uint32_t>(gen.between(1, 40)), static_cast<std::uint32_t>(gen.between(1, 30)),
                           static_cast<std::uint32_t>(gen.between(1, 20))};
    p.seed = gen.below(1000);
    const auto v = synthesize_volume(p, {0, 0});
    BlockSpec spec;
    spec.block_dims = {static_cast<std::uint32_t>(gen.between(1, 8)), static_cast<std::uint32_t>(gen.between(1, 8)),
                       static_cast<std::uint32_t>(gen.between(1, 8))};
    spec.decimals = static_cast<std::int32_t>(gen.between(-1, 3));
    spec.fill_value = -1.5f;
    const auto a = kernels::hash_volume_blocks(v, spec, Exec::Serial);
    const auto b = kernels::hash_volume_blocks(v, spec, Exec::Parallel);
    CHECK(a.digests == b.digests);
    CHECK(a.rounded == b.rounded);
    CHECK(a.digests.size() == grid_dims(v.dims, spec.block_dims).volume());
  }
}

TEST_CASE("codec kernels: serial and parallel agree") {
  test::Gen gen(12);
  const Dims3 b{4, 4, 4};
  const auto blocks = gen.floats(300 * 64, -5, 5);
  for (const float q : {100.0f, 75.0f}) {
    const auto codec = make_wavelet_codec(b, q);
    const auto ps = kernels::encode_blocks(*codec, blocks, Exec::Serial);
    const auto pp = kernels::encode_blocks(*codec, blocks, Exec::Parallel);
    CHECK(ps == pp);
    CHECK(kernels::decode_payloads(*codec, ps, Exec::Serial) == kernels::decode_payloads(*codec, pp, Exec::Parallel));
  }
}

TEST_CASE("assembly and agreement kernels: serial and parallel agree") {
  test::Gen gen(13);
  const Dims3 dims{13, 9, 7}, b{4, 4, 4};
  const auto g = grid_dims(dims, b);
  const auto blocks = gen.floats(g.volume() * 64, 0, 1);
  std::vector<const float*> cells(g.volume());
  for (std::size_t c = 0; c < cells.size(); ++c) cells[c] = blocks.data() + 64 * gen.below(g.volume());
  Volume a(dims), p(dims);
  kernels::assemble_volume(cells, g, b, a, Exec::Serial);
  kernels::assemble_volume(cells, g, b, p, Exec::Parallel);
  CHECK(a.data == p.data);
  // Spot-check against direct indexing.
  for (int s = 0; s < 200; ++s) {
    const auto x = gen.below(dims.x), y = gen.below(dims.y), z = gen.below(dims.z);
    const auto* blk = cells[grid_cell(g, x / 4, y / 4, z / 4)];
    CHECK(a.at(x, y, z) == blk[(x % 4) + 4 * ((y % 4) + 4 * (z % 4))]);
  }

  std::vector<std::vector<std::uint32_t>> grids(7, std::vector<std::uint32_t>(500));
  for (auto& gr : grids)
    for (auto& id : gr) id = static_cast<std::uint32_t>(gen.below(3));
  for (std::size_t ref = 0; ref < grids.size(); ++ref) {
    const auto s = kernels::agreement_counts(grids, ref, Exec::Serial);
    CHECK(s == kernels::agreement_counts(grids, ref, Exec::Parallel));
    CHECK(s == test::oracle_agreement(grids, ref));
  }
}

TEST_CASE("dedup result is identical for both execution modes") {
  test::TempDir dir;
  const auto m = test::make_ensemble(dir / "e", 3, 2, {17, 12, 9}, 0.6, 21);
  BlockSpec spec;
  spec.decimals = 1;
  const auto a = deduplicate(m, spec, {}, Exec::Serial);
  const auto b = deduplicate(m, spec, {}, Exec::Parallel);
  CHECK(a.grids == b.grids);
  CHECK(a.representatives == b.representatives);
}
