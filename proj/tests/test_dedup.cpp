#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "nea/error.hpp"
#include "support.hpp"

using namespace nea;
using test::TempDir;

namespace {

DedupResult dedup_volumes(const std::vector<Volume>& vols, std::uint32_t runs, std::uint32_t steps,
                          const BlockSpec& spec, kernels::Exec exec = kernels::Exec::Parallel) {
  EnsembleShape shape;
  shape.runs = runs;
  shape.timesteps = steps;
  shape.volume_dims = vols.at(0).dims;
  std::vector<EnsembleCoordinate> coords;
  for (std::uint32_t r = 0; r < runs; ++r)
    for (std::uint32_t t = 0; t < steps; ++t) coords.push_back({r, t});
  return deduplicate(
      shape, coords, [&](EnsembleCoordinate c) { return vols[c.r * steps + c.t]; }, spec, {}, exec);
}

}  // namespace

TEST_CASE("identical volumes share every block") {
  Volume v(Dims3{10, 9, 7});
  test::Gen g(1);
  for (auto& f : v.data) f = static_cast<float>(g.uniform(0, 10));
  BlockSpec spec;
  spec.decimals = 3;
  const auto r = dedup_volumes({v, v}, 2, 1, spec);
  CHECK(r.b_tot == 2 * 18);
  CHECK(r.grids[0] == r.grids[1]);
  std::size_t distinct = 0;
  test::oracle_dedup({v}, r.grid, spec, &distinct);
  CHECK(r.b_rem() == distinct);
}

TEST_CASE("constant-zero ensemble collapses to one block") {
  const Volume z(Dims3{9, 8, 8});
  BlockSpec spec;
  const auto r = dedup_volumes({z, z, z, z}, 2, 2, spec);
  CHECK(r.b_rem() == 1);
  for (const auto& grid : r.grids)
    for (const auto id : grid) CHECK(id == 0);
}

TEST_CASE("dedup grouping equals the brute-force oracle") {
  TempDir dir;
  const auto m = test::make_ensemble(dir.path(), 2, 2, {16, 16, 16}, 0.5, 21);
  const auto vols = test::load_all(m);
  BlockSpec spec;
  const auto r = deduplicate(m, spec);
  std::size_t groups = 0;
  CHECK(r.grids == test::oracle_dedup(vols, r.grid, spec, &groups));
  CHECK(r.b_rem() == groups);
  CHECK(r.b_rem() < r.b_tot);
}

TEST_CASE("representative is the lexicographically smallest member") {
  TempDir dir;
  const auto m = test::make_ensemble(dir.path(), 3, 2, {12, 12, 8}, 0.6, 4);
  BlockSpec spec;
  const auto r = deduplicate(m, spec);
  std::vector<BlockCoordinate> smallest(r.b_rem(), BlockCoordinate{~0U, ~0U, ~0U, ~0U, ~0U});
  std::vector<std::uint32_t> first_seen;
  for (std::size_t v = 0; v < r.coords.size(); ++v)
    for (std::uint32_t i = 0; i < r.grid.x; ++i)
      for (std::uint32_t j = 0; j < r.grid.y; ++j)
        for (std::uint32_t k = 0; k < r.grid.z; ++k) {
          const auto id = r.grids[v][grid_cell(r.grid, i, j, k)];
          const BlockCoordinate c{r.coords[v].r, r.coords[v].t, i, j, k};
          if (c < smallest[id]) smallest[id] = c;
          if (std::find(first_seen.begin(), first_seen.end(), id) == first_seen.end()) first_seen.push_back(id);
        }
  for (std::size_t id = 0; id < r.b_rem(); ++id) {
    CHECK(r.representative_coords[id] == smallest[id]);
    CHECK(first_seen[id] == id);
  }
}

TEST_CASE("fidelity: reassembled volumes stay within half a decimal step") {
  TempDir dir;
  const auto m = test::make_ensemble(dir.path(), 2, 2, {13, 11, 9}, 0.3, 8);
  for (const std::int32_t d : {-1, 0, 1, 2}) {
    BlockSpec spec;
    spec.decimals = d;
    const auto r = deduplicate(m, spec);
    const double bound = 0.5 * std::pow(10.0, -d);
    for (std::size_t v = 0; v < r.coords.size(); ++v) {
      const auto orig = read_volume(m, r.coords[v]);
      const auto back = reassemble(r, v);
      double worst = 0.0, slack = 0.0;
      for (std::size_t i = 0; i < orig.data.size(); ++i) {
        worst = std::max(worst, std::abs(double(orig.data[i]) - double(back.data[i])));
        slack = std::max(slack, double(std::nextafter(std::abs(back.data[i]), INFINITY) - std::abs(back.data[i])));
      }
      CHECK(worst <= bound + slack);
    }
  }
}

TEST_CASE("coarser rounding never increases B_rem") {
  TempDir dir;
  const auto m = test::make_ensemble(dir.path(), 2, 3, {16, 16, 8}, 0.4, 12, 0.05);
  std::size_t prev = SIZE_MAX;
  for (const std::int32_t d : {3, 2, 1, 0, -1}) {
    BlockSpec spec;
    spec.decimals = d;
    const auto r = deduplicate(m, spec);
    CHECK(r.b_rem() <= prev);
    prev = r.b_rem();
  }
}

TEST_CASE("dedup is deterministic and independent of exec") {
  TempDir dir;
  const auto m = test::make_ensemble(dir.path(), 2, 2, {16, 8, 8}, 0.5, 3);
  BlockSpec spec;
  spec.decimals = 1;
  const auto a = deduplicate(m, spec, {}, kernels::Exec::Serial);
  const auto b = deduplicate(m, spec, {}, kernels::Exec::Parallel);
  const auto c = deduplicate(m, spec, {}, kernels::Exec::Parallel);
  CHECK(a.grids == b.grids);
  CHECK(a.representatives == b.representatives);
  CHECK(b.grids == c.grids);
  CHECK(b.representatives == c.representatives);
}

TEST_CASE("B_rem equals B_tot iff every block is distinct") {
  Volume v(Dims3{8, 8, 8});
  for (std::size_t i = 0; i < v.data.size(); ++i) v.data[i] = static_cast<float>(i);
  BlockSpec spec;
  auto r = dedup_volumes({v}, 1, 1, spec);
  CHECK(r.b_rem() == r.b_tot);
  Volume w(Dims3{8, 8, 8}, 1.0f);
  r = dedup_volumes({w}, 1, 1, spec);
  CHECK(r.b_rem() < r.b_tot);
}

TEST_CASE("progress sink and error propagation") {
  TempDir dir;
  const auto m = test::make_ensemble(dir.path(), 2, 2, {8, 8, 8}, 0.5, 1);
  std::vector<std::pair<std::size_t, std::size_t>> seen;
  BlockSpec spec;
  const auto r = deduplicate(m, spec, [&](std::size_t v, std::size_t b) { seen.emplace_back(v, b); });
  REQUIRE(seen.size() == 4);
  CHECK(seen.back() == std::make_pair(std::size_t{4}, r.b_rem()));
  for (std::size_t i = 1; i < seen.size(); ++i) CHECK(seen[i].second >= seen[i - 1].second);

  std::filesystem::resize_file(m.entry({1, 0}).path, 100);
  try {
    deduplicate(m, spec);
    FAIL("short volume accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ShortRead);
    CHECK(std::string(e.what()).find("(1,0)") != std::string::npos);
  }
}
