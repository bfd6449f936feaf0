#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "json.hpp"
#include "nea/error.hpp"
#include "nea/runtime.hpp"
#include "support.hpp"

using namespace nea;
using test::TempDir;

namespace {

std::set<std::uint32_t> as_set(const std::vector<std::uint32_t>& v) { return {v.begin(), v.end()}; }

struct Fixture {
  TempDir dir;
  EnsembleManifest manifest;
  DedupResult dedup;
  std::filesystem::path path;
  Fixture(std::uint32_t runs = 3, std::uint32_t steps = 3, double dup = 0.5, double perturbation = 1.0,
          Dims3 dims = {16, 16, 8}) {
    manifest = test::make_ensemble(dir / "e", runs, steps, dims, dup, 77, perturbation);
    path = dir / "cb";
    test::build_codebook(manifest, BlockSpec{}, {}, path, &dedup);
  }
  std::size_t index(EnsembleCoordinate c) const { return c.r * manifest.shape.timesteps + c.t; }
};

}  // namespace

TEST_CASE("working set diff examples") {
  const std::vector<std::uint32_t> cb{3, 1, 2, 2}, nb{4, 2, 3};
  const auto d = diff_working_set(cb, nb);
  CHECK(d.keep == std::vector<std::uint32_t>{2, 3});
  CHECK(d.load == std::vector<std::uint32_t>{4});
  CHECK(d.discard == std::vector<std::uint32_t>{1});

  const auto first = diff_working_set({}, nb);
  CHECK(first.keep.empty());
  CHECK(first.load == std::vector<std::uint32_t>{2, 3, 4});
  CHECK(first.discard.empty());

  const auto same = diff_working_set(nb, nb);
  CHECK(same.load.empty());
  CHECK(same.discard.empty());
  CHECK(same.keep.size() == 3);
}

TEST_CASE("diff_working_set is a set partition (property)") {
  test::Gen gen(5);
  for (int round = 0; round < 300; ++round) {
    std::vector<std::uint32_t> cb(gen.below(40)), nb(gen.below(40));
    const auto universe = gen.between(1, 60);
    for (auto& v : cb) v = static_cast<std::uint32_t>(gen.below(universe));
    for (auto& v : nb) v = static_cast<std::uint32_t>(gen.below(universe));
    const auto d = diff_working_set(cb, nb);
    const auto c = as_set(cb), n = as_set(nb);
    std::set<std::uint32_t> keep, load, discard;
    for (const auto id : n) (c.count(id) ? keep : load).insert(id);
    for (const auto id : c)
      if (!n.count(id)) discard.insert(id);
    CHECK(d.keep == std::vector<std::uint32_t>(keep.begin(), keep.end()));
    CHECK(d.load == std::vector<std::uint32_t>(load.begin(), load.end()));
    CHECK(d.discard == std::vector<std::uint32_t>(discard.begin(), discard.end()));
    CHECK(d.keep.size() + d.load.size() == n.size());
    CHECK(d.keep.size() + d.discard.size() == c.size());
  }
}

TEST_CASE("switching loads exactly the new blocks and reconstructs the volume") {
  Fixture f;
  const auto reader = CodebookReader::open(f.path);
  WorkingSet ws(reader, std::nullopt, kernels::Exec::Serial);
  CHECK(!ws.current());

  std::vector<SwitchTelemetry> log;
  ws.set_telemetry_sink([&](const SwitchTelemetry& t) { log.push_back(t); });

  const std::vector<EnsembleCoordinate> path{{0, 0}, {0, 1}, {0, 0}, {2, 2}, {1, 0}, {1, 0}};
  std::set<std::uint32_t> prev;
  for (const auto c : path) {
    const auto& grid = f.dedup.grids[f.index(c)];
    const auto nb = as_set(grid);
    std::size_t expect_load = 0;
    std::uint64_t expect_bytes = 4 * grid.size();
    for (const auto id : nb)
      if (!prev.count(id)) {
        ++expect_load;
        expect_bytes += reader.index_entry(id).length;
      }
    const auto res = ws.switch_to(c);
    CHECK(res.diff.load.size() == expect_load);
    CHECK(res.telemetry.blocks_read == expect_load);
    CHECK(res.telemetry.bytes_read == expect_bytes);
    CHECK(ws.resident_blocks() == nb.size());
    CHECK(as_set(ws.resident_ids()) == nb);
    CHECK(ws.resident_bytes() == nb.size() * ws.block_bytes());
    CHECK(res.volume.data == reassemble(f.dedup, f.index(c)).data);
    CHECK(*ws.current() == c);
    prev = nb;
  }
  CHECK(log.size() == path.size());
  CHECK(ws.counters().switches == path.size());
  CHECK(log.back().load == 0);
  CHECK(log.back().blocks_read == 0);

  const auto j = nlohmann::json::parse(log.front().to_json());
  CHECK(j.at("event") == "switch");
  CHECK(j.at("load").get<std::size_t>() == log.front().load);
}

TEST_CASE("identical volumes switch with zero block reads") {
  TempDir dir;
  const auto m = test::make_identical_ensemble(dir / "e", 2, 2, {16, 16, 8}, 5);
  test::build_codebook(m, BlockSpec{}, {}, dir / "cb");
  const auto reader = CodebookReader::open(dir / "cb");
  WorkingSet ws(reader);
  ws.switch_to({0, 0});
  for (const auto c : {EnsembleCoordinate{1, 0}, EnsembleCoordinate{0, 1}, EnsembleCoordinate{1, 1}}) {
    const auto res = ws.switch_to(c);
    CHECK(res.diff.load.empty());
    CHECK(res.diff.discard.empty());
    CHECK(res.telemetry.blocks_read == 0);
  }
}

TEST_CASE("budget too small is reported before state changes") {
  Fixture f;
  const auto reader = CodebookReader::open(f.path);
  const auto nb = distinct_ids(f.dedup.grids[0]).size();
  WorkingSet ws(reader, std::uint64_t{nb * 64 * 4});
  ws.switch_to({0, 0});
  // Find a volume needing more blocks than volume 0.
  for (std::size_t v = 1; v < f.dedup.grids.size(); ++v) {
    if (distinct_ids(f.dedup.grids[v]).size() <= nb) continue;
    const auto before = ws.resident_ids();
    try {
      ws.switch_to(f.dedup.coords[v]);
      FAIL("budget ignored");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::BudgetExceeded);
    }
    CHECK(ws.resident_ids() == before);
    CHECK(*ws.current() == EnsembleCoordinate{0, 0});
    break;
  }
  WorkingSet tiny(reader, std::uint64_t{16});
  CHECK_THROWS_AS(tiny.switch_to({0, 0}), Error);
  CHECK(!tiny.current());
  CHECK(tiny.resident_blocks() == 0);
}

TEST_CASE("out-of-range coordinates are rejected") {
  Fixture f;
  const auto reader = CodebookReader::open(f.path);
  WorkingSet ws(reader);
  CHECK_THROWS_AS(ws.switch_to({3, 0}), Error);
  CHECK_THROWS_AS(ws.switch_to({0, 3}), Error);
  CHECK_THROWS_AS(compute_agreement(reader, {5, 0}), Error);
}

TEST_CASE("agreement matches the oracle and reads grids only") {
  Fixture f(4, 2, 0.6);
  const auto reader = CodebookReader::open(f.path);
  for (std::uint32_t r = 0; r < 4; ++r)
    for (std::uint32_t t = 0; t < 2; ++t) {
      ReadStats stats;
      const auto a = compute_agreement(reader, {r, t}, kernels::Exec::Serial, &stats);
      std::vector<std::vector<std::uint32_t>> run_grids;
      for (std::uint32_t q = 0; q < 4; ++q) run_grids.push_back(f.dedup.grids[f.index({q, t})]);
      const auto oracle = test::oracle_agreement(run_grids, r);
      CHECK(a.counts == oracle);
      CHECK(a.runs == 4);
      for (std::size_t c = 0; c < oracle.size(); ++c) {
        CHECK(a.values[c] == doctest::Approx(oracle[c] / 4.0));
        CHECK(a.values[c] >= 0.25f);
      }
      CHECK(stats.blocks == 0);
      CHECK(stats.grids == 4);
      CHECK(stats.bytes == 4 * 4 * a.counts.size());
    }
}

TEST_CASE("all-identical runs agree everywhere") {
  Fixture f(3, 1, 1.0, 0.0);
  const auto reader = CodebookReader::open(f.path);
  const auto a = compute_agreement(reader, {1, 0});
  CHECK(a.min() == 1.0f);
  CHECK(a.mean() == 1.0);
}

TEST_CASE("agreement hand example") {
  const std::vector<std::vector<std::uint32_t>> g{{0, 1, 2, 3}, {0, 1, 5, 6}, {0, 7, 2, 8}};
  const auto a = agreement_from_grids(g, GridDims{2, 2, 1}, {0, 0});
  CHECK(a.counts == std::vector<std::uint32_t>{3, 2, 2, 1});
  CHECK(a.min() == doctest::Approx(1.0 / 3));
  CHECK(a.mean() == doctest::Approx(8.0 / 12));
  const auto b = agreement_from_grids(g, GridDims{2, 2, 1}, {2, 0});
  CHECK(b.counts == std::vector<std::uint32_t>{3, 1, 2, 1});
}

TEST_CASE("reconstruct_volume equals the dedup reassembly") {
  Fixture f(2, 2, 0.5, 1.0, {13, 11, 6});
  const auto reader = CodebookReader::open(f.path);
  for (std::size_t v = 0; v < f.dedup.coords.size(); ++v) {
    const auto vol = reconstruct_volume(reader, f.dedup.coords[v]);
    CHECK(vol.dims == Dims3{13, 11, 6});
    CHECK(vol.data == reassemble(f.dedup, v).data);
  }
}
