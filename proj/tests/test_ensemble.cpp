#include <fstream>

#include "doctest.h"
#include "nea/bytes.hpp"
#include "nea/error.hpp"
#include "support.hpp"

using namespace nea;
using nea::test::TempDir;

namespace {

std::string manifest_text(int runs, int timesteps, const std::vector<std::pair<int, int>>& coords) {
  std::string s = "{\"runs\":" + std::to_string(runs) + ",\"timesteps\":" + std::to_string(timesteps) +
                  ",\"dims\":[8,8,8],\"value_peak\":1.0,\"variable\":\"q\",\"entries\":[";
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (i) s += ",";
    s += "{\"r\":" + std::to_string(coords[i].first) + ",\"t\":" + std::to_string(coords[i].second) +
         ",\"path\":\"v.raw\"}";
  }
  return s + "]}";
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an nea::Error");
  return Errc::Io;
}

}  // namespace

TEST_CASE("dims parse and print") {
  CHECK(parse_dims("254x254x37") == Dims3{254, 254, 37});
  CHECK(to_string(Dims3{8, 8, 1}) == "8x8x1");
  CHECK(code_of([] { parse_dims("4x4"); }) == Errc::InvalidArgument);
  CHECK(code_of([] { parse_dims("0x4x4"); }) == Errc::InvalidArgument);
  CHECK(code_of([] { parse_dims("4x4x-2"); }) == Errc::InvalidArgument);
}

TEST_CASE("manifest shape echoes its fields") {
  const auto m = parse_manifest(manifest_text(2, 3, {{0, 0}, {0, 1}, {0, 2}, {1, 0}, {1, 1}, {1, 2}}), "/data");
  CHECK(m.shape.runs == 2);
  CHECK(m.shape.timesteps == 3);
  CHECK(m.shape.volume_dims == Dims3{8, 8, 8});
  CHECK(m.variable_name == "q");
  CHECK(m.entry({1, 2}).path == std::filesystem::path("/data/v.raw"));
  CHECK(m.coordinates().size() == 6);
}

TEST_CASE("manifest validation errors are distinct") {
  try {
    parse_manifest(manifest_text(2, 3, {{0, 0}, {0, 2}, {1, 0}, {1, 1}, {1, 2}}), ".");
    FAIL("gap accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::CoordinateGap);
    CHECK(std::string(e.what()).find("coordinate gap at (0,1)") != std::string::npos);
  }
  CHECK(code_of([] { parse_manifest(manifest_text(1, 2, {{0, 0}, {0, 1}, {0, 1}}), "."); }) ==
        Errc::CoordinateDuplicate);
  CHECK(code_of([] { parse_manifest("{not json", "."); }) == Errc::ManifestMalformed);
  CHECK(code_of([] { parse_manifest("{\"runs\":1}", "."); }) == Errc::ManifestMalformed);
  CHECK(code_of([] { parse_manifest(manifest_text(1, 1, {{0, 0}, {0, 5}}), "."); }) == Errc::ManifestMalformed);
  CHECK(code_of([] { load_manifest("/nonexistent/manifest.json"); }) == Errc::ManifestMissing);
}

TEST_CASE("property: manifest accepted iff coordinates cover the ensemble exactly") {
  test::Gen g(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int R = static_cast<int>(g.between(1, 4)), T = static_cast<int>(g.between(1, 4));
    std::vector<std::pair<int, int>> coords;
    for (int r = 0; r < R; ++r)
      for (int t = 0; t < T; ++t)
        if (!g.chance(0.1)) coords.push_back({r, t});
    const bool complete = coords.size() == static_cast<std::size_t>(R * T);
    bool duplicated = false;
    if (!coords.empty() && g.chance(0.2)) {
      coords.push_back(coords[g.below(coords.size())]);
      duplicated = true;
    }
    bool accepted = true;
    try {
      parse_manifest(manifest_text(R, T, coords), ".");
    } catch (const Error&) {
      accepted = false;
    }
    CHECK(accepted == (complete && !duplicated));
  }
}

TEST_CASE("read_volume layout and errors") {
  TempDir dir;
  Volume v(Dims3{4, 4, 4});
  for (std::size_t i = 0; i < 64; ++i) v.data[i] = static_cast<float>(i);
  write_volume_file(v, dir / "ramp.raw");
  const auto back = read_volume_file(dir / "ramp.raw", {4, 4, 4});
  CHECK(back.at(1, 0, 0) == 1.0f);
  CHECK(back.at(0, 1, 0) == 4.0f);
  CHECK(back.at(0, 0, 1) == 16.0f);
  CHECK(back.data == v.data);

  // Little-endian on disk regardless of host.
  const auto raw = test::read_file(dir / "ramp.raw");
  CHECK(bytes::load_le<float>(raw.data() + 4 * 5) == 5.0f);

  write_volume_file(Volume(Dims3{4, 4, 4}), dir / "zero.raw");
  const auto zero = read_volume_file(dir / "zero.raw", {4, 4, 4});
  CHECK(std::all_of(zero.data.begin(), zero.data.end(), [](float f) { return f == 0.0f; }));

  auto cut = raw;
  cut.resize(100);
  test::write_file(dir / "short.raw", cut);
  try {
    read_volume_file(dir / "short.raw", {4, 4, 4});
    FAIL("short read accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ShortRead);
    CHECK(std::string(e.what()).find("expected 256 bytes, got 100") != std::string::npos);
  }

  auto bad = raw;
  bytes::store_le(bad.data() + 4 * 6, std::numeric_limits<float>::quiet_NaN());
  test::write_file(dir / "nan.raw", bad);
  try {
    read_volume_file(dir / "nan.raw", {4, 4, 4});
    FAIL("NaN accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NonFinite);
    CHECK(std::string(e.what()).find("(2,1,0)") != std::string::npos);
  }
  CHECK(code_of([&] { read_volume_file(dir / "missing.raw", {4, 4, 4}); }) == Errc::VolumeOpen);
}

TEST_CASE("manifest referencing a missing file fails on read") {
  TempDir dir;
  std::ofstream(dir / "manifest.json") << manifest_text(1, 1, {{0, 0}});
  const auto m = load_manifest(dir / "manifest.json");
  CHECK(code_of([&] { read_volume(m, {0, 0}); }) == Errc::VolumeOpen);
}

TEST_CASE("manifest write/load round trip with offsets") {
  TempDir dir;
  Volume a(Dims3{2, 2, 2}, 1.5f), b(Dims3{2, 2, 2}, -2.0f);
  std::vector<std::byte> packed(16, std::byte{0});
  for (const auto& v : {a, b})
    for (const float f : v.data) {
      std::byte buf[4];
      bytes::store_le(buf, f);
      packed.insert(packed.end(), buf, buf + 4);
    }
  test::write_file(dir / "pack.raw", packed);
  EnsembleManifest m;
  m.shape.runs = 1;
  m.shape.timesteps = 2;
  m.shape.volume_dims = {2, 2, 2};
  m.shape.value_peak = 4.0f;
  m.entries[{0, 0}] = {dir / "pack.raw", 16};
  m.entries[{0, 1}] = {dir / "pack.raw", 48};
  write_manifest(m, dir / "m.json");
  const auto back = load_manifest(dir / "m.json");
  CHECK(back.shape.value_peak == 4.0f);
  CHECK(read_volume(back, {0, 0}).data == a.data);
  CHECK(read_volume(back, {0, 1}).data == b.data);
}

TEST_CASE("synthetic generator") {
  TempDir d1, d2;
  const auto m1 = test::make_ensemble(d1.path(), 2, 3, {16, 16, 8}, 0.5, 42);
  const auto m2 = test::make_ensemble(d2.path(), 2, 3, {16, 16, 8}, 0.5, 42);
  for (const auto c : m1.coordinates()) {
    CHECK(test::read_file(m1.entry(c).path) == test::read_file(m2.entry(c).path));
    SyntheticParams p;
    p.shape = m1.shape;
    p.duplication_rate = 0.5;
    p.seed = 42;
    CHECK(read_volume(m1, c).data == synthesize_volume(p, c).data);
  }

  TempDir d3;
  const auto same = test::make_ensemble(d3.path(), 3, 2, {8, 8, 8}, 1.0, 1, 0.0);
  for (std::uint32_t t = 0; t < 2; ++t) {
    const auto ref = read_volume(same, {0, t});
    for (std::uint32_t r = 1; r < 3; ++r) CHECK(read_volume(same, {r, t}).data == ref.data);
  }
  CHECK(read_volume(same, {0, 0}).data != read_volume(same, {0, 1}).data);

  SyntheticParams bad;
  bad.duplication_rate = 1.5;
  TempDir d4;
  CHECK(code_of([&] { generate_synthetic_ensemble(bad, d4.path()); }) == Errc::InvalidArgument);
  CHECK(!std::filesystem::exists(d4 / "manifest.json"));
}

TEST_CASE("synthetic duplication fraction tracks the requested rate") {
  TempDir dir;
  const auto m = test::make_ensemble(dir.path(), 2, 2, {16, 16, 16}, 0.5, 7);
  BlockSpec spec;
  std::size_t identical = 0, total = 0;
  for (std::uint32_t t = 0; t < 2; ++t) {
    const auto a = partition_volume(read_volume(m, {0, t}), spec);
    const auto b = partition_volume(read_volume(m, {1, t}), spec);
    for (std::size_t i = 0; i < a.size(); ++i, ++total) identical += a[i].data == b[i].data;
  }
  const double frac = static_cast<double>(identical) / static_cast<double>(total);
  CHECK(frac >= 0.4);
  CHECK(frac <= 0.6);
}
