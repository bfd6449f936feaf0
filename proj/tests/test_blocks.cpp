#include <openssl/sha.h>

#include <cmath>

#include "doctest.h"
#include "nea/bytes.hpp"
#include "nea/error.hpp"
#include "support.hpp"

using namespace nea;

TEST_CASE("grid_dims is per-axis ceiling division") {
  CHECK(grid_dims({254, 254, 37}, {4, 4, 4}) == GridDims{64, 64, 10});
  CHECK(grid_dims({8, 8, 8}, {8, 8, 8}) == GridDims{1, 1, 1});
  CHECK(grid_dims({10, 10, 10}, {4, 4, 4}) == GridDims{3, 3, 3});
  test::Gen g(3);
  for (int i = 0; i < 500; ++i) {
    const Dims3 v{static_cast<std::uint32_t>(g.between(1, 300)), static_cast<std::uint32_t>(g.between(1, 300)),
                  static_cast<std::uint32_t>(g.between(1, 300))};
    const Dims3 b{static_cast<std::uint32_t>(g.between(1, 20)), static_cast<std::uint32_t>(g.between(1, 20)),
                  static_cast<std::uint32_t>(g.between(1, 20))};
    const auto gd = grid_dims(v, b);
    CHECK(gd.x == static_cast<std::uint32_t>(std::ceil(double(v.x) / b.x)));
    CHECK(gd.y == static_cast<std::uint32_t>(std::ceil(double(v.y) / b.y)));
    CHECK(gd.z == static_cast<std::uint32_t>(std::ceil(double(v.z) / b.z)));
  }
}

TEST_CASE("partition pads edges with the fill value") {
  Volume v(Dims3{4, 4, 4});
  for (std::size_t i = 0; i < v.data.size(); ++i) v.data[i] = static_cast<float>(i);
  BlockSpec spec;
  auto blocks = partition_volume(v, spec);
  REQUIRE(blocks.size() == 1);
  CHECK(blocks[0].data == v.data);

  Volume w(Dims3{5, 4, 4}, 3.0f);
  spec.fill_value = -9.0f;
  blocks = partition_volume(w, spec);
  REQUIRE(blocks.size() == 2);
  CHECK(blocks[1].i == 1);
  for (std::size_t z = 0; z < 4; ++z)
    for (std::size_t y = 0; y < 4; ++y) {
      CHECK(blocks[1].data[(z * 4 + y) * 4 + 0] == 3.0f);
      for (std::size_t x = 1; x < 4; ++x) CHECK(blocks[1].data[(z * 4 + y) * 4 + x] == -9.0f);
    }
}

TEST_CASE("property: partition then place reproduces the volume") {
  test::Gen g(5);
  for (int trial = 0; trial < 60; ++trial) {
    Volume v(Dims3{static_cast<std::uint32_t>(g.between(1, 19)), static_cast<std::uint32_t>(g.between(1, 19)),
                   static_cast<std::uint32_t>(g.between(1, 9))});
    for (auto& f : v.data) f = static_cast<float>(g.uniform(-5, 5));
    BlockSpec spec;
    spec.block_dims = {static_cast<std::uint32_t>(g.between(1, 6)), static_cast<std::uint32_t>(g.between(1, 6)),
                       static_cast<std::uint32_t>(g.between(1, 6))};
    spec.fill_value = 123.0f;
    const auto blocks = partition_volume(v, spec);
    CHECK(blocks.size() == grid_dims(v.dims, spec.block_dims).volume());
    Volume out(v.dims, -1.0f);
    for (const auto& b : blocks) {
      CHECK(b.data.size() == spec.elements());
      place_block(out, spec.block_dims, b.i, b.j, b.k, b.data);
    }
    CHECK(out.data == v.data);
  }
}

TEST_CASE("round_vector examples") {
  const std::vector<float> a{1.4f, 1.6f};
  CHECK(round_vector(a, 0) == std::vector<std::int64_t>{1, 2});
  const std::vector<float> b{17.0f};
  CHECK(round_vector(b, -1) == std::vector<std::int64_t>{2});
  const std::vector<float> c{0.04f, 0.06f};
  CHECK(round_vector(c, 1) == std::vector<std::int64_t>{0, 1});
  const std::vector<float> ties{0.5f, 1.5f, 2.5f, -0.5f, -1.5f, 25.0f, 35.0f};
  CHECK(round_vector(std::span(ties).first(5), 0) == std::vector<std::int64_t>{0, 2, 2, 0, -2});
  CHECK(round_vector(std::span(ties).subspan(5), -1) == std::vector<std::int64_t>{2, 4});
  const std::vector<float> big{1e30f};
  try {
    round_vector(big, 0);
    FAIL("overflow accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::Overflow);
  }
}

TEST_CASE("property: round_vector matches the floor-based oracle") {
  test::Gen g(9);
  for (int trial = 0; trial < 20000; ++trial) {
    const std::int32_t d = static_cast<std::int32_t>(g.between(-2, 3));
    float v = static_cast<float>(g.uniform(-1000, 1000));
    if (g.chance(0.1)) v = static_cast<float>(g.between(-200, 200)) + 0.5f;
    const std::vector<float> one{v};
    CHECK(round_vector(one, d)[0] == test::oracle_round(v, d));
  }
}

TEST_CASE("hash_block serialization") {
  const std::vector<std::int64_t> empty;
  auto digest = hash_block(empty, 0);
  unsigned char expect[32];
  const unsigned char zero4[4] = {0, 0, 0, 0};
  SHA256(zero4, 4, expect);
  CHECK(std::equal(digest.begin(), digest.end(), expect));

  const std::vector<std::int64_t> v{1, -2, 3};
  std::vector<unsigned char> buf(4 + 24);
  bytes::store_le(reinterpret_cast<std::byte*>(buf.data()), std::int32_t{-1});
  for (int i = 0; i < 3; ++i) bytes::store_le(reinterpret_cast<std::byte*>(buf.data()) + 4 + 8 * i, v[i]);
  SHA256(buf.data(), buf.size(), expect);
  digest = hash_block(v, -1);
  CHECK(std::equal(digest.begin(), digest.end(), expect));

  CHECK(hash_block(v, 0) == hash_block(v, 0));
  CHECK(hash_block(v, 0) != hash_block(v, 1));
  test::Gen g(2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::int64_t> a(64);
    for (auto& x : a) x = g.between(-1000, 1000);
    auto b = a;
    b[g.below(64)] += 1;
    CHECK(hash_block(a, 0) != hash_block(b, 0));
  }
}

TEST_CASE("dequantize_decimal inverts the scaling") {
  CHECK(dequantize_decimal(2, -1) == 20.0f);
  CHECK(dequantize_decimal(15, 1) == 1.5f);
  CHECK(dequantize_decimal(-7, 0) == -7.0f);
}

TEST_CASE("BlockSpec validation") {
  BlockSpec s;
  s.block_dims = {0, 4, 4};
  CHECK_THROWS_AS(s.validate(), Error);
  s.block_dims = {4, 4, 4};
  s.decimals = 40;
  CHECK_THROWS_AS(s.validate(), Error);
  s.decimals = -1;
  CHECK_NOTHROW(s.validate());
}
