// Serial reference vs OpenMP path for each pipeline kernel.
#include <benchmark/benchmark.h>

#include "nea/kernels.hpp"
#include "nea/random.hpp"
#include "nea/reduction.hpp"

namespace {

using nea::kernels::Exec;

nea::Volume bench_volume() {
  nea::SyntheticParams p;
  p.shape.volume_dims = {128, 128, 64};
  p.duplication_rate = 0.3;
  p.seed = 7;
  return nea::synthesize_volume(p, {0, 0});
}

Exec exec_of(const benchmark::State& s) { return s.range(0) ? Exec::Parallel : Exec::Serial; }

void BM_HashVolumeBlocks(benchmark::State& state) {
  const auto volume = bench_volume();
  nea::BlockSpec spec;
  spec.decimals = 2;
  for (auto _ : state) benchmark::DoNotOptimize(nea::kernels::hash_volume_blocks(volume, spec, exec_of(state)));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * volume.data.size() * 4));
}

std::vector<float> bench_blocks(std::size_t count, std::size_t n) {
  nea::SplitMix64 rng(3);
  std::vector<float> blocks(count * n);
  for (auto& v : blocks) v = static_cast<float>(rng.uniform());
  return blocks;
}

void BM_WaveletEncode(benchmark::State& state) {
  const auto codec = nea::make_wavelet_codec({8, 8, 8}, 90.0f);
  const auto blocks = bench_blocks(2048, 512);
  for (auto _ : state) benchmark::DoNotOptimize(nea::kernels::encode_blocks(*codec, blocks, exec_of(state)));
}

void BM_WaveletDecode(benchmark::State& state) {
  const auto codec = nea::make_wavelet_codec({8, 8, 8}, 90.0f);
  const auto blocks = bench_blocks(2048, 512);
  const auto payloads = nea::kernels::encode_blocks(*codec, blocks, Exec::Serial);
  for (auto _ : state) benchmark::DoNotOptimize(nea::kernels::decode_payloads(*codec, payloads, exec_of(state)));
}

void BM_AssembleVolume(benchmark::State& state) {
  const nea::Dims3 dims{128, 128, 64}, block{4, 4, 4};
  const auto g = nea::grid_dims(dims, block);
  const auto blocks = bench_blocks(g.volume(), block.volume());
  std::vector<const float*> cells(g.volume());
  for (std::size_t c = 0; c < cells.size(); ++c) cells[c] = blocks.data() + c * block.volume();
  nea::Volume out(dims);
  for (auto _ : state) {
    nea::kernels::assemble_volume(cells, g, block, out, exec_of(state));
    benchmark::ClobberMemory();
  }
}

void BM_AgreementCounts(benchmark::State& state) {
  nea::SplitMix64 rng(5);
  std::vector<std::vector<std::uint32_t>> grids(40, std::vector<std::uint32_t>(64 * 64 * 10));
  for (auto& g : grids)
    for (auto& id : g) id = static_cast<std::uint32_t>(rng.below(4));
  for (auto _ : state) benchmark::DoNotOptimize(nea::kernels::agreement_counts(grids, 0, exec_of(state)));
}

}  // namespace

BENCHMARK(BM_HashVolumeBlocks)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WaveletEncode)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WaveletDecode)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AssembleVolume)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AgreementCounts)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
