#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "nea/ensemble.hpp"
#include "nea/error.hpp"
#include "nea/random.hpp"

namespace nea {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kMaskStream = 0x6d61736bULL;
constexpr std::uint64_t kRunStream = 0x72756eULL;
constexpr std::uint64_t kNoiseStream = 0x6e6f697365ULL;

std::uint32_t ceil_div(std::uint32_t a, std::uint32_t b) { return (a + b - 1) / b; }

// Exactly round(p * regions) regions of timestep t are shared by all runs.
std::vector<char> shared_regions(const SyntheticParams& p, std::uint32_t t, std::size_t regions) {
  std::vector<std::size_t> order(regions);
  std::iota(order.begin(), order.end(), 0);
  SplitMix64 rng(hash_combine(hash_combine(p.seed, kMaskStream), t));
  for (std::size_t i = regions; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  const auto shared = static_cast<std::size_t>(std::llround(p.duplication_rate * static_cast<double>(regions)));
  std::vector<char> mask(regions, 0);
  for (std::size_t i = 0; i < shared && i < regions; ++i) mask[order[i]] = 1;
  return mask;
}

}  // namespace

Volume synthesize_volume(const SyntheticParams& p, EnsembleCoordinate coord) {
  const auto& s = p.shape;
  const Dims3 d = s.volume_dims;
  const Dims3 g{ceil_div(d.x, p.region_dims.x), ceil_div(d.y, p.region_dims.y), ceil_div(d.z, p.region_dims.z)};
  const auto mask = shared_regions(p, coord.t, g.volume());

  SplitMix64 run_rng(hash_combine(hash_combine(p.seed, kRunStream), coord.r));
  const double kx = 1.0 + 2.0 * run_rng.uniform();
  const double ky = 1.0 + 2.0 * run_rng.uniform();
  const double kz = 1.0 + 2.0 * run_rng.uniform();
  const double phase = 2.0 * std::numbers::pi * run_rng.uniform();
  const std::uint64_t noise_key =
      hash_combine(hash_combine(hash_combine(p.seed, kNoiseStream), coord.r), coord.t);

  // The bump travels along x over the course of a run.
  const double travel = s.timesteps > 1 ? static_cast<double>(coord.t) / (s.timesteps - 1) : 0.0;
  const double cx = 0.3 + 0.4 * travel;
  // Offset background keeps every value well away from zero.
  const double background = 0.1 * s.value_peak;
  const double amplitude = 0.8 * s.value_peak;
  constexpr double two_sigma_sq = 2.0 * 0.2 * 0.2;

  Volume v(d);
#pragma omp parallel for schedule(static)
  for (std::int64_t zi = 0; zi < static_cast<std::int64_t>(d.z); ++zi) {
    const auto z = static_cast<std::size_t>(zi);
    const double uz = (z + 0.5) / d.z;
    for (std::size_t y = 0; y < d.y; ++y) {
      const double uy = (y + 0.5) / d.y;
      for (std::size_t x = 0; x < d.x; ++x) {
        const double ux = (x + 0.5) / d.x;
        const double r2 = (ux - cx) * (ux - cx) + (uy - 0.5) * (uy - 0.5) + (uz - 0.5) * (uz - 0.5);
        double value = background + amplitude * std::exp(-r2 / two_sigma_sq);
        const std::size_t region =
            x / p.region_dims.x + g.x * (y / p.region_dims.y + std::size_t{g.y} * (z / p.region_dims.z));
        if (!mask[region] && p.perturbation != 0.0) {
          const std::size_t idx = v.index(x, y, z);
          const double wave = std::sin(2.0 * std::numbers::pi * (kx * ux + ky * uy + kz * uz) + phase);
          const double noise = 2.0 * unit_from_hash(hash_combine(noise_key, idx)) - 1.0;
          value += p.perturbation * (0.7 * wave + 0.3 * noise);
        }
        v.data[v.index(x, y, z)] = static_cast<float>(value);
      }
    }
  }
  return v;
}

EnsembleManifest generate_synthetic_ensemble(const SyntheticParams& params, const fs::path& out_dir) {
  params.shape.validate();
  if (!(params.duplication_rate >= 0.0 && params.duplication_rate <= 1.0)) {
    fail(Errc::InvalidArgument, "duplication rate must lie in [0, 1]");
  }
  if (!std::isfinite(params.perturbation)) fail(Errc::InvalidArgument, "perturbation must be finite");
  if (params.region_dims.volume() == 0) fail(Errc::InvalidArgument, "region dims must be >= 1");

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fail(Errc::Io, "cannot create " + out_dir.string() + ": " + ec.message());

  EnsembleManifest m;
  m.shape = params.shape;
  m.variable_name = "synthetic";
  for (std::uint32_t r = 0; r < params.shape.runs; ++r) {
    for (std::uint32_t t = 0; t < params.shape.timesteps; ++t) {
      const auto file = fs::absolute(out_dir) / ("run" + std::to_string(r) + "_t" + std::to_string(t) + ".raw");
      write_volume_file(synthesize_volume(params, {r, t}), file);
      m.entries[{r, t}] = ManifestEntry{file, 0};
    }
  }
  const auto manifest_path = out_dir / "manifest.json";
  write_manifest(m, manifest_path);
  return load_manifest(manifest_path);
}

}  // namespace nea
