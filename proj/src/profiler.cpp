#include "nea/profiler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <tuple>

#include "nea/codebook.hpp"
#include "nea/dedup.hpp"
#include "json.hpp"
#include "nea/error.hpp"
#include "nea/random.hpp"

namespace nea {

std::vector<SampleRegion> sample_regions(const EnsembleShape& shape, double coverage, std::uint64_t seed) {
  if (shape.runs < 2 || shape.timesteps < 2) {
    fail(Errc::InvalidArgument, "profiling needs an ensemble of at least 2 runs x 2 timesteps");
  }
  if (!(coverage > 0.0 && coverage <= 1.0)) fail(Errc::InvalidArgument, "coverage must lie in (0, 1]");
  const std::uint32_t R = shape.runs, T = shape.timesteps;
  const double target = coverage * static_cast<double>(R) * T;
  std::vector<std::uint8_t> taken(std::size_t{R} * T, 0);
  auto fits = [&](std::uint32_t r0, std::uint32_t t0, std::uint32_t sr, std::uint32_t st) {
    for (std::uint32_t r = r0; r < r0 + sr; ++r)
      for (std::uint32_t t = t0; t < t0 + st; ++t)
        if (taken[std::size_t{r} * T + t]) return false;
    return true;
  };

  SplitMix64 rng(seed);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> sizes{{2, 2}, {2, 3}, {3, 2}, {3, 3}};
  std::vector<SampleRegion> regions;
  std::size_t area = 0;
  while (static_cast<double>(area) < target && !sizes.empty()) {
    const std::size_t pick = rng.below(sizes.size());
    const auto [sr, st] = sizes[pick];
    std::vector<SampleRegion> free;
    if (sr <= R && st <= T) {
      for (std::uint32_t r0 = 0; r0 + sr <= R; ++r0)
        for (std::uint32_t t0 = 0; t0 + st <= T; ++t0)
          if (fits(r0, t0, sr, st)) free.push_back({r0, t0, sr, st});
    }
    if (free.empty()) {
      sizes.erase(sizes.begin() + static_cast<std::ptrdiff_t>(pick));
      continue;
    }
    const SampleRegion chosen = free[rng.below(free.size())];
    for (std::uint32_t r = chosen.r0; r < chosen.r0 + sr; ++r)
      for (std::uint32_t t = chosen.t0; t < chosen.t0 + st; ++t) taken[std::size_t{r} * T + t] = 1;
    area += chosen.cells();
    regions.push_back(chosen);
  }
  return regions;
}

std::vector<EnsembleCoordinate> region_coordinates(std::span<const SampleRegion> regions) {
  std::vector<EnsembleCoordinate> coords;
  for (const auto& g : regions)
    for (std::uint32_t r = g.r0; r < g.r0 + g.runs; ++r)
      for (std::uint32_t t = g.t0; t < g.t0 + g.timesteps; ++t) coords.push_back({r, t});
  std::sort(coords.begin(), coords.end());
  coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
  return coords;
}

double estimate_codebook_size(double s_od, std::uint64_t b_rem, std::uint64_t b_tot, double s_g,
                              double reduction_factor) {
  if (b_tot == 0) fail(Errc::InvalidArgument, "B_tot must be positive");
  return s_od * (static_cast<double>(b_rem) / static_cast<double>(b_tot)) * reduction_factor + s_g;
}

double reduction_factor(const ReductionConfig& reduction, std::size_t block_elements, double wavelet_ratio) {
  switch (reduction.kind) {
    case ReductionKind::Pca:
      return 2.0 * static_cast<double>(reduction.components) / static_cast<double>(block_elements);
    case ReductionKind::Wavelet: return wavelet_ratio;
    default: return 1.0;
  }
}

double estimate_codebook_size(double s_od, std::uint64_t b_rem, std::uint64_t b_tot, double s_g,
                              const ReductionConfig& reduction, std::size_t block_elements, double wavelet_ratio) {
  return estimate_codebook_size(s_od, b_rem, b_tot, s_g, reduction_factor(reduction, block_elements, wavelet_ratio));
}

double estimate_vis_memory(std::size_t block_elements) {
  if (block_elements < 1) fail(Errc::InvalidArgument, "E_tot must be at least 1");
  return 115200.0 / static_cast<double>(block_elements) + 200.0;
}

std::string ProfileConfig::describe() const {
  return "block=" + to_string(block_dims) + " d=" + std::to_string(decimals) + " " + reduction.describe();
}

bool config_less(const ProfileConfig& a, const ProfileConfig& b) noexcept {
  auto key = [](const ProfileConfig& c) {
    return std::make_tuple(c.block_dims.x, c.block_dims.y, c.block_dims.z, c.decimals,
                           static_cast<std::uint32_t>(c.reduction.kind), c.reduction.components,
                           c.reduction.quality);
  };
  return key(a) < key(b);
}

std::vector<ProfileConfig> default_profile_grid(ReductionKind kind) {
  const Dims3 blocks[] = {{4, 4, 4}, {8, 8, 8}, {16, 16, 16}, {8, 8, 1}};
  const std::int32_t decimals[] = {-1, 0, 1, 2};
  std::vector<ProfileConfig> grid;
  for (const auto& b : blocks)
    for (const auto d : decimals) {
      ProfileConfig c;
      c.block_dims = b;
      c.decimals = d;
      c.reduction.kind = kind;
      const auto n = static_cast<std::uint32_t>(b.volume());
      if (kind == ReductionKind::Pca) {
        for (const std::uint32_t div : {2U, 4U, 8U, 16U}) {
          c.reduction.components = n / div;
          grid.push_back(c);
        }
      } else if (kind == ReductionKind::Wavelet) {
        for (const float q : {99.0f, 90.0f, 75.0f, 50.0f}) {
          c.reduction.quality = q;
          grid.push_back(c);
        }
      } else {
        grid.push_back(c);
      }
    }
  return grid;
}

namespace {

ProfileEstimate evaluate(const EnsembleManifest& manifest, std::span<const EnsembleCoordinate> sampled,
                         const VolumeSource& source, const ProfileConfig& config, kernels::Exec exec) {
  BlockSpec spec;
  spec.block_dims = config.block_dims;
  spec.decimals = config.decimals;
  config.reduction.validate(spec.block_dims);
  const auto dedup = deduplicate(manifest.shape, sampled, source, spec, {}, exec);
  const std::size_t n = spec.elements();

  double wavelet_ratio = 1.0;
  if (config.reduction.kind == ReductionKind::Wavelet) {
    const auto codec = make_wavelet_codec(spec.block_dims, config.reduction.quality);
    const auto payloads = kernels::encode_blocks(*codec, dedup.representatives, exec);
    std::uint64_t encoded = 0;
    for (const auto& p : payloads) encoded += p.size();
    wavelet_ratio = static_cast<double>(encoded) / (4.0 * static_cast<double>(n) * dedup.b_rem());
  }

  ProfileEstimate e;
  e.config = config;
  e.s_od = static_cast<double>(manifest.original_bytes());
  e.s_g = static_cast<double>(grid_section_bytes(manifest.shape, spec.block_dims));
  e.reduction_factor = reduction_factor(config.reduction, n, wavelet_ratio);
  e.sample_b_rem = dedup.b_rem();
  e.sample_b_tot = dedup.b_tot;
  e.s_cb = estimate_codebook_size(e.s_od, e.sample_b_rem, e.sample_b_tot, e.s_g, e.reduction_factor);
  e.m_vis = estimate_vis_memory(n);
  return e;
}

}  // namespace

ProfileEstimate profile_config(const EnsembleManifest& manifest, std::span<const EnsembleCoordinate> sampled,
                               const ProfileConfig& config, kernels::Exec exec) {
  return evaluate(
      manifest, sampled, [&](EnsembleCoordinate c) { return read_volume(manifest, c); }, config, exec);
}

ProfileResult profile(const EnsembleManifest& manifest, std::span<const ProfileConfig> grid,
                      const ProfileOptions& options) {
  ProfileResult result;
  result.regions = sample_regions(manifest.shape, options.coverage, options.seed);
  result.sampled = region_coordinates(result.regions);

  std::map<EnsembleCoordinate, Volume> cache;
  for (const auto c : result.sampled) cache.emplace(c, read_volume(manifest, c));
  const VolumeSource source = [&](EnsembleCoordinate c) { return cache.at(c); };

  for (const auto& config : grid) result.ranked.push_back(evaluate(manifest, result.sampled, source, config, options.exec));
  std::stable_sort(result.ranked.begin(), result.ranked.end(), [](const ProfileEstimate& a, const ProfileEstimate& b) {
    if (a.s_cb != b.s_cb) return a.s_cb < b.s_cb;
    if (a.m_vis != b.m_vis) return a.m_vis < b.m_vis;
    return config_less(a.config, b.config);
  });
  return result;
}

std::string format_profile_table(std::span<const ProfileEstimate> rows) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-4s %-10s %4s %-14s %14s %10s %10s\n", "rank", "block", "d", "reduction",
                "S_cb(MB)", "M_vis(MB)", "dedup");
  out += line;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& e = rows[i];
    std::snprintf(line, sizeof line, "%-4zu %-10s %4d %-14s %14.3f %10.3f %10.4f\n", i + 1,
                  to_string(e.config.block_dims).c_str(), e.config.decimals, e.config.reduction.describe().c_str(),
                  e.s_cb / (1024.0 * 1024.0), e.m_vis, e.dedup_ratio());
    out += line;
  }
  return out;
}

std::string profile_rows_json(std::span<const ProfileEstimate> rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& e = rows[i];
    const auto& b = e.config.block_dims;
    arr.push_back({{"rank", i + 1},
                   {"block_dims", {b.x, b.y, b.z}},
                   {"decimals", e.config.decimals},
                   {"reduction", to_string(e.config.reduction.kind)},
                   {"components", e.config.reduction.components},
                   {"quality", e.config.reduction.quality},
                   {"s_cb_bytes", e.s_cb},
                   {"m_vis_mb", e.m_vis},
                   {"s_od_bytes", e.s_od},
                   {"s_g_bytes", e.s_g},
                   {"reduction_factor", e.reduction_factor},
                   {"sample_b_rem", e.sample_b_rem},
                   {"sample_b_tot", e.sample_b_tot},
                   {"dedup_ratio", e.dedup_ratio()}});
  }
  return arr.dump();
}

}  // namespace nea
