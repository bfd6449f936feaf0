#include "support.hpp"

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <fstream>

namespace nea::test {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter.fetch_add(1)));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::vector<float> Gen::floats(std::size_t n, double lo, double hi) {
  std::vector<float> out(n);
  for (auto& v : out) v = static_cast<float>(uniform(lo, hi));
  return out;
}

std::vector<std::int16_t> Gen::sparse_int16(std::size_t n, double density) {
  std::vector<std::int16_t> out(n, 0);
  for (auto& v : out) {
    if (!chance(density)) continue;
    const int bits = static_cast<int>(between(1, 15));
    auto mag = static_cast<std::int32_t>(between(1, (1 << bits) - 1));
    if (chance(0.02)) mag = 32767;
    v = static_cast<std::int16_t>(chance(0.5) ? -mag : mag);
    if (chance(0.005)) v = -32768;
  }
  return out;
}

EnsembleManifest make_ensemble(const fs::path& dir, std::uint32_t runs, std::uint32_t timesteps, Dims3 dims,
                               double dup_rate, std::uint64_t seed, double perturbation) {
  SyntheticParams p;
  p.shape.runs = runs;
  p.shape.timesteps = timesteps;
  p.shape.volume_dims = dims;
  p.duplication_rate = dup_rate;
  p.perturbation = perturbation;
  p.seed = seed;
  return generate_synthetic_ensemble(p, dir);
}

EnsembleManifest make_identical_ensemble(const fs::path& dir, std::uint32_t runs, std::uint32_t timesteps,
                                         Dims3 dims, std::uint64_t seed) {
  SyntheticParams p;
  p.shape.volume_dims = dims;
  p.seed = seed;
  fs::create_directories(dir);
  const auto file = fs::absolute(dir) / "volume.raw";
  write_volume_file(synthesize_volume(p, {0, 0}), file);
  EnsembleManifest m;
  m.shape = p.shape;
  m.shape.runs = runs;
  m.shape.timesteps = timesteps;
  m.variable_name = "identical";
  for (std::uint32_t r = 0; r < runs; ++r)
    for (std::uint32_t t = 0; t < timesteps; ++t) m.entries[{r, t}] = ManifestEntry{file, 0};
  write_manifest(m, dir / "manifest.json");
  return load_manifest(dir / "manifest.json");
}

std::vector<Volume> load_all(const EnsembleManifest& manifest) {
  std::vector<Volume> out;
  for (const auto c : manifest.coordinates()) out.push_back(read_volume(manifest, c));
  return out;
}

std::int64_t oracle_round(float value, std::int32_t decimals) {
  long double x = value;
  for (std::int32_t i = 0; i < decimals; ++i) x *= 10.0L;
  for (std::int32_t i = 0; i < -decimals; ++i) x /= 10.0L;
  const long double f = std::floor(x);
  const long double frac = x - f;
  long double r = f;
  if (frac > 0.5L) {
    r = f + 1;
  } else if (frac == 0.5L) {
    r = std::fmod(f, 2.0L) == 0 ? f : f + 1;
  }
  return static_cast<std::int64_t>(r);
}

std::vector<std::vector<std::uint32_t>> oracle_dedup(const std::vector<Volume>& volumes, GridDims grid,
                                                     const BlockSpec& spec, std::size_t* groups) {
  const Dims3 b = spec.block_dims;
  const std::size_t n = b.volume();
  auto rounded_block = [&](const Volume& v, std::uint32_t i, std::uint32_t j, std::uint32_t k) {
    std::vector<std::int64_t> q(n);
    std::size_t e = 0;
    for (std::uint32_t z = 0; z < b.z; ++z)
      for (std::uint32_t y = 0; y < b.y; ++y)
        for (std::uint32_t x = 0; x < b.x; ++x, ++e) {
          const std::size_t gx = std::size_t{i} * b.x + x, gy = std::size_t{j} * b.y + y, gz = std::size_t{k} * b.z + z;
          const bool inside = gx < v.dims.x && gy < v.dims.y && gz < v.dims.z;
          q[e] = oracle_round(inside ? v.at(gx, gy, gz) : spec.fill_value, spec.decimals);
        }
    return q;
  };
  std::vector<std::vector<std::int64_t>> reps;
  std::vector<std::vector<std::uint32_t>> labels;
  for (const auto& v : volumes) {
    std::vector<std::uint32_t> grid_labels(grid.volume());
    for (std::uint32_t i = 0; i < grid.x; ++i)
      for (std::uint32_t j = 0; j < grid.y; ++j)
        for (std::uint32_t k = 0; k < grid.z; ++k) {
          const auto q = rounded_block(v, i, j, k);
          std::size_t label = reps.size();
          for (std::size_t g = 0; g < reps.size(); ++g) {
            if (reps[g] == q) {
              label = g;
              break;
            }
          }
          if (label == reps.size()) reps.push_back(q);
          grid_labels[i + grid.x * (j + std::size_t{grid.y} * k)] = static_cast<std::uint32_t>(label);
        }
    labels.push_back(std::move(grid_labels));
  }
  if (groups) *groups = reps.size();
  return labels;
}

std::vector<std::uint32_t> oracle_agreement(const std::vector<std::vector<std::uint32_t>>& run_grids,
                                            std::size_t reference) {
  std::vector<std::uint32_t> counts(run_grids.at(reference).size(), 0);
  for (std::size_t c = 0; c < counts.size(); ++c)
    for (std::size_t r = 0; r < run_grids.size(); ++r)
      if (run_grids[r][c] == run_grids[reference][c]) ++counts[c];
  return counts;
}

CodebookSummary build_codebook(const EnsembleManifest& manifest, const BlockSpec& spec,
                               const ReductionConfig& reduction, const fs::path& path, DedupResult* dedup_out) {
  auto dedup = deduplicate(manifest, spec);
  const auto summary = write_codebook(dedup, reduction, path);
  if (dedup_out) *dedup_out = std::move(dedup);
  return summary;
}

std::vector<std::byte> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::vector<std::byte> data(fs::file_size(path));
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size()));
  return data;
}

void write_file(const fs::path& path, const std::vector<std::byte>& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
}

double oracle_mse(const Volume& a, const Volume& b) {
  double sum = 0.0;
  for (std::uint32_t z = 0; z < a.dims.z; ++z)
    for (std::uint32_t y = 0; y < a.dims.y; ++y)
      for (std::uint32_t x = 0; x < a.dims.x; ++x) {
        const double d = static_cast<double>(a.at(x, y, z)) - static_cast<double>(b.at(x, y, z));
        sum += d * d;
      }
  return sum / static_cast<double>(a.dims.volume());
}

}  // namespace nea::test
