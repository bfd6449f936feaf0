#include "nea/quality.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "nea/error.hpp"
#include "nea/runtime.hpp"

namespace nea {

namespace {

void require_same_dims(const Volume& a, const Volume& b) {
  if (a.dims != b.dims || a.data.size() != b.data.size()) {
    fail(Errc::DimensionMismatch, "cannot compare volumes " + to_string(a.dims) + " and " + to_string(b.dims));
  }
}

std::string format_db(double db) {
  if (std::isinf(db)) return "inf (identical)";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f dB", db);
  return buf;
}

}  // namespace

double mean_squared_error(const Volume& a, const Volume& b) {
  require_same_dims(a, b);
  if (a.data.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double e = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
    sum += e * e;
  }
  return sum / static_cast<double>(a.data.size());
}

double psnr_from_mse(double mse, double peak) {
  if (!(peak > 0.0)) fail(Errc::InvalidArgument, "PSNR peak must be positive");
  if (mse == 0.0) return kIdenticalPsnr;
  return 20.0 * std::log10(peak) - 10.0 * std::log10(mse);
}

double psnr(const Volume& a, const Volume& b, double peak) { return psnr_from_mse(mean_squared_error(a, b), peak); }

VolumeError compare_volumes(const Volume& a, const Volume& b, double peak) {
  VolumeError e;
  e.mse = mean_squared_error(a, b);
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    e.max_abs = std::max(e.max_abs, std::abs(static_cast<double>(a.data[i]) - static_cast<double>(b.data[i])));
  }
  e.psnr_db = psnr_from_mse(e.mse, peak);
  return e;
}

std::vector<EnsembleCoordinate> evenly_spaced_sample(const EnsembleShape& shape, std::size_t count) {
  const std::size_t total = shape.volume_count();
  if (count == 0 || count > total) count = total;
  std::vector<EnsembleCoordinate> out;
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    const std::size_t v = count == 1 ? 0 : s * (total - 1) / (count - 1);
    out.push_back({static_cast<std::uint32_t>(v / shape.timesteps), static_cast<std::uint32_t>(v % shape.timesteps)});
  }
  return out;
}

QualityReport compare_codebook(const EnsembleManifest& manifest, const CodebookReader& reader,
                               std::span<const EnsembleCoordinate> sample, kernels::Exec exec) {
  const auto& h = reader.header();
  if (h.shape.runs != manifest.shape.runs || h.shape.timesteps != manifest.shape.timesteps ||
      h.shape.volume_dims != manifest.shape.volume_dims) {
    fail(Errc::DimensionMismatch, "codebook and manifest describe different ensembles");
  }
  const double peak = manifest.shape.value_peak;
  QualityReport report;
  report.coords.assign(sample.begin(), sample.end());
  WorkingSet ws(reader, std::nullopt, exec);
  double squared = 0.0, psnr_sum = 0.0;
  std::size_t voxels = 0;
  for (const auto c : sample) {
    const auto rebuilt = ws.switch_to(c).volume;
    const auto source = read_volume(manifest, c);
    const auto e = compare_volumes(source, rebuilt, peak);
    report.volumes.push_back(e);
    squared += e.mse * static_cast<double>(source.data.size());
    voxels += source.data.size();
    psnr_sum += e.psnr_db;
    report.worst_psnr_db = std::min(report.worst_psnr_db, e.psnr_db);
    report.max_abs_error = std::max(report.max_abs_error, e.max_abs);
  }
  if (!sample.empty()) report.mean_psnr_db = psnr_sum / static_cast<double>(sample.size());
  report.mean_squared_error = voxels ? squared / static_cast<double>(voxels) : 0.0;
  report.original_bytes = manifest.original_bytes();
  report.codebook_bytes = reader.file_bytes();
  report.compression_ratio =
      report.codebook_bytes ? static_cast<double>(report.original_bytes) / static_cast<double>(report.codebook_bytes)
                            : 0.0;
  report.dedup_ratio = static_cast<double>(h.b_rem) / static_cast<double>(h.b_tot);
  return report;
}

std::string format_quality_report(const QualityReport& r) {
  std::string out;
  char line[256];
  for (std::size_t i = 0; i < r.coords.size(); ++i) {
    std::snprintf(line, sizeof line, "volume r=%u t=%u psnr=%s max_abs=%.6g mse=%.6g\n", r.coords[i].r,
                  r.coords[i].t, format_db(r.volumes[i].psnr_db).c_str(), r.volumes[i].max_abs, r.volumes[i].mse);
    out += line;
  }
  std::snprintf(line, sizeof line, "volumes compared: %zu\n", r.coords.size());
  out += line;
  out += "worst psnr: " + format_db(r.worst_psnr_db) + "\n";
  out += "mean psnr: " + format_db(r.mean_psnr_db) + "\n";
  std::snprintf(line, sizeof line,
                "max abs error: %.6g\nmse: %.6g\noriginal bytes: %llu\ncodebook bytes: %llu\n"
                "compression ratio: %.4f\ndedup ratio: %.6f\n",
                r.max_abs_error, r.mean_squared_error, static_cast<unsigned long long>(r.original_bytes),
                static_cast<unsigned long long>(r.codebook_bytes), r.compression_ratio, r.dedup_ratio);
  out += line;
  return out;
}

}  // namespace nea
