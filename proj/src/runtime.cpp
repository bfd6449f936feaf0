#include "nea/runtime.hpp"

#include <algorithm>
#include <chrono>

#include "json.hpp"
#include "nea/error.hpp"

namespace nea {

std::vector<std::uint32_t> distinct_ids(std::span<const std::uint32_t> grid) {
  std::vector<std::uint32_t> ids(grid.begin(), grid.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

WorkingSetDiff diff_working_set(std::span<const std::uint32_t> current, std::span<const std::uint32_t> next) {
  const auto cb = distinct_ids(current);
  const auto nb = distinct_ids(next);
  WorkingSetDiff d;
  std::set_intersection(cb.begin(), cb.end(), nb.begin(), nb.end(), std::back_inserter(d.keep));
  std::set_difference(nb.begin(), nb.end(), d.keep.begin(), d.keep.end(), std::back_inserter(d.load));
  std::set_difference(cb.begin(), cb.end(), d.keep.begin(), d.keep.end(), std::back_inserter(d.discard));
  return d;
}

std::string SwitchTelemetry::to_json() const {
  const nlohmann::json j{{"event", "switch"},      {"r", coord.r},         {"t", coord.t},
                         {"keep", keep},           {"load", load},         {"discard", discard},
                         {"blocks_read", blocks_read}, {"bytes_read", bytes_read}, {"wall_ms", wall_ms}};
  return j.dump();
}

WorkingSet::WorkingSet(const CodebookReader& reader, std::optional<std::uint64_t> budget_bytes, kernels::Exec exec)
    : reader_(&reader), budget_(budget_bytes), exec_(exec) {}

std::uint64_t WorkingSet::block_bytes() const noexcept { return std::uint64_t{4} * reader_->codec().elements(); }

std::uint64_t WorkingSet::resident_bytes() const noexcept { return table_.size() * block_bytes(); }

std::vector<std::uint32_t> WorkingSet::resident_ids() const {
  std::vector<std::uint32_t> ids;
  ids.reserve(table_.size());
  for (const auto& [id, block] : table_) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

WorkingSet::SwitchResult WorkingSet::switch_to(EnsembleCoordinate coord) {
  const auto started = std::chrono::steady_clock::now();
  ReadStats stats;
  auto next_grid = reader_->read_grid(coord, &stats);
  const auto nb = distinct_ids(next_grid);
  if (budget_ && nb.size() * block_bytes() > *budget_) {
    fail(Errc::BudgetExceeded, "volume (" + std::to_string(coord.r) + "," + std::to_string(coord.t) + ") needs " +
                                   std::to_string(nb.size() * block_bytes()) + " bytes of blocks, budget is " +
                                   std::to_string(*budget_));
  }
  auto diff = diff_working_set(resident_ids(), nb);

  std::vector<std::vector<std::byte>> payloads;
  payloads.reserve(diff.load.size());
  for (const auto id : diff.load) payloads.push_back(reader_->read_payload(id, &stats));
  auto decoded = kernels::decode_payloads(reader_->codec(), payloads, exec_);
  for (std::size_t b = 0; b < diff.load.size(); ++b) table_.emplace(diff.load[b], std::move(decoded[b]));
  for (const auto id : diff.discard) table_.erase(id);

  const auto& h = reader_->header();
  Volume volume(h.shape.volume_dims);
  std::vector<const float*> cells(next_grid.size());
  for (std::size_t c = 0; c < next_grid.size(); ++c) cells[c] = table_.at(next_grid[c]).data();
  kernels::assemble_volume(cells, h.grid, h.spec.block_dims, volume, exec_);

  current_ = coord;
  grid_ = std::move(next_grid);
  ++counters_.switches;
  counters_.loads += diff.load.size();
  counters_.discards += diff.discard.size();
  counters_.keeps += diff.keep.size();
  counters_.bytes_read += stats.bytes;

  SwitchTelemetry tel;
  tel.coord = coord;
  tel.keep = diff.keep.size();
  tel.load = diff.load.size();
  tel.discard = diff.discard.size();
  tel.blocks_read = stats.blocks;
  tel.bytes_read = stats.bytes;
  tel.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  if (sink_) sink_(tel);
  return {std::move(volume), std::move(diff), tel};
}

float AgreementGrid::min() const noexcept {
  return values.empty() ? 0.0f : *std::min_element(values.begin(), values.end());
}

double AgreementGrid::mean() const noexcept {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (const float v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

AgreementGrid agreement_from_grids(std::span<const std::vector<std::uint32_t>> run_grids, GridDims grid,
                                   EnsembleCoordinate reference, kernels::Exec exec) {
  if (reference.r >= run_grids.size()) fail(Errc::OutOfRange, "reference run outside the ensemble");
  AgreementGrid out;
  out.reference = reference;
  out.grid = grid;
  out.runs = static_cast<std::uint32_t>(run_grids.size());
  out.counts = kernels::agreement_counts(run_grids, reference.r, exec);
  out.values.resize(out.counts.size());
  for (std::size_t c = 0; c < out.counts.size(); ++c) {
    out.values[c] = static_cast<float>(static_cast<double>(out.counts[c]) / out.runs);
  }
  return out;
}

AgreementGrid compute_agreement(const CodebookReader& reader, EnsembleCoordinate reference, kernels::Exec exec,
                                ReadStats* stats) {
  const auto& h = reader.header();
  if (reference.r >= h.shape.runs || reference.t >= h.shape.timesteps) {
    fail(Errc::OutOfRange, "agreement reference (" + std::to_string(reference.r) + "," +
                               std::to_string(reference.t) + ") outside the ensemble");
  }
  std::vector<std::vector<std::uint32_t>> grids;
  grids.reserve(h.shape.runs);
  for (std::uint32_t r = 0; r < h.shape.runs; ++r) grids.push_back(reader.read_grid({r, reference.t}, stats));
  return agreement_from_grids(grids, h.grid, reference, exec);
}

Volume reconstruct_volume(const CodebookReader& reader, EnsembleCoordinate coord, kernels::Exec exec) {
  WorkingSet ws(reader, std::nullopt, exec);
  return std::move(ws.switch_to(coord).volume);
}

}  // namespace nea
