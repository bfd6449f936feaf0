#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "nea/codebook.hpp"
#include "nea/ensemble.hpp"
#include "nea/kernels.hpp"

namespace nea {

/// keep = CB & NB, load = NB - keep, discard = CB - keep. All sorted ascending.
struct WorkingSetDiff {
  std::vector<std::uint32_t> keep;
  std::vector<std::uint32_t> load;
  std::vector<std::uint32_t> discard;
};

/// Inputs are treated as sets; duplicates and order are ignored.
WorkingSetDiff diff_working_set(std::span<const std::uint32_t> current, std::span<const std::uint32_t> next);

/// Distinct IDs of a grid, ascending.
std::vector<std::uint32_t> distinct_ids(std::span<const std::uint32_t> grid);

struct SwitchTelemetry {
  EnsembleCoordinate coord;
  std::size_t keep = 0;
  std::size_t load = 0;
  std::size_t discard = 0;
  std::uint64_t blocks_read = 0;
  std::uint64_t bytes_read = 0;
  double wall_ms = 0.0;

  /// One structured log line (JSON object, no trailing newline).
  std::string to_json() const;
};

struct WorkingSetCounters {
  std::uint64_t switches = 0;
  std::uint64_t loads = 0;
  std::uint64_t discards = 0;
  std::uint64_t keeps = 0;
  std::uint64_t bytes_read = 0;
};

/// Resident decoded blocks for one viewer. Single owner; several working
/// sets may share one reader.
class WorkingSet {
 public:
  struct SwitchResult {
    Volume volume;
    WorkingSetDiff diff;
    SwitchTelemetry telemetry;
  };
  using TelemetrySink = std::function<void(const SwitchTelemetry&)>;

  explicit WorkingSet(const CodebookReader& reader, std::optional<std::uint64_t> budget_bytes = std::nullopt,
                      kernels::Exec exec = kernels::Exec::Parallel);

  /// Moves to `coord`: fetches and decodes only the blocks in `load`, evicts
  /// exactly `discard`, and assembles the volume. Throws BudgetExceeded
  /// before touching any state when the new working set would not fit.
  SwitchResult switch_to(EnsembleCoordinate coord);

  void set_telemetry_sink(TelemetrySink sink) { sink_ = std::move(sink); }

  std::optional<EnsembleCoordinate> current() const noexcept { return current_; }
  const std::vector<std::uint32_t>& grid() const noexcept { return grid_; }
  std::size_t resident_blocks() const noexcept { return table_.size(); }
  std::uint64_t resident_bytes() const noexcept;
  std::uint64_t block_bytes() const noexcept;
  std::vector<std::uint32_t> resident_ids() const;
  bool resident(std::uint32_t id) const { return table_.count(id) != 0; }
  const WorkingSetCounters& counters() const noexcept { return counters_; }
  std::optional<std::uint64_t> budget_bytes() const noexcept { return budget_; }

 private:
  const CodebookReader* reader_;
  std::optional<std::uint64_t> budget_;
  kernels::Exec exec_;
  std::optional<EnsembleCoordinate> current_;
  std::vector<std::uint32_t> grid_;
  std::unordered_map<std::uint32_t, std::vector<float>> table_;
  WorkingSetCounters counters_;
  TelemetrySink sink_;
};

/// Fraction of runs whose block ID matches the reference run's, per cell,
/// at the reference timestep. Reads grids only.
struct AgreementGrid {
  EnsembleCoordinate reference;
  GridDims grid;
  std::uint32_t runs = 0;
  std::vector<std::uint32_t> counts;  // grid storage order, i fastest
  std::vector<float> values;          // counts / runs

  float min() const noexcept;
  double mean() const noexcept;
};

AgreementGrid compute_agreement(const CodebookReader& reader, EnsembleCoordinate reference,
                                kernels::Exec exec = kernels::Exec::Parallel, ReadStats* stats = nullptr);

/// Same computation over already-loaded grids (one per run).
AgreementGrid agreement_from_grids(std::span<const std::vector<std::uint32_t>> run_grids, GridDims grid,
                                   EnsembleCoordinate reference, kernels::Exec exec = kernels::Exec::Parallel);

/// Decodes and assembles one volume without a working set.
Volume reconstruct_volume(const CodebookReader& reader, EnsembleCoordinate coord,
                          kernels::Exec exec = kernels::Exec::Parallel);

}  // namespace nea
