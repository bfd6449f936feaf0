#include "nea/cli.hpp"

#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "nea/codebook.hpp"
#include "nea/dedup.hpp"
#include "nea/error.hpp"
#include "nea/profiler.hpp"
#include "nea/quality.hpp"
#include "nea/runtime.hpp"
#include "nea/service.hpp"

namespace nea::cli {

namespace {

namespace fs = std::filesystem;

std::atomic<bool> g_interrupted{false};

extern "C" void on_interrupt(int) {
  g_interrupted.store(true);
  std::signal(SIGINT, SIG_DFL);
}

class InterruptScope {
 public:
  InterruptScope() {
    g_interrupted.store(false);
    previous_ = std::signal(SIGINT, on_interrupt);
  }
  ~InterruptScope() { std::signal(SIGINT, previous_); }

 private:
  void (*previous_)(int);
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string format_bytes(std::uint64_t b) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%llu (%.3f MB)", static_cast<unsigned long long>(b),
                static_cast<double>(b) / (1024.0 * 1024.0));
  return buf;
}

void print_codebook(std::ostream& out, const CodebookHeader& h, const CodebookSummary& s) {
  char ratio[32];
  std::snprintf(ratio, sizeof ratio, "%.6f", static_cast<double>(h.b_rem) / static_cast<double>(h.b_tot));
  out << "format version: " << h.version << "\n"
      << "runs: " << h.shape.runs << "\n"
      << "timesteps: " << h.shape.timesteps << "\n"
      << "dims: " << to_string(h.shape.volume_dims) << "\n"
      << "block dims: " << to_string(h.spec.block_dims) << "\n"
      << "grid dims: " << to_string(h.grid) << "\n"
      << "decimals: " << h.spec.decimals << "\n"
      << "fill value: " << h.spec.fill_value << "\n"
      << "reduction: " << h.reduction.describe() << "\n"
      << "value peak: " << h.shape.value_peak << "\n"
      << "B_rem: " << h.b_rem << "\n"
      << "B_tot: " << h.b_tot << "\n"
      << "dedup ratio: " << ratio << "\n"
      << "file bytes: " << format_bytes(s.file_bytes) << "\n"
      << "header bytes: " << s.header_bytes << "\n"
      << "grid bytes: " << format_bytes(s.grid_bytes) << "\n"
      << "index bytes: " << format_bytes(s.index_bytes) << "\n"
      << "metadata bytes: " << format_bytes(s.metadata_bytes) << "\n"
      << "payload bytes: " << format_bytes(s.payload_bytes) << "\n"
      << "block table bytes: " << format_bytes(s.block_table_bytes()) << "\n";
}

void write_floats(const fs::path& path, std::span<const float> values) {
  Volume v(Dims3{static_cast<std::uint32_t>(values.size()), 1, 1});
  std::copy(values.begin(), values.end(), v.data.begin());
  write_volume_file(v, path);
}

void require_file(const fs::path& p, const char* what) {
  if (!fs::is_regular_file(p)) fail(Errc::Io, std::string(what) + " " + p.string() + " does not exist");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Deduplicating storage and streaming reconstruction for ensemble volume data", "nea"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Progress and telemetry on stderr");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic ensemble");
  std::string synth_out, synth_dims = "32x32x32";
  std::uint32_t synth_runs = 4, synth_steps = 4;
  double dup_rate = 0.5, perturbation = 1.0, peak = 1.0;
  std::uint64_t synth_seed = 0;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--runs", synth_runs, "Runs R")->check(CLI::PositiveNumber);
  synth->add_option("--timesteps", synth_steps, "Timesteps T")->check(CLI::PositiveNumber);
  synth->add_option("--dims", synth_dims, "Volume dims XxYxZ");
  synth->add_option("--dup-rate", dup_rate, "Fraction of regions shared by all runs")->check(CLI::Range(0.0, 1.0));
  synth->add_option("--perturbation", perturbation, "Per-run perturbation amplitude");
  synth->add_option("--peak", peak, "Value peak")->check(CLI::PositiveNumber);
  synth->add_option("--seed", synth_seed, "Seed");

  // process
  auto* process = app.add_subcommand("process", "Deduplicate and encode an ensemble into a codebook");
  std::string proc_manifest, proc_out, block_size = "4x4x4", reduce = "none";
  std::int32_t decimals = 0;
  std::uint32_t components = 0;
  float quality = 100.0f, fill = 0.0f;
  process->add_option("--manifest", proc_manifest, "Ensemble manifest")->required();
  process->add_option("--out", proc_out, "Codebook path")->required();
  process->add_option("--block-size", block_size, "Block dims XxYxZ");
  process->add_option("--decimals", decimals, "Decimal place for matching (may be negative)");
  process->add_option("--reduce", reduce, "none, pca or wavelet")->check(CLI::IsMember({"none", "pca", "wavelet"}));
  auto* comp_opt = process->add_option("--components", components, "PCA components kept");
  auto* qual_opt = process->add_option("--quality", quality, "Wavelet quality q in (0, 100]");
  process->add_option("--fill", fill, "Edge padding value");

  // profile
  auto* prof = app.add_subcommand("profile", "Estimate codebook size and memory for candidate parameters");
  std::string prof_manifest, grid_name = "default", prof_reduce = "pca";
  double coverage = 0.10;
  std::size_t best = 3;
  std::uint64_t prof_seed = 0;
  bool prof_json = false;
  prof->add_option("--manifest", prof_manifest, "Ensemble manifest")->required();
  prof->add_option("--coverage", coverage, "Fraction of the ensemble space to sample")
      ->check(CLI::Range(0.0, 1.0));
  prof->add_option("--best", best, "Rows to report")->check(CLI::PositiveNumber);
  prof->add_option("--grid", grid_name, "Parameter grid")->check(CLI::IsMember({"default"}));
  prof->add_option("--reduce", prof_reduce, "Reduction swept by the grid")
      ->check(CLI::IsMember({"none", "pca", "wavelet"}));
  prof->add_option("--seed", prof_seed, "Sampling seed");
  prof->add_flag("--json", prof_json, "Emit machine-readable rows");

  // inspect
  auto* inspect = app.add_subcommand("inspect", "Print a codebook's header and section sizes");
  std::string insp_cb;
  inspect->add_option("--codebook", insp_cb, "Codebook path")->required();

  // reconstruct / agree share flags
  std::string rec_cb, rec_out, agr_cb, agr_out;
  std::uint32_t rec_r = 0, rec_t = 0, agr_r = 0, agr_t = 0;
  auto* recon = app.add_subcommand("reconstruct", "Write one reconstructed volume as raw float32");
  recon->add_option("--codebook", rec_cb, "Codebook path")->required();
  recon->add_option("--run", rec_r, "Run")->required();
  recon->add_option("--timestep", rec_t, "Timestep")->required();
  recon->add_option("--out", rec_out, "Output raw file")->required();
  auto* agree = app.add_subcommand("agree", "Write the agreement grid for a reference volume as raw float32");
  agree->add_option("--codebook", agr_cb, "Codebook path")->required();
  agree->add_option("--run", agr_r, "Reference run")->required();
  agree->add_option("--timestep", agr_t, "Timestep")->required();
  agree->add_option("--out", agr_out, "Output raw file")->required();

  // quality
  auto* qual = app.add_subcommand("quality", "Compare a codebook against its source ensemble");
  std::string q_manifest, q_cb;
  std::size_t sample = 0;
  qual->add_option("--manifest", q_manifest, "Ensemble manifest")->required();
  qual->add_option("--codebook", q_cb, "Codebook path")->required();
  qual->add_option("--sample", sample, "Volumes to compare (0 = all)");

  // serve
  auto* serve = app.add_subcommand("serve", "Serve a codebook over HTTP");
  std::string s_cb, host = "127.0.0.1", static_dir;
  int port = 8080;
  double budget_mb = 0.0, idle_minutes = 10.0;
  std::size_t max_sessions = 64;
  serve->add_option("--codebook", s_cb, "Codebook path")->required();
  serve->add_option("--port", port, "TCP port")->check(CLI::Range(0, 65535));
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--budget-mb", budget_mb, "Per-session decoded block budget in MB (2^20 bytes)")
      ->check(CLI::NonNegativeNumber);
  serve->add_option("--static", static_dir, "Directory served at /");
  serve->add_option("--max-sessions", max_sessions, "Session cap")->check(CLI::PositiveNumber);
  serve->add_option("--idle-minutes", idle_minutes, "Session idle expiry")->check(CLI::PositiveNumber);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "nea: error: " << e.what() << "\n";
    return 2;
  }

  try {
    // Flag combinations are validated before touching any file.
    BlockSpec spec;
    ReductionConfig reduction;
    if (*process) {
      try {
        spec.block_dims = parse_dims(block_size);
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
      spec.decimals = decimals;
      spec.fill_value = fill;
      reduction.kind = parse_reduction(reduce);
      if (*comp_opt && reduction.kind != ReductionKind::Pca) throw UsageError("--components requires --reduce pca");
      if (*qual_opt && reduction.kind != ReductionKind::Wavelet) {
        throw UsageError("--quality requires --reduce wavelet");
      }
      if (reduction.kind == ReductionKind::Pca && !*comp_opt) throw UsageError("--reduce pca needs --components");
      reduction.components = components;
      reduction.quality = quality;
      try {
        spec.validate();
        reduction.validate(spec.block_dims);
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
    }

    if (*prof && !(coverage > 0.0)) throw UsageError("--coverage must lie in (0, 1]");

    if (*synth) {
      SyntheticParams p;
      try {
        p.shape.volume_dims = parse_dims(synth_dims);
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
      p.shape.runs = synth_runs;
      p.shape.timesteps = synth_steps;
      p.shape.value_peak = static_cast<float>(peak);
      p.duplication_rate = dup_rate;
      p.perturbation = perturbation;
      p.seed = synth_seed;
      const auto m = generate_synthetic_ensemble(p, synth_out);
      out << "wrote " << m.shape.volume_count() << " volumes of " << to_string(m.shape.volume_dims) << " to "
          << (fs::path(synth_out) / "manifest.json").string() << "\n";
      return 0;
    }

    if (*process) {
      require_file(proc_manifest, "manifest");
      const auto manifest = load_manifest(proc_manifest);
      InterruptScope interrupts;
      const auto dedup = deduplicate(manifest, spec, [&](std::size_t v, std::size_t b_rem) {
        if (g_interrupted.load()) fail(Errc::Cancelled, "interrupted");
        if (verbose) err << "dedup " << v << "/" << manifest.shape.volume_count() << " volumes, B_rem " << b_rem << "\n";
      });
      const auto summary = write_codebook(dedup, reduction, proc_out, kernels::Exec::Parallel, &g_interrupted);
      const auto reader = CodebookReader::open(proc_out);
      print_codebook(out, reader.header(), summary);
      return 0;
    }

    if (*prof) {
      require_file(prof_manifest, "manifest");
      const auto manifest = load_manifest(prof_manifest);
      ProfileOptions opt;
      opt.coverage = coverage;
      opt.seed = prof_seed;
      opt.n_best = best;
      const auto grid = default_profile_grid(parse_reduction(prof_reduce));
      const auto result = profile(manifest, grid, opt);
      const auto rows = result.best(best);
      if (prof_json) {
        out << profile_rows_json(rows) << "\n";
      } else {
        out << "sampled " << result.sampled.size() << " of " << manifest.shape.volume_count() << " volumes in "
            << result.regions.size() << " regions; " << grid.size() << " configurations\n";
        out << format_profile_table(rows);
      }
      return 0;
    }

    if (*inspect) {
      const auto reader = CodebookReader::open(insp_cb);
      print_codebook(out, reader.header(), reader.summary());
      return 0;
    }

    if (*recon) {
      const auto reader = CodebookReader::open(rec_cb);
      WorkingSet ws(reader);
      const auto result = ws.switch_to({rec_r, rec_t});
      if (verbose) err << result.telemetry.to_json() << "\n";
      write_volume_file(result.volume, rec_out);
      return 0;
    }

    if (*agree) {
      const auto reader = CodebookReader::open(agr_cb);
      const auto grid = compute_agreement(reader, {agr_r, agr_t});
      write_floats(agr_out, grid.values);
      out << "agreement grid " << to_string(grid.grid) << " over " << grid.runs << " runs: min " << grid.min()
          << " mean " << grid.mean() << "\n";
      return 0;
    }

    if (*qual) {
      require_file(q_manifest, "manifest");
      const auto manifest = load_manifest(q_manifest);
      const auto reader = CodebookReader::open(q_cb);
      const auto coords = evenly_spaced_sample(manifest.shape, sample);
      out << format_quality_report(compare_codebook(manifest, reader, coords));
      return 0;
    }

    if (*serve) {
      const auto reader = CodebookReader::open(s_cb);
      ServiceOptions opt;
      if (budget_mb > 0.0) opt.budget_bytes = static_cast<std::uint64_t>(budget_mb * 1024.0 * 1024.0);
      opt.max_sessions = max_sessions;
      opt.idle_timeout = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
          std::chrono::duration<double, std::ratio<60>>(idle_minutes));
      opt.static_dir = static_dir;
      if (verbose) opt.telemetry_log = [&err](const std::string& line) { err << line << "\n"; };
      ExplorerService service(reader, opt);
      HttpServer server(service);
      const int bound = server.bind(host, port);
      out << "serving " << s_cb << " on http://" << host << ":" << bound << "\n" << std::flush;
      InterruptScope interrupts;
      std::thread listener([&] { server.listen(); });
      while (!g_interrupted.load()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
      server.stop();
      listener.join();
      return 0;
    }
  } catch (const UsageError& e) {
    err << "nea: error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "nea: error: " << e.what() << "\n";
    return e.code() == Errc::Cancelled ? 130 : 1;
  } catch (const std::exception& e) {
    err << "nea: error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace nea::cli
