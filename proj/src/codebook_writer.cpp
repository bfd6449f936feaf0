#include <bit>
#include <fstream>

#include "nea/bytes.hpp"
#include "nea/codebook.hpp"
#include "nea/error.hpp"
#include "nea/wavelet.hpp"

namespace nea {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kEncodeBatch = 4096;

std::vector<std::byte> encode_header(const CodebookHeader& h) {
  bytes::Writer w;
  for (const char c : kCodebookMagic) w.put(static_cast<std::uint8_t>(c));
  w.put(h.version);
  w.put(h.shape.runs);
  w.put(h.shape.timesteps);
  w.put(h.shape.volume_dims.x);
  w.put(h.shape.volume_dims.y);
  w.put(h.shape.volume_dims.z);
  w.put(h.spec.block_dims.x);
  w.put(h.spec.block_dims.y);
  w.put(h.spec.block_dims.z);
  w.put(h.spec.decimals);
  w.put(h.spec.fill_value);
  w.put(h.grid.x);
  w.put(h.grid.y);
  w.put(h.grid.z);
  w.put(static_cast<std::uint32_t>(h.reduction.kind));
  w.put(h.reduction.components);
  w.put(h.reduction.quality);
  w.put(static_cast<std::uint32_t>(h.pca_rank_deficient ? 1U : 0U));
  w.put(h.b_rem);
  w.put(h.b_tot);
  w.put(h.shape.value_peak);
  w.put(std::uint32_t{0});
  for (const Section* s : {&h.grids, &h.index, &h.metadata, &h.payloads}) {
    w.put(s->offset);
    w.put(s->size);
  }
  return std::move(w.data());
}

std::vector<std::byte> encode_metadata(const ReductionConfig& reduction, const BlockCodec& codec, Dims3 block) {
  bytes::Writer w;
  if (reduction.kind == ReductionKind::Pca) {
    const PcaModel* model = pca_model_of(codec);
    w.put(model->n);
    w.put(model->m);
    for (const float v : model->mean) w.put(v);
    for (const float v : model->basis) w.put(v);
  } else if (reduction.kind == ReductionKind::Wavelet) {
    w.put(reduction.quality);
    for (const std::uint32_t axis : {block.x, block.y, block.z}) {
      w.put(static_cast<std::uint32_t>(std::countr_zero(axis)));
    }
  }
  return std::move(w.data());
}

void write_all(std::ofstream& out, std::span<const std::byte> data) {
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) fail(Errc::Io, "write failed");
}

}  // namespace

std::uint64_t grid_section_bytes(const EnsembleShape& shape, Dims3 block_dims) {
  return std::uint64_t{4} * grid_dims(shape.volume_dims, block_dims).volume() * shape.volume_count();
}

std::unique_ptr<BlockCodec> make_codec(const DedupResult& dedup, const ReductionConfig& reduction) {
  reduction.validate(dedup.spec.block_dims);
  const auto n = static_cast<std::uint32_t>(dedup.spec.elements());
  switch (reduction.kind) {
    case ReductionKind::Pca: return make_pca_codec(fit_pca(dedup.representatives, n, reduction.components));
    case ReductionKind::Wavelet: return make_wavelet_codec(dedup.spec.block_dims, reduction.quality);
    default: return make_raw_codec(n);
  }
}

CodebookSummary write_codebook(const DedupResult& dedup, const ReductionConfig& reduction, const fs::path& path,
                               kernels::Exec exec, const std::atomic<bool>* cancel) {
  const auto& shape = dedup.shape;
  if (dedup.coords.size() != shape.volume_count() || dedup.grids.size() != dedup.coords.size()) {
    fail(Errc::InvalidArgument, "codebooks need a dedup result covering every ensemble volume");
  }
  for (std::size_t v = 0; v < dedup.coords.size(); ++v) {
    const EnsembleCoordinate expect{static_cast<std::uint32_t>(v / shape.timesteps),
                                    static_cast<std::uint32_t>(v % shape.timesteps)};
    if (dedup.coords[v] != expect) fail(Errc::InvalidArgument, "dedup result is not in (r, t) scan order");
  }
  if (dedup.b_rem() == 0) fail(Errc::InvalidArgument, "dedup result holds no blocks");

  const auto codec = make_codec(dedup, reduction);
  const auto metadata = encode_metadata(reduction, *codec, dedup.spec.block_dims);

  CodebookHeader h;
  h.shape = shape;
  h.spec = dedup.spec;
  h.grid = dedup.grid;
  h.reduction = reduction;
  if (const auto* model = pca_model_of(*codec)) h.pca_rank_deficient = model->rank_deficient;
  h.b_rem = static_cast<std::uint32_t>(dedup.b_rem());
  h.b_tot = dedup.b_tot;
  h.grids = {kCodebookHeaderSize, grid_section_bytes(shape, dedup.spec.block_dims)};
  h.index = {h.grids.end(), std::uint64_t{kIndexEntrySize} * h.b_rem};
  h.metadata = {h.index.end(), metadata.size()};
  h.payloads = {h.metadata.end(), 0};

  const fs::path partial = fs::path(path.string() + ".partial");
  try {
    std::ofstream out(partial, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::Io, "cannot create " + partial.string());
    write_all(out, encode_header(h));  // rewritten once payload sizes are known

    bytes::Writer grid_bytes;
    for (const auto& grid : dedup.grids) {
      for (const std::uint32_t id : grid) grid_bytes.put(id);
      write_all(out, grid_bytes.view());
      grid_bytes.data().clear();
    }
    const std::vector<std::byte> index_placeholder(h.index.size);
    write_all(out, index_placeholder);
    write_all(out, metadata);

    const std::size_t n = dedup.spec.elements();
    std::vector<IndexEntry> index(h.b_rem);
    std::uint64_t cursor = 0;
    for (std::size_t first = 0; first < h.b_rem; first += kEncodeBatch) {
      if (cancel && cancel->load()) fail(Errc::Cancelled, "codebook write cancelled");
      const std::size_t count = std::min<std::size_t>(kEncodeBatch, h.b_rem - first);
      const auto payloads = kernels::encode_blocks(
          *codec, std::span<const float>(dedup.representatives).subspan(first * n, count * n), exec);
      for (std::size_t b = 0; b < count; ++b) {
        index[first + b] = {cursor, payloads[b].size()};
        cursor += payloads[b].size();
        write_all(out, payloads[b]);
      }
    }
    h.payloads.size = cursor;

    bytes::Writer idx;
    for (const auto& e : index) {
      idx.put(e.offset);
      idx.put(e.length);
    }
    out.seekp(static_cast<std::streamoff>(h.index.offset));
    write_all(out, idx.view());
    out.seekp(0);
    write_all(out, encode_header(h));
    out.close();
    if (!out) fail(Errc::Io, "failed closing " + partial.string());
    std::error_code ec;
    fs::rename(partial, path, ec);
    if (ec) fail(Errc::Io, "cannot move codebook into place: " + ec.message());
  } catch (...) {
    std::error_code ignored;
    fs::remove(partial, ignored);
    throw;
  }

  CodebookSummary s;
  s.header_bytes = kCodebookHeaderSize;
  s.grid_bytes = h.grids.size;
  s.index_bytes = h.index.size;
  s.metadata_bytes = h.metadata.size;
  s.payload_bytes = h.payloads.size;
  s.file_bytes = h.payloads.end();
  s.b_rem = h.b_rem;
  s.b_tot = h.b_tot;
  return s;
}

}  // namespace nea
