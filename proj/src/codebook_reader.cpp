#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <limits>

#include "nea/bytes.hpp"
#include "nea/codebook.hpp"
#include "nea/error.hpp"
#include "nea/wavelet.hpp"

namespace nea {

namespace fs = std::filesystem;

namespace {

constexpr std::uint32_t kMaxAxis = 1U << 20;
constexpr std::uint64_t kMaxBlockElements = 1ULL << 24;

class FileHandle {
 public:
  explicit FileHandle(const fs::path& path) : fd_(::open(path.c_str(), O_RDONLY | O_CLOEXEC)) {
    if (fd_ < 0) fail(Errc::Io, "cannot open codebook " + path.string() + ": " + std::strerror(errno));
  }
  FileHandle(const FileHandle&) = delete;
  FileHandle& operator=(const FileHandle&) = delete;
  ~FileHandle() {
    if (fd_ >= 0) ::close(fd_);
  }

  std::uint64_t size() const {
    struct stat st {};
    if (::fstat(fd_, &st) != 0) fail(Errc::Io, std::string("fstat failed: ") + std::strerror(errno));
    return static_cast<std::uint64_t>(st.st_size);
  }

  /// Reads up to out.size() bytes at `offset`; returns the count actually read.
  std::size_t read_at(std::uint64_t offset, std::span<std::byte> out) const {
    std::size_t done = 0;
    while (done < out.size()) {
      const ssize_t got = ::pread(fd_, out.data() + done, out.size() - done, static_cast<off_t>(offset + done));
      if (got < 0) {
        if (errno == EINTR) continue;
        fail(Errc::Io, std::string("pread failed: ") + std::strerror(errno));
      }
      if (got == 0) break;
      done += static_cast<std::size_t>(got);
    }
    return done;
  }

 private:
  int fd_;
};

bool mul_overflows(std::uint64_t a, std::uint64_t b, std::uint64_t& out) {
  return __builtin_mul_overflow(a, b, &out);
}

void inconsistent(const std::string& what) { fail(Errc::InconsistentHeader, "codebook header: " + what); }

}  // namespace

CodebookHeader parse_codebook_header(std::span<const std::byte> raw, std::uint64_t file_bytes) {
  if (raw.size() < 4 || std::memcmp(raw.data(), kCodebookMagic.data(), 4) != 0) {
    fail(Errc::BadMagic, "not a codebook (bad magic)");
  }
  if (raw.size() < 8) fail(Errc::TruncatedHeader, "codebook header truncated");
  const auto version = bytes::load_le<std::uint32_t>(raw.data() + 4);
  if (version != kCodebookVersion) {
    fail(Errc::VersionMismatch, "codebook version " + std::to_string(version) + " is not supported (expected " +
                                    std::to_string(kCodebookVersion) + ")");
  }
  if (raw.size() < kCodebookHeaderSize) fail(Errc::TruncatedHeader, "codebook header truncated");

  bytes::Reader r(raw.subspan(8, kCodebookHeaderSize - 8));
  CodebookHeader h;
  h.version = version;
  h.shape.runs = r.get<std::uint32_t>();
  h.shape.timesteps = r.get<std::uint32_t>();
  h.shape.volume_dims = {r.get<std::uint32_t>(), r.get<std::uint32_t>(), r.get<std::uint32_t>()};
  h.spec.block_dims = {r.get<std::uint32_t>(), r.get<std::uint32_t>(), r.get<std::uint32_t>()};
  h.spec.decimals = r.get<std::int32_t>();
  h.spec.fill_value = r.get<float>();
  h.grid = {r.get<std::uint32_t>(), r.get<std::uint32_t>(), r.get<std::uint32_t>()};
  const auto kind = r.get<std::uint32_t>();
  h.reduction.components = r.get<std::uint32_t>();
  h.reduction.quality = r.get<float>();
  const auto flags = r.get<std::uint32_t>();
  h.b_rem = r.get<std::uint32_t>();
  h.b_tot = r.get<std::uint64_t>();
  h.shape.value_peak = r.get<float>();
  const auto reserved = r.get<std::uint32_t>();
  for (Section* s : {&h.grids, &h.index, &h.metadata, &h.payloads}) {
    s->offset = r.get<std::uint64_t>();
    s->size = r.get<std::uint64_t>();
  }

  if (h.shape.runs < 1 || h.shape.timesteps < 1 || h.shape.runs > kMaxAxis || h.shape.timesteps > kMaxAxis) {
    inconsistent("ensemble shape out of range");
  }
  for (const auto d : {h.shape.volume_dims.x, h.shape.volume_dims.y, h.shape.volume_dims.z,
                       h.spec.block_dims.x, h.spec.block_dims.y, h.spec.block_dims.z}) {
    if (d < 1 || d > kMaxAxis) inconsistent("dimension out of range");
  }
  if (h.spec.elements() > kMaxBlockElements) inconsistent("block too large");
  if (h.spec.decimals < kMinDecimals || h.spec.decimals > kMaxDecimals) inconsistent("decimals out of range");
  if (!std::isfinite(h.spec.fill_value)) inconsistent("fill value not finite");
  if (!(h.shape.value_peak > 0.0f) || !std::isfinite(h.shape.value_peak)) inconsistent("value peak invalid");
  if (h.grid != grid_dims(h.shape.volume_dims, h.spec.block_dims)) inconsistent("grid dims disagree with block dims");
  if (flags > 1 || reserved != 0) inconsistent("unknown flags");
  h.pca_rank_deficient = flags & 1U;
  if (kind > 2) inconsistent("unknown reduction kind " + std::to_string(kind));
  h.reduction.kind = static_cast<ReductionKind>(kind);
  try {
    h.reduction.validate(h.spec.block_dims);
  } catch (const Error& e) {
    inconsistent(e.what());
  }

  std::uint64_t cells = 0, total = 0, grid_bytes = 0;
  if (mul_overflows(h.grid.volume(), h.shape.volume_count(), total) || mul_overflows(total, 4, grid_bytes)) {
    inconsistent("grid section overflows");
  }
  cells = h.grid.volume();
  (void)cells;
  if (h.b_tot != total) inconsistent("B_tot disagrees with the ensemble shape");
  if (h.b_rem < 1 || h.b_rem > h.b_tot) inconsistent("B_rem out of range");

  std::uint64_t meta_bytes = 0;
  const std::uint64_t n = h.spec.elements();
  if (h.reduction.kind == ReductionKind::Pca) {
    meta_bytes = 8 + 4 * n * (std::uint64_t{h.reduction.components} + 1);
  } else if (h.reduction.kind == ReductionKind::Wavelet) {
    meta_bytes = 16;
  }
  if (h.grids.offset != kCodebookHeaderSize || h.grids.size != grid_bytes) inconsistent("grid section misplaced");
  if (h.index.offset != h.grids.end() || h.index.size != std::uint64_t{kIndexEntrySize} * h.b_rem) {
    inconsistent("index section misplaced");
  }
  if (h.metadata.offset != h.index.end() || h.metadata.size != meta_bytes) inconsistent("metadata section misplaced");
  if (h.payloads.offset != h.metadata.end() || h.payloads.size > std::numeric_limits<std::uint64_t>::max() / 2) {
    inconsistent("payload section misplaced");
  }
  if (file_bytes < h.metadata.end()) {
    fail(Errc::TruncatedIndex, "codebook truncated before the end of its index/metadata (" +
                                   std::to_string(file_bytes) + " of " + std::to_string(h.metadata.end()) +
                                   " bytes)");
  }
  return h;
}

struct CodebookReader::Impl {
  explicit Impl(const fs::path& p) : file(p) {}
  FileHandle file;
  std::uint64_t file_bytes = 0;
  CodebookHeader header;
  std::vector<IndexEntry> index;
  std::unique_ptr<BlockCodec> codec;
};

CodebookReader::CodebookReader(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
CodebookReader::CodebookReader(CodebookReader&&) noexcept = default;
CodebookReader& CodebookReader::operator=(CodebookReader&&) noexcept = default;
CodebookReader::~CodebookReader() = default;

CodebookReader CodebookReader::open(const fs::path& path) {
  if (!fs::exists(path)) fail(Errc::Io, "codebook " + path.string() + " does not exist");
  auto impl = std::make_unique<Impl>(path);
  impl->file_bytes = impl->file.size();

  std::vector<std::byte> head(std::min<std::uint64_t>(impl->file_bytes, kCodebookHeaderSize));
  head.resize(impl->file.read_at(0, head));
  impl->header = parse_codebook_header(head, impl->file_bytes);
  const auto& h = impl->header;

  std::vector<std::byte> raw(h.index.size);
  if (impl->file.read_at(h.index.offset, raw) != raw.size()) fail(Errc::TruncatedIndex, "codebook index truncated");
  impl->index.resize(h.b_rem);
  std::uint64_t next_free = 0;
  for (std::uint32_t id = 0; id < h.b_rem; ++id) {
    auto& e = impl->index[id];
    e.offset = bytes::load_le<std::uint64_t>(raw.data() + kIndexEntrySize * id);
    e.length = bytes::load_le<std::uint64_t>(raw.data() + kIndexEntrySize * id + 8);
    if (e.length == 0 || e.offset < next_free || e.offset > h.payloads.size ||
        e.length > h.payloads.size - e.offset) {
      fail(Errc::OutOfBoundsOffset, "index entry " + std::to_string(id) + " (offset " + std::to_string(e.offset) +
                                        ", length " + std::to_string(e.length) +
                                        ") lies outside the payload section or overlaps its predecessor");
    }
    next_free = e.offset + e.length;
  }

  std::vector<std::byte> meta(h.metadata.size);
  if (impl->file.read_at(h.metadata.offset, meta) != meta.size()) {
    fail(Errc::TruncatedIndex, "codebook metadata truncated");
  }
  const std::uint32_t n = static_cast<std::uint32_t>(h.spec.elements());
  bytes::Reader mr(meta);
  switch (h.reduction.kind) {
    case ReductionKind::Pca: {
      PcaModel model;
      model.n = mr.get<std::uint32_t>();
      model.m = mr.get<std::uint32_t>();
      if (model.n != n || model.m != h.reduction.components) inconsistent("PCA metadata disagrees with header");
      model.rank_deficient = h.pca_rank_deficient;
      model.mean.resize(n);
      model.basis.resize(std::size_t{model.m} * n);
      for (auto& v : model.mean) v = mr.get<float>();
      for (auto& v : model.basis) v = mr.get<float>();
      for (const float v : model.mean) {
        if (!std::isfinite(v)) inconsistent("PCA mean not finite");
      }
      for (const float v : model.basis) {
        if (!std::isfinite(v)) inconsistent("PCA basis not finite");
      }
      impl->codec = make_pca_codec(std::move(model));
      break;
    }
    case ReductionKind::Wavelet: {
      const float q = mr.get<float>();
      const Dims3 levels{mr.get<std::uint32_t>(), mr.get<std::uint32_t>(), mr.get<std::uint32_t>()};
      const Dims3& b = h.spec.block_dims;
      if (q != h.reduction.quality || levels.x != static_cast<std::uint32_t>(std::countr_zero(b.x)) ||
          levels.y != static_cast<std::uint32_t>(std::countr_zero(b.y)) ||
          levels.z != static_cast<std::uint32_t>(std::countr_zero(b.z))) {
        inconsistent("wavelet metadata disagrees with header");
      }
      impl->codec = make_wavelet_codec(b, q);
      break;
    }
    default: impl->codec = make_raw_codec(n);
  }
  return CodebookReader(std::move(impl));
}

const CodebookHeader& CodebookReader::header() const noexcept { return impl_->header; }
const BlockCodec& CodebookReader::codec() const noexcept { return *impl_->codec; }
std::uint64_t CodebookReader::file_bytes() const noexcept { return impl_->file_bytes; }

CodebookSummary CodebookReader::summary() const noexcept {
  const auto& h = impl_->header;
  CodebookSummary s;
  s.file_bytes = impl_->file_bytes;
  s.header_bytes = kCodebookHeaderSize;
  s.grid_bytes = h.grids.size;
  s.index_bytes = h.index.size;
  s.metadata_bytes = h.metadata.size;
  s.payload_bytes = h.payloads.size;
  s.b_rem = h.b_rem;
  s.b_tot = h.b_tot;
  return s;
}

IndexEntry CodebookReader::index_entry(std::uint32_t id) const {
  if (id >= impl_->index.size()) {
    fail(Errc::OutOfRange, "block id " + std::to_string(id) + " >= B_rem " + std::to_string(impl_->index.size()));
  }
  return impl_->index[id];
}

std::vector<std::uint32_t> CodebookReader::read_grid(EnsembleCoordinate c, ReadStats* stats) const {
  const auto& h = impl_->header;
  if (c.r >= h.shape.runs || c.t >= h.shape.timesteps) {
    fail(Errc::OutOfRange, "coordinate (" + std::to_string(c.r) + "," + std::to_string(c.t) + ") outside the ensemble");
  }
  const std::size_t cells = h.cells_per_grid();
  const std::uint64_t volume = std::uint64_t{c.r} * h.shape.timesteps + c.t;
  std::vector<std::byte> raw(4 * cells);
  const auto got = impl_->file.read_at(h.grids.offset + volume * 4 * cells, raw);
  if (stats) {
    stats->bytes += got;
    ++stats->grids;
  }
  if (got != raw.size()) fail(Errc::TruncatedIndex, "grid section truncated");
  std::vector<std::uint32_t> ids(cells);
  for (std::size_t i = 0; i < cells; ++i) {
    ids[i] = bytes::load_le<std::uint32_t>(raw.data() + 4 * i);
    if (ids[i] >= h.b_rem) {
      fail(Errc::CorruptGrid, "grid (" + std::to_string(c.r) + "," + std::to_string(c.t) + ") references id " +
                                  std::to_string(ids[i]) + " >= B_rem");
    }
  }
  return ids;
}

std::vector<std::byte> CodebookReader::read_payload(std::uint32_t id, ReadStats* stats) const {
  const auto e = index_entry(id);
  const std::uint64_t at = impl_->header.payloads.offset + e.offset;
  if (at + e.length > impl_->file_bytes) {
    fail(Errc::TruncatedPayload, "payload of block " + std::to_string(id) + " extends past the end of the file");
  }
  std::vector<std::byte> raw(e.length);
  const auto got = impl_->file.read_at(at, raw);
  if (stats) {
    stats->bytes += got;
    ++stats->blocks;
  }
  if (got != raw.size()) fail(Errc::TruncatedPayload, "payload of block " + std::to_string(id) + " truncated");
  return raw;
}

std::vector<float> CodebookReader::read_block(std::uint32_t id, ReadStats* stats) const {
  const auto raw = read_payload(id, stats);
  std::vector<float> out(impl_->codec->elements());
  impl_->codec->decode(raw, out);
  return out;
}

}  // namespace nea
