#include "nea/reduction.hpp"

#include <cmath>
#include <cstdio>

#include "nea/bytes.hpp"
#include "nea/entropy.hpp"
#include "nea/error.hpp"
#include "nea/wavelet.hpp"

namespace nea {

std::string to_string(ReductionKind kind) {
  switch (kind) {
    case ReductionKind::None: return "none";
    case ReductionKind::Pca: return "pca";
    case ReductionKind::Wavelet: return "wavelet";
  }
  return "unknown";
}

ReductionKind parse_reduction(const std::string& name) {
  if (name == "none") return ReductionKind::None;
  if (name == "pca") return ReductionKind::Pca;
  if (name == "wavelet") return ReductionKind::Wavelet;
  fail(Errc::InvalidArgument, "unknown reduction '" + name + "' (expected none, pca or wavelet)");
}

void ReductionConfig::validate(Dims3 block_dims) const {
  const auto n = block_dims.volume();
  switch (kind) {
    case ReductionKind::None: break;
    case ReductionKind::Pca:
      if (components < 1 || components > n) {
        fail(Errc::InvalidArgument, "PCA components must lie in [1, " + std::to_string(n) + "]");
      }
      break;
    case ReductionKind::Wavelet:
      if (!(quality >= 0.0f && quality <= 100.0f)) fail(Errc::InvalidArgument, "wavelet quality must lie in [0, 100]");
      if (!is_power_of_two(block_dims.x) || !is_power_of_two(block_dims.y) || !is_power_of_two(block_dims.z)) {
        fail(Errc::InvalidArgument, "wavelet reduction needs power-of-two block dims, got " + to_string(block_dims));
      }
      break;
    default: fail(Errc::InvalidArgument, "unknown reduction kind");
  }
}

std::string ReductionConfig::describe() const {
  switch (kind) {
    case ReductionKind::Pca: return "pca(m=" + std::to_string(components) + ")";
    case ReductionKind::Wavelet: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "wavelet(q=%g)", static_cast<double>(quality));
      return buf;
    }
    default: return "none";
  }
}

namespace {

class RawCodec final : public BlockCodec {
 public:
  explicit RawCodec(std::size_t n) : n_(n) {}
  ReductionKind kind() const noexcept override { return ReductionKind::None; }
  std::size_t elements() const noexcept override { return n_; }

  std::vector<std::byte> encode(std::span<const float> block) const override {
    if (block.size() != n_) fail(Errc::DimensionMismatch, "raw codec block size mismatch");
    std::vector<std::byte> out(4 * n_);
    for (std::size_t i = 0; i < n_; ++i) bytes::store_le(out.data() + 4 * i, block[i]);
    return out;
  }
  void decode(std::span<const std::byte> payload, std::span<float> out) const override {
    if (payload.size() != 4 * n_ || out.size() != n_) fail(Errc::DecodeFailure, "raw block payload has wrong length");
    for (std::size_t i = 0; i < n_; ++i) out[i] = bytes::load_le<float>(payload.data() + 4 * i);
  }

 private:
  std::size_t n_;
};

class PcaCodec final : public BlockCodec {
 public:
  explicit PcaCodec(PcaModel model) : model_(std::move(model)) {}
  ReductionKind kind() const noexcept override { return ReductionKind::Pca; }
  std::size_t elements() const noexcept override { return model_.n; }
  const PcaModel& model() const noexcept { return model_; }

  std::vector<std::byte> encode(std::span<const float> block) const override {
    const auto coeffs = pca_encode(block, model_);
    std::vector<std::byte> out(4 * coeffs.size());
    for (std::size_t i = 0; i < coeffs.size(); ++i) bytes::store_le(out.data() + 4 * i, coeffs[i]);
    return out;
  }
  void decode(std::span<const std::byte> payload, std::span<float> out) const override {
    if (payload.size() != 4 * std::size_t{model_.m}) fail(Errc::DecodeFailure, "PCA payload has wrong length");
    std::vector<float> coeffs(model_.m);
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
      coeffs[i] = bytes::load_le<float>(payload.data() + 4 * i);
      if (!std::isfinite(coeffs[i])) fail(Errc::DecodeFailure, "PCA payload holds a non-finite coefficient");
    }
    pca_decode_into(coeffs, model_, out);
  }

 private:
  PcaModel model_;
};

class WaveletCodec final : public BlockCodec {
 public:
  WaveletCodec(Dims3 dims, float quality) : dims_(dims), quality_(quality) {
    ReductionConfig{ReductionKind::Wavelet, 0, quality}.validate(dims);
  }
  ReductionKind kind() const noexcept override { return ReductionKind::Wavelet; }
  std::size_t elements() const noexcept override { return dims_.volume(); }

  std::vector<std::byte> encode(std::span<const float> block) const override {
    if (block.size() != dims_.volume()) fail(Errc::DimensionMismatch, "wavelet codec block size mismatch");
    std::vector<double> coeffs(block.begin(), block.end());
    haar_forward(coeffs, dims_);
    soft_threshold(coeffs, quality_);
    const auto q = quantize(coeffs);
    const auto stream = rle_huffman_encode(q.values);
    std::vector<std::byte> out(4 + stream.size());
    bytes::store_le(out.data(), q.scale);
    std::copy(stream.begin(), stream.end(), out.begin() + 4);
    return out;
  }
  void decode(std::span<const std::byte> payload, std::span<float> out) const override {
    if (payload.size() < 5 || out.size() != dims_.volume()) fail(Errc::DecodeFailure, "wavelet payload too short");
    const float scale = bytes::load_le<float>(payload.data());
    if (!std::isfinite(scale) || scale < 0.0f) fail(Errc::DecodeFailure, "wavelet payload has an invalid scale");
    const auto ints = rle_huffman_decode(payload.subspan(4), dims_.volume());
    auto coeffs = dequantize(scale, ints);
    haar_inverse(coeffs, dims_);
    for (std::size_t i = 0; i < coeffs.size(); ++i) out[i] = static_cast<float>(coeffs[i]);
  }

 private:
  Dims3 dims_;
  float quality_;
};

}  // namespace

std::unique_ptr<BlockCodec> make_raw_codec(std::size_t elements) { return std::make_unique<RawCodec>(elements); }
std::unique_ptr<BlockCodec> make_pca_codec(PcaModel model) { return std::make_unique<PcaCodec>(std::move(model)); }
std::unique_ptr<BlockCodec> make_wavelet_codec(Dims3 block_dims, float quality) {
  return std::make_unique<WaveletCodec>(block_dims, quality);
}

const PcaModel* pca_model_of(const BlockCodec& codec) noexcept {
  const auto* pca = dynamic_cast<const PcaCodec*>(&codec);
  return pca ? &pca->model() : nullptr;
}

}  // namespace nea
