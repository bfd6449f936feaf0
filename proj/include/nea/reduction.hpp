#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nea/ensemble.hpp"
#include "nea/pca.hpp"

namespace nea {

enum class ReductionKind : std::uint32_t { None = 0, Pca = 1, Wavelet = 2 };

std::string to_string(ReductionKind kind);
ReductionKind parse_reduction(const std::string& name);

struct ReductionConfig {
  ReductionKind kind = ReductionKind::None;
  std::uint32_t components = 0;  // PCA only
  float quality = 100.0f;        // wavelet only

  void validate(Dims3 block_dims) const;
  std::string describe() const;
};

/// Lossy or lossless per-block codec behind the block lookup table.
class BlockCodec {
 public:
  virtual ~BlockCodec() = default;
  virtual ReductionKind kind() const noexcept = 0;
  virtual std::size_t elements() const noexcept = 0;
  virtual std::vector<std::byte> encode(std::span<const float> block) const = 0;
  /// Throws Error(DecodeFailure) on a malformed payload.
  virtual void decode(std::span<const std::byte> payload, std::span<float> out) const = 0;
};

/// Raw little-endian float32 blocks.
std::unique_ptr<BlockCodec> make_raw_codec(std::size_t elements);
/// m float32 PCA coefficients per block.
std::unique_ptr<BlockCodec> make_pca_codec(PcaModel model);
/// f32 quantizer scale followed by the run-length Huffman stream of the
/// thresholded, quantized Haar coefficients.
std::unique_ptr<BlockCodec> make_wavelet_codec(Dims3 block_dims, float quality);

const PcaModel* pca_model_of(const BlockCodec& codec) noexcept;

}  // namespace nea
