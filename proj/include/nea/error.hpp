#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nea {

enum class Errc {
  // manifest / volume ingestion
  ManifestMissing,
  ManifestMalformed,
  CoordinateGap,
  CoordinateDuplicate,
  VolumeOpen,
  ShortRead,
  NonFinite,
  // arguments and numeric domains
  InvalidArgument,
  Overflow,
  DimensionMismatch,
  // codebook container
  BadMagic,
  VersionMismatch,
  TruncatedHeader,
  InconsistentHeader,
  TruncatedIndex,
  OutOfBoundsOffset,
  TruncatedPayload,
  CorruptGrid,
  DecodeFailure,
  OutOfRange,
  // runtime
  BudgetExceeded,
  Io,
  Cancelled,
};

std::string_view errc_name(Errc code) noexcept;

/// Every failure the library reports is an `nea::Error` carrying a code, so
/// callers (CLI, service, fuzz tests) can tell failure modes apart without
/// parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace nea
