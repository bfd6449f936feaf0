#include "nea/error.hpp"

namespace nea {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::ManifestMissing: return "manifest-missing";
    case Errc::ManifestMalformed: return "manifest-malformed";
    case Errc::CoordinateGap: return "coordinate-gap";
    case Errc::CoordinateDuplicate: return "coordinate-duplicate";
    case Errc::VolumeOpen: return "volume-open";
    case Errc::ShortRead: return "short-read";
    case Errc::NonFinite: return "non-finite";
    case Errc::InvalidArgument: return "invalid-argument";
    case Errc::Overflow: return "overflow";
    case Errc::DimensionMismatch: return "dimension-mismatch";
    case Errc::BadMagic: return "bad-magic";
    case Errc::VersionMismatch: return "version-mismatch";
    case Errc::TruncatedHeader: return "truncated-header";
    case Errc::InconsistentHeader: return "inconsistent-header";
    case Errc::TruncatedIndex: return "truncated-index";
    case Errc::OutOfBoundsOffset: return "out-of-bounds-offset";
    case Errc::TruncatedPayload: return "truncated-payload";
    case Errc::CorruptGrid: return "corrupt-grid";
    case Errc::DecodeFailure: return "decode-failure";
    case Errc::OutOfRange: return "out-of-range";
    case Errc::BudgetExceeded: return "budget-exceeded";
    case Errc::Io: return "io";
    case Errc::Cancelled: return "cancelled";
  }
  return "unknown";
}

}  // namespace nea
