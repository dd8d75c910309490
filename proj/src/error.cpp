#include "ca/error.hpp"

namespace ca {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::Io: return "Io";
    case Errc::BadMagic: return "BadMagic";
    case Errc::VersionMismatch: return "VersionMismatch";
    case Errc::TruncatedFile: return "TruncatedFile";
    case Errc::NonFiniteValue: return "NonFiniteValue";
    case Errc::BadIds: return "BadIds";
    case Errc::BadJson: return "BadJson";
    case Errc::MissingLabel: return "MissingLabel";
    case Errc::DegenerateInput: return "DegenerateInput";
    case Errc::EmptyRange: return "EmptyRange";
    case Errc::DimTooLarge: return "DimTooLarge";
    case Errc::KTooLarge: return "KTooLarge";
    case Errc::KTooLargeForLeaves: return "KTooLargeForLeaves";
    case Errc::BadThreshold: return "BadThreshold";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::NonSquare: return "NonSquare";
    case Errc::MismatchedK: return "MismatchedK";
    case Errc::NoRetainedSamples: return "NoRetainedSamples";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::Internal: return "Internal";
  }
  return "Unknown";
}

}  // namespace ca
