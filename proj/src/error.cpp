#include "rig/error.hpp"

namespace rig {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::IoError: return "IoError";
    case Errc::ParseError: return "ParseError";
    case Errc::SchemaError: return "SchemaError";
    case Errc::MissingManifest: return "MissingManifest";
    case Errc::NonMonotonic: return "NonMonotonic";
    case Errc::CorruptRecord: return "CorruptRecord";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::DuplicateEdge: return "DuplicateEdge";
    case Errc::SelfLoop: return "SelfLoop";
    case Errc::UnknownFrame: return "UnknownFrame";
    case Errc::Disconnected: return "Disconnected";
    case Errc::InsufficientData: return "InsufficientData";
    case Errc::DegenerateSpan: return "DegenerateSpan";
    case Errc::SkewOutOfRange: return "SkewOutOfRange";
    case Errc::StreamMismatch: return "StreamMismatch";
    case Errc::MissingModel: return "MissingModel";
    case Errc::BadSpec: return "BadSpec";
    case Errc::EmptyStream: return "EmptyStream";
    case Errc::TooShort: return "TooShort";
    case Errc::NoWhiteNoiseRegion: return "NoWhiteNoiseRegion";
    case Errc::NoRandomWalkRegion: return "NoRandomWalkRegion";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::NoValidProjections: return "NoValidProjections";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NoMatches: return "NoMatches";
    case Errc::Degenerate: return "Degenerate";
    case Errc::EmptySequence: return "EmptySequence";
    case Errc::UnknownStream: return "UnknownStream";
  }
  return "Unknown";
}

bool is_input_error(Errc code) noexcept {
  switch (code) {
    case Errc::IoError:
    case Errc::ParseError:
    case Errc::SchemaError:
    case Errc::MissingManifest:
    case Errc::NonMonotonic:
    case Errc::CorruptRecord:
    case Errc::InvalidArgument:
      return true;
    default:
      return false;
  }
}

}  // namespace rig
