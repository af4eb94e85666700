#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rig {

enum class Errc {
  // input / parsing
  IoError,
  ParseError,
  SchemaError,
  MissingManifest,
  NonMonotonic,
  CorruptRecord,
  InvalidArgument,
  // frame graph
  DuplicateEdge,
  SelfLoop,
  UnknownFrame,
  Disconnected,
  // clocks
  InsufficientData,
  DegenerateSpan,
  SkewOutOfRange,
  StreamMismatch,
  MissingModel,
  BadSpec,
  EmptyStream,
  // allan
  TooShort,
  NoWhiteNoiseRegion,
  NoRandomWalkRegion,
  // camera
  NoConvergence,
  NoValidProjections,
  DimensionMismatch,
  // trajectories
  NoMatches,
  Degenerate,
  // dataset
  EmptySequence,
  UnknownStream,
};

std::string_view errc_name(Errc code) noexcept;

/// True for codes caused by malformed or unreadable input (as opposed to
/// well-formed input that violates a domain rule).
bool is_input_error(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace rig
