#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dataseal {

/// Error registry. The numeric values double as the u16 codes carried by
/// ERROR frames on the wire, so they must never be renumbered.
enum class Errc : std::uint16_t {
  // frame codec
  BadMagic = 1,
  UnknownType = 2,
  LengthMismatch = 3,
  ValueOutOfRange = 4,
  Truncated = 5,
  FrameTooLarge = 6,
  MalformedJob = 7,

  // ring / codec
  DimensionMismatch = 16,
  ModulusMismatch = 17,
  InvalidExponent = 18,
  GeometryError = 19,
  RangeError = 20,
  InvalidLength = 21,
  ZeroEntryError = 22,
  InvalidModulus = 23,
  InvalidKey = 24,

  // backend
  InvalidParams = 32,
  TooWide = 33,
  DepthExceeded = 34,

  // protocol
  UnknownJob = 48,
  TransportError = 49,
  NotNegotiated = 50,
  DuplicateJob = 51,
  ParamsMismatch = 52,
  LayerRejected = 53,
  MalformedResult = 54,

  // adversary
  ShapeMismatch = 64,

  Internal = 255,
};

std::string_view errc_name(Errc code) noexcept;

/// True for codes present in the registry above.
bool errc_is_registered(std::uint16_t raw) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace dataseal
