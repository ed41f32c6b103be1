#include "dataseal/error.hpp"

namespace dataseal {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::BadMagic: return "BadMagic";
    case Errc::UnknownType: return "UnknownType";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::ValueOutOfRange: return "ValueOutOfRange";
    case Errc::Truncated: return "Truncated";
    case Errc::FrameTooLarge: return "FrameTooLarge";
    case Errc::MalformedJob: return "MalformedJob";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::ModulusMismatch: return "ModulusMismatch";
    case Errc::InvalidExponent: return "InvalidExponent";
    case Errc::GeometryError: return "GeometryError";
    case Errc::RangeError: return "RangeError";
    case Errc::InvalidLength: return "InvalidLength";
    case Errc::ZeroEntryError: return "ZeroEntryError";
    case Errc::InvalidModulus: return "InvalidModulus";
    case Errc::InvalidKey: return "InvalidKey";
    case Errc::InvalidParams: return "InvalidParams";
    case Errc::TooWide: return "TooWide";
    case Errc::DepthExceeded: return "DepthExceeded";
    case Errc::UnknownJob: return "UnknownJob";
    case Errc::TransportError: return "TransportError";
    case Errc::NotNegotiated: return "NotNegotiated";
    case Errc::DuplicateJob: return "DuplicateJob";
    case Errc::ParamsMismatch: return "ParamsMismatch";
    case Errc::LayerRejected: return "LayerRejected";
    case Errc::MalformedResult: return "MalformedResult";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::Internal: return "Internal";
  }
  return "Unregistered";
}

bool errc_is_registered(std::uint16_t raw) noexcept {
  return errc_name(static_cast<Errc>(raw)) != "Unregistered";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

}  // namespace dataseal
