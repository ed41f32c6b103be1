#pragma once

// Framed little-endian message codec. See docs/wire-format.md.
//
//   frame  := "DSV1" | type:u8 | payload_len:u32 | payload
//   matrix := rows:u32 | cols:u32 | rows*cols x u64        (values < m)
//   encmat := ct_count:u32 | ct_count x (slot_count:u32 | depth:u16 | slot_count x u64)

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dataseal/he_backend.hpp"
#include "dataseal/sealcodec.hpp"

namespace dataseal {

inline constexpr std::uint16_t kProtocolVersion = 1;
inline constexpr std::uint32_t kMaxPayload = 1u << 26;
inline constexpr std::size_t kHeaderSize = 9;

enum class MsgType : std::uint8_t { Hello = 1, Job = 2, Result = 3, Error = 4 };

struct HelloMsg {
  std::uint16_t version = kProtocolVersion;
  std::uint32_t slot_count = 0;
  std::uint64_t modulus = 0;

  friend bool operator==(const HelloMsg&, const HelloMsg&) = default;
};

/// MUL: one encrypted operand plus one public operand, or two encrypted
/// operands. ADD: two encrypted. POLY: one encrypted and exponent >= 1.
/// The exponent field is zero for MUL and ADD.
struct JobMsg {
  std::uint64_t job_id = 0;
  OpKind op = OpKind::Mul;
  std::uint32_t exponent = 0;
  std::vector<EncryptedMatrix> encrypted;
  std::vector<Matrix> public_operands;

  friend bool operator==(const JobMsg&, const JobMsg&) = default;
};

struct ResultMsg {
  std::uint64_t job_id = 0;
  EncryptedMatrix result;

  friend bool operator==(const ResultMsg&, const ResultMsg&) = default;
};

struct ErrorMsg {
  std::uint64_t job_id = 0;
  Errc code = Errc::Internal;
  std::string text;

  friend bool operator==(const ErrorMsg&, const ErrorMsg&) = default;
};

using Message = std::variant<HelloMsg, JobMsg, ResultMsg, ErrorMsg>;

MsgType message_type(const Message& m) noexcept;

/// Decoding constraints negotiated by HELLO. JOB and RESULT need a modulus to
/// range-check values; a known slot count pins every ciphertext width.
struct WireContext {
  std::optional<Modulus> modulus;
  std::optional<std::size_t> slot_count;
};

struct FrameHeader {
  MsgType type;
  std::uint32_t payload_len;
};

std::vector<std::uint8_t> encode_frame(const Message& msg);

/// Parses exactly one frame occupying all of `bytes`.
Message decode_frame(std::span<const std::uint8_t> bytes, const WireContext& ctx);

FrameHeader decode_header(std::span<const std::uint8_t> header);
Message decode_payload(MsgType type, std::span<const std::uint8_t> payload, const WireContext& ctx);

/// On the wire an encrypted matrix carries no logical column count; decoders
/// set cols = slot_count and the receiver narrows it from job metadata.
EncryptedMatrix with_logical_cols(EncryptedMatrix e, std::size_t cols);

}  // namespace dataseal
