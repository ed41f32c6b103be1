#pragma once

// Secret-keyed checksum encoding and verification for outsourced matrix
// multiplication, addition and element-wise powers, plus the unkeyed
// column-sum ABFT baseline.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dataseal/ring.hpp"

namespace dataseal {

enum class OpKind : std::uint8_t { Mul = 1, Add = 2, Poly = 3 };

std::string_view op_name(OpKind op) noexcept;
OpKind parse_op(std::string_view name);

enum class EncodingTag : std::uint8_t { MulLeft, AddLeft, AddRight, Poly, AbftBaseline };

enum class Check : std::uint8_t { WeightedChecksum, GoldenOutput };

std::string_view check_name(Check c) noexcept;

/// Client-held 128-bit key material. Never placed in a protocol message.
class ClientSecret {
 public:
  explicit ClientSecret(std::array<std::uint8_t, 16> bytes) : bytes_(bytes) {}

  static ClientSecret random();
  /// Exactly 32 hex characters.
  static ClientSecret from_hex(std::string_view hex);
  /// Raw 16-byte key file.
  static ClientSecret from_file(const std::string& path);

  std::span<const std::uint8_t, 16> bytes() const noexcept { return bytes_; }

  friend bool operator==(const ClientSecret&, const ClientSecret&) = default;

 private:
  std::array<std::uint8_t, 16> bytes_;
};

class SessionNonce {
 public:
  explicit SessionNonce(std::array<std::uint8_t, 16> bytes) : bytes_(bytes) {}

  /// prefix || counter, both little-endian.
  static SessionNonce from_counter(std::uint64_t prefix, std::uint64_t counter);
  static SessionNonce random();

  std::span<const std::uint8_t, 16> bytes() const noexcept { return bytes_; }

  friend bool operator==(const SessionNonce&, const SessionNonce&) = default;

 private:
  std::array<std::uint8_t, 16> bytes_;
};

/// Secret weight row vk (all entries nonzero) and the scalar alpha that forms
/// the golden input.
class VerificationKey {
 public:
  /// Validates vk entries in [1, m) and alpha in [2, m). For the toy modulus
  /// m = 2 the only admissible alpha is 1.
  static VerificationKey make(RowVector weights, RingScalar alpha);
  /// All-ones weights with alpha = 1. Only meaningful for the ABFT baseline.
  static VerificationKey abft_ones(const Modulus& mod, std::size_t length);

  const RowVector& weights() const noexcept { return weights_; }
  RingScalar weight(std::size_t i) const { return weights_.at(0, i); }
  RingScalar alpha() const noexcept { return alpha_; }
  std::size_t length() const noexcept { return weights_.cols(); }
  const Modulus& modulus() const noexcept { return weights_.modulus(); }

  friend bool operator==(const VerificationKey& a, const VerificationKey& b) noexcept {
    return a.weights_ == b.weights_ && a.alpha_ == b.alpha_;
  }

 private:
  VerificationKey(RowVector weights, RingScalar alpha) : weights_(std::move(weights)), alpha_(alpha) {}

  RowVector weights_;
  RingScalar alpha_;
};

/// Per-session keys from a keyed pseudorandom stream with domain separation
/// "DATASEAL-v1" || op || length || nonce. Deterministic in its inputs.
VerificationKey derive_keys(const ClientSecret& secret, const SessionNonce& nonce, OpKind op,
                            std::size_t length, const Modulus& mod);

struct EncodedMatrix {
  Matrix payload;  // original rows, then checksum rows
  std::size_t original_rows = 0;
  std::size_t appended_rows = 0;
  EncodingTag tag = EncodingTag::MulLeft;

  Matrix data_rows() const { return payload.slice_rows(0, original_rows); }
  std::span<const RingScalar> appended_row(std::size_t k) const { return payload.row(original_rows + k); }
  double space_ratio() const noexcept {
    return static_cast<double>(appended_rows) / static_cast<double>(original_rows);
  }
};

/// Retained by the client; never transmitted.
struct GoldenOutput {
  RowVector v_o;

  /// An all-zero golden output voids the scaling check.
  bool degenerate() const noexcept { return v_o.is_zero(); }
};

struct MulEncoding {
  EncodedMatrix left;
  GoldenOutput golden;
};

struct AddEncoding {
  EncodedMatrix left;
  EncodedMatrix right;
  GoldenOutput golden;
};

struct PolyOptions {
  /// Accept zero entries, which void detection within their column.
  bool allow_zero_entries = false;
};

struct PolyEncoding {
  EncodedMatrix left;
  GoldenOutput golden;
  std::vector<std::string> warnings;
};

struct Verdict {
  bool accepted = true;
  std::vector<Check> failed;
  std::optional<std::size_t> checksum_column;  // first mismatching column
  std::optional<std::size_t> golden_column;

  bool failed_check(Check c) const noexcept;
  /// "ACCEPT" or "REJECT: WEIGHTED_CHECKSUM[,GOLDEN_OUTPUT]"
  std::string summary() const;

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

MulEncoding encode_mul(const Matrix& a, const Matrix& b, const VerificationKey& key);
AddEncoding encode_add(const Matrix& a, const Matrix& b, const VerificationKey& key);
PolyEncoding encode_poly(const Matrix& a, std::uint64_t n, const VerificationKey& key, PolyOptions options = {});

/// Rows of c_star: data, then v_A * B (checked against vk * C), then
/// v_B * B (checked against the golden output).
Verdict verify_mul(const Matrix& c_star, const VerificationKey& key, const GoldenOutput& golden);
Verdict verify_add(const Matrix& c_star, const VerificationKey& key, const GoldenOutput& golden);
Verdict verify_poly(const Matrix& c_star, std::uint64_t n, const VerificationKey& key, const GoldenOutput& golden);

/// Plain ABFT: one unkeyed checksum row (column sums, or column products for
/// Poly), no golden output. Insecure against a checksum-aware adversary.
EncodedMatrix encode_abft_baseline(const Matrix& a, OpKind op);
Verdict verify_abft_baseline(const Matrix& c_star, OpKind op);

/// Checksum rows appended for `op` under the keyed scheme.
constexpr std::size_t appended_rows_for(OpKind op) noexcept { return op == OpKind::Mul ? 2 : 1; }

}  // namespace dataseal
