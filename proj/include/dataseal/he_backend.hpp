#pragma once

// Simulated SIMD homomorphic backend.
//
// Ciphertexts are exact slot vectors over Z_m with a multiplicative-depth
// counter. The operation set mirrors a leveled FHE scheme (encrypt, decrypt,
// slotwise add/mul, plaintext mul, rotation) so that an adapter for a real
// library can implement the same contract. Depth accounting:
//   add, mul_plain, rotate  -> depth unchanged
//   mul                     -> max(depths) + 1
//   rescale                 -> depth + 1 (charged once per matmul accumulation)

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dataseal/ring.hpp"

namespace dataseal {

inline constexpr std::size_t kDefaultSlotCount = 64;
inline constexpr unsigned kDefaultMaxDepth = 16;

struct BackendParams {
  std::size_t slot_count = kDefaultSlotCount;
  Modulus modulus{kDefaultModulus};
  unsigned max_depth = kDefaultMaxDepth;

  /// InvalidParams unless slot_count = 2^k (k >= 1) and max_depth >= 1.
  void validate() const;

  friend bool operator==(const BackendParams&, const BackendParams&) = default;
};

struct Ciphertext {
  std::vector<RingScalar> slots;
  unsigned depth = 0;
  bool fresh = false;

  /// Wire-visible equality: slots and depth.
  friend bool operator==(const Ciphertext& a, const Ciphertext& b) noexcept {
    return a.slots == b.slots && a.depth == b.depth;
  }
};

/// Row packing: one ciphertext per matrix row, columns in slots, zero padded.
struct EncryptedMatrix {
  std::vector<Ciphertext> row_cts;
  std::size_t rows = 0;
  std::size_t cols = 0;

  unsigned max_depth() const noexcept;

  friend bool operator==(const EncryptedMatrix&, const EncryptedMatrix&) = default;
};

/// A plaintext matrix known to both client and server.
struct PlainOperand {
  Matrix matrix;
};

struct OpCounters {
  std::uint64_t add = 0;
  std::uint64_t mul = 0;
  std::uint64_t mul_plain = 0;
  std::uint64_t rotate = 0;
  std::uint64_t rescale = 0;
};

class BackendContext {
 public:
  explicit BackendContext(BackendParams params);
  BackendContext(const BackendContext& other);
  BackendContext& operator=(const BackendContext&) = delete;

  const BackendParams& params() const noexcept { return params_; }
  std::size_t slot_count() const noexcept { return params_.slot_count; }
  const Modulus& modulus() const noexcept { return params_.modulus; }

  /// Values beyond the given span are zero. TooWide if longer than slot_count.
  Ciphertext encrypt(std::span<const RingScalar> values) const;
  std::vector<RingScalar> decrypt(const Ciphertext& ct) const;

  Ciphertext add(const Ciphertext& a, const Ciphertext& b) const;
  Ciphertext mul(const Ciphertext& a, const Ciphertext& b) const;
  /// The plaintext is zero padded to slot_count.
  Ciphertext mul_plain(const Ciphertext& a, std::span<const RingScalar> plain) const;
  /// Cyclic left rotation; k is reduced mod slot_count.
  Ciphertext rotate(const Ciphertext& a, std::size_t k) const;
  Ciphertext rescale(const Ciphertext& a) const;
  /// Every slot set to a.slots[slot]: indicator mask, then log2(slot_count)
  /// rotate-and-add doubling steps.
  Ciphertext broadcast(const Ciphertext& a, std::size_t slot) const;

  OpCounters counters() const noexcept;
  void reset_counters() const noexcept;

 private:
  void check_shape(const Ciphertext& ct) const;
  void check_depth(unsigned depth) const;

  BackendParams params_;
  mutable std::atomic<std::uint64_t> n_add_{0}, n_mul_{0}, n_mul_plain_{0}, n_rotate_{0}, n_rescale_{0};
};

BackendContext keygen(const BackendParams& params);

EncryptedMatrix encrypt_matrix(const BackendContext& ctx, const Matrix& m);
Matrix decrypt_matrix(const BackendContext& ctx, const EncryptedMatrix& e);

/// Row i of the result is sum_k broadcast(row_i, k) * B[k], followed by one
/// rescale. Depth +1 for a public B, +2 for an encrypted B.
EncryptedMatrix eval_matmul(const BackendContext& ctx, const EncryptedMatrix& a, const PlainOperand& b);
EncryptedMatrix eval_matmul(const BackendContext& ctx, const EncryptedMatrix& a, const EncryptedMatrix& b);
EncryptedMatrix eval_add(const BackendContext& ctx, const EncryptedMatrix& a, const EncryptedMatrix& b);
/// Square-and-multiply; raises depth by ceil(log2 n).
EncryptedMatrix eval_pow_elementwise(const BackendContext& ctx, const EncryptedMatrix& a, std::uint64_t n);

/// ceil(log2 n) for n >= 1.
unsigned pow_depth(std::uint64_t n) noexcept;

}  // namespace dataseal
