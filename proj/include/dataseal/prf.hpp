#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

namespace dataseal {

/// Deterministic pseudorandom stream keyed by a 128-bit secret and a
/// context string.
///
/// A 256-bit subkey is derived as keyed BLAKE2b(secret, context), then
/// expanded with ChaCha20 (IETF, zero nonce). Distinct contexts yield
/// independent streams.
class KeyStream {
 public:
  KeyStream(std::span<const std::uint8_t, 16> secret, std::span<const std::uint8_t> context);
  ~KeyStream();

  KeyStream(const KeyStream&) = delete;
  KeyStream& operator=(const KeyStream&) = delete;

  std::uint64_t next_u64();

  /// Uniform draw from [low, high) by rejection sampling; requires low < high.
  std::uint64_t uniform(std::uint64_t low, std::uint64_t high);

 private:
  void refill();

  std::array<std::uint8_t, 32> subkey_{};
  std::array<std::uint8_t, 64> block_{};
  std::size_t offset_ = 64;
  std::uint32_t counter_ = 0;
};

/// Cryptographically random bytes from the system source.
void random_bytes(std::span<std::uint8_t> out);

}  // namespace dataseal
