#include "dataseal/prf.hpp"

#include <sodium.h>

#include <cstring>
#include <limits>

#include "dataseal/error.hpp"

namespace dataseal {

namespace {

void ensure_sodium() {
  static const int rc = sodium_init();
  if (rc < 0) throw Error(Errc::Internal, "libsodium initialisation failed");
}

}  // namespace

KeyStream::KeyStream(std::span<const std::uint8_t, 16> secret, std::span<const std::uint8_t> context) {
  ensure_sodium();
  crypto_generichash_blake2b(subkey_.data(), subkey_.size(), context.data(), context.size(),
                             secret.data(), secret.size());
}

KeyStream::~KeyStream() {
  sodium_memzero(subkey_.data(), subkey_.size());
  sodium_memzero(block_.data(), block_.size());
}

void KeyStream::refill() {
  static const std::array<std::uint8_t, crypto_stream_chacha20_ietf_NONCEBYTES> kNonce{};
  static const std::array<std::uint8_t, 64> kZero{};
  crypto_stream_chacha20_ietf_xor_ic(block_.data(), kZero.data(), block_.size(), kNonce.data(),
                                     counter_++, subkey_.data());
  offset_ = 0;
}

std::uint64_t KeyStream::next_u64() {
  if (offset_ + 8 > block_.size()) refill();
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | block_[offset_ + static_cast<std::size_t>(i)];
  offset_ += 8;
  return v;
}

std::uint64_t KeyStream::uniform(std::uint64_t low, std::uint64_t high) {
  if (low >= high) throw Error(Errc::InvalidLength, "empty sampling range");
  const std::uint64_t range = high - low;
  // largest multiple of range representable in 64 bits
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              (std::numeric_limits<std::uint64_t>::max() % range + 1) % range;
  for (;;) {
    const std::uint64_t x = next_u64();
    if (x <= limit) return low + x % range;
  }
}

void random_bytes(std::span<std::uint8_t> out) {
  ensure_sodium();
  randombytes_buf(out.data(), out.size());
}

}  // namespace dataseal
