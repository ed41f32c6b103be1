#include "dataseal/he_backend.hpp"

#include <algorithm>
#include <bit>
#include <optional>
#include <string>

namespace dataseal {

void BackendParams::validate() const {
  if (slot_count < 2 || !std::has_single_bit(slot_count)) {
    throw Error(Errc::InvalidParams, "slot_count must be a power of two >= 2, got " + std::to_string(slot_count));
  }
  if (max_depth < 1) throw Error(Errc::InvalidParams, "max_depth must be >= 1");
}

unsigned EncryptedMatrix::max_depth() const noexcept {
  unsigned d = 0;
  for (const auto& ct : row_cts) d = std::max(d, ct.depth);
  return d;
}

unsigned pow_depth(std::uint64_t n) noexcept {
  if (n <= 1) return 0;
  return static_cast<unsigned>(std::bit_width(n - 1));
}

BackendContext::BackendContext(BackendParams params) : params_(params) { params_.validate(); }

BackendContext::BackendContext(const BackendContext& other) : params_(other.params_) {}

BackendContext keygen(const BackendParams& params) { return BackendContext(params); }

OpCounters BackendContext::counters() const noexcept {
  return {n_add_.load(), n_mul_.load(), n_mul_plain_.load(), n_rotate_.load(), n_rescale_.load()};
}

void BackendContext::reset_counters() const noexcept {
  n_add_ = 0;
  n_mul_ = 0;
  n_mul_plain_ = 0;
  n_rotate_ = 0;
  n_rescale_ = 0;
}

void BackendContext::check_shape(const Ciphertext& ct) const {
  if (ct.slots.size() != params_.slot_count) {
    throw Error(Errc::DimensionMismatch, "ciphertext has " + std::to_string(ct.slots.size()) + " slots, context " +
                                             std::to_string(params_.slot_count));
  }
}

void BackendContext::check_depth(unsigned depth) const {
  if (depth > params_.max_depth) {
    throw Error(Errc::DepthExceeded,
                "depth " + std::to_string(depth) + " exceeds budget " + std::to_string(params_.max_depth));
  }
}

Ciphertext BackendContext::encrypt(std::span<const RingScalar> values) const {
  if (values.size() > params_.slot_count) {
    throw Error(Errc::TooWide, std::to_string(values.size()) + " values for " +
                                   std::to_string(params_.slot_count) + " slots");
  }
  Ciphertext ct{std::vector<RingScalar>(params_.slot_count, 0), 0, true};
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!params_.modulus.contains(values[i])) throw Error(Errc::ValueOutOfRange, "plaintext value >= modulus");
    ct.slots[i] = values[i];
  }
  return ct;
}

std::vector<RingScalar> BackendContext::decrypt(const Ciphertext& ct) const {
  check_shape(ct);
  return ct.slots;
}

Ciphertext BackendContext::add(const Ciphertext& a, const Ciphertext& b) const {
  check_shape(a);
  check_shape(b);
  const Modulus& mod = params_.modulus;
  Ciphertext out{std::vector<RingScalar>(params_.slot_count), std::max(a.depth, b.depth), false};
  for (std::size_t i = 0; i < out.slots.size(); ++i) out.slots[i] = mod.add(a.slots[i], b.slots[i]);
  ++n_add_;
  return out;
}

Ciphertext BackendContext::mul(const Ciphertext& a, const Ciphertext& b) const {
  check_shape(a);
  check_shape(b);
  const unsigned depth = std::max(a.depth, b.depth) + 1;
  check_depth(depth);
  const Modulus& mod = params_.modulus;
  Ciphertext out{std::vector<RingScalar>(params_.slot_count), depth, false};
  for (std::size_t i = 0; i < out.slots.size(); ++i) out.slots[i] = mod.mul(a.slots[i], b.slots[i]);
  ++n_mul_;
  return out;
}

Ciphertext BackendContext::mul_plain(const Ciphertext& a, std::span<const RingScalar> plain) const {
  check_shape(a);
  if (plain.size() > params_.slot_count) throw Error(Errc::TooWide, "plaintext wider than slot count");
  const Modulus& mod = params_.modulus;
  Ciphertext out{std::vector<RingScalar>(params_.slot_count, 0), a.depth, false};
  for (std::size_t i = 0; i < plain.size(); ++i) out.slots[i] = mod.mul(a.slots[i], plain[i]);
  ++n_mul_plain_;
  return out;
}

Ciphertext BackendContext::rotate(const Ciphertext& a, std::size_t k) const {
  check_shape(a);
  const std::size_t n = params_.slot_count;
  k %= n;
  Ciphertext out{std::vector<RingScalar>(n), a.depth, false};
  std::rotate_copy(a.slots.begin(), a.slots.begin() + static_cast<std::ptrdiff_t>(k), a.slots.end(),
                   out.slots.begin());
  ++n_rotate_;
  return out;
}

Ciphertext BackendContext::rescale(const Ciphertext& a) const {
  check_shape(a);
  check_depth(a.depth + 1);
  Ciphertext out{a.slots, a.depth + 1, false};
  ++n_rescale_;
  return out;
}

Ciphertext BackendContext::broadcast(const Ciphertext& a, std::size_t slot) const {
  check_shape(a);
  if (slot >= params_.slot_count) throw Error(Errc::DimensionMismatch, "broadcast slot out of range");
  std::vector<RingScalar> mask(params_.slot_count, 0);
  mask[slot] = 1;
  Ciphertext acc = mul_plain(a, mask);
  for (std::size_t step = 1; step < params_.slot_count; step <<= 1) acc = add(acc, rotate(acc, step));
  return acc;
}

// ------------------------------------------------------------ matrices

EncryptedMatrix encrypt_matrix(const BackendContext& ctx, const Matrix& m) {
  if (!(m.modulus() == ctx.modulus())) throw Error(Errc::ModulusMismatch, "matrix modulus differs from context");
  if (m.cols() > ctx.slot_count()) {
    throw Error(Errc::TooWide, std::to_string(m.cols()) + " columns for " + std::to_string(ctx.slot_count()) + " slots");
  }
  EncryptedMatrix e{{}, m.rows(), m.cols()};
  e.row_cts.reserve(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) e.row_cts.push_back(ctx.encrypt(m.row(r)));
  return e;
}

Matrix decrypt_matrix(const BackendContext& ctx, const EncryptedMatrix& e) {
  if (e.row_cts.size() != e.rows || e.cols > ctx.slot_count()) {
    throw Error(Errc::DimensionMismatch, "encrypted matrix shape is inconsistent");
  }
  std::vector<RingScalar> data;
  data.reserve(e.rows * e.cols);
  for (const auto& ct : e.row_cts) {
    const auto slots = ctx.decrypt(ct);
    data.insert(data.end(), slots.begin(), slots.begin() + static_cast<std::ptrdiff_t>(e.cols));
  }
  return Matrix(e.rows, e.cols, ctx.modulus(), std::move(data));
}

namespace {

void check_rows(const EncryptedMatrix& e) {
  if (e.row_cts.size() != e.rows || e.rows == 0) throw Error(Errc::DimensionMismatch, "malformed encrypted matrix");
}

}  // namespace

EncryptedMatrix eval_matmul(const BackendContext& ctx, const EncryptedMatrix& a, const PlainOperand& b) {
  check_rows(a);
  const Matrix& bm = b.matrix;
  if (!(bm.modulus() == ctx.modulus())) throw Error(Errc::ModulusMismatch, "operand modulus differs from context");
  if (a.cols != bm.rows()) {
    throw Error(Errc::DimensionMismatch, "cols(A) " + std::to_string(a.cols) + " != rows(B) " + std::to_string(bm.rows()));
  }
  if (bm.cols() > ctx.slot_count()) throw Error(Errc::TooWide, "B wider than slot count");
  if (a.max_depth() + 1 > ctx.params().max_depth) {
    throw Error(Errc::DepthExceeded, "matmul needs one level above depth " + std::to_string(a.max_depth()));
  }
  EncryptedMatrix out{{}, a.rows, bm.cols()};
  out.row_cts.reserve(a.rows);
  for (const auto& row : a.row_cts) {
    Ciphertext acc = ctx.mul_plain(ctx.broadcast(row, 0), bm.row(0));
    for (std::size_t k = 1; k < a.cols; ++k) acc = ctx.add(acc, ctx.mul_plain(ctx.broadcast(row, k), bm.row(k)));
    out.row_cts.push_back(ctx.rescale(acc));
  }
  return out;
}

EncryptedMatrix eval_matmul(const BackendContext& ctx, const EncryptedMatrix& a, const EncryptedMatrix& b) {
  check_rows(a);
  check_rows(b);
  if (a.cols != b.rows) {
    throw Error(Errc::DimensionMismatch, "cols(A) " + std::to_string(a.cols) + " != rows(B) " + std::to_string(b.rows));
  }
  if (std::max(a.max_depth(), b.max_depth()) + 2 > ctx.params().max_depth) {
    throw Error(Errc::DepthExceeded, "encrypted matmul needs two free levels");
  }
  EncryptedMatrix out{{}, a.rows, b.cols};
  out.row_cts.reserve(a.rows);
  for (const auto& row : a.row_cts) {
    Ciphertext acc = ctx.mul(ctx.broadcast(row, 0), b.row_cts[0]);
    for (std::size_t k = 1; k < a.cols; ++k) acc = ctx.add(acc, ctx.mul(ctx.broadcast(row, k), b.row_cts[k]));
    out.row_cts.push_back(ctx.rescale(acc));
  }
  return out;
}

EncryptedMatrix eval_add(const BackendContext& ctx, const EncryptedMatrix& a, const EncryptedMatrix& b) {
  check_rows(a);
  check_rows(b);
  if (a.rows != b.rows || a.cols != b.cols) throw Error(Errc::DimensionMismatch, "operands differ in shape");
  EncryptedMatrix out{{}, a.rows, a.cols};
  out.row_cts.reserve(a.rows);
  for (std::size_t r = 0; r < a.rows; ++r) out.row_cts.push_back(ctx.add(a.row_cts[r], b.row_cts[r]));
  return out;
}

EncryptedMatrix eval_pow_elementwise(const BackendContext& ctx, const EncryptedMatrix& a, std::uint64_t n) {
  check_rows(a);
  if (n == 0) throw Error(Errc::InvalidExponent, "exponent must be >= 1");
  if (static_cast<std::uint64_t>(a.max_depth()) + pow_depth(n) > ctx.params().max_depth) {
    throw Error(Errc::DepthExceeded, "x^" + std::to_string(n) + " needs " + std::to_string(pow_depth(n)) + " levels");
  }
  EncryptedMatrix out{{}, a.rows, a.cols};
  out.row_cts.reserve(a.rows);
  for (const auto& row : a.row_cts) {
    // right-to-left binary method: each set bit multiplies acc by x^(2^i)
    std::optional<Ciphertext> acc;
    Ciphertext power = row;
    std::uint64_t e = n;
    while (true) {
      if (e & 1) acc = acc ? ctx.mul(*acc, power) : power;
      e >>= 1;
      if (!e) break;
      power = ctx.mul(power, power);
    }
    acc->fresh = false;
    out.row_cts.push_back(std::move(*acc));
  }
  return out;
}

}  // namespace dataseal
