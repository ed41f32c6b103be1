#pragma once

// Exact arithmetic over Z_m and dense row-major matrices.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

#include "dataseal/error.hpp"

namespace dataseal {

using RingScalar = std::uint64_t;
__extension__ using Wide = unsigned __int128;

inline constexpr std::uint64_t kDefaultModulus = 65537;
inline constexpr std::uint64_t kMinModulus = 257;

/// Deterministic Miller-Rabin, exact for every 64-bit input.
bool is_prime_u64(std::uint64_t n) noexcept;

/// A prime modulus m together with the arithmetic of Z_m.
///
/// The public constructor enforces m >= 257. `toy()` admits any prime and
/// exists for worked examples at small m and for calibration games.
class Modulus {
 public:
  explicit Modulus(std::uint64_t m = kDefaultModulus);

  static Modulus toy(std::uint64_t m);

  std::uint64_t value() const noexcept { return m_; }
  bool contains(std::uint64_t x) const noexcept { return x < m_; }

  RingScalar reduce(std::uint64_t x) const noexcept { return x % m_; }
  RingScalar add(RingScalar a, RingScalar b) const noexcept {
    const RingScalar s = a + b;
    return (s >= m_ || s < a) ? s - m_ : s;
  }
  RingScalar sub(RingScalar a, RingScalar b) const noexcept {
    return a >= b ? a - b : a + (m_ - b);
  }
  RingScalar neg(RingScalar a) const noexcept { return a == 0 ? 0 : m_ - a; }
  RingScalar mul(RingScalar a, RingScalar b) const noexcept {
    if (small_) return (a * b) % m_;
    return static_cast<RingScalar>((static_cast<Wide>(a) * b) % m_);
  }
  /// Square-and-multiply; pow(0, 0) is 1.
  RingScalar pow(RingScalar base, std::uint64_t exp) const noexcept;

  /// Centered-residue signed encoding; |x| must not exceed (m-1)/2.
  RingScalar encode_signed(std::int64_t x) const;
  std::int64_t decode_signed(RingScalar s) const;
  std::int64_t signed_bound() const noexcept { return static_cast<std::int64_t>((m_ - 1) / 2); }

  friend bool operator==(const Modulus& a, const Modulus& b) noexcept { return a.m_ == b.m_; }

 private:
  struct Unchecked {};
  Modulus(std::uint64_t m, Unchecked) noexcept;

  std::uint64_t m_;
  bool small_;  // products fit in 64 bits
};

/// Dense matrix over Z_m, row-major. Every entry is kept in [0, m).
class Matrix {
 public:
  Matrix(std::size_t rows, std::size_t cols, Modulus mod);
  Matrix(std::size_t rows, std::size_t cols, Modulus mod, std::vector<RingScalar> data);

  static Matrix from_rows(Modulus mod, std::initializer_list<std::initializer_list<RingScalar>> rows);
  static Matrix row_vector(Modulus mod, std::vector<RingScalar> values);
  static Matrix identity(std::size_t n, Modulus mod);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  const Modulus& modulus() const noexcept { return mod_; }

  RingScalar at(std::size_t r, std::size_t c) const;
  void set(std::size_t r, std::size_t c, RingScalar value);
  RingScalar operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<const RingScalar> row(std::size_t r) const;
  std::span<const RingScalar> data() const noexcept { return data_; }

  /// Rows [first, first + count).
  Matrix slice_rows(std::size_t first, std::size_t count) const;
  /// This matrix with `extra`'s rows stacked underneath.
  Matrix stacked(const Matrix& extra) const;

  bool is_zero() const noexcept;

  friend bool operator==(const Matrix& a, const Matrix& b) noexcept {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.mod_ == b.mod_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  Modulus mod_;
  std::vector<RingScalar> data_;
};

using RowVector = Matrix;

Matrix mat_mul(const Matrix& a, const Matrix& b);
Matrix mat_add(const Matrix& a, const Matrix& b);
Matrix mat_pow_elementwise(const Matrix& a, std::uint64_t n);
/// w[j] = sum_i v[i] * a[i][j]; v must be a single row.
RowVector vec_mat_mul(const RowVector& v, const Matrix& a);
Matrix transpose(const Matrix& a);
Matrix scale(const Matrix& a, RingScalar c);

/// Channel-major 3-D tensor (C x H x W).
class Tensor {
 public:
  Tensor(std::size_t channels, std::size_t height, std::size_t width, Modulus mod);
  Tensor(std::size_t channels, std::size_t height, std::size_t width, Modulus mod,
         std::vector<RingScalar> data);

  std::size_t channels() const noexcept { return channels_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  const Modulus& modulus() const noexcept { return mod_; }
  std::span<const RingScalar> data() const noexcept { return data_; }

  RingScalar at(std::size_t c, std::size_t y, std::size_t x) const;

  /// channels x (height * width)
  Matrix as_matrix() const;
  static Tensor from_matrix(const Matrix& m, std::size_t channels, std::size_t height, std::size_t width);

  friend bool operator==(const Tensor& a, const Tensor& b) noexcept {
    return a.channels_ == b.channels_ && a.height_ == b.height_ && a.width_ == b.width_ &&
           a.mod_ == b.mod_ && a.data_ == b.data_;
  }

 private:
  std::size_t channels_, height_, width_;
  Modulus mod_;
  std::vector<RingScalar> data_;
};

struct ConvGeometry {
  std::size_t kernel_h = 1;
  std::size_t kernel_w = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;
};

/// Output (height, width) of a convolution; GeometryError if not positive.
std::pair<std::size_t, std::size_t> conv_output_dims(std::size_t height, std::size_t width,
                                                     const ConvGeometry& g);

/// Patch matrix: one column per output position (row-major scan), rows ordered
/// (channel, kernel row, kernel col). Out-of-bounds taps read zero.
Matrix im2col(const Tensor& input, const ConvGeometry& g);

}  // namespace dataseal
