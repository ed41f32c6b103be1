#include "dataseal/ring.hpp"

#include <array>
#include <string>

namespace dataseal {

namespace {

std::uint64_t mulmod64(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>((static_cast<Wide>(a) * b) % m);
}

std::uint64_t powmod64(std::uint64_t a, std::uint64_t e, std::uint64_t m) {
  std::uint64_t r = 1 % m;
  a %= m;
  while (e) {
    if (e & 1) r = mulmod64(r, a, m);
    a = mulmod64(a, a, m);
    e >>= 1;
  }
  return r;
}

void require_same_modulus(const Matrix& a, const Matrix& b) {
  if (!(a.modulus() == b.modulus())) {
    throw Error(Errc::ModulusMismatch, std::to_string(a.modulus().value()) + " vs " +
                                           std::to_string(b.modulus().value()));
  }
}

std::string dims(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

bool is_prime_u64(std::uint64_t n) noexcept {
  if (n < 2) return false;
  static constexpr std::array<std::uint64_t, 12> kBases = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  for (auto p : kBases) {
    if (n % p == 0) return n == p;
  }
  std::uint64_t d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  for (auto a : kBases) {
    std::uint64_t x = powmod64(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int i = 1; i < s; ++i) {
      x = mulmod64(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

// ---------------------------------------------------------------- Modulus

Modulus::Modulus(std::uint64_t m, Unchecked) noexcept : m_(m), small_(m <= (1ULL << 32)) {}

Modulus::Modulus(std::uint64_t m) : Modulus(m, Unchecked{}) {
  if (m < kMinModulus) {
    throw Error(Errc::InvalidModulus, "modulus " + std::to_string(m) + " below minimum 257");
  }
  if (!is_prime_u64(m)) {
    throw Error(Errc::InvalidModulus, "modulus " + std::to_string(m) + " is not prime");
  }
}

Modulus Modulus::toy(std::uint64_t m) {
  if (!is_prime_u64(m)) {
    throw Error(Errc::InvalidModulus, "modulus " + std::to_string(m) + " is not prime");
  }
  return Modulus(m, Unchecked{});
}

RingScalar Modulus::pow(RingScalar base, std::uint64_t exp) const noexcept {
  RingScalar r = 1 % m_;
  base %= m_;
  while (exp) {
    if (exp & 1) r = mul(r, base);
    base = mul(base, base);
    exp >>= 1;
  }
  return r;
}

RingScalar Modulus::encode_signed(std::int64_t x) const {
  const std::int64_t bound = signed_bound();
  if (x > bound || x < -bound) {
    throw Error(Errc::RangeError, std::to_string(x) + " outside +-" + std::to_string(bound));
  }
  return x >= 0 ? static_cast<RingScalar>(x) : m_ - static_cast<RingScalar>(-x);
}

std::int64_t Modulus::decode_signed(RingScalar s) const {
  if (s >= m_) throw Error(Errc::ValueOutOfRange, std::to_string(s) + " >= modulus");
  if (s > (m_ - 1) / 2) return -static_cast<std::int64_t>(m_ - s);
  return static_cast<std::int64_t>(s);
}

// ----------------------------------------------------------------- Matrix

Matrix::Matrix(std::size_t rows, std::size_t cols, Modulus mod)
    : rows_(rows), cols_(cols), mod_(mod), data_(rows * cols, 0) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, Modulus mod, std::vector<RingScalar> data)
    : rows_(rows), cols_(cols), mod_(mod), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw Error(Errc::DimensionMismatch, "data length " + std::to_string(data_.size()) +
                                             " for " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  for (auto v : data_) {
    if (!mod_.contains(v)) throw Error(Errc::ValueOutOfRange, std::to_string(v) + " >= modulus");
  }
}

Matrix Matrix::from_rows(Modulus mod, std::initializer_list<std::initializer_list<RingScalar>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<RingScalar> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw Error(Errc::DimensionMismatch, "ragged row list");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, mod, std::move(data));
}

Matrix Matrix::row_vector(Modulus mod, std::vector<RingScalar> values) {
  const std::size_t n = values.size();
  return Matrix(1, n, mod, std::move(values));
}

Matrix Matrix::identity(std::size_t n, Modulus mod) {
  Matrix m(n, n, mod);
  for (std::size_t i = 0; i < n; ++i) m.data_[i * n + i] = 1 % mod.value();
  return m;
}

RingScalar Matrix::at(std::size_t r, std::size_t c) const {
  if (r >= rows_ || c >= cols_) throw Error(Errc::DimensionMismatch, "index out of range");
  return data_[r * cols_ + c];
}

void Matrix::set(std::size_t r, std::size_t c, RingScalar value) {
  if (r >= rows_ || c >= cols_) throw Error(Errc::DimensionMismatch, "index out of range");
  if (!mod_.contains(value)) throw Error(Errc::ValueOutOfRange, std::to_string(value) + " >= modulus");
  data_[r * cols_ + c] = value;
}

std::span<const RingScalar> Matrix::row(std::size_t r) const {
  if (r >= rows_) throw Error(Errc::DimensionMismatch, "row out of range");
  return std::span<const RingScalar>(data_).subspan(r * cols_, cols_);
}

Matrix Matrix::slice_rows(std::size_t first, std::size_t count) const {
  if (first + count > rows_) throw Error(Errc::DimensionMismatch, "row slice out of range");
  std::vector<RingScalar> out(data_.begin() + static_cast<std::ptrdiff_t>(first * cols_),
                              data_.begin() + static_cast<std::ptrdiff_t>((first + count) * cols_));
  return Matrix(count, cols_, mod_, std::move(out));
}

Matrix Matrix::stacked(const Matrix& extra) const {
  require_same_modulus(*this, extra);
  if (extra.cols_ != cols_) throw Error(Errc::DimensionMismatch, "stacking " + dims(extra) + " under " + dims(*this));
  Matrix out = *this;
  out.rows_ += extra.rows_;
  out.data_.insert(out.data_.end(), extra.data_.begin(), extra.data_.end());
  return out;
}

bool Matrix::is_zero() const noexcept {
  for (auto v : data_) {
    if (v) return false;
  }
  return true;
}

// -------------------------------------------------------------- kernels

Matrix mat_mul(const Matrix& a, const Matrix& b) {
  require_same_modulus(a, b);
  if (a.cols() != b.rows()) throw Error(Errc::DimensionMismatch, dims(a) + " * " + dims(b));
  const Modulus& mod = a.modulus();
  std::vector<RingScalar> out(a.rows() * b.cols(), 0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    RingScalar* dst = out.data() + i * b.cols();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const RingScalar aik = a(i, k);
      if (aik == 0) continue;
      const auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) dst[j] = mod.add(dst[j], mod.mul(aik, brow[j]));
    }
  }
  return Matrix(a.rows(), b.cols(), mod, std::move(out));
}

Matrix mat_add(const Matrix& a, const Matrix& b) {
  require_same_modulus(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(Errc::DimensionMismatch, dims(a) + " + " + dims(b));
  }
  const Modulus& mod = a.modulus();
  std::vector<RingScalar> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = mod.add(a.data()[i], b.data()[i]);
  return Matrix(a.rows(), a.cols(), mod, std::move(out));
}

Matrix mat_pow_elementwise(const Matrix& a, std::uint64_t n) {
  if (n == 0) throw Error(Errc::InvalidExponent, "exponent must be >= 1");
  const Modulus& mod = a.modulus();
  std::vector<RingScalar> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = mod.pow(a.data()[i], n);
  return Matrix(a.rows(), a.cols(), mod, std::move(out));
}

RowVector vec_mat_mul(const RowVector& v, const Matrix& a) {
  if (v.rows() != 1) throw Error(Errc::DimensionMismatch, "expected a row vector, got " + dims(v));
  return mat_mul(v, a);
}

Matrix transpose(const Matrix& a) {
  std::vector<RingScalar> out(a.size());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) out[j * a.rows() + i] = a(i, j);
  }
  return Matrix(a.cols(), a.rows(), a.modulus(), std::move(out));
}

Matrix scale(const Matrix& a, RingScalar c) {
  const Modulus& mod = a.modulus();
  c = mod.reduce(c);
  std::vector<RingScalar> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = mod.mul(a.data()[i], c);
  return Matrix(a.rows(), a.cols(), mod, std::move(out));
}

// ----------------------------------------------------------------- Tensor

Tensor::Tensor(std::size_t channels, std::size_t height, std::size_t width, Modulus mod)
    : channels_(channels), height_(height), width_(width), mod_(mod), data_(channels * height * width, 0) {}

Tensor::Tensor(std::size_t channels, std::size_t height, std::size_t width, Modulus mod,
               std::vector<RingScalar> data)
    : channels_(channels), height_(height), width_(width), mod_(mod), data_(std::move(data)) {
  if (data_.size() != channels * height * width) {
    throw Error(Errc::DimensionMismatch, "tensor data length " + std::to_string(data_.size()));
  }
  for (auto v : data_) {
    if (!mod_.contains(v)) throw Error(Errc::ValueOutOfRange, std::to_string(v) + " >= modulus");
  }
}

RingScalar Tensor::at(std::size_t c, std::size_t y, std::size_t x) const {
  if (c >= channels_ || y >= height_ || x >= width_) throw Error(Errc::DimensionMismatch, "tensor index");
  return data_[(c * height_ + y) * width_ + x];
}

Matrix Tensor::as_matrix() const { return Matrix(channels_, height_ * width_, mod_, data_); }

Tensor Tensor::from_matrix(const Matrix& m, std::size_t channels, std::size_t height, std::size_t width) {
  if (m.size() != channels * height * width) {
    throw Error(Errc::DimensionMismatch, "cannot reshape " + dims(m) + " to tensor");
  }
  return Tensor(channels, height, width, m.modulus(), std::vector<RingScalar>(m.data().begin(), m.data().end()));
}

std::pair<std::size_t, std::size_t> conv_output_dims(std::size_t height, std::size_t width,
                                                     const ConvGeometry& g) {
  if (g.kernel_h == 0 || g.kernel_w == 0 || g.stride == 0) {
    throw Error(Errc::GeometryError, "kernel and stride must be positive");
  }
  const std::size_t ph = height + 2 * g.padding;
  const std::size_t pw = width + 2 * g.padding;
  if (ph < g.kernel_h || pw < g.kernel_w) {
    throw Error(Errc::GeometryError, "kernel larger than padded input");
  }
  return {(ph - g.kernel_h) / g.stride + 1, (pw - g.kernel_w) / g.stride + 1};
}

Matrix im2col(const Tensor& input, const ConvGeometry& g) {
  const auto [oh, ow] = conv_output_dims(input.height(), input.width(), g);
  const std::size_t patch = input.channels() * g.kernel_h * g.kernel_w;
  const std::size_t positions = oh * ow;
  std::vector<RingScalar> out(patch * positions, 0);
  const auto pad = static_cast<std::ptrdiff_t>(g.padding);
  for (std::size_t c = 0; c < input.channels(); ++c) {
    for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
      for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
        const std::size_t r = (c * g.kernel_h + ky) * g.kernel_w + kx;
        for (std::size_t oy = 0; oy < oh; ++oy) {
          for (std::size_t ox = 0; ox < ow; ++ox) {
            const auto y = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - pad;
            const auto x = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - pad;
            if (y < 0 || x < 0 || y >= static_cast<std::ptrdiff_t>(input.height()) ||
                x >= static_cast<std::ptrdiff_t>(input.width())) {
              continue;
            }
            out[r * positions + oy * ow + ox] =
                input.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(x));
          }
        }
      }
    }
  }
  return Matrix(patch, positions, input.modulus(), std::move(out));
}

}  // namespace dataseal
