#pragma once

// Independent reference computations for tests. Everything here works on
// raw integers with arbitrary precision and never calls library kernels.

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <random>
#include <vector>

#include "dataseal/ring.hpp"

namespace oracle {

using big = boost::multiprecision::cpp_int;
using Grid = std::vector<std::vector<std::uint64_t>>;

inline std::uint64_t reduce(const big& x, std::uint64_t m) {
  big r = x % m;
  if (r < 0) r += m;
  return static_cast<std::uint64_t>(r);
}

inline Grid grid(const dataseal::Matrix& a) {
  Grid g(a.rows(), std::vector<std::uint64_t>(a.cols()));
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) g[r][c] = a(r, c);
  return g;
}

/// Schoolbook product: the full integer sum is formed before one reduction.
inline Grid matmul(const Grid& a, const Grid& b, std::uint64_t m) {
  Grid out(a.size(), std::vector<std::uint64_t>(b[0].size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b[0].size(); ++j) {
      big s = 0;
      for (std::size_t k = 0; k < b.size(); ++k) s += big(a[i][k]) * b[k][j];
      out[i][j] = reduce(s, m);
    }
  return out;
}

inline Grid add(const Grid& a, const Grid& b, std::uint64_t m) {
  Grid out = a;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[0].size(); ++j) out[i][j] = reduce(big(a[i][j]) + b[i][j], m);
  return out;
}

inline std::uint64_t pow(std::uint64_t x, std::uint64_t n, std::uint64_t m) {
  return static_cast<std::uint64_t>(boost::multiprecision::powm(big(x), big(n), big(m)));
}

inline Grid pow_elementwise(const Grid& a, std::uint64_t n, std::uint64_t m) {
  Grid out = a;
  for (auto& row : out)
    for (auto& x : row) x = pow(x, n, m);
  return out;
}

/// Direct sliding-window convolution of a C x H x W input (channel-major
/// flat vector) with F filters of shape C x kh x kw. Output F x oh x ow.
inline std::vector<std::uint64_t> conv2d(const std::vector<std::uint64_t>& x, std::size_t c, std::size_t h,
                                         std::size_t w, const Grid& filters, std::size_t kh, std::size_t kw,
                                         std::size_t stride, std::size_t pad, std::uint64_t m, std::size_t& oh,
                                         std::size_t& ow) {
  oh = (h + 2 * pad - kh) / stride + 1;
  ow = (w + 2 * pad - kw) / stride + 1;
  std::vector<std::uint64_t> out(filters.size() * oh * ow);
  for (std::size_t f = 0; f < filters.size(); ++f)
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox) {
        big s = 0;
        for (std::size_t ch = 0; ch < c; ++ch)
          for (std::size_t ky = 0; ky < kh; ++ky)
            for (std::size_t kx = 0; kx < kw; ++kx) {
              const long y = static_cast<long>(oy * stride + ky) - static_cast<long>(pad);
              const long xx = static_cast<long>(ox * stride + kx) - static_cast<long>(pad);
              if (y < 0 || xx < 0 || y >= static_cast<long>(h) || xx >= static_cast<long>(w)) continue;
              s += big(filters[f][(ch * kh + ky) * kw + kx]) *
                   x[(ch * h + static_cast<std::size_t>(y)) * w + static_cast<std::size_t>(xx)];
            }
        out[(f * oh + oy) * ow + ox] = reduce(s, m);
      }
  return out;
}

inline dataseal::Matrix random_matrix(std::size_t rows, std::size_t cols, const dataseal::Modulus& mod,
                                      std::mt19937_64& rng, std::uint64_t low = 0) {
  std::uniform_int_distribution<std::uint64_t> d(low, mod.value() - 1);
  std::vector<std::uint64_t> v(rows * cols);
  for (auto& x : v) x = d(rng);
  return dataseal::Matrix(rows, cols, mod, std::move(v));
}

}  // namespace oracle
