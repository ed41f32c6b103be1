#include <gtest/gtest.h>

#include <random>

#include "dataseal/ring.hpp"
#include "oracle.hpp"

using namespace dataseal;

namespace {

const Modulus m97 = Modulus::toy(97);

template <class F>
Errc code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::Internal;
}

}  // namespace

TEST(Modulus, RejectsCompositeAndSmall) {
  EXPECT_EQ(code_of([] { Modulus m(65536); }), Errc::InvalidModulus);
  EXPECT_EQ(code_of([] { Modulus m(251); }), Errc::InvalidModulus);  // prime but < 257
  EXPECT_EQ(code_of([] { Modulus::toy(91); }), Errc::InvalidModulus);
  EXPECT_NO_THROW(Modulus(257));
  EXPECT_NO_THROW(Modulus(65537));
  EXPECT_NO_THROW(Modulus((1ull << 61) - 1));
}

TEST(Modulus, PrimalityMatchesTrialDivision) {
  for (std::uint64_t n = 0; n < 5000; ++n) {
    bool p = n >= 2;
    for (std::uint64_t d = 2; d * d <= n && p; ++d) p = n % d != 0;
    ASSERT_EQ(is_prime_u64(n), p) << n;
  }
  EXPECT_TRUE(is_prime_u64(18446744073709551557ull));
  EXPECT_FALSE(is_prime_u64(3215031751ull));  // strong pseudoprime to bases 2,3,5,7
}

TEST(Modulus, WideArithmeticMatchesBigInt) {
  const Modulus big((1ull << 61) - 1);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 2000; ++i) {
    const std::uint64_t a = rng() % big.value(), b = rng() % big.value();
    ASSERT_EQ(big.mul(a, b), oracle::reduce(oracle::big(a) * b, big.value()));
    ASSERT_EQ(big.add(a, b), oracle::reduce(oracle::big(a) + b, big.value()));
    ASSERT_EQ(big.sub(a, b), oracle::reduce(oracle::big(a) - b, big.value()));
    const std::uint64_t e = rng() % 1000;
    ASSERT_EQ(big.pow(a, e), oracle::pow(a, e, big.value()));
  }
}

TEST(Modulus, RingLawsOnSampledTriples) {
  const Modulus m(65537);
  std::mt19937_64 rng(11);
  for (int i = 0; i < 5000; ++i) {
    const auto a = rng() % m.value(), b = rng() % m.value(), c = rng() % m.value();
    ASSERT_EQ(m.mul(m.mul(a, b), c), m.mul(a, m.mul(b, c)));
    ASSERT_EQ(m.mul(a, m.add(b, c)), m.add(m.mul(a, b), m.mul(a, c)));
    ASSERT_EQ(m.add(a, m.neg(a)), 0u);
  }
}

TEST(Signed, Examples) {
  EXPECT_EQ(m97.encode_signed(-1), 96u);
  EXPECT_EQ(m97.decode_signed(96), -1);
  EXPECT_EQ(m97.encode_signed(0), 0u);
  EXPECT_EQ(m97.encode_signed(48), 48u);
  EXPECT_EQ(m97.encode_signed(-48), 49u);
  EXPECT_EQ(code_of([] { m97.encode_signed(49); }), Errc::RangeError);
  EXPECT_EQ(code_of([] { m97.encode_signed(-49); }), Errc::RangeError);
}

TEST(Signed, ExhaustiveRoundTripAt257) {
  const Modulus m(257);
  for (std::int64_t x = -128; x <= 128; ++x) ASSERT_EQ(m.decode_signed(m.encode_signed(x)), x);
  for (std::uint64_t s = 0; s < 257; ++s) ASSERT_EQ(m.encode_signed(m.decode_signed(s)), s);
}

TEST(MatMul, WorkedExample) {
  const auto a = Matrix::from_rows(m97, {{3, 1}, {1, 5}});
  const auto b = Matrix::from_rows(m97, {{8, 6}, {7, 10}});
  EXPECT_EQ(mat_mul(a, b), Matrix::from_rows(m97, {{31, 28}, {43, 56}}));
  EXPECT_EQ(mat_mul(Matrix::identity(2, m97), b), b);
}

TEST(MatMul, Errors) {
  const Modulus m(65537);
  EXPECT_EQ(code_of([&] { mat_mul(Matrix(2, 3, m), Matrix(2, 3, m)); }), Errc::DimensionMismatch);
  EXPECT_EQ(code_of([&] { mat_mul(Matrix(2, 2, m), Matrix(2, 2, m97)); }), Errc::ModulusMismatch);
  EXPECT_EQ(code_of([&] { mat_add(Matrix(2, 2, m), Matrix(2, 3, m)); }), Errc::DimensionMismatch);
}

TEST(MatMul, SchoolbookOracleUpTo16) {
  for (std::uint64_t mv : {65537ull, 257ull, (1ull << 61) - 1}) {
    const Modulus m(mv);
    std::mt19937_64 rng(mv);
    for (int t = 0; t < 200; ++t) {
      const std::size_t r = 1 + rng() % 16, k = 1 + rng() % 16, c = 1 + rng() % 16;
      const auto a = oracle::random_matrix(r, k, m, rng);
      const auto b = oracle::random_matrix(k, c, m, rng);
      ASSERT_EQ(oracle::grid(mat_mul(a, b)), oracle::matmul(oracle::grid(a), oracle::grid(b), mv));
    }
  }
  const Modulus m(65537);
  std::mt19937_64 rng(5);
  const auto a = oracle::random_matrix(5, 4, m, rng);
  const auto b = oracle::random_matrix(4, 3, m, rng);
  EXPECT_EQ(oracle::grid(mat_mul(a, b)), oracle::matmul(oracle::grid(a), oracle::grid(b), 65537));
}

TEST(MatAdd, Examples) {
  EXPECT_EQ(mat_add(Matrix::from_rows(m97, {{1, 2}, {3, 4}}), Matrix::from_rows(m97, {{5, 6}, {7, 8}})),
            Matrix::from_rows(m97, {{6, 8}, {10, 12}}));
  EXPECT_EQ(mat_add(Matrix::from_rows(m97, {{96}}), Matrix::from_rows(m97, {{5}})), Matrix::from_rows(m97, {{4}}));
  const auto a = Matrix::from_rows(m97, {{1, 95}, {3, 4}});
  EXPECT_EQ(mat_add(a, Matrix(2, 2, m97)), a);
  std::mt19937_64 rng(8);
  const Modulus m(65537);
  for (int t = 0; t < 100; ++t) {
    const auto x = oracle::random_matrix(4, 7, m, rng), y = oracle::random_matrix(4, 7, m, rng);
    ASSERT_EQ(oracle::grid(mat_add(x, y)), oracle::add(oracle::grid(x), oracle::grid(y), 65537));
  }
}

TEST(MatPow, Examples) {
  const auto a = Matrix::from_rows(m97, {{2, 3}, {4, 5}});
  EXPECT_EQ(mat_pow_elementwise(a, 2), Matrix::from_rows(m97, {{4, 9}, {16, 25}}));
  EXPECT_EQ(mat_pow_elementwise(a, 1), a);
  EXPECT_EQ(mat_pow_elementwise(Matrix::from_rows(m97, {{0}}), 3), Matrix::from_rows(m97, {{0}}));
  EXPECT_EQ(code_of([&] { mat_pow_elementwise(a, 0); }), Errc::InvalidExponent);
  std::mt19937_64 rng(9);
  const Modulus m(65537);
  for (int t = 0; t < 100; ++t) {
    const auto x = oracle::random_matrix(3, 5, m, rng);
    const std::uint64_t n = 1 + rng() % 70000;
    ASSERT_EQ(oracle::grid(mat_pow_elementwise(x, n)), oracle::pow_elementwise(oracle::grid(x), n, 65537));
  }
}

TEST(VecMatMul, Examples) {
  const auto a = Matrix::from_rows(m97, {{3, 1}, {1, 5}});
  EXPECT_EQ(vec_mat_mul(Matrix::row_vector(m97, {2, 3}), a), Matrix::row_vector(m97, {9, 17}));
  EXPECT_EQ(vec_mat_mul(Matrix::row_vector(m97, {1, 1}), a), Matrix::row_vector(m97, {4, 6}));
  EXPECT_TRUE(vec_mat_mul(Matrix::row_vector(m97, {0, 0}), a).is_zero());
  EXPECT_EQ(code_of([&] { vec_mat_mul(Matrix::row_vector(m97, {1, 2, 3}), a); }), Errc::DimensionMismatch);
}

TEST(Matrix, RejectsOutOfRangeEntries) {
  EXPECT_EQ(code_of([] { Matrix::from_rows(m97, {{97}}); }), Errc::ValueOutOfRange);
  auto a = Matrix(1, 1, m97);
  EXPECT_EQ(code_of([&] { a.set(0, 0, 100); }), Errc::ValueOutOfRange);
}

TEST(Im2col, WorkedExample) {
  const Tensor x(1, 3, 3, m97, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  const auto p = im2col(x, ConvGeometry{2, 2, 1, 0});
  ASSERT_EQ(p.rows(), 4u);
  ASSERT_EQ(p.cols(), 4u);
  const std::vector<std::vector<std::uint64_t>> cols{{1, 2, 4, 5}, {2, 3, 5, 6}, {4, 5, 7, 8}, {5, 6, 8, 9}};
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t r = 0; r < 4; ++r) EXPECT_EQ(p(r, c), cols[c][r]);
}

TEST(Im2col, FullWindowIsFlattenedInput) {
  const Tensor x(2, 2, 3, m97, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
  const auto p = im2col(x, ConvGeometry{2, 3, 1, 0});
  ASSERT_EQ(p.cols(), 1u);
  ASSERT_EQ(p.rows(), 12u);
  for (std::size_t i = 0; i < 12; ++i) EXPECT_EQ(p(i, 0), i + 1);
}

TEST(Im2col, NonPositiveOutputIsGeometryError) {
  const Tensor x(1, 2, 2, m97);
  EXPECT_EQ(code_of([&] { im2col(x, ConvGeometry{3, 3, 1, 0}); }), Errc::GeometryError);
  EXPECT_EQ(code_of([&] { conv_output_dims(2, 2, ConvGeometry{1, 1, 0, 0}); }), Errc::GeometryError);
}

TEST(Im2col, ConvolutionMatchesDirectLoop) {
  const Modulus m(65537);
  std::mt19937_64 rng(21);
  int checked = 0;
  while (checked < 400) {
    const std::size_t c = 1 + rng() % 3, h = 1 + rng() % 8, w = 1 + rng() % 8;
    const std::size_t kh = 1 + rng() % 3, kw = 1 + rng() % 3, stride = 1 + rng() % 2, pad = rng() % 2;
    if (h + 2 * pad < kh || w + 2 * pad < kw) continue;
    const std::size_t filters = 1 + rng() % 4;
    std::vector<std::uint64_t> xs(c * h * w);
    for (auto& v : xs) v = rng() % m.value();
    const auto wmat = oracle::random_matrix(filters, c * kh * kw, m, rng);
    const Tensor x(c, h, w, m, xs);
    const auto got = mat_mul(wmat, im2col(x, ConvGeometry{kh, kw, stride, pad}));
    std::size_t oh = 0, ow = 0;
    const auto want = oracle::conv2d(xs, c, h, w, oracle::grid(wmat), kh, kw, stride, pad, 65537, oh, ow);
    ASSERT_EQ(got.rows(), filters);
    ASSERT_EQ(got.cols(), oh * ow);
    ASSERT_EQ(std::vector<std::uint64_t>(got.data().begin(), got.data().end()), want);
    ++checked;
  }
}

TEST(Tensor, MatrixViewRoundTrip) {
  const Tensor t(2, 2, 2, m97, {1, 2, 3, 4, 5, 6, 7, 8});
  const auto m = t.as_matrix();
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m(1, 2), 7u);
  EXPECT_EQ(Tensor::from_matrix(m, 2, 2, 2), t);
  EXPECT_EQ(t.at(1, 0, 1), 6u);
}
