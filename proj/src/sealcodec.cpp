#include "dataseal/sealcodec.hpp"

#include <cctype>
#include <fstream>
#include <iterator>

#include "dataseal/prf.hpp"

namespace dataseal {

namespace {

constexpr std::string_view kDomainLabel = "DATASEAL-v1";

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  const char l = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (l >= 'a' && l <= 'f') return l - 'a' + 10;
  return -1;
}

// First column where the two rows differ.
std::optional<std::size_t> first_mismatch(std::span<const RingScalar> lhs, std::span<const RingScalar> rhs) {
  for (std::size_t j = 0; j < lhs.size(); ++j) {
    if (lhs[j] != rhs[j]) return j;
  }
  return std::nullopt;
}

void require_rows(const Matrix& c_star, std::size_t expected, const char* what) {
  if (c_star.rows() != expected) {
    throw Error(Errc::DimensionMismatch, std::string(what) + ": expected " + std::to_string(expected) +
                                             " rows, got " + std::to_string(c_star.rows()));
  }
}

// Column products: out[i] = prod_j a[j][i].
std::vector<RingScalar> column_products(const Matrix& a) {
  const Modulus& mod = a.modulus();
  std::vector<RingScalar> out(a.cols(), 1 % mod.value());
  for (std::size_t j = 0; j < a.rows(); ++j) {
    for (std::size_t i = 0; i < a.cols(); ++i) out[i] = mod.mul(out[i], a(j, i));
  }
  return out;
}

void finish(Verdict& v) { v.accepted = v.failed.empty(); }

}  // namespace

std::string_view op_name(OpKind op) noexcept {
  switch (op) {
    case OpKind::Mul: return "mul";
    case OpKind::Add: return "add";
    case OpKind::Poly: return "poly";
  }
  return "?";
}

OpKind parse_op(std::string_view name) {
  if (name == "mul") return OpKind::Mul;
  if (name == "add") return OpKind::Add;
  if (name == "poly") return OpKind::Poly;
  throw Error(Errc::MalformedJob, "unknown op '" + std::string(name) + "'");
}

std::string_view check_name(Check c) noexcept {
  return c == Check::WeightedChecksum ? "WEIGHTED_CHECKSUM" : "GOLDEN_OUTPUT";
}

// ------------------------------------------------------------ key material

ClientSecret ClientSecret::random() {
  std::array<std::uint8_t, 16> b{};
  random_bytes(b);
  return ClientSecret(b);
}

ClientSecret ClientSecret::from_hex(std::string_view hex) {
  if (hex.size() != 32) throw Error(Errc::InvalidKey, "secret must be 32 hex characters");
  std::array<std::uint8_t, 16> b{};
  for (std::size_t i = 0; i < 16; ++i) {
    const int hi = hex_digit(hex[2 * i]);
    const int lo = hex_digit(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw Error(Errc::InvalidKey, "secret contains a non-hex character");
    b[i] = static_cast<std::uint8_t>(hi * 16 + lo);
  }
  return ClientSecret(b);
}

ClientSecret ClientSecret::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::InvalidKey, "cannot open key file " + path);
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (raw.size() != 16) throw Error(Errc::InvalidKey, "key file must hold exactly 16 bytes");
  std::array<std::uint8_t, 16> b{};
  for (std::size_t i = 0; i < 16; ++i) b[i] = static_cast<std::uint8_t>(raw[i]);
  return ClientSecret(b);
}

SessionNonce SessionNonce::from_counter(std::uint64_t prefix, std::uint64_t counter) {
  std::array<std::uint8_t, 16> b{};
  for (int i = 0; i < 8; ++i) {
    b[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(prefix >> (8 * i));
    b[static_cast<std::size_t>(8 + i)] = static_cast<std::uint8_t>(counter >> (8 * i));
  }
  return SessionNonce(b);
}

SessionNonce SessionNonce::random() {
  std::array<std::uint8_t, 16> b{};
  random_bytes(b);
  return SessionNonce(b);
}

VerificationKey VerificationKey::make(RowVector weights, RingScalar alpha) {
  const Modulus& mod = weights.modulus();
  if (weights.rows() != 1 || weights.cols() == 0) {
    throw Error(Errc::InvalidLength, "verification key must be a non-empty row vector");
  }
  for (auto w : weights.data()) {
    if (w == 0) throw Error(Errc::InvalidKey, "verification weights must be nonzero");
  }
  const RingScalar min_alpha = mod.value() == 2 ? 1 : 2;
  if (alpha < min_alpha || !mod.contains(alpha)) {
    throw Error(Errc::InvalidKey, "alpha must lie in [2, m)");
  }
  return VerificationKey(std::move(weights), alpha);
}

VerificationKey VerificationKey::abft_ones(const Modulus& mod, std::size_t length) {
  if (length == 0) throw Error(Errc::InvalidLength, "key length must be >= 1");
  return VerificationKey(Matrix::row_vector(mod, std::vector<RingScalar>(length, 1)), 1);
}

VerificationKey derive_keys(const ClientSecret& secret, const SessionNonce& nonce, OpKind op,
                            std::size_t length, const Modulus& mod) {
  if (length == 0) throw Error(Errc::InvalidLength, "key length must be >= 1");
  std::vector<std::uint8_t> context(kDomainLabel.begin(), kDomainLabel.end());
  context.push_back(static_cast<std::uint8_t>(op));
  put_u64(context, length);
  put_u64(context, mod.value());
  const auto nb = nonce.bytes();
  context.insert(context.end(), nb.begin(), nb.end());

  KeyStream stream(secret.bytes(), context);
  std::vector<RingScalar> vk(length);
  for (auto& w : vk) w = stream.uniform(1, mod.value());
  const RingScalar alpha = mod.value() == 2 ? 1 : stream.uniform(2, mod.value());
  return VerificationKey::make(Matrix::row_vector(mod, std::move(vk)), alpha);
}

// ---------------------------------------------------------------- encode

MulEncoding encode_mul(const Matrix& a, const Matrix& b, const VerificationKey& key) {
  if (key.length() != a.rows()) {
    throw Error(Errc::DimensionMismatch, "key length " + std::to_string(key.length()) +
                                             " != rows(A) " + std::to_string(a.rows()));
  }
  if (a.cols() != b.rows()) throw Error(Errc::DimensionMismatch, "cols(A) != rows(B)");
  const RowVector v_a = vec_mat_mul(key.weights(), a);
  const RowVector v_b = scale(v_a, key.alpha());
  GoldenOutput golden{vec_mat_mul(v_b, b)};
  EncodedMatrix left{a.stacked(v_a).stacked(v_b), a.rows(), 2, EncodingTag::MulLeft};
  return {std::move(left), std::move(golden)};
}

AddEncoding encode_add(const Matrix& a, const Matrix& b, const VerificationKey& key) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw Error(Errc::DimensionMismatch, "A and B differ in shape");
  if (key.length() != a.rows()) throw Error(Errc::DimensionMismatch, "key length != rows(A)");
  const RowVector v_a = vec_mat_mul(key.weights(), a);
  const RowVector v_b = vec_mat_mul(key.weights(), b);
  GoldenOutput golden{mat_add(v_a, v_b)};
  EncodedMatrix left{a.stacked(v_a), a.rows(), 1, EncodingTag::AddLeft};
  EncodedMatrix right{b.stacked(v_b), b.rows(), 1, EncodingTag::AddRight};
  return {std::move(left), std::move(right), std::move(golden)};
}

PolyEncoding encode_poly(const Matrix& a, std::uint64_t n, const VerificationKey& key, PolyOptions options) {
  if (n == 0) throw Error(Errc::InvalidExponent, "exponent must be >= 1");
  if (key.length() != a.cols()) throw Error(Errc::DimensionMismatch, "key length != cols(A)");
  const Modulus& mod = a.modulus();
  PolyEncoding out{EncodedMatrix{a, a.rows(), 1, EncodingTag::Poly}, GoldenOutput{Matrix(1, a.cols(), mod)}, {}};
  for (std::size_t j = 0; j < a.rows(); ++j) {
    for (std::size_t i = 0; i < a.cols(); ++i) {
      if (a(j, i) != 0) continue;
      const std::string where = "A[" + std::to_string(j) + "][" + std::to_string(i) + "] is zero";
      if (!options.allow_zero_entries) throw Error(Errc::ZeroEntryError, where);
      out.warnings.push_back(where + "; column " + std::to_string(i) + " is not protected");
    }
  }
  auto products = column_products(a);
  std::vector<RingScalar> v_o(a.cols());
  for (std::size_t i = 0; i < a.cols(); ++i) {
    products[i] = mod.mul(key.weight(i), products[i]);
    v_o[i] = mod.pow(products[i], n);
  }
  out.left.payload = a.stacked(Matrix::row_vector(mod, std::move(products)));
  out.golden.v_o = Matrix::row_vector(mod, std::move(v_o));
  return out;
}

// ---------------------------------------------------------------- verify

Verdict verify_mul(const Matrix& c_star, const VerificationKey& key, const GoldenOutput& golden) {
  const std::size_t rows = key.length();
  require_rows(c_star, rows + 2, "verify_mul");
  if (golden.v_o.cols() != c_star.cols()) throw Error(Errc::DimensionMismatch, "golden output width");
  Verdict v;
  const RowVector weighted = vec_mat_mul(key.weights(), c_star.slice_rows(0, rows));
  if (auto col = first_mismatch(weighted.data(), c_star.row(rows))) {
    v.failed.push_back(Check::WeightedChecksum);
    v.checksum_column = col;
  }
  if (auto col = first_mismatch(c_star.row(rows + 1), golden.v_o.data())) {
    v.failed.push_back(Check::GoldenOutput);
    v.golden_column = col;
  }
  finish(v);
  return v;
}

Verdict verify_add(const Matrix& c_star, const VerificationKey& key, const GoldenOutput& golden) {
  const std::size_t rows = key.length();
  require_rows(c_star, rows + 1, "verify_add");
  if (golden.v_o.cols() != c_star.cols()) throw Error(Errc::DimensionMismatch, "golden output width");
  Verdict v;
  const auto v1 = c_star.row(rows);
  const RowVector weighted = vec_mat_mul(key.weights(), c_star.slice_rows(0, rows));
  if (auto col = first_mismatch(weighted.data(), v1)) {
    v.failed.push_back(Check::WeightedChecksum);
    v.checksum_column = col;
  }
  if (auto col = first_mismatch(v1, golden.v_o.data())) {
    v.failed.push_back(Check::GoldenOutput);
    v.golden_column = col;
  }
  finish(v);
  return v;
}

Verdict verify_poly(const Matrix& c_star, std::uint64_t n, const VerificationKey& key, const GoldenOutput& golden) {
  if (n == 0) throw Error(Errc::InvalidExponent, "exponent must be >= 1");
  if (c_star.cols() != key.length()) throw Error(Errc::DimensionMismatch, "key length != cols(C)");
  if (c_star.rows() < 2) throw Error(Errc::DimensionMismatch, "verify_poly: missing checksum row");
  if (golden.v_o.cols() != c_star.cols()) throw Error(Errc::DimensionMismatch, "golden output width");
  const Modulus& mod = c_star.modulus();
  const std::size_t rows = c_star.rows() - 1;
  const auto v_c = c_star.row(rows);
  auto expected = column_products(c_star.slice_rows(0, rows));
  for (std::size_t i = 0; i < expected.size(); ++i) expected[i] = mod.mul(mod.pow(key.weight(i), n), expected[i]);
  Verdict v;
  if (auto col = first_mismatch(expected, v_c)) {
    v.failed.push_back(Check::WeightedChecksum);
    v.checksum_column = col;
  }
  if (auto col = first_mismatch(v_c, golden.v_o.data())) {
    v.failed.push_back(Check::GoldenOutput);
    v.golden_column = col;
  }
  finish(v);
  return v;
}

bool Verdict::failed_check(Check c) const noexcept {
  for (auto f : failed) {
    if (f == c) return true;
  }
  return false;
}

std::string Verdict::summary() const {
  if (accepted) return "ACCEPT";
  std::string s = "REJECT: ";
  for (std::size_t i = 0; i < failed.size(); ++i) {
    if (i) s += ',';
    s += check_name(failed[i]);
  }
  return s;
}

// ---------------------------------------------------------- ABFT baseline

EncodedMatrix encode_abft_baseline(const Matrix& a, OpKind op) {
  if (a.rows() == 0) throw Error(Errc::DimensionMismatch, "empty matrix");
  const Modulus& mod = a.modulus();
  RowVector checksum = op == OpKind::Poly
                           ? Matrix::row_vector(mod, column_products(a))
                           : vec_mat_mul(Matrix::row_vector(mod, std::vector<RingScalar>(a.rows(), 1)), a);
  return EncodedMatrix{a.stacked(checksum), a.rows(), 1, EncodingTag::AbftBaseline};
}

Verdict verify_abft_baseline(const Matrix& c_star, OpKind op) {
  if (c_star.rows() < 2) throw Error(Errc::DimensionMismatch, "baseline result needs a checksum row");
  const Modulus& mod = c_star.modulus();
  const std::size_t rows = c_star.rows() - 1;
  const Matrix data = c_star.slice_rows(0, rows);
  std::vector<RingScalar> expected;
  if (op == OpKind::Poly) {
    expected = column_products(data);
  } else {
    const RowVector sums = vec_mat_mul(Matrix::row_vector(mod, std::vector<RingScalar>(rows, 1)), data);
    expected.assign(sums.data().begin(), sums.data().end());
  }
  Verdict v;
  if (auto col = first_mismatch(expected, c_star.row(rows))) {
    v.failed.push_back(Check::WeightedChecksum);
    v.checksum_column = col;
  }
  finish(v);
  return v;
}

}  // namespace dataseal
