#include "dataseal/bench.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <chrono>
#include <functional>
#include <iomanip>
#include <ostream>
#include <random>

#include "dataseal/he_backend.hpp"

namespace dataseal {

namespace {

using Clock = std::chrono::steady_clock;

/// Median per-call time in ms over `reps` samples of at least `min_ms` each.
double median_ms(const std::function<void()>& fn, std::size_t reps, double min_ms) {
  fn();  // warm-up
  std::size_t batch = 1;
  for (;;) {
    const auto t0 = Clock::now();
    for (std::size_t i = 0; i < batch; ++i) fn();
    const double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    if (ms >= min_ms || batch >= (1u << 24)) break;
    batch *= 2;
  }
  std::vector<double> samples;
  for (std::size_t r = 0; r < reps; ++r) {
    const auto t0 = Clock::now();
    for (std::size_t i = 0; i < batch; ++i) fn();
    samples.push_back(std::chrono::duration<double, std::milli>(Clock::now() - t0).count() /
                      static_cast<double>(batch));
  }
  std::nth_element(samples.begin(), samples.begin() + static_cast<long>(samples.size() / 2), samples.end());
  return samples[samples.size() / 2];
}

Matrix random_matrix(std::size_t n, const Modulus& mod, std::mt19937_64& rng, RingScalar low) {
  std::uniform_int_distribution<RingScalar> d(low, mod.value() - 1);
  std::vector<RingScalar> v(n * n);
  for (auto& x : v) x = d(rng);
  return Matrix(n, n, mod, std::move(v));
}

// keeps results observable so the optimiser cannot drop a phase
volatile RingScalar g_sink;

BenchPoint measure(const BenchConfig& cfg, OpKind op, std::size_t n, std::mt19937_64& rng) {
  const Modulus& mod = cfg.modulus;
  BackendParams params;
  params.modulus = mod;
  params.slot_count = cfg.slot_count ? *cfg.slot_count : std::bit_ceil(std::max<std::size_t>(2, n));
  const BackendContext ctx(params);

  std::array<std::uint8_t, 16> sb{};
  for (auto& b : sb) b = static_cast<std::uint8_t>(rng());
  const ClientSecret secret(sb);
  const SessionNonce nonce = SessionNonce::from_counter(rng(), 0);
  const Matrix a = random_matrix(n, mod, rng, op == OpKind::Poly ? 1 : 0);
  const Matrix b = random_matrix(n, mod, rng, 0);

  BenchPoint p{op, n, 0, 0, 0, 0};
  const std::size_t key_len = n;
  switch (op) {
    case OpKind::Mul: {
      const auto key = derive_keys(secret, nonce, op, key_len, mod);
      const auto enc = encode_mul(a, b, key);
      p.appended_rows = enc.left.payload.rows() - a.rows();
      const auto ct = encrypt_matrix(ctx, enc.left.payload);
      const PlainOperand pb{b};
      const Matrix c_star = decrypt_matrix(ctx, eval_matmul(ctx, ct, pb));
      p.encode_ms = median_ms(
          [&] {
            const auto e = encode_mul(a, b, derive_keys(secret, nonce, op, key_len, mod));
            g_sink = e.golden.v_o(0, 0);
          },
          cfg.reps, cfg.min_sample_ms);
      p.evaluate_ms = median_ms([&] { g_sink = eval_matmul(ctx, ct, pb).row_cts[0].slots[0]; }, cfg.reps,
                                cfg.min_sample_ms);
      p.verify_ms = median_ms([&] { g_sink = verify_mul(c_star, key, enc.golden).accepted; }, cfg.reps,
                              cfg.min_sample_ms);
      break;
    }
    case OpKind::Add: {
      const auto key = derive_keys(secret, nonce, op, key_len, mod);
      const auto enc = encode_add(a, b, key);
      p.appended_rows = enc.left.payload.rows() - a.rows();
      const auto ca = encrypt_matrix(ctx, enc.left.payload);
      const auto cb = encrypt_matrix(ctx, enc.right.payload);
      const Matrix c_star = decrypt_matrix(ctx, eval_add(ctx, ca, cb));
      p.encode_ms = median_ms(
          [&] {
            const auto e = encode_add(a, b, derive_keys(secret, nonce, op, key_len, mod));
            g_sink = e.golden.v_o(0, 0);
          },
          cfg.reps, cfg.min_sample_ms);
      p.evaluate_ms =
          median_ms([&] { g_sink = eval_add(ctx, ca, cb).row_cts[0].slots[0]; }, cfg.reps, cfg.min_sample_ms);
      p.verify_ms = median_ms([&] { g_sink = verify_add(c_star, key, enc.golden).accepted; }, cfg.reps,
                              cfg.min_sample_ms);
      break;
    }
    case OpKind::Poly: {
      const auto key = derive_keys(secret, nonce, op, key_len, mod);
      const auto enc = encode_poly(a, cfg.exponent, key);
      p.appended_rows = enc.left.payload.rows() - a.rows();
      const auto ca = encrypt_matrix(ctx, enc.left.payload);
      const Matrix c_star = decrypt_matrix(ctx, eval_pow_elementwise(ctx, ca, cfg.exponent));
      p.encode_ms = median_ms(
          [&] {
            const auto e = encode_poly(a, cfg.exponent, derive_keys(secret, nonce, op, key_len, mod));
            g_sink = e.golden.v_o(0, 0);
          },
          cfg.reps, cfg.min_sample_ms);
      p.evaluate_ms = median_ms([&] { g_sink = eval_pow_elementwise(ctx, ca, cfg.exponent).row_cts[0].slots[0]; },
                                cfg.reps, cfg.min_sample_ms);
      p.verify_ms = median_ms([&] { g_sink = verify_poly(c_star, cfg.exponent, key, enc.golden).accepted; },
                              cfg.reps, cfg.min_sample_ms);
      break;
    }
  }
  return p;
}

}  // namespace

std::string_view phase_name(Phase p) noexcept {
  switch (p) {
    case Phase::Encode: return "encode";
    case Phase::Evaluate: return "evaluate";
    default: return "verify";
  }
}

void BenchConfig::validate() const {
  if (sizes.size() < 2) throw Error(Errc::InvalidParams, "bench needs at least two sizes");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] == 0) throw Error(Errc::InvalidParams, "sizes must be >= 1");
    if (i && sizes[i] <= sizes[i - 1]) throw Error(Errc::InvalidParams, "sizes must be strictly ascending");
  }
  if (reps < 5) throw Error(Errc::InvalidParams, "reps must be >= 5");
  if (ops.empty()) throw Error(Errc::InvalidParams, "no ops to benchmark");
  if (exponent == 0) throw Error(Errc::InvalidExponent, "exponent must be >= 1");
}

std::vector<BenchPoint> BenchReport::series(OpKind op) const {
  std::vector<BenchPoint> out;
  for (const auto& p : points) {
    if (p.op == op) out.push_back(p);
  }
  return out;
}

BenchReport run_bench(const BenchConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  BenchReport report;
  for (auto op : config.ops) {
    for (auto n : config.sizes) {
      const BenchPoint p = measure(config, op, n, rng);
      report.points.push_back(p);
      const double s = p.space_ratio();
      report.records.push_back({op, n, Phase::Encode, p.encode_ms, s});
      report.records.push_back({op, n, Phase::Evaluate, p.evaluate_ms, s});
      report.records.push_back({op, n, Phase::Verify, p.verify_ms, s});
    }
  }
  return report;
}

bool overhead_nonincreasing(const std::vector<BenchPoint>& series, double tolerance) {
  for (std::size_t i = 1; i < series.size(); ++i) {
    if (series[i].overhead_ratio() > (1.0 + tolerance) * series[i - 1].overhead_ratio()) return false;
  }
  return true;
}

bool space_exact(const std::vector<BenchPoint>& series) {
  return std::all_of(series.begin(), series.end(),
                     [](const BenchPoint& p) { return p.appended_rows == appended_rows_for(p.op); });
}

void write_bench_csv(std::ostream& out, const BenchReport& report) {
  out << "op,n,phase,median_ms,space_ratio\n";
  const auto flags = out.flags();
  for (const auto& r : report.records) {
    out << op_name(r.op) << ',' << r.n << ',' << phase_name(r.phase) << ',' << std::setprecision(6) << r.median_ms
        << ',' << std::setprecision(8) << r.space_ratio << '\n';
  }
  out.flags(flags);
}

}  // namespace dataseal
