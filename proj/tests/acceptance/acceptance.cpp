// Acceptance run: one PASS/FAIL line per criterion, exit status 1 on any FAIL.
// Expected values come from the big-integer oracle in ../oracle.hpp, never
// from the library under test.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dataseal/adversary.hpp"
#include "dataseal/bench.hpp"
#include "dataseal/demo_cnn.hpp"
#include "dataseal/net.hpp"
#include "dataseal/pipeline.hpp"
#include "gen.hpp"
#include "oracle.hpp"

using namespace dataseal;

namespace {

// ------------------------------------------------------- pinned tolerances
constexpr std::size_t kHonestJobs = 1000;
constexpr std::size_t kMaxHonestSize = 16;
constexpr std::size_t kSoundnessTrials = 1000;
constexpr std::size_t kScaleTrials = 1000;
constexpr std::size_t kForgeryTrials = 10000;
constexpr double kToyWinRate = 0.50;
constexpr double kToyWinTolerance = 0.05;
constexpr double kTrendTolerance = 0.10;
constexpr double kTrendEndRatio = 0.5;  // r(64) < 0.5 * r(8)
constexpr std::size_t kBackendInstances = 500;
constexpr std::size_t kBackendMaxDim = 8;
constexpr std::size_t kCodecCases = 10000;
constexpr std::size_t kFuzzCases = 10000;
constexpr std::size_t kTransportJobs = 100;

struct Outcome {
  bool pass = false;
  std::string detail;
};

ClientSecret secret_from(std::uint64_t seed) {
  std::array<std::uint8_t, 16> b{};
  std::mt19937_64 rng(seed);
  for (auto& x : b) x = static_cast<std::uint8_t>(rng());
  return ClientSecret(b);
}

SessionConfig session_config(const Modulus& m, std::size_t slots, std::uint64_t prefix) {
  SessionConfig c;
  c.params.slot_count = slots;
  c.params.modulus = m;
  c.nonce_prefix = prefix;
  return c;
}

/// Every message crosses the wire codec in both directions.
class SerializingTransport final : public Transport {
 public:
  explicit SerializingTransport(const BackendContext& ctx, WireContext client_ctx)
      : conn_(ctx), client_ctx_(std::move(client_ctx)) {}

  void send(const Message& msg) override { replies_.push_back(conn_.handle_bytes(encode_frame(msg))); }
  Message receive() override {
    auto bytes = std::move(replies_.front());
    replies_.erase(replies_.begin());
    return decode_frame(bytes, client_ctx_);
  }

 private:
  ServerConnection conn_;
  WireContext client_ctx_;
  std::vector<std::vector<std::uint8_t>> replies_;
};

JobRequest random_request(std::mt19937_64& rng, const Modulus& m, std::size_t max_n) {
  const auto op = static_cast<OpKind>(1 + rng() % 3);
  const std::size_t n = 1 + rng() % max_n;
  if (op == OpKind::Poly) {
    // zero entries are rejected before encoding; the checksum is multiplicative
    auto a = oracle::random_matrix(n, n, m, rng, 1);
    return JobRequest{op, std::move(a), std::nullopt, 1 + static_cast<std::uint32_t>(rng() % 8)};
  }
  auto a = oracle::random_matrix(n, n, m, rng);
  auto b = oracle::random_matrix(n, n, m, rng);
  return JobRequest{op, std::move(a), std::move(b), 0};
}

oracle::Grid expected(const JobRequest& r, std::uint64_t m) {
  switch (r.op) {
    case OpKind::Mul: return oracle::matmul(oracle::grid(r.a), oracle::grid(*r.b), m);
    case OpKind::Add: return oracle::add(oracle::grid(r.a), oracle::grid(*r.b), m);
    default: return oracle::pow_elementwise(oracle::grid(r.a), r.exponent, m);
  }
}

unsigned ceil_log2(std::uint64_t n) {
  unsigned k = 0;
  while ((std::uint64_t{1} << k) < n) ++k;
  return k;
}

// ---------------------------------------------------------------- criteria

Outcome completeness() {
  const Modulus m;
  const auto cfg = session_config(m, kMaxHonestSize, 1);
  const auto server = keygen(cfg.params);
  ClientSession client(secret_from(1), cfg);
  SerializingTransport t(server, client.wire_context());
  client.handshake(t);
  std::mt19937_64 rng(1);
  std::size_t accepted = 0, matched = 0, counts[4] = {};
  for (std::size_t i = 0; i < kHonestJobs; ++i) {
    const auto r = random_request(rng, m, kMaxHonestSize);
    const auto out = client.run(r, t);
    accepted += out.verdict.accepted;
    matched += oracle::grid(out.result) == expected(r, m.value());
    ++counts[static_cast<int>(r.op)];
  }
  std::ostringstream d;
  d << accepted << "/" << kHonestJobs << " accepted, " << matched << "/" << kHonestJobs
    << " match oracle (mul " << counts[1] << ", add " << counts[2] << ", poly " << counts[3] << ")";
  return {accepted == kHonestJobs && matched == kHonestJobs, d.str()};
}

Outcome exact_soundness() {
  std::ostringstream d;
  bool pass = true;
  for (const TamperStrategy& s : {TamperStrategy{ElementEdit{}}, TamperStrategy{HonestThenOverwrite{}}}) {
    CampaignConfig cfg;
    cfg.schemes = {Scheme::DataSeal};
    cfg.strategies = {s};
    cfg.sizes = {2, 8};
    cfg.trials = kSoundnessTrials;
    cfg.seed = 2;
    cfg.threads = 4;
    for (const auto& st : run_campaign(cfg)) {
      pass &= st.detections == kSoundnessTrials;
      d << st.strategy << "/" << op_name(st.op) << "/" << st.size << " " << st.detections << "/" << st.trials << "; ";
    }
  }

  // every position and every delta on 2x2 over Z_97
  const Modulus m97 = Modulus::toy(97);
  const auto a = Matrix::from_rows(m97, {{3, 1}, {1, 5}});
  const auto b = Matrix::from_rows(m97, {{8, 6}, {7, 10}});
  std::size_t checked = 0, caught = 0;
  for (RingScalar w0 = 1; w0 < 97; w0 += 19) {
    for (RingScalar w1 = 1; w1 < 97; w1 += 23) {
      const auto key = VerificationKey::make(Matrix::row_vector(m97, {w0, w1}), 5);
      const auto mul = encode_mul(a, b, key);
      const auto add = encode_add(a, b, key);
      const auto cm = mat_mul(mul.left.payload, b);
      const auto ca = mat_add(add.left.payload, add.right.payload);
      for (std::size_t r = 0; r < 2; ++r) {
        for (std::size_t c = 0; c < 2; ++c) {
          for (RingScalar delta = 1; delta < 97; ++delta) {
            auto tm = cm;
            tm.set(r, c, m97.add(tm(r, c), delta));
            auto ta = ca;
            ta.set(r, c, m97.add(ta(r, c), delta));
            caught += !verify_mul(tm, key, mul.golden).accepted;
            caught += !verify_add(ta, key, add.golden).accepted;
            checked += 2;
          }
        }
      }
    }
  }
  pass &= caught == checked;
  d << "m=97 exhaustive " << caught << "/" << checked;
  return {pass, d.str()};
}

Outcome scaling() {
  CampaignConfig cfg;
  cfg.schemes = {Scheme::DataSeal};
  cfg.strategies = {MatrixScale{}};
  cfg.sizes = {4};
  cfg.trials = kScaleTrials;
  cfg.seed = 3;
  cfg.threads = 4;
  bool pass = true;
  std::ostringstream d;
  for (const auto& st : run_campaign(cfg)) {
    const std::size_t live = st.trials - st.degenerate;
    const std::size_t live_detect = st.detections - (st.degenerate - st.degenerate_accepts);
    pass &= live_detect == live && st.degenerate == 0;
    d << op_name(st.op) << " " << live_detect << "/" << live << " (degenerate " << st.degenerate << "); ";
  }
  return {pass, d.str()};
}

Outcome bypass() {
  const Modulus m97 = Modulus::toy(97);
  const auto r = replay_column_checksum_bypass(VerificationKey::make(Matrix::row_vector(m97, {2, 3}), 5));
  // schoolbook oracle for the pinned constants
  const auto honest = oracle::matmul({{3, 1}, {1, 5}}, {{8, 6}, {7, 10}}, 97);
  const bool oracle_ok = honest[0][0] == 31 && honest[1][0] == 43 && (honest[0][0] + honest[1][0]) % 97 == 74;
  const bool pinned = r.abft_honest(0, 0) == 31 && r.abft_honest(1, 0) == 43 && r.abft_honest(2, 0) == 74 &&
                      r.abft_forged(0, 0) == 39 && r.abft_forged(1, 0) == 43 && r.abft_forged(2, 0) == 82;
  const bool verdicts = r.abft_verdict.accepted && !r.keyed_verdict.accepted &&
                        r.keyed_verdict.failed == std::vector<Check>{Check::WeightedChecksum};
  std::ostringstream d;
  d << "pinned values " << (pinned && oracle_ok ? "ok" : "MISMATCH") << ", ABFT "
    << (r.abft_verdict.accepted ? "ACCEPT" : "REJECT") << ", DataSeal " << r.keyed_verdict.summary();
  return {oracle_ok && pinned && verdicts, d.str()};
}

Outcome forgery() {
  bool pass = true;
  std::ostringstream d;
  for (std::size_t cols : {2u, 4u, 8u}) {
    ForgeryConfig f;
    f.cols = cols;
    f.trials = kForgeryTrials;
    f.seed = 5 + cols;
    const auto r = forgery_game(f);
    pass &= r.trials == kForgeryTrials && r.wins == 0;
    d << "cols=" << cols << " " << r.wins << "/" << r.trials << " wins; ";
  }
  ForgeryConfig toy;
  toy.modulus = Modulus::toy(2);
  toy.cols = 1;
  toy.trials = kForgeryTrials;
  toy.seed = 5;
  const double rate = forgery_game(toy).win_rate();
  pass &= std::abs(rate - kToyWinRate) <= kToyWinTolerance;
  d << "m=2 cols=1 rate " << rate;
  return {pass, d.str()};
}

Outcome space() {
  const Modulus m;
  auto key_for = [&](std::size_t n) {
    std::vector<RingScalar> vk(n);
    for (std::size_t i = 0; i < n; ++i) vk[i] = 1 + i;
    return VerificationKey::make(Matrix::row_vector(m, std::move(vk)), 3);
  };
  std::mt19937_64 rng(6);
  std::size_t ok = 0, total = 0;
  for (std::size_t n = 2; n <= 64; ++n) {
    const auto a = oracle::random_matrix(n, n, m, rng, 1), b = oracle::random_matrix(n, n, m, rng);
    const auto key = key_for(n);
    const auto mul = encode_mul(a, b, key);
    const auto add = encode_add(a, b, key);
    const auto poly = encode_poly(a, 2, key);
    // s(n) compared as exact rationals: appended * n == k * n_rows
    ok += mul.left.payload.rows() - n == 2 && mul.left.original_rows == n;
    ok += add.left.payload.rows() - n == 1 && add.right.payload.rows() - n == 1;
    ok += poly.left.payload.rows() - n == 1;
    total += 3;
  }
  std::ostringstream d;
  d << ok << "/" << total << " encodings with 2 (mul) or 1 (add, poly) appended rows for n=2..64";
  return {ok == total, d.str()};
}

Outcome trend() {
  BenchConfig cfg;
  cfg.ops = {OpKind::Mul};
  cfg.reps = 7;
  const auto series = run_bench(cfg).series(OpKind::Mul);
  std::ostringstream d;
  for (const auto& p : series) d << "r(" << p.n << ")=" << p.overhead_ratio() << " ";
  const bool mono = overhead_nonincreasing(series, kTrendTolerance);
  const bool drop = series.size() == 4 && series.back().overhead_ratio() < kTrendEndRatio * series.front().overhead_ratio();
  d << (mono ? "nonincreasing" : "NOT nonincreasing") << ", r(64)/r(8)="
    << (series.empty() ? 0.0 : series.back().overhead_ratio() / series.front().overhead_ratio());
  return {mono && drop, d.str()};
}

Outcome backend() {
  const Modulus m;
  BackendParams p;
  p.slot_count = kBackendMaxDim;
  p.modulus = m;
  p.max_depth = 16;
  const auto ctx = keygen(p);
  std::mt19937_64 rng(8);
  std::size_t plain = 0, cipher = 0, add = 0, pow = 0, depth_ok = 0, depth_total = 0;
  for (std::size_t t = 0; t < kBackendInstances; ++t) {
    const std::size_t r = 1 + rng() % kBackendMaxDim, k = 1 + rng() % kBackendMaxDim, c = 1 + rng() % kBackendMaxDim;
    const auto a = oracle::random_matrix(r, k, m, rng), b = oracle::random_matrix(k, c, m, rng);
    const auto a2 = oracle::random_matrix(r, k, m, rng);
    const std::uint64_t n = 1 + rng() % 256;
    const auto ea = encrypt_matrix(ctx, a);
    const auto want = oracle::matmul(oracle::grid(a), oracle::grid(b), m.value());
    const auto mp = eval_matmul(ctx, ea, PlainOperand{b});
    const auto mc = eval_matmul(ctx, ea, encrypt_matrix(ctx, b));
    const auto ad = eval_add(ctx, ea, encrypt_matrix(ctx, a2));
    const auto pw = eval_pow_elementwise(ctx, ea, n);
    plain += oracle::grid(decrypt_matrix(ctx, mp)) == want;
    cipher += oracle::grid(decrypt_matrix(ctx, mc)) == want;
    add += oracle::grid(decrypt_matrix(ctx, ad)) == oracle::add(oracle::grid(a), oracle::grid(a2), m.value());
    pow += oracle::grid(decrypt_matrix(ctx, pw)) == oracle::pow_elementwise(oracle::grid(a), n, m.value());
    // ct x plain: mul_plain + rescale; ct x ct: mul + rescale; add: free; pow: ceil(log2 n)
    depth_ok += mp.max_depth() == 1;
    depth_ok += mc.max_depth() == 2;
    depth_ok += ad.max_depth() == 0;
    depth_ok += pw.max_depth() == ceil_log2(n);
    depth_total += 4;
  }
  const std::size_t N = kBackendInstances;
  std::ostringstream d;
  d << "matmul-plain " << plain << "/" << N << ", matmul-ct " << cipher << "/" << N << ", add " << add << "/" << N
    << ", pow " << pow << "/" << N << ", depth " << depth_ok << "/" << depth_total;
  return {plain == N && cipher == N && add == N && pow == N && depth_ok == depth_total, d.str()};
}

std::vector<RingScalar> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

Outcome demo() {
  const Modulus m;
  const auto spec = DemoCnnSpec::build(1, m);
  const auto& conv = std::get<ConvLayer>(spec.pipeline.layers[0]);
  const auto& dense = std::get<DenseLayer>(spec.pipeline.layers[2]);

  // oracle forward pass: direct convolution, square, dense
  std::size_t oh = 0, ow = 0;
  auto h = oracle::conv2d(values(spec.input), 1, 8, 8, oracle::grid(conv.weights), 3, 3, 1, 0, m.value(), oh, ow);
  for (auto& v : h) v = oracle::pow(v, 2, m.value());
  const auto logits = oracle::matmul({h}, oracle::grid(dense.weights), m.value())[0];

  const auto params = demo_backend_params(m);
  const auto server = keygen(params);
  SessionConfig cfg;
  cfg.params = params;
  cfg.nonce_prefix = 9;
  std::ostringstream d;
  bool pass = true;
  {
    ClientSession client(secret_from(9), cfg);
    InProcessTransport t(server);
    client.handshake(t);
    const auto res = run_pipeline(client, spec.pipeline, spec.input, t);
    const bool all = res.verdicts.size() == 3 &&
                     std::all_of(res.verdicts.begin(), res.verdicts.end(), [](const Verdict& v) { return v.accepted; });
    const bool match = values(res.output) == logits;
    pass &= all && match;
    d << "honest: " << res.verdicts.size() << " layers " << (all ? "accepted" : "NOT accepted") << ", output "
      << (match ? "matches" : "DIFFERS FROM") << " oracle; tamper:";
  }
  for (bool overlap : {false, true}) {
    for (std::size_t k = 1; k <= 3; ++k) {
      ClientSession client(secret_from(10 + k), cfg);
      InProcessTransport inner(server);
      AdversarialTransport t(inner, ElementEdit{}, Scheme::DataSeal, 10 + k);
      t.set_target(k);
      t.set_logical_cols(oh * ow);  // poly layer has no public operand
      client.handshake(t);
      std::size_t got = 0;
      try {
        run_pipeline(client, spec.pipeline, spec.input, t, PipelineOptions{overlap});
      } catch (const LayerRejected& e) {
        got = e.layer();
      }
      pass &= got == k;
      d << " " << (overlap ? "overlap" : "serial") << "@" << k << "->" << got;
    }
  }
  return {pass, d.str()};
}

Outcome robustness() {
  const Modulus m;
  std::mt19937_64 rng(10);
  std::size_t round_trips = 0;
  for (std::size_t i = 0; i < kCodecCases; ++i) {
    const std::size_t slots = std::size_t{2} << (rng() % 4);
    const Message msg = gen::message(rng, m, slots);
    round_trips += decode_frame(encode_frame(msg), WireContext{m, slots}) == msg;
  }

  // a mutated frame must raise a registered error or decode to a different,
  // canonically encoded message; the original must never come back
  std::size_t errors = 0, reinterpreted = 0, silent = 0;
  for (std::size_t i = 0; i < kFuzzCases; ++i) {
    const Message msg = gen::message(rng, m, 4);
    auto bytes = encode_frame(msg);
    const std::size_t flips = 1 + rng() % 3;
    for (std::size_t k = 0; k < flips; ++k) {
      const std::size_t at = rng() % bytes.size();
      bytes[at] = static_cast<std::uint8_t>(bytes[at] ^ (1 + rng() % 255));
    }
    if (rng() % 8 == 0) bytes.resize(rng() % bytes.size());
    try {
      const Message got = decode_frame(bytes, WireContext{m, 4});
      if (got != msg && encode_frame(got) == bytes) {
        ++reinterpreted;
      } else {
        ++silent;
      }
    } catch (const Error& e) {
      if (errc_is_registered(static_cast<std::uint16_t>(e.code()))) {
        ++errors;
      } else {
        ++silent;
      }
    }
  }

  const auto cfg = session_config(m, 16, 11);
  const auto ctx = keygen(cfg.params);
  TcpServer server(ctx, Endpoint{"127.0.0.1", 0});
  server.start();
  ClientSession local(secret_from(11), cfg), remote(secret_from(11), cfg);
  InProcessTransport lt(ctx);
  TcpTransport rt(Endpoint{"127.0.0.1", server.port()}, remote.wire_context());
  local.handshake(lt);
  remote.handshake(rt);
  std::size_t same = 0;
  for (std::size_t i = 0; i < kTransportJobs; ++i) {
    const auto r = random_request(rng, m, 12);
    const auto a = local.run(r, lt);
    const auto b = remote.run(r, rt);
    same += a.job_id == b.job_id && a.result == b.result && a.verdict == b.verdict && a.verdict.accepted;
  }
  server.stop();

  std::ostringstream d;
  d << "round-trip " << round_trips << "/" << kCodecCases << ", fuzz " << errors << " errors + " << reinterpreted
    << " reinterpreted, " << silent << " silent, tcp==in-process " << same << "/" << kTransportJobs;
  return {round_trips == kCodecCases && silent == 0 && errors + reinterpreted == kFuzzCases &&
              same == kTransportJobs,
          d.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"completeness (1000 honest protocol jobs)", completeness},
      {"exact soundness (element edit, overwrite, m=97 exhaustive)", exact_soundness},
      {"scaling attack", scaling},
      {"column-checksum bypass replay", bypass},
      {"forgery game", forgery},
      {"space overhead", space},
      {"client overhead trend", trend},
      {"backend oracle equivalence and depth", backend},
      {"demo CNN verified inference", demo},
      {"protocol robustness", robustness},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += !o.pass;
    std::printf("%s %zu: %s [%.1fs] %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, secs, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures ? 1 : 0;
}
