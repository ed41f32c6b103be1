// dataseal: run verified jobs, serve, attack, bench, demo-cnn.
//
// Exit codes: 0 accept, 1 operational or usage error, 2 integrity rejection.

#include <CLI11.hpp>

#include <bit>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <random>
#include <sstream>

#include "dataseal/adversary.hpp"
#include "dataseal/bench.hpp"
#include "dataseal/demo_cnn.hpp"
#include "dataseal/net.hpp"
#include "dataseal/pipeline.hpp"

namespace ds = dataseal;

namespace {

const CLI::Validator kAtLeastOne(
    [](std::string& v) {
      std::size_t pos = 0;
      try {
        if (std::stoull(v, &pos) >= 1 && pos == v.size()) return std::string();
      } catch (const std::exception&) {
      }
      return std::string("must be an integer >= 1");
    },
    ">=1");

constexpr int kExitAccept = 0;
constexpr int kExitError = 1;
constexpr int kExitReject = 2;

struct KeyFlags {
  std::string secret_env;
  std::string secret_file;
};

void add_key_flags(CLI::App* cmd, KeyFlags& k) {
  cmd->add_option("--secret-env", k.secret_env, "Environment variable holding the 32-hex-character secret");
  cmd->add_option("--secret-file", k.secret_file, "File holding the raw 16-byte secret");
}

/// Without an explicit secret the seed determines it, so runs replay.
ds::ClientSecret load_secret(const KeyFlags& k, std::uint64_t seed) {
  if (!k.secret_env.empty()) {
    const char* v = std::getenv(k.secret_env.c_str());
    if (!v) throw ds::Error(ds::Errc::InvalidKey, "environment variable " + k.secret_env + " is not set");
    return ds::ClientSecret::from_hex(v);
  }
  if (!k.secret_file.empty()) return ds::ClientSecret::from_file(k.secret_file);
  std::mt19937_64 rng(seed ^ 0x5EA1C0DEull);
  std::array<std::uint8_t, 16> b{};
  for (auto& x : b) x = static_cast<std::uint8_t>(rng());
  return ds::ClientSecret(b);
}

ds::Modulus parse_modulus(std::uint64_t m) { return ds::Modulus(m); }

ds::TamperStrategy tamper_from_flag(const std::string& name) {
  if (name == "element") return ds::ElementEdit{};
  if (name == "scale") return ds::MatrixScale{};
  if (name == "forge") return ds::ChecksumForge{};
  if (name == "joint") return ds::JointForge{};
  if (name == "overwrite") return ds::HonestThenOverwrite{};
  throw ds::Error(ds::Errc::InvalidParams, "unknown tamper mode '" + name + "'");
}

ds::Scheme parse_scheme(const std::string& s) {
  if (s == "dataseal") return ds::Scheme::DataSeal;
  if (s == "abft") return ds::Scheme::AbftBaseline;
  throw ds::Error(ds::Errc::InvalidParams, "unknown scheme '" + s + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& s : split_list(text)) {
    std::size_t pos = 0;
    const unsigned long v = std::stoul(s, &pos);
    if (pos != s.size() || v == 0) throw ds::Error(ds::Errc::InvalidParams, "bad size '" + s + "'");
    out.push_back(v);
  }
  return out;
}

ds::Matrix random_matrix(std::size_t rows, std::size_t cols, const ds::Modulus& mod, std::mt19937_64& rng,
                         ds::RingScalar low) {
  std::uniform_int_distribution<ds::RingScalar> d(low, mod.value() - 1);
  std::vector<ds::RingScalar> v(rows * cols);
  for (auto& x : v) x = d(rng);
  return ds::Matrix(rows, cols, mod, std::move(v));
}

void print_rows(const ds::Matrix& m, std::size_t max_rows) {
  for (std::size_t r = 0; r < std::min(m.rows(), max_rows); ++r) {
    std::cout << "  [";
    for (std::size_t c = 0; c < m.cols(); ++c) std::cout << (c ? ", " : "") << m(r, c);
    std::cout << "]\n";
  }
  if (m.rows() > max_rows) std::cout << "  ... " << (m.rows() - max_rows) << " more rows\n";
}

/// Owns whichever transport stack a command asked for.
struct TransportStack {
  std::unique_ptr<ds::BackendContext> server;
  std::unique_ptr<ds::Transport> base;
  std::unique_ptr<ds::AdversarialTransport> adversary;

  ds::Transport& top() { return adversary ? static_cast<ds::Transport&>(*adversary) : *base; }
};

TransportStack make_transport(const std::string& connect, const ds::ClientSession& session) {
  TransportStack t;
  if (connect.empty()) {
    t.server = std::make_unique<ds::BackendContext>(session.config().params);
    t.base = std::make_unique<ds::InProcessTransport>(*t.server);
  } else {
    t.base = std::make_unique<ds::TcpTransport>(ds::parse_endpoint(connect), session.wire_context());
  }
  return t;
}

// ------------------------------------------------------------------- run

struct RunFlags {
  std::string op = "mul";
  std::size_t n = 4;
  std::int64_t exponent = 2;
  std::uint64_t seed = 1;
  std::uint64_t modulus = ds::kDefaultModulus;
  std::size_t slot_count = 0;
  std::string connect;
  std::string tamper;
  std::string scheme = "dataseal";
  bool encrypt_rhs = false;
  KeyFlags keys;
};

int cmd_run(const RunFlags& f) {
  const ds::OpKind op = ds::parse_op(f.op);
  const ds::Modulus mod = parse_modulus(f.modulus);
  if (op == ds::OpKind::Poly && (f.exponent < 1 || f.exponent > UINT32_MAX)) {
    throw ds::Error(ds::Errc::InvalidExponent, "exponent must be in [1, 2^32)");
  }
  if (f.n == 0) throw ds::Error(ds::Errc::DimensionMismatch, "--n must be >= 1");

  ds::SessionConfig cfg;
  cfg.params.modulus = mod;
  cfg.params.slot_count = f.slot_count ? f.slot_count : std::max<std::size_t>(ds::kDefaultSlotCount, std::bit_ceil(f.n));
  cfg.scheme = parse_scheme(f.scheme);
  cfg.encrypt_rhs = f.encrypt_rhs;
  cfg.nonce_prefix = f.seed;
  ds::ClientSession session(load_secret(f.keys, f.seed), cfg);

  std::mt19937_64 rng(f.seed);
  ds::JobRequest req{op, random_matrix(f.n, f.n, mod, rng, op == ds::OpKind::Poly ? 1 : 0), std::nullopt, 0};
  if (op == ds::OpKind::Poly) {
    req.exponent = static_cast<std::uint32_t>(f.exponent);
  } else {
    req.b = random_matrix(f.n, f.n, mod, rng, 0);
  }

  TransportStack t = make_transport(f.connect, session);
  if (!f.tamper.empty()) {
    t.adversary = std::make_unique<ds::AdversarialTransport>(*t.base, tamper_from_flag(f.tamper), cfg.scheme, f.seed);
    t.adversary->set_logical_cols(f.n);
  }
  session.handshake(t.top());
  const ds::JobOutcome out = session.run(req, t.top());

  const ds::Matrix expected =
      op == ds::OpKind::Mul   ? ds::mat_mul(req.a, *req.b)
      : op == ds::OpKind::Add ? ds::mat_add(req.a, *req.b)
                              : ds::mat_pow_elementwise(req.a, req.exponent);
  std::cout << "job " << out.job_id << " op=" << ds::op_name(op) << " n=" << f.n << " scheme="
            << ds::scheme_name(cfg.scheme) << " transport=" << (f.connect.empty() ? "in-process" : f.connect)
            << "\n";
  std::cout << out.verdict.summary() << "\n";
  std::cout << "C (first rows):\n";
  print_rows(out.result, 4);
  std::cout << "matches plaintext: " << (out.result == expected ? "yes" : "no") << "\n";
  return out.verdict.accepted ? kExitAccept : kExitReject;
}

// ----------------------------------------------------------------- serve

struct ServeFlags {
  std::string host = "127.0.0.1";
  std::uint16_t port = 7878;
  std::uint64_t modulus = ds::kDefaultModulus;
  std::size_t slot_count = ds::kDefaultSlotCount;
  unsigned max_depth = ds::kDefaultMaxDepth;
};

int cmd_serve(const ServeFlags& f) {
  ds::BackendParams params;
  params.modulus = parse_modulus(f.modulus);
  params.slot_count = f.slot_count;
  params.max_depth = f.max_depth;
  const ds::BackendContext ctx(params);
  ds::TcpServer server(ctx, ds::Endpoint{f.host, f.port}, [](const std::string& line) {
    std::cout << line << std::endl;
  });
  std::cout << "listening on " << f.host << ":" << server.port() << " slots=" << params.slot_count
            << " modulus=" << params.modulus.value() << std::endl;
  server.serve_forever();
  return kExitAccept;
}

// ---------------------------------------------------------------- attack

struct AttackFlags {
  std::string scheme = "all";
  std::vector<std::string> strategies;
  std::string ops = "mul,add,poly";
  std::string sizes = "2,4,8";
  std::size_t trials = 100;
  std::uint64_t modulus = ds::kDefaultModulus;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::string csv;
  bool bypass_replay = false;
  bool forgery = false;
  KeyFlags keys;
};

int cmd_attack(const AttackFlags& f) {
  const ds::Modulus mod = parse_modulus(f.modulus);
  if (f.bypass_replay) {
    const ds::Modulus toy = ds::Modulus::toy(97);
    const ds::VerificationKey key =
        ds::derive_keys(load_secret(f.keys, f.seed), ds::SessionNonce::from_counter(f.seed, 0), ds::OpKind::Mul, 2, toy);
    const ds::BypassReplay r = ds::replay_column_checksum_bypass(key);
    std::cout << r.transcript;
    return kExitAccept;
  }

  ds::CampaignConfig cfg;
  cfg.modulus = mod;
  cfg.trials = f.trials;
  cfg.seed = f.seed;
  cfg.threads = f.threads;
  cfg.sizes = parse_sizes(f.sizes);
  cfg.ops.clear();
  for (const auto& o : split_list(f.ops)) cfg.ops.push_back(ds::parse_op(o));
  if (f.scheme == "all") {
    cfg.schemes = {ds::Scheme::DataSeal, ds::Scheme::AbftBaseline};
  } else {
    cfg.schemes = {parse_scheme(f.scheme)};
  }
  const std::vector<std::string> names =
      f.strategies.empty() ? std::vector<std::string>{"passthrough", "element-edit", "matrix-scale", "checksum-forge",
                                                      "joint-forge", "honest-then-overwrite"}
                           : f.strategies;
  for (const auto& s : names) cfg.strategies.push_back(ds::parse_strategy(s));

  const auto stats = ds::run_campaign(cfg);
  if (!f.csv.empty()) {
    std::ofstream out(f.csv);
    if (!out) throw ds::Error(ds::Errc::InvalidParams, "cannot write " + f.csv);
    ds::write_campaign_csv(out, stats);
  }

  std::cout << std::left << std::setw(15) << "scheme" << std::setw(23) << "strategy" << std::setw(6) << "op"
            << std::setw(6) << "size" << std::right << std::setw(8) << "trials" << std::setw(12) << "detected"
            << std::setw(14) << "false_accept" << std::setw(10) << "rate" << "\n";
  bool seal_broken = false;
  for (const auto& s : stats) {
    std::cout << std::left << std::setw(15) << ds::scheme_name(s.scheme) << std::setw(23) << s.strategy
              << std::setw(6) << ds::op_name(s.op) << std::setw(6) << s.size << std::right << std::setw(8) << s.trials
              << std::setw(12) << s.detections << std::setw(14) << s.false_accepts << std::setw(9) << std::fixed
              << std::setprecision(1) << 100.0 * s.detection_rate() << "%\n";
    if (s.scheme == ds::Scheme::DataSeal && s.strategy != "passthrough" && s.false_accepts > 0) seal_broken = true;
  }
  std::cout.unsetf(std::ios::fixed);

  if (f.forgery) {
    for (std::size_t cols : {2, 4, 8}) {
      ds::ForgeryConfig g;
      g.modulus = mod;
      g.cols = cols;
      g.trials = f.trials;
      g.seed = f.seed;
      const auto r = ds::forgery_game(g);
      std::cout << "forgery game m=" << mod.value() << " cols=" << cols << ": " << r.wins << "/" << r.trials
                << " wins (bound " << r.analytical_bound << " per play)\n";
      if (r.wins) seal_broken = true;
    }
  }
  return seal_broken ? kExitReject : kExitAccept;
}

// ----------------------------------------------------------------- bench

struct BenchFlags {
  std::string sizes = "8,16,32,64";
  std::size_t reps = 5;
  std::string ops = "mul,add,poly";
  std::size_t slot_count = 0;
  std::uint64_t modulus = ds::kDefaultModulus;
  std::uint64_t seed = 1;
  std::string csv;
};

int cmd_bench(const BenchFlags& f) {
  ds::BenchConfig cfg;
  cfg.sizes = parse_sizes(f.sizes);
  cfg.reps = f.reps;
  cfg.modulus = parse_modulus(f.modulus);
  cfg.seed = f.seed;
  if (f.slot_count) cfg.slot_count = f.slot_count;
  cfg.ops.clear();
  for (const auto& o : split_list(f.ops)) cfg.ops.push_back(ds::parse_op(o));
  const auto report = ds::run_bench(cfg);
  if (!f.csv.empty()) {
    std::ofstream out(f.csv);
    if (!out) throw ds::Error(ds::Errc::InvalidParams, "cannot write " + f.csv);
    ds::write_bench_csv(out, report);
  }
  std::cout << std::left << std::setw(6) << "op" << std::setw(6) << "n" << std::right << std::setw(12) << "encode_ms"
            << std::setw(13) << "evaluate_ms" << std::setw(12) << "verify_ms" << std::setw(12) << "r(n)"
            << std::setw(10) << "s(n)" << "\n";
  for (const auto& p : report.points) {
    std::cout << std::left << std::setw(6) << ds::op_name(p.op) << std::setw(6) << p.n << std::right
              << std::setprecision(4) << std::setw(12) << p.encode_ms << std::setw(13) << p.evaluate_ms
              << std::setw(12) << p.verify_ms << std::setw(12) << p.overhead_ratio() << std::setw(10)
              << p.space_ratio() << "\n";
  }
  for (auto op : cfg.ops) {
    const auto s = report.series(op);
    std::cout << ds::op_name(op) << " space s(n) = " << ds::appended_rows_for(op) << "/n: "
              << (ds::space_exact(s) ? "PASS" : "FAIL") << "\n";
  }
  const auto mul = report.series(ds::OpKind::Mul);
  if (!mul.empty()) {
    std::cout << "mul overhead trend (nonincreasing within 10%): " << (ds::overhead_nonincreasing(mul) ? "PASS" : "FAIL")
              << "\n";
  }
  return kExitAccept;
}

// -------------------------------------------------------------- demo-cnn

struct DemoFlags {
  std::uint64_t seed = 1;
  std::size_t tamper_layer = 0;
  bool overlap = false;
  std::string connect;
  KeyFlags keys;
};

int cmd_demo(const DemoFlags& f) {
  const ds::DemoCnnSpec demo = ds::DemoCnnSpec::build(f.seed);
  const std::size_t layers = demo.pipeline.layers.size();
  if (f.tamper_layer > layers) {
    throw CLI::ValidationError("--tamper-layer", "must be in [1, " + std::to_string(layers) + "]");
  }
  ds::SessionConfig cfg;
  cfg.params = ds::demo_backend_params();
  cfg.nonce_prefix = f.seed;
  ds::ClientSession session(load_secret(f.keys, f.seed), cfg);
  TransportStack t = make_transport(f.connect, session);
  if (f.tamper_layer) {
    t.adversary = std::make_unique<ds::AdversarialTransport>(*t.base, ds::ElementEdit{0, 0, 1},
                                                             ds::Scheme::DataSeal, f.seed);
    t.adversary->set_target(f.tamper_layer);
    // the poly layer has no public operand; its width is the conv output
    // area, known from the architecture
    t.adversary->set_logical_cols(36);
  }
  session.handshake(t.top());

  try {
    const auto result = ds::run_pipeline(session, demo.pipeline, demo.input, t.top(), {f.overlap});
    for (std::size_t i = 0; i < layers; ++i) {
      std::cout << "layer " << i + 1 << " " << ds::layer_kind(demo.pipeline.layers[i]) << ": "
                << result.verdicts[i].summary() << "\n";
    }
    std::cout << "logits:";
    for (auto v : ds::decode_signed_values(result.output)) std::cout << " " << v;
    std::cout << "\n";
    const bool same = result.output == ds::reference_forward(demo.pipeline, demo.input);
    std::cout << "matches plaintext reference: " << (same ? "yes" : "no") << "\n";
    return same ? kExitAccept : kExitError;
  } catch (const ds::LayerRejected& e) {
    for (std::size_t i = 0; i + 1 < e.layer(); ++i) {
      std::cout << "layer " << i + 1 << " " << ds::layer_kind(demo.pipeline.layers[i]) << ": ACCEPT\n";
    }
    std::cout << "layer " << e.layer() << " " << ds::layer_kind(demo.pipeline.layers[e.layer() - 1]) << ": "
              << e.verdict().summary() << "\n";
    std::cout << "aborted: LayerRejected(" << e.layer() << ")\n";
    return kExitReject;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Verifiable outsourced matrix computation over a simulated FHE backend"};
  app.require_subcommand(1);

  RunFlags run;
  auto* c_run = app.add_subcommand("run", "Run one verified job");
  c_run->add_option("--op", run.op, "mul, add or poly")->check(CLI::IsMember({"mul", "add", "poly"}));
  c_run->add_option("--n", run.n, "Square matrix size");
  c_run->add_option("--exponent", run.exponent, "Exponent for poly");
  c_run->add_option("--seed", run.seed, "Seed for operands and, absent a secret, the key");
  c_run->add_option("--modulus", run.modulus, "Prime plaintext modulus >= 257");
  c_run->add_option("--slot-count", run.slot_count, "Slots per ciphertext (power of two)");
  c_run->add_option("--connect", run.connect, "host:port of a running server");
  c_run->add_option("--tamper", run.tamper, "Tamper with the result")
      ->check(CLI::IsMember({"element", "scale", "forge", "joint", "overwrite"}));
  c_run->add_option("--scheme", run.scheme, "dataseal or abft")->check(CLI::IsMember({"dataseal", "abft"}));
  c_run->add_flag("--encrypt-rhs", run.encrypt_rhs, "Send B encrypted (ciphertext x ciphertext)");
  add_key_flags(c_run, run.keys);

  ServeFlags serve;
  auto* c_serve = app.add_subcommand("serve", "Serve jobs over TCP");
  c_serve->add_option("--host", serve.host, "IPv4 address to bind");
  c_serve->add_option("--port", serve.port, "Port; 0 picks a free one");
  c_serve->add_option("--modulus", serve.modulus, "Prime plaintext modulus >= 257");
  c_serve->add_option("--slot-count", serve.slot_count, "Slots per ciphertext");
  c_serve->add_option("--max-depth", serve.max_depth, "Multiplicative depth budget");

  AttackFlags attack;
  auto* c_attack = app.add_subcommand("attack", "Run a tampering campaign");
  c_attack->add_option("--scheme", attack.scheme, "dataseal, abft or all")
      ->check(CLI::IsMember({"dataseal", "abft", "all"}));
  c_attack->add_option("--strategy", attack.strategies, "Strategies (repeatable); default all");
  c_attack->add_option("--op", attack.ops, "Comma-separated ops");
  c_attack->add_option("--sizes", attack.sizes, "Comma-separated square sizes");
  c_attack->add_option("--trials", attack.trials, "Trials per cell")->check(kAtLeastOne);
  c_attack->add_option("--modulus", attack.modulus, "Prime plaintext modulus >= 257");
  c_attack->add_option("--seed", attack.seed, "Campaign seed");
  c_attack->add_option("--threads", attack.threads, "Worker threads")->check(kAtLeastOne);
  c_attack->add_option("--csv", attack.csv, "Write per-cell CSV here");
  c_attack->add_flag("--bypass-replay,--fig2", attack.bypass_replay, "Replay the textbook column-checksum bypass");
  c_attack->add_flag("--forgery", attack.forgery, "Also play the forgery game at cols 2, 4, 8");
  add_key_flags(c_attack, attack.keys);

  BenchFlags bench;
  auto* c_bench = app.add_subcommand("bench", "Measure client overhead against evaluation");
  c_bench->add_option("--sizes", bench.sizes, "Comma-separated ascending sizes");
  c_bench->add_option("--reps", bench.reps, "Repetitions per phase (>= 5)");
  c_bench->add_option("--op", bench.ops, "Comma-separated ops");
  c_bench->add_option("--slot-count", bench.slot_count, "Fixed slot count for every size");
  c_bench->add_option("--modulus", bench.modulus, "Prime plaintext modulus >= 257");
  c_bench->add_option("--seed", bench.seed, "Operand seed");
  c_bench->add_option("--csv", bench.csv, "Write records CSV here");

  DemoFlags demo;
  auto* c_demo = app.add_subcommand("demo-cnn", "Verified conv -> square -> dense inference");
  c_demo->add_option("--seed", demo.seed, "Weight and input seed");
  c_demo->add_option("--tamper-layer", demo.tamper_layer, "Tamper with this layer's result (1-based)")
      ->check(kAtLeastOne);
  c_demo->add_flag("--overlap", demo.overlap, "Submit the next layer before verifying the current one");
  c_demo->add_option("--connect", demo.connect, "host:port of a running server");
  add_key_flags(c_demo, demo.keys);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  try {
    if (c_run->parsed()) return cmd_run(run);
    if (c_serve->parsed()) return cmd_serve(serve);
    if (c_attack->parsed()) return cmd_attack(attack);
    if (c_bench->parsed()) return cmd_bench(bench);
    return cmd_demo(demo);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitError;
  } catch (const ds::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
}
