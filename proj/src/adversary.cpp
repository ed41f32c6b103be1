#include "dataseal/adversary.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <cmath>
#include <exception>
#include <ostream>
#include <sstream>
#include <thread>

namespace dataseal {

namespace {

RingScalar draw(std::mt19937_64& rng, RingScalar low, RingScalar high) {
  return std::uniform_int_distribution<RingScalar>(low, high - 1)(rng);
}

std::size_t pick(std::mt19937_64& rng, std::optional<std::size_t> fixed, std::size_t bound, const char* what) {
  if (fixed) {
    if (*fixed >= bound) throw Error(Errc::ShapeMismatch, std::string(what) + " out of range");
    return *fixed;
  }
  return std::uniform_int_distribution<std::size_t>(0, bound - 1)(rng);
}

RingScalar pick_delta(std::mt19937_64& rng, std::optional<RingScalar> fixed, const Modulus& mod) {
  if (fixed) {
    const RingScalar d = mod.reduce(*fixed);
    if (d == 0) throw Error(Errc::ShapeMismatch, "delta is 0 mod m");
    return d;
  }
  return draw(rng, 1, mod.value());
}

RingScalar pick_factor(std::mt19937_64& rng, std::optional<RingScalar> fixed, const Modulus& mod) {
  if (fixed) {
    const RingScalar f = mod.reduce(*fixed);
    if (f == 0 || f == 1) throw Error(Errc::ShapeMismatch, "factor is 0 or 1 mod m");
    return f;
  }
  if (mod.value() < 3) throw Error(Errc::ShapeMismatch, "no admissible factor below m = 3");
  return draw(rng, 2, mod.value());
}

/// SplitMix64 finaliser; decorrelates per-cell seeds.
std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

class ImageEditor {
 public:
  explicit ImageEditor(const Matrix& m) : m_(m), mod_(m.modulus()), v_(m.data().begin(), m.data().end()) {}

  RingScalar get(std::size_t r, std::size_t c) const { return v_[r * m_.cols() + c]; }
  void set(std::size_t r, std::size_t c, RingScalar x) { v_[r * m_.cols() + c] = x; }
  void add(std::size_t r, std::size_t c, RingScalar d) { set(r, c, mod_.add(get(r, c), d)); }
  void mul(std::size_t r, std::size_t c, RingScalar f) { set(r, c, mod_.mul(get(r, c), f)); }
  Matrix done() { return Matrix(m_.rows(), m_.cols(), mod_, std::move(v_)); }

 private:
  const Matrix& m_;
  Modulus mod_;
  std::vector<RingScalar> v_;
};

}  // namespace

std::string_view strategy_name(const TamperStrategy& s) noexcept {
  switch (s.index()) {
    case 0: return "passthrough";
    case 1: return "element-edit";
    case 2: return "matrix-scale";
    case 3: return "checksum-forge";
    case 4: return "joint-forge";
    default: return "honest-then-overwrite";
  }
}

TamperStrategy parse_strategy(std::string_view name) {
  if (name == "passthrough") return Passthrough{};
  if (name == "element-edit" || name == "element") return ElementEdit{};
  if (name == "matrix-scale" || name == "scale") return MatrixScale{};
  if (name == "checksum-forge" || name == "forge") return ChecksumForge{};
  if (name == "joint-forge" || name == "joint") return JointForge{};
  if (name == "honest-then-overwrite" || name == "overwrite") return HonestThenOverwrite{};
  throw Error(Errc::InvalidParams, "unknown strategy '" + std::string(name) + "'");
}

Stage stage_of(const TamperStrategy&) noexcept { return Stage::PostEvaluation; }

std::size_t appended_rows(Scheme scheme, OpKind op) noexcept {
  return scheme == Scheme::DataSeal ? appended_rows_for(op) : 1;
}

Matrix apply_tamper(const Matrix& image, std::size_t data_rows, const TamperStrategy& strategy, OpKind op,
                    std::mt19937_64& rng) {
  if (data_rows == 0 || data_rows >= image.rows() || image.cols() == 0) {
    throw Error(Errc::ShapeMismatch, "image needs data rows and at least one checksum row");
  }
  const Modulus& mod = image.modulus();
  const std::size_t cols = image.cols();
  ImageEditor ed(image);

  if (std::holds_alternative<Passthrough>(strategy)) return image;

  if (const auto* s = std::get_if<ElementEdit>(&strategy)) {
    const std::size_t r = pick(rng, s->row, data_rows, "row");
    const std::size_t c = pick(rng, s->col, cols, "col");
    ed.add(r, c, pick_delta(rng, s->delta, mod));
  } else if (const auto* s = std::get_if<MatrixScale>(&strategy)) {
    const RingScalar f = pick_factor(rng, s->factor, mod);
    for (std::size_t r = 0; r < image.rows(); ++r) {
      for (std::size_t c = 0; c < cols; ++c) ed.mul(r, c, f);
    }
  } else if (const auto* s = std::get_if<ChecksumForge>(&strategy)) {
    ed.add(pick(rng, std::nullopt, data_rows, "row"), pick(rng, std::nullopt, cols, "col"),
           pick_delta(rng, std::nullopt, mod));
    std::size_t last = image.rows();
    if (s->keep_golden_row && op == OpKind::Mul && image.rows() - data_rows >= 2) --last;
    for (std::size_t r = data_rows; r < last; ++r) {
      for (std::size_t c = 0; c < cols; ++c) ed.set(r, c, draw(rng, 0, mod.value()));
    }
  } else if (const auto* s = std::get_if<JointForge>(&strategy)) {
    const std::size_t r = pick(rng, s->row, data_rows, "row");
    const std::size_t c = pick(rng, s->col, cols, "col");
    if (op == OpKind::Poly) {
      const RingScalar f = pick_factor(rng, s->factor, mod);
      ed.mul(r, c, f);
      ed.mul(data_rows, c, f);
    } else {
      const RingScalar d = pick_delta(rng, s->delta, mod);
      ed.add(r, c, d);
      ed.add(data_rows, c, d);
    }
  } else {
    const auto& hto = std::get<HonestThenOverwrite>(strategy);
    const std::size_t r = pick(rng, hto.row, data_rows, "row");
    bool changed = false;
    for (std::size_t c = 0; c < cols; ++c) {
      const RingScalar x = draw(rng, 0, mod.value());
      changed |= x != ed.get(r, c);
      ed.set(r, c, x);
    }
    if (!changed) ed.add(r, 0, 1);
  }
  return ed.done();
}

// ----------------------------------------------------------- transport

AdversarialTransport::AdversarialTransport(Transport& inner, TamperStrategy strategy, Scheme scheme,
                                           std::uint64_t seed)
    : inner_(inner), strategy_(std::move(strategy)), scheme_(scheme), rng_(seed) {}

void AdversarialTransport::send(const Message& msg) {
  if (const auto* hello = std::get_if<HelloMsg>(&msg)) modulus_ = Modulus::toy(hello->modulus);
  if (const auto* job = std::get_if<JobMsg>(&msg); job && !job->encrypted.empty()) {
    const std::size_t total = job->encrypted[0].row_cts.size();
    const std::size_t extra = appended_rows(scheme_, job->op);
    Shape shape{job->op, total > extra ? total - extra : 0, cols_hint_};
    if (!job->public_operands.empty()) shape.cols = job->public_operands[0].cols();
    shapes_[job->job_id] = shape;
  }
  inner_.send(msg);
}

Message AdversarialTransport::receive() {
  Message msg = inner_.receive();
  auto* result = std::get_if<ResultMsg>(&msg);
  if (!result) return msg;
  ++results_seen_;
  if (target_ && *target_ != results_seen_) return msg;
  if (std::holds_alternative<Passthrough>(strategy_)) return msg;
  const auto it = shapes_.find(result->job_id);
  if (it == shapes_.end() || !it->second.cols) {
    throw Error(Errc::ShapeMismatch, "logical width of job " + std::to_string(result->job_id) + " is unknown");
  }
  auto& cts = result->result.row_cts;
  const std::size_t cols = *it->second.cols;
  if (cts.empty() || cols > cts[0].slots.size()) throw Error(Errc::ShapeMismatch, "result narrower than job");
  if (!modulus_) throw Error(Errc::NotNegotiated, "RESULT seen before HELLO");
  std::vector<RingScalar> flat;
  flat.reserve(cts.size() * cols);
  for (const auto& ct : cts) flat.insert(flat.end(), ct.slots.begin(), ct.slots.begin() + static_cast<long>(cols));
  const Matrix image(cts.size(), cols, *modulus_, std::move(flat));
  const Matrix forged = apply_tamper(image, it->second.data_rows, strategy_, it->second.op, rng_);
  for (std::size_t r = 0; r < cts.size(); ++r) {
    std::copy(forged.row(r).begin(), forged.row(r).end(), cts[r].slots.begin());
  }
  ++tampered_;
  return msg;
}

// ------------------------------------------------------------ campaigns

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, const Modulus& mod, std::mt19937_64& rng,
                     RingScalar low = 0) {
  std::vector<RingScalar> v(rows * cols);
  for (auto& x : v) x = draw(rng, low, mod.value());
  return Matrix(rows, cols, mod, std::move(v));
}

JobRequest random_job(OpKind op, std::size_t n, const Modulus& mod, std::mt19937_64& rng) {
  switch (op) {
    case OpKind::Mul: return {op, random_matrix(n, n, mod, rng), random_matrix(n, n, mod, rng), 0};
    case OpKind::Add: return {op, random_matrix(n, n, mod, rng), random_matrix(n, n, mod, rng), 0};
    case OpKind::Poly:
      return {op, random_matrix(n, n, mod, rng, 1), std::nullopt, static_cast<std::uint32_t>(draw(rng, 2, 4))};
  }
  throw Error(Errc::Internal, "unreachable op");
}

ClientSecret random_secret(std::mt19937_64& rng) {
  std::array<std::uint8_t, 16> b{};
  for (auto& x : b) x = static_cast<std::uint8_t>(rng());
  return ClientSecret(b);
}

struct Cell {
  Scheme scheme;
  std::size_t strategy;
  OpKind op;
  std::size_t size;
};

DetectionStats run_cell(const CampaignConfig& cfg, const Cell& cell, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const TamperStrategy& strategy = cfg.strategies[cell.strategy];
  DetectionStats st;
  st.scheme = cell.scheme;
  st.strategy = std::string(strategy_name(strategy));
  st.op = cell.op;
  st.size = cell.size;

  BackendParams params;
  params.modulus = cfg.modulus;
  params.slot_count = std::bit_ceil(std::max<std::size_t>(2, cell.size));
  const BackendContext server(params);
  InProcessTransport wire(server);
  AdversarialTransport adversary(wire, strategy, cell.scheme, rng());
  adversary.set_logical_cols(cell.size);
  SessionConfig sc;
  sc.params = params;
  sc.scheme = cell.scheme;
  sc.nonce_prefix = rng();
  ClientSession client(random_secret(rng), sc);
  client.handshake(adversary);

  for (std::size_t t = 0; t < cfg.trials; ++t) {
    const std::uint64_t id = client.submit(random_job(cell.op, cell.size, cfg.modulus, rng), adversary);
    const bool degenerate = cell.scheme == Scheme::DataSeal && client.inspect_pending(id)->golden->degenerate();
    bool accepted = false;
    try {
      const JobOutcome out = client.receive(adversary.receive());
      accepted = out.verdict.accepted;
      st.weighted_failures += out.verdict.failed_check(Check::WeightedChecksum);
      st.golden_failures += out.verdict.failed_check(Check::GoldenOutput);
    } catch (const Error& e) {
      if (e.code() != Errc::MalformedResult) throw;
      ++st.malformed;
    }
    ++st.trials;
    if (accepted) {
      ++st.false_accepts;
    } else {
      ++st.detections;
    }
    if (degenerate) {
      ++st.degenerate;
      st.degenerate_accepts += accepted;
    }
  }
  return st;
}

}  // namespace

void CampaignConfig::validate() const {
  if (trials == 0) throw Error(Errc::InvalidParams, "trials must be >= 1");
  if (ops.empty() || sizes.empty() || schemes.empty() || strategies.empty()) {
    throw Error(Errc::InvalidParams, "campaign axes must be non-empty");
  }
  for (auto n : sizes) {
    if (n == 0) throw Error(Errc::InvalidParams, "sizes must be >= 1");
  }
}

std::vector<DetectionStats> run_campaign(const CampaignConfig& config) {
  config.validate();
  std::vector<Cell> cells;
  for (auto scheme : config.schemes) {
    for (std::size_t s = 0; s < config.strategies.size(); ++s) {
      for (auto op : config.ops) {
        for (auto n : config.sizes) cells.push_back({scheme, s, op, n});
      }
    }
  }
  std::vector<DetectionStats> out(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < cells.size();) {
      try {
        out[i] = run_cell(config, cells[i], mix(config.seed ^ mix(i)));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned n_threads = std::max(1u, std::min<unsigned>(config.threads, static_cast<unsigned>(cells.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

void write_campaign_csv(std::ostream& out, const std::vector<DetectionStats>& stats) {
  out << "scheme,strategy,op,size,trials,detections,false_accepts\n";
  for (const auto& s : stats) {
    out << scheme_name(s.scheme) << ',' << s.strategy << ',' << op_name(s.op) << ',' << s.size << ',' << s.trials
        << ',' << s.detections << ',' << s.false_accepts << '\n';
  }
}

// ----------------------------------------------------------------- games

ForgeryResult forgery_game(const ForgeryConfig& config) {
  if (config.trials == 0) throw Error(Errc::InvalidParams, "trials must be >= 1");
  if (config.rows == 0 || config.inner == 0 || config.cols == 0) throw Error(Errc::InvalidParams, "empty dims");
  const Modulus& mod = config.modulus;
  std::mt19937_64 rng(mix(config.seed));
  ForgeryResult res;
  res.analytical_bound = std::pow(static_cast<double>(mod.value()), -static_cast<double>(config.cols));
  for (std::size_t t = 0; t < config.trials; ++t) {
    // setup: the challenger keys a fresh instance
    const ClientSecret secret = random_secret(rng);
    const SessionNonce nonce = SessionNonce::from_counter(rng(), t);
    const VerificationKey key = derive_keys(secret, nonce, OpKind::Mul, config.rows, mod);
    const Matrix a = random_matrix(config.rows, config.inner, mod, rng);
    const Matrix b = random_matrix(config.inner, config.cols, mod, rng);
    const MulEncoding enc = encode_mul(a, b, key);
    const Matrix honest = mat_mul(enc.left.payload, b);

    // adversary: forged data, guessed weighted row, honest golden row
    ImageEditor ed(honest);
    ed.add(pick(rng, std::nullopt, config.rows, "row"), pick(rng, std::nullopt, config.cols, "col"),
           draw(rng, 1, mod.value()));
    Matrix forged = ed.done();
    ImageEditor ed2(forged);
    if (config.adversary_has_key) {
      const RowVector w = vec_mat_mul(key.weights(), forged.slice_rows(0, config.rows));
      for (std::size_t c = 0; c < config.cols; ++c) ed2.set(config.rows, c, w(0, c));
    } else {
      for (std::size_t c = 0; c < config.cols; ++c) ed2.set(config.rows, c, draw(rng, 0, mod.value()));
    }
    forged = ed2.done();

    ++res.trials;
    res.wins += verify_mul(forged, key, enc.golden).accepted;
  }
  return res;
}

BypassReplay replay_column_checksum_bypass(const VerificationKey& key) {
  const Modulus mod = key.modulus();
  const Matrix a = Matrix::from_rows(mod, {{3, 1}, {1, 5}});
  const Matrix b = Matrix::from_rows(mod, {{8, 6}, {7, 10}});
  if (key.length() != 2) throw Error(Errc::DimensionMismatch, "replay needs a length-2 key");

  BackendParams params;
  params.modulus = mod;
  params.slot_count = 2;
  const BackendContext ctx(params);
  auto evaluate = [&](const Matrix& left) {
    return decrypt_matrix(ctx, eval_matmul(ctx, encrypt_matrix(ctx, left), PlainOperand{b}));
  };
  // the server-side rewrite: A[0][0] += 1 and the first appended row's
  // column 0 += 1, consistent with an all-ones checksum
  auto forge = [&](const Matrix& payload) {
    ImageEditor ed(payload);
    ed.add(0, 0, 1);
    ed.add(2, 0, 1);
    return ed.done();
  };

  BypassReplay r{evaluate(encode_abft_baseline(a, OpKind::Mul).payload), Matrix(3, 2, mod), {}, Matrix(4, 2, mod),
                 {}, {}};
  const Matrix abft_input = forge(encode_abft_baseline(a, OpKind::Mul).payload);
  r.abft_forged = evaluate(abft_input);
  r.abft_verdict = verify_abft_baseline(r.abft_forged, OpKind::Mul);

  const MulEncoding enc = encode_mul(a, b, key);
  r.keyed_forged = evaluate(forge(enc.left.payload));
  r.keyed_verdict = verify_mul(r.keyed_forged, key, enc.golden);

  std::ostringstream t;
  t << "A = [[3,1],[1,5]]  B = [[8,6],[7,10]]  m = " << mod.value() << "\n"
    << "column checksum of A: " << a(0, 0) << " + " << a(1, 0) << " = " << mod.add(a(0, 0), a(1, 0)) << "\n"
    << "honest C column 0: " << r.abft_honest(0, 0) << ", " << r.abft_honest(1, 0) << "  checksum "
    << r.abft_honest(2, 0) << "\n"
    << "rewrite: A[0][0] " << a(0, 0) << " -> " << abft_input(0, 0) << ", checksum " << mod.add(a(0, 0), a(1, 0))
    << " -> " << abft_input(2, 0) << "\n"
    << "forged C column 0: " << r.abft_forged(0, 0) << ", " << r.abft_forged(1, 0) << "  checksum "
    << r.abft_forged(2, 0) << " = " << r.abft_forged(0, 0) << " + " << r.abft_forged(1, 0) << "\n"
    << "ABFT_BASELINE: " << r.abft_verdict.summary() << "\n"
    << "DATASEAL:      " << r.keyed_verdict.summary() << "\n";
  r.transcript = t.str();
  return r;
}

}  // namespace dataseal
