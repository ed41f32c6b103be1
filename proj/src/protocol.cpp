#include "dataseal/protocol.hpp"

#include <array>

#include "dataseal/prf.hpp"

namespace dataseal {

std::string_view scheme_name(Scheme s) noexcept {
  return s == Scheme::DataSeal ? "DATASEAL" : "ABFT_BASELINE";
}

// ------------------------------------------------------------------ server

WireContext ServerConnection::wire_context() const {
  return WireContext{ctx_.modulus(), ctx_.slot_count()};
}

Message ServerConnection::handle(const Message& msg) {
  if (const auto* hello = std::get_if<HelloMsg>(&msg)) {
    if (hello->version != kProtocolVersion || hello->slot_count != ctx_.slot_count() ||
        hello->modulus != ctx_.modulus().value()) {
      return ErrorMsg{0, Errc::ParamsMismatch, "server runs version 1, " + std::to_string(ctx_.slot_count()) +
                                                   " slots, modulus " + std::to_string(ctx_.modulus().value())};
    }
    negotiated_ = true;
    return HelloMsg{kProtocolVersion, static_cast<std::uint32_t>(ctx_.slot_count()), ctx_.modulus().value()};
  }
  const auto* job = std::get_if<JobMsg>(&msg);
  if (!job) return ErrorMsg{0, Errc::MalformedJob, "server accepts only HELLO and JOB"};
  if (!negotiated_) return ErrorMsg{job->job_id, Errc::NotNegotiated, "JOB before HELLO"};
  if (!seen_jobs_.insert(job->job_id).second) {
    return ErrorMsg{job->job_id, Errc::DuplicateJob, "job id " + std::to_string(job->job_id) + " already used"};
  }
  try {
    return evaluate(*job);
  } catch (const Error& e) {
    return ErrorMsg{job->job_id, e.code(), e.what()};
  } catch (const std::exception& e) {
    return ErrorMsg{job->job_id, Errc::Internal, e.what()};
  }
}

Message ServerConnection::evaluate(const JobMsg& job) {
  ResultMsg out{job.job_id, {}};
  switch (job.op) {
    case OpKind::Mul:
      if (job.encrypted.size() == 1 && job.public_operands.size() == 1) {
        const Matrix& b = job.public_operands[0];
        out.result = eval_matmul(ctx_, with_logical_cols(job.encrypted[0], b.rows()), PlainOperand{b});
      } else if (job.encrypted.size() == 2 && job.public_operands.empty()) {
        const auto& b = job.encrypted[1];
        out.result = eval_matmul(ctx_, with_logical_cols(job.encrypted[0], b.rows), b);
      } else {
        throw Error(Errc::MalformedJob, "MUL needs one encrypted and one public operand, or two encrypted");
      }
      break;
    case OpKind::Add:
      if (job.encrypted.size() != 2) throw Error(Errc::MalformedJob, "ADD needs two encrypted operands");
      out.result = eval_add(ctx_, job.encrypted[0], job.encrypted[1]);
      break;
    case OpKind::Poly:
      if (job.encrypted.size() != 1) throw Error(Errc::MalformedJob, "POLY needs one encrypted operand");
      out.result = eval_pow_elementwise(ctx_, job.encrypted[0], job.exponent);
      break;
  }
  return out;
}

std::vector<std::uint8_t> ServerConnection::handle_bytes(std::span<const std::uint8_t> frame) {
  Message request;
  try {
    request = decode_frame(frame, wire_context());
  } catch (const Error& e) {
    return encode_frame(ErrorMsg{0, e.code(), e.what()});
  }
  return encode_frame(handle(request));
}

// -------------------------------------------------------------- transports

void InProcessTransport::send(const Message& msg) { replies_.push_back(conn_.handle(msg)); }

Message InProcessTransport::receive() {
  if (replies_.empty()) throw Error(Errc::TransportError, "no reply pending");
  Message m = std::move(replies_.front());
  replies_.pop_front();
  return m;
}

void InterceptingTransport::send(const Message& msg) {
  if (!outbound_) {
    inner_.send(msg);
    return;
  }
  Message copy = msg;
  outbound_(copy);
  inner_.send(copy);
}

Message InterceptingTransport::receive() {
  Message m = inner_.receive();
  if (inbound_) inbound_(m);
  return m;
}

// ------------------------------------------------------------------ client

namespace {

std::uint64_t random_u64() {
  std::array<std::uint8_t, 8> b{};
  random_bytes(b);
  std::uint64_t v = 0;
  for (auto x : b) v = (v << 8) | x;
  return v;
}

}  // namespace

ClientSession::ClientSession(ClientSecret secret, SessionConfig config)
    : secret_(secret),
      config_(std::move(config)),
      backend_(config_.params),
      nonce_prefix_(config_.nonce_prefix ? *config_.nonce_prefix : random_u64()) {}

WireContext ClientSession::wire_context() const {
  return WireContext{backend_.modulus(), backend_.slot_count()};
}

void ClientSession::handshake(Transport& transport) {
  const HelloMsg mine{kProtocolVersion, static_cast<std::uint32_t>(backend_.slot_count()), backend_.modulus().value()};
  transport.send(mine);
  const Message reply = transport.receive();
  if (const auto* err = std::get_if<ErrorMsg>(&reply)) throw RemoteError(err->job_id, err->code, err->text);
  const auto* hello = std::get_if<HelloMsg>(&reply);
  if (!hello || !(*hello == mine)) throw Error(Errc::ParamsMismatch, "server HELLO does not match session parameters");
}

std::uint64_t ClientSession::submit(const JobRequest& request, Transport& transport) {
  const Matrix& a = request.a;
  const Modulus& mod = backend_.modulus();
  if (!(a.modulus() == mod)) throw Error(Errc::ModulusMismatch, "operand modulus differs from session");
  if (a.rows() == 0 || a.cols() == 0) throw Error(Errc::DimensionMismatch, "empty operand");
  if (request.op != OpKind::Poly && request.exponent != 0) {
    throw Error(Errc::InvalidExponent, "exponent is only meaningful for POLY");
  }
  if (request.op != OpKind::Poly && !request.b) throw Error(Errc::DimensionMismatch, "missing right operand");

  const std::uint64_t job_id = next_job_id_++;
  const SessionNonce nonce = SessionNonce::from_counter(nonce_prefix_, nonce_counter_++);
  JobMsg job{job_id, request.op, 0, {}, {}};
  std::optional<Pending> pending;

  const std::size_t key_len = request.op == OpKind::Poly ? a.cols() : a.rows();
  const bool keyed = config_.scheme == Scheme::DataSeal;
  switch (request.op) {
    case OpKind::Mul: {
      const Matrix& b = *request.b;
      if (!(b.modulus() == mod)) throw Error(Errc::ModulusMismatch, "operand modulus differs from session");
      if (a.cols() != b.rows()) throw Error(Errc::DimensionMismatch, "cols(A) != rows(B)");
      if (b.cols() > backend_.slot_count()) throw Error(Errc::TooWide, "B wider than slot count");
      auto key = keyed ? derive_keys(secret_, nonce, OpKind::Mul, key_len, mod) : VerificationKey::abft_ones(mod, key_len);
      if (keyed) {
        auto enc = encode_mul(a, b, key);
        job.encrypted.push_back(encrypt_matrix(backend_, enc.left.payload));
        pending = Pending{OpKind::Mul, config_.scheme, std::move(key), std::move(enc.golden), a.rows(), b.cols(), 0};
      } else {
        job.encrypted.push_back(encrypt_matrix(backend_, encode_abft_baseline(a, OpKind::Mul).payload));
        pending = Pending{OpKind::Mul, config_.scheme, std::move(key), GoldenOutput{Matrix(1, b.cols(), mod)},
                          a.rows(), b.cols(), 0};
      }
      if (config_.encrypt_rhs) {
        job.encrypted.push_back(encrypt_matrix(backend_, b));
      } else {
        job.public_operands.push_back(b);
      }
      break;
    }
    case OpKind::Add: {
      const Matrix& b = *request.b;
      auto key = keyed ? derive_keys(secret_, nonce, OpKind::Add, key_len, mod) : VerificationKey::abft_ones(mod, key_len);
      if (keyed) {
        auto enc = encode_add(a, b, key);
        job.encrypted.push_back(encrypt_matrix(backend_, enc.left.payload));
        job.encrypted.push_back(encrypt_matrix(backend_, enc.right.payload));
        pending = Pending{OpKind::Add, config_.scheme, std::move(key), std::move(enc.golden), a.rows(), a.cols(), 0};
      } else {
        if (a.rows() != b.rows() || a.cols() != b.cols()) throw Error(Errc::DimensionMismatch, "A and B differ in shape");
        job.encrypted.push_back(encrypt_matrix(backend_, encode_abft_baseline(a, OpKind::Add).payload));
        job.encrypted.push_back(encrypt_matrix(backend_, encode_abft_baseline(b, OpKind::Add).payload));
        pending = Pending{OpKind::Add, config_.scheme, std::move(key), GoldenOutput{Matrix(1, a.cols(), mod)},
                          a.rows(), a.cols(), 0};
      }
      break;
    }
    case OpKind::Poly: {
      if (request.exponent == 0) throw Error(Errc::InvalidExponent, "exponent must be >= 1");
      job.exponent = request.exponent;
      auto key = keyed ? derive_keys(secret_, nonce, OpKind::Poly, key_len, mod) : VerificationKey::abft_ones(mod, key_len);
      if (keyed) {
        auto enc = encode_poly(a, request.exponent, key, config_.poly);
        job.encrypted.push_back(encrypt_matrix(backend_, enc.left.payload));
        pending = Pending{OpKind::Poly, config_.scheme, std::move(key), std::move(enc.golden), a.rows(), a.cols(),
                          request.exponent};
      } else {
        job.encrypted.push_back(encrypt_matrix(backend_, encode_abft_baseline(a, OpKind::Poly).payload));
        pending = Pending{OpKind::Poly, config_.scheme, std::move(key), GoldenOutput{Matrix(1, a.cols(), mod)},
                          a.rows(), a.cols(), request.exponent};
      }
      break;
    }
  }

  pending_.emplace(job_id, std::move(*pending));
  try {
    transport.send(job);
  } catch (...) {
    pending_.erase(job_id);
    throw;
  }
  return job_id;
}

ClientSession::Opened ClientSession::open(const ResultMsg& result) const {
  const auto it = pending_.find(result.job_id);
  if (it == pending_.end()) throw Error(Errc::UnknownJob, "no pending job " + std::to_string(result.job_id));
  const Pending& p = it->second;
  const std::size_t appended = p.scheme == Scheme::DataSeal ? appended_rows_for(p.op) : 1;
  const EncryptedMatrix& e = result.result;
  if (e.row_cts.size() != p.data_rows + appended) {
    throw Error(Errc::MalformedResult, "expected " + std::to_string(p.data_rows + appended) + " rows, got " +
                                           std::to_string(e.row_cts.size()));
  }
  for (const auto& ct : e.row_cts) {
    if (ct.slots.size() != backend_.slot_count()) throw Error(Errc::MalformedResult, "ciphertext width");
    for (std::size_t s = p.out_cols; s < ct.slots.size(); ++s) {
      if (ct.slots[s] != 0) throw Error(Errc::MalformedResult, "nonzero padding slot " + std::to_string(s));
    }
  }
  EncryptedMatrix narrowed{e.row_cts, e.row_cts.size(), p.out_cols};
  Matrix c_star = decrypt_matrix(backend_, narrowed);
  Matrix data = c_star.slice_rows(0, p.data_rows);
  return Opened{result.job_id, std::move(c_star), std::move(data)};
}

Verdict ClientSession::verify(const Opened& opened) {
  const auto it = pending_.find(opened.job_id);
  if (it == pending_.end()) throw Error(Errc::UnknownJob, "no pending job " + std::to_string(opened.job_id));
  const Pending p = std::move(it->second);
  pending_.erase(it);
  if (p.scheme == Scheme::AbftBaseline) return verify_abft_baseline(opened.c_star, p.op);
  switch (p.op) {
    case OpKind::Mul: return verify_mul(opened.c_star, p.key, p.golden);
    case OpKind::Add: return verify_add(opened.c_star, p.key, p.golden);
    case OpKind::Poly: return verify_poly(opened.c_star, p.exponent, p.key, p.golden);
  }
  throw Error(Errc::Internal, "unreachable op");
}

void ClientSession::discard(std::uint64_t job_id) { pending_.erase(job_id); }

JobOutcome ClientSession::receive(const Message& reply) {
  if (const auto* err = std::get_if<ErrorMsg>(&reply)) {
    pending_.erase(err->job_id);
    throw RemoteError(err->job_id, err->code, err->text);
  }
  const auto* result = std::get_if<ResultMsg>(&reply);
  if (!result) throw Error(Errc::MalformedResult, "expected RESULT or ERROR");
  std::optional<Opened> opened;
  try {
    opened = open(*result);
  } catch (const Error& e) {
    if (e.code() != Errc::UnknownJob) pending_.erase(result->job_id);
    throw;
  }
  Verdict v = verify(*opened);
  return JobOutcome{opened->job_id, std::move(opened->data), std::move(v)};
}

JobOutcome ClientSession::run(const JobRequest& request, Transport& transport) {
  submit(request, transport);
  return receive(transport.receive());
}

std::optional<ClientSession::PendingView> ClientSession::inspect_pending(std::uint64_t job_id) const {
  const auto it = pending_.find(job_id);
  if (it == pending_.end()) return std::nullopt;
  return PendingView{&it->second.key, &it->second.golden};
}

}  // namespace dataseal
