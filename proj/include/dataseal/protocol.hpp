#pragma once

// Client/server session protocol over an abstract message transport.

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <utility>

#include "dataseal/he_backend.hpp"
#include "dataseal/sealcodec.hpp"
#include "dataseal/wire.hpp"

namespace dataseal {

/// Ordered, reliable message channel between one client and one server.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual void send(const Message& msg) = 0;
  virtual Message receive() = 0;
};

/// Per-connection server state: negotiation flag and seen job ids.
class ServerConnection {
 public:
  explicit ServerConnection(const BackendContext& ctx) : ctx_(ctx) {}

  /// Never throws for protocol problems; failures become ERROR messages.
  Message handle(const Message& msg);

  /// Decode, handle, encode. Undecodable input yields an ERROR frame.
  std::vector<std::uint8_t> handle_bytes(std::span<const std::uint8_t> frame);

  WireContext wire_context() const;
  bool negotiated() const noexcept { return negotiated_; }
  const BackendContext& backend() const noexcept { return ctx_; }

 private:
  Message evaluate(const JobMsg& job);

  const BackendContext& ctx_;
  bool negotiated_ = false;
  std::set<std::uint64_t> seen_jobs_;
};

/// Delivers messages straight to an in-process ServerConnection; replies are
/// queued for receive(). No serialization.
class InProcessTransport final : public Transport {
 public:
  explicit InProcessTransport(const BackendContext& server_ctx) : conn_(server_ctx) {}

  void send(const Message& msg) override;
  Message receive() override;

  ServerConnection& connection() noexcept { return conn_; }

 private:
  ServerConnection conn_;
  std::deque<Message> replies_;
};

/// Passes traffic through and lets a hook rewrite messages in either
/// direction. Models a man-in-the-middle or a malicious server.
class InterceptingTransport final : public Transport {
 public:
  using Hook = std::function<void(Message&)>;

  InterceptingTransport(Transport& inner, Hook outbound, Hook inbound)
      : inner_(inner), outbound_(std::move(outbound)), inbound_(std::move(inbound)) {}

  void send(const Message& msg) override;
  Message receive() override;

 private:
  Transport& inner_;
  Hook outbound_;
  Hook inbound_;
};

enum class Scheme : std::uint8_t { DataSeal, AbftBaseline };

std::string_view scheme_name(Scheme s) noexcept;

struct SessionConfig {
  BackendParams params;
  Scheme scheme = Scheme::DataSeal;
  PolyOptions poly;
  /// Send B of a MUL job encrypted (ct x ct evaluation) instead of public.
  bool encrypt_rhs = false;
  /// Fixes the per-session nonce prefix for reproducible runs; drawn from
  /// the system source when unset.
  std::optional<std::uint64_t> nonce_prefix;
};

struct JobRequest {
  OpKind op = OpKind::Mul;
  Matrix a;
  std::optional<Matrix> b;
  std::uint32_t exponent = 0;
};

/// ERROR replied by the server, rethrown on the client.
class RemoteError : public Error {
 public:
  RemoteError(std::uint64_t job_id, Errc code, const std::string& text)
      : Error(code, "server: " + text), job_id_(job_id) {}

  std::uint64_t job_id() const noexcept { return job_id_; }

 private:
  std::uint64_t job_id_;
};

struct JobOutcome {
  std::uint64_t job_id = 0;
  Matrix result;   // data rows only
  Verdict verdict;
};

/// Client side of a session. Keys and golden outputs stay in `pending_` and
/// are consumed by the first matching result.
class ClientSession {
 public:
  ClientSession(ClientSecret secret, SessionConfig config);

  /// Sends HELLO and checks the server's reply.
  void handshake(Transport& transport);

  /// Encodes, encrypts and transmits a job. Encoding errors surface before
  /// anything is sent.
  std::uint64_t submit(const JobRequest& request, Transport& transport);

  /// Decrypts and verifies a RESULT (consuming its pending entry) or
  /// rethrows an ERROR as RemoteError.
  JobOutcome receive(const Message& reply);

  /// submit + receive on one transport.
  JobOutcome run(const JobRequest& request, Transport& transport);

  /// Decrypted result with checksum rows, before verification.
  struct Opened {
    std::uint64_t job_id = 0;
    Matrix c_star;
    Matrix data;
  };
  Opened open(const ResultMsg& result) const;
  /// Verifies an opened result and consumes the pending entry.
  Verdict verify(const Opened& opened);
  /// Drops a pending job without verifying it.
  void discard(std::uint64_t job_id);

  const BackendContext& backend() const noexcept { return backend_; }
  const SessionConfig& config() const noexcept { return config_; }
  std::size_t pending_count() const noexcept { return pending_.size(); }
  WireContext wire_context() const;

  /// Key material of a pending job, for confidentiality tests.
  struct PendingView {
    const VerificationKey* key;
    const GoldenOutput* golden;
  };
  std::optional<PendingView> inspect_pending(std::uint64_t job_id) const;
  const ClientSecret& secret() const noexcept { return secret_; }

 private:
  struct Pending {
    OpKind op;
    Scheme scheme;
    VerificationKey key;
    GoldenOutput golden;
    std::size_t data_rows;
    std::size_t out_cols;
    std::uint32_t exponent;
  };

  ClientSecret secret_;
  SessionConfig config_;
  BackendContext backend_;
  std::uint64_t nonce_prefix_;
  std::uint64_t nonce_counter_ = 0;
  std::uint64_t next_job_id_ = 1;
  std::map<std::uint64_t, Pending> pending_;
};

}  // namespace dataseal
