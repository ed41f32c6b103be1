#pragma once

// Byte-stream transport over TCP sockets.

#include <atomic>
#include <cstdint>
#include <functional>
#include <list>
#include <mutex>
#include <string>
#include <thread>

#include "dataseal/protocol.hpp"

namespace dataseal {

/// Owns a connected socket descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket();
  Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  int fd() const noexcept { return fd_; }
  bool valid() const noexcept { return fd_ >= 0; }
  void close() noexcept;
  /// Stops further reads and writes so a blocked peer thread wakes.
  void shutdown() noexcept;

  void write_all(std::span<const std::uint8_t> bytes);
  /// False on clean EOF before the first byte; throws on a partial read.
  bool read_exact(std::span<std::uint8_t> out);

 private:
  int fd_ = -1;
};

/// Reads one frame: header, then exactly payload_len bytes.
std::vector<std::uint8_t> read_frame_bytes(Socket& sock);

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

/// "host:port"
Endpoint parse_endpoint(const std::string& text);

class TcpTransport final : public Transport {
 public:
  TcpTransport(const Endpoint& endpoint, WireContext context);

  void send(const Message& msg) override;
  Message receive() override;

  /// Raw access for robustness tests.
  void send_bytes(std::span<const std::uint8_t> bytes);
  std::vector<std::uint8_t> receive_bytes();

 private:
  Socket sock_;
  WireContext context_;
};

/// Accepts connections and serves each on its own thread with a fresh
/// ServerConnection.
class TcpServer {
 public:
  using JobLog = std::function<void(const std::string&)>;

  TcpServer(const BackendContext& ctx, const Endpoint& bind_to, JobLog log = {});
  ~TcpServer();

  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;

  std::uint16_t port() const noexcept { return port_; }

  /// Runs the accept loop on a background thread.
  void start();
  /// Blocks in the accept loop on the calling thread.
  void serve_forever();
  void stop();

 private:
  void serve_connection(Socket sock);

  const BackendContext& ctx_;
  JobLog log_;
  Socket listener_;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread accept_thread_;
  std::mutex mu_;
  std::list<std::thread> workers_;
  std::list<int> live_fds_;
};

}  // namespace dataseal
