#include "dataseal/net.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <sstream>

namespace dataseal {

namespace {

[[noreturn]] void throw_errno(const std::string& what) {
  throw Error(Errc::TransportError, what + ": " + std::strerror(errno));
}

}  // namespace

Socket::~Socket() { close(); }

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = std::exchange(other.fd_, -1);
  }
  return *this;
}

void Socket::close() noexcept {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

void Socket::shutdown() noexcept {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

void Socket::write_all(std::span<const std::uint8_t> bytes) {
  std::size_t done = 0;
  while (done < bytes.size()) {
    const ssize_t n = ::send(fd_, bytes.data() + done, bytes.size() - done, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno("send");
    }
    done += static_cast<std::size_t>(n);
  }
}

bool Socket::read_exact(std::span<std::uint8_t> out) {
  std::size_t done = 0;
  while (done < out.size()) {
    const ssize_t n = ::recv(fd_, out.data() + done, out.size() - done, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno("recv");
    }
    if (n == 0) {
      if (done == 0) return false;
      throw Error(Errc::Truncated, "connection closed mid-frame");
    }
    done += static_cast<std::size_t>(n);
  }
  return true;
}

std::vector<std::uint8_t> read_frame_bytes(Socket& sock) {
  std::vector<std::uint8_t> frame(kHeaderSize);
  if (!sock.read_exact(frame)) return {};
  const FrameHeader h = decode_header(frame);
  frame.resize(kHeaderSize + h.payload_len);
  if (h.payload_len && !sock.read_exact(std::span(frame).subspan(kHeaderSize))) {
    throw Error(Errc::Truncated, "connection closed before payload");
  }
  return frame;
}

Endpoint parse_endpoint(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    throw Error(Errc::TransportError, "expected host:port, got '" + text + "'");
  }
  Endpoint ep;
  ep.host = text.substr(0, colon);
  const unsigned long port = std::stoul(text.substr(colon + 1));
  if (port > 65535) throw Error(Errc::TransportError, "port out of range");
  ep.port = static_cast<std::uint16_t>(port);
  return ep;
}

// --------------------------------------------------------------- client

TcpTransport::TcpTransport(const Endpoint& endpoint, WireContext context) : context_(std::move(context)) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(endpoint.port);
  if (const int rc = ::getaddrinfo(endpoint.host.c_str(), port.c_str(), &hints, &res); rc != 0) {
    throw Error(Errc::TransportError, "resolve " + endpoint.host + ": " + gai_strerror(rc));
  }
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    Socket s(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
    if (!s.valid()) continue;
    if (::connect(s.fd(), ai->ai_addr, ai->ai_addrlen) == 0) {
      sock_ = std::move(s);
      break;
    }
  }
  ::freeaddrinfo(res);
  if (!sock_.valid()) throw_errno("connect " + endpoint.host + ":" + port);
  const int one = 1;
  ::setsockopt(sock_.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

void TcpTransport::send(const Message& msg) { send_bytes(encode_frame(msg)); }

Message TcpTransport::receive() {
  const auto bytes = receive_bytes();
  return decode_frame(bytes, context_);
}

void TcpTransport::send_bytes(std::span<const std::uint8_t> bytes) { sock_.write_all(bytes); }

std::vector<std::uint8_t> TcpTransport::receive_bytes() {
  auto bytes = read_frame_bytes(sock_);
  if (bytes.empty()) throw Error(Errc::TransportError, "server closed the connection");
  return bytes;
}

// --------------------------------------------------------------- server

TcpServer::TcpServer(const BackendContext& ctx, const Endpoint& bind_to, JobLog log)
    : ctx_(ctx), log_(std::move(log)) {
  listener_ = Socket(::socket(AF_INET, SOCK_STREAM, 0));
  if (!listener_.valid()) throw_errno("socket");
  const int one = 1;
  ::setsockopt(listener_.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(bind_to.port);
  if (::inet_pton(AF_INET, bind_to.host.c_str(), &addr.sin_addr) != 1) {
    throw Error(Errc::TransportError, "bind address must be an IPv4 literal, got '" + bind_to.host + "'");
  }
  if (::bind(listener_.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    throw_errno("bind " + bind_to.host + ":" + std::to_string(bind_to.port));
  }
  if (::listen(listener_.fd(), 16) != 0) throw_errno("listen");
  socklen_t len = sizeof addr;
  ::getsockname(listener_.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpServer::~TcpServer() { stop(); }

void TcpServer::start() {
  accept_thread_ = std::thread([this] { serve_forever(); });
}

void TcpServer::serve_forever() {
  while (!stopping_) {
    const int fd = ::accept(listener_.fd(), nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      break;
    }
    std::lock_guard lock(mu_);
    if (stopping_) {
      ::close(fd);
      break;
    }
    live_fds_.push_back(fd);
    workers_.emplace_back([this, fd] { serve_connection(Socket(fd)); });
  }
}

void TcpServer::stop() {
  if (stopping_.exchange(true)) return;
  listener_.shutdown();
  if (accept_thread_.joinable()) accept_thread_.join();
  std::list<std::thread> workers;
  {
    std::lock_guard lock(mu_);
    for (int fd : live_fds_) ::shutdown(fd, SHUT_RDWR);
    workers.swap(workers_);
  }
  for (auto& t : workers) t.join();
  listener_.close();
}

void TcpServer::serve_connection(Socket sock) {
  ServerConnection conn(ctx_);
  try {
    for (;;) {
      std::vector<std::uint8_t> frame;
      Message request;
      try {
        frame = read_frame_bytes(sock);
        if (frame.empty()) break;
        request = decode_frame(frame, conn.wire_context());
      } catch (const Error& e) {
        if (e.code() == Errc::TransportError) break;
        sock.write_all(encode_frame(ErrorMsg{0, e.code(), e.what()}));
        // a bad header leaves the stream unsynchronised
        if (frame.empty() || e.code() == Errc::BadMagic || e.code() == Errc::UnknownType ||
            e.code() == Errc::FrameTooLarge || e.code() == Errc::Truncated) {
          break;
        }
        continue;
      }
      const auto t0 = std::chrono::steady_clock::now();
      const Message reply = conn.handle(request);
      const auto t1 = std::chrono::steady_clock::now();
      sock.write_all(encode_frame(reply));
      if (const auto* job = std::get_if<JobMsg>(&request); job && log_) {
        std::ostringstream line;
        line << "job=" << job->job_id << " op=" << op_name(job->op);
        if (!job->encrypted.empty()) line << " rows=" << job->encrypted[0].rows;
        if (!job->public_operands.empty()) {
          line << " public=" << job->public_operands[0].rows() << "x" << job->public_operands[0].cols();
        }
        line << " status=" << (std::holds_alternative<ResultMsg>(reply) ? "ok" : "error")
             << " duration_ms=" << std::chrono::duration<double, std::milli>(t1 - t0).count();
        log_(line.str());
      }
    }
  } catch (const Error&) {
    // peer went away
  }
  std::lock_guard lock(mu_);
  live_fds_.remove(sock.fd());
}

}  // namespace dataseal
