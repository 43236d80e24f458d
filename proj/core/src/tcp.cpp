#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <thread>

#include "sadmm/transport.hpp"

namespace sadmm {

namespace {

[[noreturn]] void throw_errno(const std::string& what) {
  throw ProtocolError(what + ": " + std::strerror(errno));
}

void send_all(int fd, const std::uint8_t* data, std::size_t len) {
  while (len > 0) {
    const ssize_t n = ::send(fd, data, len, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno("tcp send");
    }
    data += n;
    len -= static_cast<std::size_t>(n);
  }
}

void recv_exact(int fd, std::uint8_t* data, std::size_t len) {
  while (len > 0) {
    const ssize_t n = ::recv(fd, data, len, 0);
    if (n == 0) throw ProtocolError("tcp recv: connection closed");
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno("tcp recv");
    }
    data += n;
    len -= static_cast<std::size_t>(n);
  }
}

class TcpChannel final : public Channel {
 public:
  explicit TcpChannel(int fd) : fd_(fd) {
    const int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  }
  ~TcpChannel() override {
    if (fd_ >= 0) ::close(fd_);
  }

  void send(const std::vector<std::uint8_t>& frame) override {
    send_all(fd_, frame.data(), frame.size());
  }

  std::vector<std::uint8_t> recv() override {
    std::vector<std::uint8_t> frame(kFrameHeaderSize);
    recv_exact(fd_, frame.data(), kFrameHeaderSize);
    const FrameHeader h = parse_frame_header(frame.data(), frame.size());
    frame.resize(kFrameHeaderSize + h.payload_len);
    recv_exact(fd_, frame.data() + kFrameHeaderSize, h.payload_len);
    return frame;
  }

 private:
  int fd_;
};

sockaddr_in make_addr(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
    throw ConfigError("tcp: bad IPv4 address '" + host + "'");
  return addr;
}

}  // namespace

std::pair<std::string, std::uint16_t> parse_hostport(const std::string& s) {
  const auto colon = s.rfind(':');
  if (colon == std::string::npos)
    throw ConfigError("tcp: expected host:port, got '" + s + "'");
  const std::string host = s.substr(0, colon);
  const std::string port_str = s.substr(colon + 1);
  char* end = nullptr;
  const long port = std::strtol(port_str.c_str(), &end, 10);
  if (end == port_str.c_str() || *end != '\0' || port < 0 || port > 65535)
    throw ConfigError("tcp: bad port '" + port_str + "'");
  return {host.empty() ? "127.0.0.1" : host, static_cast<std::uint16_t>(port)};
}

TcpListener::TcpListener(const std::string& hostport) {
  const auto [host, port] = parse_hostport(hostport);
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw_errno("tcp socket");
  const int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr = make_addr(host, port);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) throw_errno("tcp bind");
  if (::listen(fd_, 16) < 0) throw_errno("tcp listen");
  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&bound), &len) < 0)
    throw_errno("tcp getsockname");
  port_ = ntohs(bound.sin_port);
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<Channel> TcpListener::accept_one() {
  for (;;) {
    const int fd = ::accept(fd_, nullptr, nullptr);
    if (fd >= 0) return std::make_unique<TcpChannel>(fd);
    if (errno != EINTR) throw_errno("tcp accept");
  }
}

std::unique_ptr<Channel> tcp_connect(const std::string& hostport, int timeout_ms) {
  const auto [host, port] = parse_hostport(hostport);
  const sockaddr_in addr = make_addr(host, port);
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  for (;;) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw_errno("tcp socket");
    if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) == 0)
      return std::make_unique<TcpChannel>(fd);
    ::close(fd);
    if (std::chrono::steady_clock::now() >= deadline)
      throw ProtocolError("tcp connect: " + hostport + " unreachable");
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
}

}  // namespace sadmm
