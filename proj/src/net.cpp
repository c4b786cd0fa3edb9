#include "dscep/net.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>

#include "dscep/errors.hpp"

namespace dscep::net {

std::pair<std::string, uint16_t> split_address(const std::string& addr) {
  auto colon = addr.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 >= addr.size())
    throw ConfigError("malformed address (want host:port): " + addr);
  std::string host = addr.substr(0, colon);
  unsigned port = 0;
  auto [p, ec] = std::from_chars(addr.data() + colon + 1, addr.data() + addr.size(), port);
  if (ec != std::errc{} || p != addr.data() + addr.size() || port > 65535)
    throw ConfigError("malformed port in address: " + addr);
  return {host, static_cast<uint16_t>(port)};
}

namespace {

sockaddr_in make_sockaddr(const std::string& host, uint16_t port) {
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(port);
  if (inet_pton(AF_INET, host.c_str(), &sa.sin_addr) != 1)
    throw ConfigError("not an IPv4 address: " + host);
  return sa;
}

}  // namespace

LineSocket::LineSocket(LineSocket&& other) noexcept : fd_(other.fd_), buf_(std::move(other.buf_)) {
  other.fd_ = -1;
}

LineSocket& LineSocket::operator=(LineSocket&& other) noexcept {
  if (this != &other) {
    close_fd();
    fd_ = other.fd_;
    buf_ = std::move(other.buf_);
    other.fd_ = -1;
  }
  return *this;
}

LineSocket::~LineSocket() { close_fd(); }

void LineSocket::close_fd() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

void LineSocket::shutdown_both() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

LineSocket LineSocket::connect_to(const std::string& addr) {
  auto [host, port] = split_address(addr);
  sockaddr_in sa = make_sockaddr(host, port);
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw NetError("socket(): " + std::string(strerror(errno)));
  if (::connect(fd, reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0) {
    int err = errno;
    ::close(fd);
    throw NetError("connect to " + addr + ": " + strerror(err));
  }
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return LineSocket(fd);
}

void LineSocket::send_line(const std::string& line) {
  if (fd_ < 0) throw NetError("send on closed socket");
  std::string frame = line;
  frame.push_back('\n');
  size_t off = 0;
  while (off < frame.size()) {
    ssize_t n = ::send(fd_, frame.data() + off, frame.size() - off, MSG_NOSIGNAL);
    if (n <= 0) {
      if (n < 0 && errno == EINTR) continue;
      throw NetError("send: connection lost");
    }
    off += static_cast<size_t>(n);
  }
}

std::optional<std::string> LineSocket::recv_line() {
  if (fd_ < 0) throw NetError("recv on closed socket");
  for (;;) {
    auto nl = buf_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buf_.substr(0, nl);
      buf_.erase(0, nl + 1);
      return line;
    }
    char chunk[4096];
    ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
    if (n == 0) {
      if (!buf_.empty()) throw NetError("connection closed mid-frame");
      return std::nullopt;
    }
    if (n < 0) {
      if (errno == EINTR) continue;
      throw NetError("recv: " + std::string(strerror(errno)));
    }
    buf_.append(chunk, static_cast<size_t>(n));
  }
}

LineServer::LineServer(const std::string& addr, Handler handler) : handler_(std::move(handler)) {
  auto [host, port] = split_address(addr);
  host_ = host;
  sockaddr_in sa = make_sockaddr(host, port);
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw NetError("socket(): " + std::string(strerror(errno)));
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0) {
    int err = errno;
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw NetError("bind " + addr + ": " + strerror(err));
  }
  if (::listen(listen_fd_, 64) != 0) {
    int err = errno;
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw NetError("listen: " + std::string(strerror(err)));
  }
  sockaddr_in bound{};
  socklen_t len = sizeof bound;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
  accept_thread_ = std::thread([this] { accept_loop(); });
}

std::string LineServer::address() const { return host_ + ":" + std::to_string(port_); }

void LineServer::accept_loop() {
  for (;;) {
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      return;  // listener closed
    }
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    std::lock_guard<std::mutex> lock(mu_);
    if (stopping_) {
      ::close(fd);
      return;
    }
    live_fds_.insert(fd);
    conn_threads_.emplace_back([this, fd] {
      handler_(LineSocket(fd));  // handler owns + closes the fd
      std::lock_guard<std::mutex> lock2(mu_);
      live_fds_.erase(fd);
    });
  }
}

void LineServer::stop() {
  bool expected = false;
  if (!stopping_.compare_exchange_strong(expected, true)) return;
  if (listen_fd_ >= 0) {
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
  if (accept_thread_.joinable()) accept_thread_.join();
  {
    std::lock_guard<std::mutex> lock(mu_);
    for (int fd : live_fds_) ::shutdown(fd, SHUT_RDWR);
  }
  std::vector<std::thread> threads;
  {
    std::lock_guard<std::mutex> lock(mu_);
    threads.swap(conn_threads_);
  }
  for (auto& t : threads)
    if (t.joinable()) t.join();
}

LineServer::~LineServer() { stop(); }

}  // namespace dscep::net
