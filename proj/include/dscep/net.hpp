#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

namespace dscep::net {

// "host:port" -> (host, port); throws ConfigError on malformed input.
std::pair<std::string, uint16_t> split_address(const std::string& addr);

// Move-only wrapper over a connected TCP socket carrying newline-delimited
// frames. All failures surface as NetError.
class LineSocket {
 public:
  LineSocket() = default;
  explicit LineSocket(int fd) : fd_(fd) {}
  LineSocket(LineSocket&& other) noexcept;
  LineSocket& operator=(LineSocket&& other) noexcept;
  LineSocket(const LineSocket&) = delete;
  LineSocket& operator=(const LineSocket&) = delete;
  ~LineSocket();

  static LineSocket connect_to(const std::string& addr);

  void send_line(const std::string& line);
  // One frame without its trailing newline; nullopt on orderly EOF.
  std::optional<std::string> recv_line();

  bool valid() const { return fd_ >= 0; }
  int fd() const { return fd_; }
  void shutdown_both();
  void close_fd();

 private:
  int fd_ = -1;
  std::string buf_;
};

// Accepts connections on a loopback address and runs one handler thread per
// connection. stop() shuts down the listener and every live connection.
class LineServer {
 public:
  using Handler = std::function<void(LineSocket)>;

  LineServer(const std::string& addr, Handler handler);
  ~LineServer();

  uint16_t port() const { return port_; }
  std::string address() const;
  void stop();

 private:
  struct Conn {
    int fd;
  };

  void accept_loop();

  Handler handler_;
  int listen_fd_ = -1;
  uint16_t port_ = 0;
  std::string host_;
  std::thread accept_thread_;
  std::mutex mu_;
  std::set<int> live_fds_;
  std::vector<std::thread> conn_threads_;
  std::atomic<bool> stopping_{false};
};

}  // namespace dscep::net
