#pragma once

// Transports for the wire protocol: a spawned subprocess speaking frames over
// its stdin/stdout, or a stream socket (TCP or Unix domain). Each connection
// carries at most one request at a time; RemoteOracle keeps a pool of them.

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "segrmt/oracle.hpp"
#include "segrmt/wire.hpp"

namespace segrmt {

/// `exec:<shell command>`, `tcp:<host>:<port>` or `unix:<path>`.
struct Endpoint {
  enum class Kind { Exec, Tcp, Unix };
  Kind kind = Kind::Exec;
  std::string target;  // command, host or socket path
  std::uint16_t port = 0;

  /// Throws ConfigError on an unrecognised form.
  static Endpoint parse(const std::string& text);
  [[nodiscard]] std::string to_string() const;
};

using Clock = std::chrono::steady_clock;

/// Owns one pair of file descriptors (and the child process, for exec endpoints).
class Connection {
 public:
  Connection(int read_fd, int write_fd, int child_pid = -1) noexcept
      : read_fd_(read_fd), write_fd_(write_fd), child_pid_(child_pid) {}
  Connection(const Connection&) = delete;
  Connection& operator=(const Connection&) = delete;
  ~Connection();

  /// Throws OracleFailure when the peer has gone away.
  void write_all(std::span<const std::uint8_t> bytes);
  /// Throws Timeout past `deadline`, ProtocolError on a short stream.
  void read_exact(std::span<std::uint8_t> out, Clock::time_point deadline);
  /// Like read_exact, but returns false on a clean end of stream before any byte.
  bool read_exact_or_eof(std::span<std::uint8_t> out, Clock::time_point deadline);

 private:
  int read_fd_;
  int write_fd_;
  int child_pid_;
};

/// Throws OracleFailure if the endpoint cannot be reached.
std::unique_ptr<Connection> open_connection(const Endpoint& endpoint);

void write_frame(Connection& conn, const wire::Frame& frame);
wire::Frame read_frame(Connection& conn, Clock::time_point deadline);

struct RemoteOptions {
  std::chrono::milliseconds timeout{30'000};
  /// Upper bound on simultaneously open connections.
  std::size_t max_connections = 4;
};

class RemoteOracle final : public SegmentationOracle {
 public:
  explicit RemoteOracle(Endpoint endpoint, RemoteOptions options = {});
  ~RemoteOracle() override;

  [[nodiscard]] LabelMap segment(const Image& img) const override;
  [[nodiscard]] std::string descriptor() const override;

 private:
  std::unique_ptr<Connection> acquire() const;
  void release(std::unique_ptr<Connection> conn, bool healthy) const;

  Endpoint endpoint_;
  RemoteOptions options_;
  mutable std::mutex mutex_;
  mutable std::condition_variable available_;
  mutable std::vector<std::unique_ptr<Connection>> idle_;
  mutable std::size_t open_ = 0;
};

LabelMap remote_segment(const Image& img, const RemoteOracle& oracle);

/// `builtin-palette` or an endpoint string.
std::unique_ptr<SegmentationOracle> make_oracle(const std::string& spec, RemoteOptions options = {});

/// Serves frames from `read_fd` until end of stream. Malformed requests and
/// oracle exceptions become error frames; the loop only ends on EOF or a
/// broken transport.
void serve_stream(int read_fd, int write_fd, const SegmentationOracle& oracle);

/// Listens on 127.0.0.1:`port` (0 picks a free port, reported through
/// `on_listening`) and serves each accepted connection on its own thread.
/// Returns after `max_connections` connections have been served, or never
/// when it is 0.
void serve_tcp(std::uint16_t port, const SegmentationOracle& oracle,
               const std::function<void(std::uint16_t)>& on_listening, std::size_t max_connections = 0);

}  // namespace segrmt
