#include "segrmt/remote.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <thread>

#include "segrmt/error.hpp"

namespace segrmt {

namespace {

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

std::string errno_text() { return std::strerror(errno); }

// Reads until `out` is full or the stream ends; returns the number of bytes read.
std::size_t read_until(int fd, std::span<std::uint8_t> out, Clock::time_point deadline) {
  std::size_t got = 0;
  while (got < out.size()) {
    const auto remaining =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    if (remaining <= 0) throw Error(ErrorCode::Timeout, "no reply within the oracle timeout");
    pollfd pfd{fd, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(remaining, 1 << 30)));
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::OracleFailure, "poll: " + errno_text());
    }
    if (ready == 0) continue;
    const auto n = ::read(fd, out.data() + got, out.size() - got);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw Error(ErrorCode::OracleFailure, "read: " + errno_text());
    }
    if (n == 0) break;
    got += static_cast<std::size_t>(n);
  }
  return got;
}

std::unique_ptr<Connection> spawn(const std::string& command) {
  int to_child[2];
  int from_child[2];
  if (::pipe(to_child) != 0) throw Error(ErrorCode::OracleFailure, "pipe: " + errno_text());
  if (::pipe(from_child) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw Error(ErrorCode::OracleFailure, "pipe: " + errno_text());
  }
  const pid_t pid = ::fork();
  if (pid < 0) throw Error(ErrorCode::OracleFailure, "fork: " + errno_text());
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  return std::make_unique<Connection>(from_child[0], to_child[1], pid);
}

std::unique_ptr<Connection> connect_tcp(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  const std::string service = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &found); rc != 0)
    throw Error(ErrorCode::OracleFailure, "resolve " + host + ": " + ::gai_strerror(rc));
  std::string last_error = "no address";
  for (auto* ai = found; ai != nullptr; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
      ::freeaddrinfo(found);
      return std::make_unique<Connection>(fd, ::dup(fd));
    }
    last_error = errno_text();
    ::close(fd);
  }
  ::freeaddrinfo(found);
  throw Error(ErrorCode::OracleFailure, "connect tcp:" + host + ":" + service + ": " + last_error);
}

std::unique_ptr<Connection> connect_unix(const std::string& path) {
  sockaddr_un addr{};
  addr.sun_family = AF_UNIX;
  if (path.size() >= sizeof(addr.sun_path))
    throw Error(ErrorCode::ConfigError, "unix socket path too long: " + path);
  std::memcpy(addr.sun_path, path.c_str(), path.size() + 1);
  const int fd = ::socket(AF_UNIX, SOCK_STREAM, 0);
  if (fd < 0) throw Error(ErrorCode::OracleFailure, "socket: " + errno_text());
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    const auto why = errno_text();
    ::close(fd);
    throw Error(ErrorCode::OracleFailure, "connect unix:" + path + ": " + why);
  }
  return std::make_unique<Connection>(fd, ::dup(fd));
}

}  // namespace

Endpoint Endpoint::parse(const std::string& text) {
  Endpoint e;
  if (text.starts_with("exec:") && text.size() > 5) {
    e.kind = Kind::Exec;
    e.target = text.substr(5);
    return e;
  }
  if (text.starts_with("unix:") && text.size() > 5) {
    e.kind = Kind::Unix;
    e.target = text.substr(5);
    return e;
  }
  if (text.starts_with("tcp:")) {
    const auto colon = text.rfind(':');
    if (colon > 4) {
      e.kind = Kind::Tcp;
      e.target = text.substr(4, colon - 4);
      const auto port_text = text.substr(colon + 1);
      try {
        const auto port = std::stoul(port_text);
        if (port > 0 && port <= 65535 && std::to_string(port) == port_text) {
          e.port = static_cast<std::uint16_t>(port);
          return e;
        }
      } catch (const std::exception&) {
      }
    }
  }
  throw Error(ErrorCode::ConfigError,
              "unrecognised oracle endpoint '" + text + "' (expected exec:CMD, tcp:HOST:PORT or unix:PATH)");
}

std::string Endpoint::to_string() const {
  switch (kind) {
    case Kind::Exec: return "exec:" + target;
    case Kind::Tcp: return "tcp:" + target + ":" + std::to_string(port);
    case Kind::Unix: return "unix:" + target;
  }
  return {};
}

Connection::~Connection() {
  if (write_fd_ >= 0) ::close(write_fd_);
  if (read_fd_ >= 0) ::close(read_fd_);
  if (child_pid_ > 0) {
    // Closing stdin lets a well-behaved server exit; give it a moment, then insist.
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(child_pid_, nullptr, WNOHANG) == child_pid_) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
    ::kill(child_pid_, SIGKILL);
    ::waitpid(child_pid_, nullptr, 0);
  }
}

void Connection::write_all(std::span<const std::uint8_t> bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const auto n = ::write(write_fd_, bytes.data() + sent, bytes.size() - sent);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::OracleFailure, "write: " + errno_text());
    }
    sent += static_cast<std::size_t>(n);
  }
}

void Connection::read_exact(std::span<std::uint8_t> out, Clock::time_point deadline) {
  const auto got = read_until(read_fd_, out, deadline);
  if (got != out.size())
    throw Error(ErrorCode::ProtocolError, "stream ended after " + std::to_string(got) + " of " +
                                              std::to_string(out.size()) + " expected bytes");
}

bool Connection::read_exact_or_eof(std::span<std::uint8_t> out, Clock::time_point deadline) {
  const auto got = read_until(read_fd_, out, deadline);
  if (got == 0 && !out.empty()) return false;
  if (got != out.size())
    throw Error(ErrorCode::ProtocolError, "stream ended after " + std::to_string(got) + " of " +
                                              std::to_string(out.size()) + " expected bytes");
  return true;
}

std::unique_ptr<Connection> open_connection(const Endpoint& endpoint) {
  ignore_sigpipe();
  switch (endpoint.kind) {
    case Endpoint::Kind::Exec: return spawn(endpoint.target);
    case Endpoint::Kind::Tcp: return connect_tcp(endpoint.target, endpoint.port);
    case Endpoint::Kind::Unix: return connect_unix(endpoint.target);
  }
  throw Error(ErrorCode::ConfigError, "unknown endpoint kind");
}

void write_frame(Connection& conn, const wire::Frame& frame) { conn.write_all(wire::encode(frame)); }

wire::Frame read_frame(Connection& conn, Clock::time_point deadline) {
  std::vector<std::uint8_t> header(wire::kHeaderSize);
  conn.read_exact(header, deadline);
  wire::Frame frame;
  frame.header = wire::decode_header(header);
  frame.payload.resize(wire::payload_size(frame.header));
  try {
    conn.read_exact(frame.payload, deadline);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ProtocolError) throw;
    throw Error(ErrorCode::ProtocolError, "payload length mismatch: " + e.detail());
  }
  return frame;
}

RemoteOracle::RemoteOracle(Endpoint endpoint, RemoteOptions options)
    : endpoint_(std::move(endpoint)), options_(options) {
  if (options_.max_connections == 0) options_.max_connections = 1;
}

RemoteOracle::~RemoteOracle() = default;

std::unique_ptr<Connection> RemoteOracle::acquire() const {
  std::unique_lock lock(mutex_);
  available_.wait(lock, [&] { return !idle_.empty() || open_ < options_.max_connections; });
  if (!idle_.empty()) {
    auto conn = std::move(idle_.back());
    idle_.pop_back();
    return conn;
  }
  ++open_;
  lock.unlock();
  try {
    return open_connection(endpoint_);
  } catch (...) {
    lock.lock();
    --open_;
    available_.notify_one();
    throw;
  }
}

void RemoteOracle::release(std::unique_ptr<Connection> conn, bool healthy) const {
  {
    std::lock_guard lock(mutex_);
    if (healthy) {
      idle_.push_back(std::move(conn));
    } else {
      --open_;
    }
  }
  available_.notify_one();
  // An unhealthy connection is destroyed here, outside the lock.
}

LabelMap RemoteOracle::segment(const Image& img) const {
  auto conn = acquire();
  wire::Frame reply;
  try {
    write_frame(*conn, wire::make_request(img));
    reply = read_frame(*conn, Clock::now() + options_.timeout);
  } catch (...) {
    release(std::move(conn), false);
    throw;
  }
  if (reply.header.type == wire::MsgType::Error) {
    release(std::move(conn), true);
    throw Error(ErrorCode::OracleError, wire::error_message(reply));
  }
  if (reply.header.type != wire::MsgType::SegmentResponse) {
    release(std::move(conn), false);
    throw Error(ErrorCode::ProtocolError, "expected a segment response");
  }
  if (reply.header.height != img.height() || reply.header.width != img.width()) {
    release(std::move(conn), true);
    throw Error(ErrorCode::ProtocolError,
                "response payload length mismatch: expected " + std::to_string(img.pixel_count() * 2) +
                    " bytes for " + std::to_string(img.height()) + "x" + std::to_string(img.width()) +
                    ", got " + std::to_string(reply.payload.size()));
  }
  release(std::move(conn), true);
  return wire::response_labels(reply);
}

std::string RemoteOracle::descriptor() const { return "remote:" + endpoint_.to_string(); }

LabelMap remote_segment(const Image& img, const RemoteOracle& oracle) { return oracle.segment(img); }

std::unique_ptr<SegmentationOracle> make_oracle(const std::string& spec, RemoteOptions options) {
  if (spec == "builtin-palette") return std::make_unique<PaletteSegmenter>(PaletteSegmenter::builtin());
  return std::make_unique<RemoteOracle>(Endpoint::parse(spec), options);
}

void serve_stream(int read_fd, int write_fd, const SegmentationOracle& oracle) {
  ignore_sigpipe();
  Connection conn(read_fd, write_fd);
  const auto forever = Clock::time_point::max();
  for (;;) {
    std::vector<std::uint8_t> header(wire::kHeaderSize);
    try {
      if (!conn.read_exact_or_eof(header, forever)) return;
    } catch (const Error&) {
      return;
    }
    wire::Frame request;
    try {
      request.header = wire::decode_header(header);
    } catch (const Error& e) {
      // The payload length is unknown, so the stream cannot be resynchronised.
      try {
        write_frame(conn, wire::make_error(e.what()));
      } catch (const Error&) {
      }
      return;
    }
    request.payload.resize(wire::payload_size(request.header));
    try {
      conn.read_exact(request.payload, forever);
    } catch (const Error&) {
      return;
    }
    wire::Frame reply;
    try {
      reply = wire::make_response(oracle.segment(wire::request_image(request)));
    } catch (const std::exception& e) {
      reply = wire::make_error(e.what());
    }
    try {
      write_frame(conn, reply);
    } catch (const Error&) {
      return;
    }
  }
}

void serve_tcp(std::uint16_t port, const SegmentationOracle& oracle,
               const std::function<void(std::uint16_t)>& on_listening, std::size_t max_connections) {
  ignore_sigpipe();
  const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listener < 0) throw Error(ErrorCode::IoError, "socket: " + errno_text());
  const int yes = 1;
  ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listener, 16) != 0) {
    const auto why = errno_text();
    ::close(listener);
    throw Error(ErrorCode::IoError, "bind/listen: " + why);
  }
  socklen_t len = sizeof addr;
  ::getsockname(listener, reinterpret_cast<sockaddr*>(&addr), &len);
  if (on_listening) on_listening(ntohs(addr.sin_port));

  std::vector<std::thread> workers;
  for (std::size_t served = 0; max_connections == 0 || served < max_connections; ++served) {
    const int fd = ::accept(listener, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) {
        --served;
        continue;
      }
      break;
    }
    workers.emplace_back([fd, &oracle] { serve_stream(fd, ::dup(fd), oracle); });
  }
  for (auto& w : workers) w.join();
  ::close(listener);
}

}  // namespace segrmt
