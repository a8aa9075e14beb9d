#include "easz/transport.hpp"

#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>

#include "easz/byte_io.hpp"
#include "easz/error.hpp"

namespace easz {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string sys_error(const std::string& what) { return what + ": " + std::strerror(errno); }

void set_timeouts(int fd, int ms) {
  if (ms <= 0) return;
  timeval tv{ms / 1000, (ms % 1000) * 1000};
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
  ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
}

void read_exact(ByteStream& s, std::span<std::uint8_t> buf, const char* what) {
  std::size_t got = 0;
  while (got < buf.size()) {
    const std::size_t n = s.read_some(buf.subspan(got));
    if (n == 0) {
      throw TransportError(std::string("connection closed inside ") + what + " after " + std::to_string(got) + " of " +
                           std::to_string(buf.size()) + " bytes");
    }
    got += n;
  }
}

}  // namespace

FdStream::~FdStream() {
  if (fd_ >= 0) ::close(fd_);
}

void FdStream::write_all(std::span<const std::uint8_t> data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(sys_error("send"));
    }
    sent += static_cast<std::size_t>(n);
  }
}

std::size_t FdStream::read_some(std::span<std::uint8_t> buf) {
  for (;;) {
    const ssize_t n = ::recv(fd_, buf.data(), buf.size(), 0);
    if (n >= 0) return static_cast<std::size_t>(n);
    if (errno == EINTR) continue;
    if (errno == EAGAIN || errno == EWOULDBLOCK) throw TransportError("receive timed out");
    throw TransportError(sys_error("recv"));
  }
}

std::size_t MemoryStream::read_some(std::span<std::uint8_t> buf) {
  const std::size_t n = std::min(buf.size(), data_.size() - pos_);
  std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(pos_), n, buf.begin());
  pos_ += n;
  return n;
}

void frame_write(ByteStream& s, std::span<const std::uint8_t> body) {
  ByteWriter w;
  w.be64(body.size());
  s.write_all(w.data());
  if (!body.empty()) s.write_all(body);
}

std::vector<std::uint8_t> frame_read(ByteStream& s, std::uint64_t cap) {
  std::uint8_t prefix[8];
  read_exact(s, prefix, "frame length");
  const std::uint64_t len = ByteReader(prefix).be64("frame length");
  if (len > cap) {
    throw TransportError("frame length " + std::to_string(len) + " exceeds cap " + std::to_string(cap));
  }
  std::vector<std::uint8_t> body(static_cast<std::size_t>(len));
  read_exact(s, body, "frame body");
  return body;
}

std::vector<std::uint8_t> encode_status(const Status& s) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(s.code));
  w.be32(static_cast<std::uint32_t>(s.message.size()));
  w.str(s.message);
  std::uint8_t count = 0;
  for (const auto& v : s.timings.ms) count += v ? 1 : 0;
  w.u8(count);
  for (std::size_t i = 0; i < kStageCount; ++i) {
    if (!s.timings.ms[i]) continue;
    w.u8(static_cast<std::uint8_t>(i));
    w.be_f64(*s.timings.ms[i]);
  }
  return std::move(w).take();
}

Status decode_status(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  Status s;
  const auto code = r.u8("status code");
  if (code > 1) throw FormatError("unknown status code " + std::to_string(code));
  s.code = static_cast<StatusCode>(code);
  const auto len = r.be32("message length");
  const auto msg = r.bytes(len, "message");
  s.message.assign(msg.begin(), msg.end());
  const auto count = r.u8("stage count");
  for (std::uint8_t i = 0; i < count; ++i) {
    const auto id = r.u8("stage id");
    if (id >= kStageCount) throw FormatError("unknown stage id " + std::to_string(id));
    const double v = r.be_f64("stage duration");
    if (!(v >= 0.0)) throw FormatError("negative stage duration");
    s.timings.ms[id] = v;
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after status");
  return s;
}

std::unique_ptr<FdStream> connect_tcp(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const int rc = ::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res);
  if (rc != 0) throw TransportError("cannot resolve " + host + ": " + ::gai_strerror(rc));
  std::string last = "no addresses";
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) {
      last = sys_error("socket");
      continue;
    }
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
      ::freeaddrinfo(res);
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      return std::make_unique<FdStream>(fd);
    }
    last = sys_error("connect");
    ::close(fd);
  }
  ::freeaddrinfo(res);
  throw TransportError("cannot connect to " + host + ":" + std::to_string(port) + " (" + last + ")");
}

Server::Server(ServerConfig cfg) : cfg_(std::move(cfg)) {}

Server::~Server() { stop(); }

void Server::start() {
  if (running_) return;
  std::filesystem::create_directories(cfg_.out_dir);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const int rc = ::getaddrinfo(cfg_.host.c_str(), std::to_string(cfg_.port).c_str(), &hints, &res);
  if (rc != 0) throw TransportError("cannot resolve " + cfg_.host + ": " + ::gai_strerror(rc));
  int fd = ::socket(res->ai_family, res->ai_socktype | SOCK_CLOEXEC, res->ai_protocol);
  if (fd < 0) {
    ::freeaddrinfo(res);
    throw TransportError(sys_error("socket"));
  }
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(fd, res->ai_addr, res->ai_addrlen) != 0 || ::listen(fd, 64) != 0) {
    const std::string err = sys_error("bind/listen on " + cfg_.host + ":" + std::to_string(cfg_.port));
    ::freeaddrinfo(res);
    ::close(fd);
    throw TransportError(err);
  }
  ::freeaddrinfo(res);
  sockaddr_storage addr{};
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.ss_family == AF_INET6 ? reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port
                                           : reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
  listen_fd_ = fd;
  running_ = true;
  acceptor_ = std::thread([this] { accept_loop(); });
}

void Server::accept_loop() {
  while (running_) {
    pollfd p{listen_fd_, POLLIN, 0};
    const int ready = ::poll(&p, 1, 100);
    if (ready <= 0) continue;
    const int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) continue;
    std::lock_guard lock(workers_mu_);
    std::erase_if(workers_, [](Worker& w) {
      if (!w.done->load()) return false;
      w.thread.join();
      return true;
    });
    auto done = std::make_shared<std::atomic<bool>>(false);
    workers_.push_back({std::thread([this, fd, done] {
                          handle(fd);
                          done->store(true);
                        }),
                        done});
  }
}

void Server::handle(int fd) {
  FdStream stream(fd);
  set_timeouts(fd, cfg_.io_timeout_ms);
  Status status;
  try {
    const auto body = frame_read(stream, cfg_.frame_cap);
    Image out = decompress(body, cfg_.model.get(), cfg_.codec, &status.timings);
    const std::uint64_t id = next_id_.fetch_add(1);
    const auto name = "frame_" + std::to_string(id) + (out.channels == 3 ? ".ppm" : ".pgm");
    const auto path = cfg_.out_dir / name;
    const auto tmp = cfg_.out_dir / (name + ".part");
    write_raster_file(tmp.string(), out);
    std::filesystem::rename(tmp, path);
    status.message = path.string();
    served_.fetch_add(1);
  } catch (const std::exception& e) {
    status.code = StatusCode::error;
    status.message = e.what();
    failed_.fetch_add(1);
  }
  try {
    frame_write(stream, encode_status(status));
  } catch (const std::exception&) {
    // Client went away; nothing left to report to.
  }
}

void Server::stop() {
  if (!running_.exchange(false)) return;
  if (acceptor_.joinable()) acceptor_.join();
  ::close(listen_fd_);
  listen_fd_ = -1;
  std::vector<Worker> workers;
  {
    std::lock_guard lock(workers_mu_);
    workers.swap(workers_);
  }
  for (auto& w : workers) w.thread.join();
}

void Server::wait() {
  while (running_) std::this_thread::sleep_for(std::chrono::milliseconds(100));
}

SendResult send_container(const std::string& host, std::uint16_t port, std::span<const std::uint8_t> container) {
  const auto t0 = Clock::now();
  auto stream = connect_tcp(host, port);
  frame_write(*stream, container);
  const auto reply = frame_read(*stream);
  const double round_trip = ms_since(t0);
  SendResult r;
  r.status = decode_status(reply);
  const double server = r.status.timings.get(Stage::codec_decode).value_or(0.0) +
                        r.status.timings.get(Stage::reconstruct).value_or(0.0);
  r.status.timings.set(Stage::transmit, std::max(0.0, round_trip - server));
  r.end_to_end_ms = round_trip;
  return r;
}

SendResult edge_send(const std::filesystem::path& image, const std::string& host, std::uint16_t port,
                     const PipelineConfig& cfg) {
  const auto t0 = Clock::now();
  StageTimings edge;
  const Image img = read_raster_file(image.string());
  edge.set(Stage::load, ms_since(t0));
  const auto container = compress(img, cfg, &edge);
  SendResult r = send_container(host, port, container);
  r.status.timings.merge(edge);
  r.end_to_end_ms = ms_since(t0);
  return r;
}

}  // namespace easz
