#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "easz/pipeline.hpp"

namespace easz {

inline constexpr std::uint64_t kDefaultFrameCap = std::uint64_t{1} << 30;

class ByteStream {
 public:
  virtual ~ByteStream() = default;
  virtual void write_all(std::span<const std::uint8_t> data) = 0;
  // Reads up to buf.size() bytes; 0 means end of stream.
  virtual std::size_t read_some(std::span<std::uint8_t> buf) = 0;
};

// Owns a connected socket (or any fd).
class FdStream final : public ByteStream {
 public:
  explicit FdStream(int fd) : fd_(fd) {}
  ~FdStream() override;
  FdStream(const FdStream&) = delete;
  FdStream& operator=(const FdStream&) = delete;

  void write_all(std::span<const std::uint8_t> data) override;
  std::size_t read_some(std::span<std::uint8_t> buf) override;
  int fd() const { return fd_; }

 private:
  int fd_;
};

class MemoryStream final : public ByteStream {
 public:
  MemoryStream() = default;
  explicit MemoryStream(std::vector<std::uint8_t> data) : data_(std::move(data)) {}
  void write_all(std::span<const std::uint8_t> data) override { data_.insert(data_.end(), data.begin(), data.end()); }
  std::size_t read_some(std::span<std::uint8_t> buf) override;
  const std::vector<std::uint8_t>& data() const { return data_; }

 private:
  std::vector<std::uint8_t> data_;
  std::size_t pos_ = 0;
};

// 64-bit big-endian length, then the body.
void frame_write(ByteStream& s, std::span<const std::uint8_t> body);
// Throws TransportError on EOF inside a frame or a length above `cap`.
std::vector<std::uint8_t> frame_read(ByteStream& s, std::uint64_t cap = kDefaultFrameCap);

enum class StatusCode : std::uint8_t { ok = 0, error = 1 };

// Reply to one request: code, UTF-8 message, server-side stage timings.
struct Status {
  StatusCode code = StatusCode::ok;
  std::string message;
  StageTimings timings;
};
std::vector<std::uint8_t> encode_status(const Status& s);
Status decode_status(std::span<const std::uint8_t> bytes);

// Blocking TCP connect; throws TransportError.
std::unique_ptr<FdStream> connect_tcp(const std::string& host, std::uint16_t port);

struct ServerConfig {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;  // 0 picks a free port
  std::filesystem::path out_dir = ".";
  std::shared_ptr<const Reconstructor> model;  // optional; without it erased areas stay zero
  CodecSettings codec;
  std::uint64_t frame_cap = kDefaultFrameCap;
  int io_timeout_ms = 30000;
};

// One request per connection: read a container frame, decompress, write the
// raster into out_dir, reply with a status frame. Connections are served on
// their own threads.
class Server {
 public:
  explicit Server(ServerConfig cfg);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds and starts accepting in the background.
  void start();
  void stop();
  // Blocks until stop() is called from elsewhere.
  void wait();
  std::uint16_t port() const { return port_; }
  std::uint64_t served() const { return served_.load(); }
  std::uint64_t failed() const { return failed_.load(); }

 private:
  void accept_loop();
  void handle(int fd);

  ServerConfig cfg_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> running_{false};
  std::atomic<std::uint64_t> next_id_{0};
  std::atomic<std::uint64_t> served_{0};
  std::atomic<std::uint64_t> failed_{0};
  std::thread acceptor_;
  struct Worker {
    std::thread thread;
    std::shared_ptr<std::atomic<bool>> done;
  };
  std::mutex workers_mu_;
  std::vector<Worker> workers_;
};

struct SendResult {
  Status status;          // timings hold all six stages on success
  double end_to_end_ms = 0.0;
};

// Sends an already encoded container and waits for the reply. The transmit
// stage is the round trip minus the server's decode and reconstruct time.
SendResult send_container(const std::string& host, std::uint16_t port, std::span<const std::uint8_t> container);

// load -> erase/squeeze -> encode -> send.
SendResult edge_send(const std::filesystem::path& image, const std::string& host, std::uint16_t port,
                     const PipelineConfig& cfg);

}  // namespace easz
