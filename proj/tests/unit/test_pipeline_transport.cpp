#include <gtest/gtest.h>

#include <filesystem>
#include <future>
#include <random>

#include "easz/byte_io.hpp"
#include "easz/error.hpp"
#include "easz/pipeline.hpp"
#include "easz/transport.hpp"
#include "test_util.hpp"

using namespace easz;
using easz::testing::random_image;
namespace fs = std::filesystem;

namespace {

struct Scratch {
  fs::path path;
  explicit Scratch(const std::string& name)
      : path(fs::temp_directory_path() / ("easz_test_" + name + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  fs::path operator/(const std::string& leaf) const { return path / leaf; }
};

ModelConfig small_model() {
  ModelConfig c;
  c.subpatch_size = 2;
  c.d_model = 8;
  c.heads = 2;
  c.ffn_multiplier = 2;
  c.encoder_blocks = 1;
  c.decoder_blocks = 1;
  c.grid_side = 4;
  return c;
}

}  // namespace

TEST(Pipeline, IdentityWhenNothingErased) {
  const Image img = random_image(50, 70, 3, 1);
  PipelineConfig cfg;
  cfg.patch_size = 16;
  cfg.subpatch_size = 4;
  cfg.erased_per_row = 0;
  EXPECT_EQ(decompress(compress(img, cfg), nullptr), img);
}

TEST(Pipeline, ErasedAreasZeroWithoutModelAndFilledWithModel) {
  const Image img = random_image(16, 16, 1, 2);
  PipelineConfig cfg;
  cfg.patch_size = 8;
  cfg.subpatch_size = 2;
  cfg.erased_per_row = 1;
  const auto bytes = compress(img, cfg);
  const Image plain = decompress(bytes, nullptr);
  const Reconstructor model(ModelParams::initialize(small_model(), 3));
  const Image filled = decompress(bytes, &model);
  const auto mask = pipeline_mask(cfg);
  bool differs = false;
  for (std::size_t y = 0; y < 16; ++y) {
    for (std::size_t x = 0; x < 16; ++x) {
      if (mask.kept((y % 8) / 2, (x % 8) / 2)) {
        ASSERT_EQ(plain.at(y, x), img.at(y, x));
        ASSERT_EQ(filled.at(y, x), img.at(y, x));
      } else {
        ASSERT_EQ(plain.at(y, x), 0);
        differs |= filled.at(y, x) != 0;
      }
    }
  }
  EXPECT_TRUE(differs);
}

TEST(Pipeline, ModelGeometryMismatch) {
  PipelineConfig cfg;
  cfg.patch_size = 16;
  cfg.subpatch_size = 4;
  cfg.erased_per_row = 1;
  const Reconstructor model(ModelParams::initialize(small_model(), 3));
  EXPECT_THROW(decompress(compress(random_image(16, 16, 1, 4), cfg), &model), ParameterError);
}

TEST(Pipeline, TimingsCoverLocalStages) {
  PipelineConfig cfg;
  cfg.patch_size = 8;
  cfg.subpatch_size = 2;
  cfg.erased_per_row = 1;
  StageTimings t;
  const auto bytes = compress(random_image(32, 32, 1, 5), cfg, &t);
  decompress(bytes, nullptr, {}, &t);
  for (auto s : {Stage::erase_squeeze, Stage::codec_encode, Stage::codec_decode, Stage::reconstruct}) {
    ASSERT_TRUE(t.get(s).has_value()) << stage_name(s);
    EXPECT_GE(*t.get(s), 0.0);
  }
  EXPECT_FALSE(t.complete());
}

TEST(Framing, RoundTrip) {
  std::mt19937_64 rng(1);
  std::vector<std::uint8_t> body(1024);
  for (auto& b : body) b = static_cast<std::uint8_t>(rng());
  MemoryStream s;
  frame_write(s, body);
  frame_write(s, {});
  EXPECT_EQ(s.data().size(), 8u + 1024u + 8u);
  EXPECT_EQ(frame_read(s), body);
  EXPECT_TRUE(frame_read(s).empty());
}

TEST(Framing, CapAndTruncation) {
  ByteWriter w;
  w.be64(std::uint64_t{2} << 30);
  MemoryStream big(std::move(w).take());
  EXPECT_THROW(frame_read(big), TransportError);

  MemoryStream cut;
  frame_write(cut, std::vector<std::uint8_t>(10, 1));
  auto data = cut.data();
  data.pop_back();
  MemoryStream truncated(data);
  EXPECT_THROW(frame_read(truncated), TransportError);
  MemoryStream empty;
  EXPECT_THROW(frame_read(empty), TransportError);
}

TEST(Status, RoundTrip) {
  Status s;
  s.code = StatusCode::error;
  s.message = "bad things \xE2\x9C\x93";
  s.timings.set(Stage::codec_decode, 1.5);
  s.timings.set(Stage::reconstruct, 0.25);
  const auto back = decode_status(encode_status(s));
  EXPECT_EQ(back.code, s.code);
  EXPECT_EQ(back.message, s.message);
  EXPECT_EQ(back.timings.ms, s.timings.ms);
  auto bytes = encode_status(s);
  bytes.push_back(0);
  EXPECT_THROW(decode_status(bytes), FormatError);
}

TEST(Loopback, SendMatchesLocalDecompress) {
  const Scratch dir("loop");
  const Image img = random_image(48, 40, 1, 6);
  write_raster_file((dir / "in.pgm").string(), img);

  ServerConfig sc;
  sc.out_dir = dir / "out";
  sc.model = std::make_shared<const Reconstructor>(ModelParams::initialize(small_model(), 7));
  Server server(sc);
  server.start();

  PipelineConfig cfg;
  cfg.patch_size = 8;
  cfg.subpatch_size = 2;
  cfg.erased_per_row = 1;
  const auto r = edge_send(dir / "in.pgm", "127.0.0.1", server.port(), cfg);
  ASSERT_EQ(r.status.code, StatusCode::ok) << r.status.message;
  EXPECT_TRUE(r.status.timings.complete());
  EXPECT_GE(r.end_to_end_ms, r.status.timings.total() * 0.999);

  const Image local = decompress(compress(img, cfg), sc.model.get());
  EXPECT_EQ(read_raster_file(r.status.message), local);
  server.stop();
}

TEST(Loopback, MalformedFrameGetsErrorAndServerStaysUp) {
  const Scratch dir("malformed");
  ServerConfig sc;
  sc.out_dir = dir.path;
  Server server(sc);
  server.start();
  const std::vector<std::uint8_t> junk{'n', 'o', 'p', 'e'};
  const auto bad = send_container("127.0.0.1", server.port(), junk);
  EXPECT_EQ(bad.status.code, StatusCode::error);
  EXPECT_NE(bad.status.message.find("magic"), std::string::npos) << bad.status.message;

  PipelineConfig cfg;
  cfg.patch_size = 8;
  cfg.subpatch_size = 2;
  cfg.erased_per_row = 0;
  const Image img = random_image(8, 8, 3, 8);
  const auto good = send_container("127.0.0.1", server.port(), compress(img, cfg));
  ASSERT_EQ(good.status.code, StatusCode::ok) << good.status.message;
  EXPECT_EQ(read_raster_file(good.status.message), img);
  EXPECT_EQ(server.failed(), 1u);
  EXPECT_EQ(server.served(), 1u);
}

TEST(Loopback, ConcurrentClients) {
  const Scratch dir("concurrent");
  ServerConfig sc;
  sc.out_dir = dir.path;
  Server server(sc);
  server.start();
  PipelineConfig cfg;
  cfg.patch_size = 8;
  cfg.subpatch_size = 2;
  cfg.erased_per_row = 0;
  std::vector<std::future<bool>> clients;
  for (int i = 0; i < 8; ++i) {
    clients.push_back(std::async(std::launch::async, [&, i] {
      const Image img = random_image(24 + i, 16, 1, 100 + i);
      const auto r = send_container("127.0.0.1", server.port(), compress(img, cfg));
      return r.status.code == StatusCode::ok && read_raster_file(r.status.message) == img;
    }));
  }
  for (auto& c : clients) EXPECT_TRUE(c.get());
}

TEST(Loopback, UnreachableServer) {
  Server probe(ServerConfig{});
  probe.start();
  const auto port = probe.port();
  probe.stop();
  EXPECT_THROW(connect_tcp("127.0.0.1", port), TransportError);
}
