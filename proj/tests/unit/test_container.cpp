#include <gtest/gtest.h>

#include "easz/byte_io.hpp"
#include "easz/container.hpp"
#include "easz/error.hpp"
#include "easz/pipeline.hpp"
#include "easz/subprocess.hpp"
#include "test_util.hpp"

#ifndef EASZ_TESTCODEC
#define EASZ_TESTCODEC "easz-testcodec"
#endif

using namespace easz;
using easz::testing::random_image;

namespace {

Squeezed squeezed_of(const Image& img, std::size_t n, std::size_t b, std::size_t T, std::uint64_t seed = 1,
                     std::size_t delta = 1, std::size_t Delta = 1) {
  PipelineConfig cfg;
  cfg.intra_delta = delta;
  cfg.inter_delta = Delta;
  cfg.patch_size = n;
  cfg.subpatch_size = b;
  cfg.erased_per_row = T;
  cfg.seed = seed;
  return erase_and_squeeze(img, cfg);
}

CodecSettings test_codec() {
  CodecSettings c;
  c.id = CodecId::external;
  c.encode_cmd = std::string(EASZ_TESTCODEC) + " encode {quality}";
  c.decode_cmd = std::string(EASZ_TESTCODEC) + " decode";
  c.quality = 60;
  return c;
}

}  // namespace

TEST(Container, StorePayloadLength) {
  const auto s = squeezed_of(random_image(256, 256, 3, 1), 32, 4, 2);
  const auto bytes = encode_container(s.image, s.mask, MaskMode::explicit_bits);
  const auto f = parse_frame(bytes);
  EXPECT_EQ(f.payload.size(), 147456u);
  EXPECT_EQ(f.mask_bytes.size(), 8u);
}

TEST(Container, HeaderLayoutByteForByte) {
  const auto s = squeezed_of(random_image(20, 30, 1, 2), 8, 2, 1, 0x0102030405060708ULL);
  const auto bytes = encode_container(s.image, s.mask, MaskMode::seed);
  ByteReader r(bytes);
  const auto magic = r.bytes(4, "magic");
  EXPECT_EQ(std::string(magic.begin(), magic.end()), "EASZ");
  EXPECT_EQ(r.u8("version"), 1);
  EXPECT_EQ(r.be32("h"), 20u);
  EXPECT_EQ(r.be32("w"), 30u);
  EXPECT_EQ(r.u8("c"), 1);
  EXPECT_EQ(r.be16("n"), 8);
  EXPECT_EQ(r.u8("b"), 2);
  EXPECT_EQ(r.u8("T"), 1);
  EXPECT_EQ(r.u8("mode"), 1);
  EXPECT_EQ(r.be64("seed"), 0x0102030405060708ULL);
  EXPECT_EQ(r.be16("delta"), 1);
  EXPECT_EQ(r.be16("Delta"), 1);
  EXPECT_EQ(r.u8("codec"), 0);
  const auto len = r.be64("len");
  EXPECT_EQ(len, 24u * 4u * 6u);  // 3x4 patches of 8x6 after squeeze
  EXPECT_EQ(r.remaining(), len);
}

TEST(Container, StoreRoundTripExplicitAndSeed) {
  for (auto mode : {MaskMode::explicit_bits, MaskMode::seed}) {
    const auto s = squeezed_of(random_image(70, 50, 3, 3), 16, 2, 3, 9, 0, 0);
    const auto d = decode_container(encode_container(s.image, s.mask, mode));
    EXPECT_EQ(d.squeezed, s.image);
    EXPECT_EQ(d.mask, s.mask);
  }
}

TEST(Container, SeedModeMatchesExplicitMode) {
  const auto s = squeezed_of(random_image(64, 64, 1, 4), 32, 4, 2, 1234);
  const auto a = decode_container(encode_container(s.image, s.mask, MaskMode::explicit_bits));
  const auto b = decode_container(encode_container(s.image, s.mask, MaskMode::seed));
  EXPECT_EQ(a.mask, b.mask);
  EXPECT_TRUE(b.frame.mask_bytes.empty());
}

TEST(Container, AllKeptSeedMode) {
  const auto s = squeezed_of(random_image(16, 16, 1, 5), 8, 2, 0);
  const auto d = decode_container(encode_container(s.image, s.mask, MaskMode::seed));
  EXPECT_EQ(d.mask, EraseMask(4, 4, true));
}

TEST(Container, SizeStrictlyDecreasesWithT) {
  const Image img = random_image(64, 64, 1, 6);
  std::size_t last = SIZE_MAX;
  for (std::size_t T = 0; T <= 4; ++T) {
    const auto s = squeezed_of(img, 16, 2, T, 1, 0, 0);
    const auto size = encode_container(s.image, s.mask, MaskMode::explicit_bits).size();
    EXPECT_LT(size, last) << "T=" << T;
    last = size;
  }
}

TEST(Container, CorruptionIsRejected) {
  const auto s = squeezed_of(random_image(32, 32, 1, 7), 16, 4, 1);
  const auto good = encode_container(s.image, s.mask, MaskMode::explicit_bits);
  auto bad = good;
  bad[0] = 'X';
  EXPECT_THROW(decode_container(bad), FormatError);
  bad = good;
  bad[4] = 2;
  EXPECT_THROW(decode_container(bad), FormatError);
  EXPECT_THROW(decode_container(std::span(good).first(good.size() - 1)), FormatError);
  EXPECT_THROW(decode_container(std::span(good).first(20)), FormatError);
  bad = good;
  bad.push_back(0);
  EXPECT_THROW(decode_container(bad), FormatError);
  // Mask row whose kept count disagrees with T.
  bad = good;
  bad[33] ^= 0x80;
  EXPECT_THROW(decode_container(bad), FormatError);
}

TEST(Container, SeedModeNeedsProvenance) {
  const auto s = squeezed_of(random_image(32, 32, 1, 8), 16, 4, 1);
  EraseMask bare(4, 4, true);
  for (std::size_t r = 0; r < 4; ++r) bare.set(r, (r * 2) % 4, false);
  EXPECT_THROW(encode_container(s.image, bare, MaskMode::seed), ParameterError);
}

TEST(Container, Bpp) {
  EXPECT_DOUBLE_EQ(bpp(32768, 256, 256), 4.0);
  EXPECT_DOUBLE_EQ(bpp(0, 256, 256), 0.0);
  EXPECT_DOUBLE_EQ(bpp(2000, 10, 10), 2.0 * bpp(1000, 10, 10));
  EXPECT_THROW(bpp(10, 0, 5), ParameterError);
}

TEST(ExternalCodec, RoundTripKeepsDimensions) {
  const Image img = random_image(40, 48, 3, 9);
  const auto s = squeezed_of(img, 8, 2, 1);
  const auto codec = test_codec();
  const auto bytes = encode_container(s.image, s.mask, MaskMode::explicit_bits, codec);
  const auto d = decode_container(bytes, codec);
  EXPECT_EQ(d.squeezed.height, s.image.height);
  EXPECT_EQ(d.squeezed.width, s.image.width);
  EXPECT_EQ(d.frame.codec, CodecId::external);
  for (std::size_t i = 0; i < s.image.pixels.size(); ++i) {
    ASSERT_NEAR(d.squeezed.pixels[i], s.image.pixels[i], 5);
  }
}

TEST(ExternalCodec, FailureSurfacesDiagnostics) {
  const auto s = squeezed_of(random_image(16, 16, 1, 10), 8, 2, 1);
  auto codec = test_codec();
  codec.encode_cmd = std::string(EASZ_TESTCODEC) + " fail";
  try {
    encode_container(s.image, s.mask, MaskMode::explicit_bits, codec);
    FAIL();
  } catch (const CodecError& e) {
    EXPECT_NE(std::string(e.what()).find("deliberate failure"), std::string::npos) << e.what();
  }
}

TEST(Subprocess, LargeInputAndOutput) {
  std::vector<std::uint8_t> input(3 << 20);
  for (std::size_t i = 0; i < input.size(); ++i) input[i] = static_cast<std::uint8_t>(i * 31);
  const auto r = run_process("cat", input);
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(r.out, input);
  EXPECT_EQ(run_process("exit 7", {}).exit_code, 7);
  EXPECT_EQ(run_process("head -c 10 >/dev/null; exit 0", input).exit_code, 0);
}

TEST(Subprocess, Substitute) {
  EXPECT_EQ(substitute("q={quality} again {quality}", "quality", "90"), "q=90 again 90");
  EXPECT_EQ(substitute("none", "quality", "1"), "none");
}
