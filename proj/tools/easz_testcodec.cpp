// Tiny stand-in for an external image codec, used by the tests.
//   easz-testcodec encode <quality>   PGM/PPM on stdin -> bitstream on stdout
//   easz-testcodec decode             bitstream on stdin -> PGM/PPM on stdout
//   easz-testcodec fail               prints a diagnostic and exits 3
// The bitstream is "ETC1", be32 height, be32 width, u8 channels, u8 step, then
// samples divided by step. Lower quality means a coarser step.
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <iterator>
#include <string>
#include <vector>

#include "easz/byte_io.hpp"
#include "easz/error.hpp"
#include "easz/image.hpp"

namespace {

std::vector<std::uint8_t> slurp_stdin() {
  std::vector<std::uint8_t> data;
  std::uint8_t buf[65536];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, stdin)) > 0) data.insert(data.end(), buf, buf + n);
  return data;
}

void emit(const std::vector<std::uint8_t>& bytes) {
  std::fwrite(bytes.data(), 1, bytes.size(), stdout);
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "";
  try {
    if (mode == "encode") {
      const int quality = argc > 2 ? std::atoi(argv[2]) : 75;
      const int step = quality >= 100 ? 1 : 1 + (100 - std::max(quality, 0)) / 10;
      const easz::Image img = easz::load_raster(slurp_stdin());
      easz::ByteWriter w;
      w.str("ETC1");
      w.be32(static_cast<std::uint32_t>(img.height));
      w.be32(static_cast<std::uint32_t>(img.width));
      w.u8(static_cast<std::uint8_t>(img.channels));
      w.u8(static_cast<std::uint8_t>(step));
      for (auto v : img.pixels) w.u8(static_cast<std::uint8_t>(v / step));
      emit(w.data());
      return 0;
    }
    if (mode == "decode") {
      const auto data = slurp_stdin();
      easz::ByteReader r(data);
      const auto magic = r.bytes(4, "magic");
      if (std::string(magic.begin(), magic.end()) != "ETC1") throw easz::FormatError("not an ETC1 stream");
      const auto h = r.be32("height"), w = r.be32("width");
      const auto c = r.u8("channels"), step = r.u8("step");
      easz::Image img = easz::Image::blank(h, w, c);
      const auto samples = r.bytes(img.pixels.size(), "samples");
      for (std::size_t i = 0; i < samples.size(); ++i) {
        img.pixels[i] = static_cast<std::uint8_t>(std::min(255, samples[i] * step + step / 2));
      }
      emit(easz::store_raster(img));
      return 0;
    }
    if (mode == "fail") {
      std::cerr << "testcodec: deliberate failure\n";
      return 3;
    }
    std::cerr << "usage: easz-testcodec encode <quality> | decode | fail\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "testcodec: " << e.what() << "\n";
    return 1;
  }
}
