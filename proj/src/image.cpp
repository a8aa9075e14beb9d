#include "easz/image.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <iterator>
#include <string>

#include "easz/error.hpp"

namespace easz {

Image Image::blank(std::size_t h, std::size_t w, std::size_t c, std::uint8_t value) {
  Image img;
  img.height = h;
  img.width = w;
  img.channels = c;
  img.pixels.assign(h * w * c, value);
  img.orig_height = h;
  img.orig_width = w;
  return img;
}

void Image::validate() const {
  if (channels != 1 && channels != 3) {
    throw GeometryError("image channels must be 1 or 3, got " + std::to_string(channels));
  }
  if (pixels.size() != height * width * channels) {
    throw GeometryError("pixel buffer holds " + std::to_string(pixels.size()) + " samples, expected " +
                        std::to_string(height * width * channels));
  }
  if (orig_height > height || orig_width > width) {
    throw GeometryError("original dimensions exceed stored dimensions");
  }
}

Image Image::cropped() const {
  if (orig_height == height && orig_width == width) return *this;
  Image out = blank(orig_height, orig_width, channels);
  const std::size_t row = orig_width * channels;
  for (std::size_t y = 0; y < orig_height; ++y) {
    std::copy_n(pixels.begin() + static_cast<std::ptrdiff_t>(index(y, 0)), row,
                out.pixels.begin() + static_cast<std::ptrdiff_t>(out.index(y, 0)));
  }
  return out;
}

namespace {

class HeaderScanner {
 public:
  explicit HeaderScanner(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t number(const char* field) {
    skip_space_and_comments();
    std::size_t start = pos_;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) ++pos_;
    if (start == pos_) throw ParseError(std::string("raster header: missing or invalid ") + field);
    std::size_t value = 0;
    auto* first = reinterpret_cast<const char*>(bytes_.data() + start);
    auto* last = reinterpret_cast<const char*>(bytes_.data() + pos_);
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) throw ParseError(std::string("raster header: invalid ") + field);
    return value;
  }

  // Exactly one whitespace byte separates maxval from the payload.
  void single_separator() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw ParseError("raster header: missing separator after maxval");
    }
    ++pos_;
  }

  std::size_t position() const { return pos_; }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;
};

}  // namespace

Image load_raster(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw ParseError("raster magic: expected P5 or P6");
  }
  const std::size_t channels = bytes[1] == '5' ? 1 : 3;
  HeaderScanner scan(bytes);
  const std::size_t width = scan.number("width");
  const std::size_t height = scan.number("height");
  const std::size_t maxval = scan.number("maxval");
  if (width == 0) throw ParseError("raster header: width must be positive");
  if (height == 0) throw ParseError("raster header: height must be positive");
  if (maxval != 255) throw ParseError("raster maxval: expected 255, got " + std::to_string(maxval));
  scan.single_separator();

  const std::size_t need = width * height * channels;
  const std::size_t have = bytes.size() - scan.position();
  if (have < need) {
    throw ParseError("raster payload: truncated, expected " + std::to_string(need) + " bytes, got " +
                     std::to_string(have));
  }
  Image img = Image::blank(height, width, channels);
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(scan.position()), need, img.pixels.begin());
  return img;
}

std::vector<std::uint8_t> store_raster(const Image& img) {
  img.validate();
  const std::string header = std::string(img.channels == 1 ? "P5" : "P6") + "\n" +
                             std::to_string(img.orig_width) + " " + std::to_string(img.orig_height) +
                             "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(header.size() + img.orig_height * img.orig_width * img.channels);
  const std::size_t row = img.orig_width * img.channels;
  for (std::size_t y = 0; y < img.orig_height; ++y) {
    auto first = img.pixels.begin() + static_cast<std::ptrdiff_t>(img.index(y, 0));
    out.insert(out.end(), first, first + static_cast<std::ptrdiff_t>(row));
  }
  return out;
}

Image read_raster_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open raster file " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return load_raster(bytes);
}

void write_raster_file(const std::string& path, const Image& img) {
  auto bytes = store_raster(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write raster file " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

PatchGrid patchify(const Image& img, std::size_t n, std::size_t b) {
  img.validate();
  if (b == 0 || n < b || n % b != 0) {
    throw ParameterError("patch size " + std::to_string(n) + " must be a positive multiple of sub-patch size " +
                         std::to_string(b));
  }
  if (img.height == 0 || img.width == 0) throw GeometryError("cannot patchify an empty image");

  PatchGrid grid;
  grid.patch_size = n;
  grid.subpatch_size = b;
  grid.patch_rows = (img.height + n - 1) / n;
  grid.patch_cols = (img.width + n - 1) / n;
  grid.channels = img.channels;
  grid.orig_height = img.orig_height;
  grid.orig_width = img.orig_width;
  grid.patches.resize(grid.patch_count());

  const std::size_t c = img.channels;
  for (std::size_t pr = 0; pr < grid.patch_rows; ++pr) {
    for (std::size_t pc = 0; pc < grid.patch_cols; ++pc) {
      auto& patch = grid.patches[pr * grid.patch_cols + pc];
      patch.resize(n * n * c);
      for (std::size_t y = 0; y < n; ++y) {
        const std::size_t sy = std::min(pr * n + y, img.height - 1);
        for (std::size_t x = 0; x < n; ++x) {
          const std::size_t sx = std::min(pc * n + x, img.width - 1);
          for (std::size_t ch = 0; ch < c; ++ch) patch[(y * n + x) * c + ch] = img.at(sy, sx, ch);
        }
      }
    }
  }
  return grid;
}

Image unpatchify(const PatchGrid& grid) {
  if (grid.patches.size() != grid.patch_count()) {
    throw GeometryError("patch grid holds " + std::to_string(grid.patches.size()) + " patches, expected " +
                        std::to_string(grid.patch_count()));
  }
  const std::size_t n = grid.patch_size;
  const std::size_t c = grid.channels;
  Image img = Image::blank(grid.padded_height(), grid.padded_width(), c);
  img.orig_height = grid.orig_height;
  img.orig_width = grid.orig_width;
  for (std::size_t p = 0; p < grid.patches.size(); ++p) {
    const auto& patch = grid.patches[p];
    if (patch.size() != grid.patch_bytes()) {
      throw GeometryError("patch " + std::to_string(p) + " has " + std::to_string(patch.size()) + " samples");
    }
    const std::size_t oy = (p / grid.patch_cols) * n;
    const std::size_t ox = (p % grid.patch_cols) * n;
    for (std::size_t y = 0; y < n; ++y) {
      std::copy_n(patch.begin() + static_cast<std::ptrdiff_t>(y * n * c), n * c,
                  img.pixels.begin() + static_cast<std::ptrdiff_t>(img.index(oy + y, ox)));
    }
  }
  img.validate();
  return img;
}

Image patch_image(const PatchGrid& grid, std::size_t index) {
  Image img = Image::blank(grid.patch_size, grid.patch_size, grid.channels);
  img.pixels = grid.patches.at(index);
  return img;
}

}  // namespace easz
