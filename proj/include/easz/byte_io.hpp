#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "easz/error.hpp"

namespace easz {

// Append-only writer for fixed-width integer fields.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }

  void be(std::uint64_t v, int width) {
    for (int i = width - 1; i >= 0; --i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void le(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void be16(std::uint16_t v) { be(v, 2); }
  void be32(std::uint32_t v) { be(v, 4); }
  void be64(std::uint64_t v) { be(v, 8); }
  void le32(std::uint32_t v) { le(v, 4); }
  void le64(std::uint64_t v) { le(v, 8); }
  void le_f32(float v) { le32(std::bit_cast<std::uint32_t>(v)); }
  void be_f64(double v) { be64(std::bit_cast<std::uint64_t>(v)); }

  void bytes(std::span<const std::uint8_t> data) { buf_.insert(buf_.end(), data.begin(), data.end()); }
  void str(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }

  const std::vector<std::uint8_t>& data() const& { return buf_; }
  std::vector<std::uint8_t> take() && { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

// Bounds-checked cursor over a byte span. Every read past the end throws
// FormatError naming the field being read.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::size_t remaining() const { return data_.size() - pos_; }
  std::size_t position() const { return pos_; }

  std::uint8_t u8(const char* field) {
    need(1, field);
    return data_[pos_++];
  }
  std::uint64_t be(int width, const char* field) {
    need(width, field);
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v = (v << 8) | data_[pos_++];
    return v;
  }
  std::uint64_t le(int width, const char* field) {
    need(width, field);
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= std::uint64_t{data_[pos_++]} << (8 * i);
    return v;
  }
  std::uint16_t be16(const char* f) { return static_cast<std::uint16_t>(be(2, f)); }
  std::uint32_t be32(const char* f) { return static_cast<std::uint32_t>(be(4, f)); }
  std::uint64_t be64(const char* f) { return be(8, f); }
  std::uint32_t le32(const char* f) { return static_cast<std::uint32_t>(le(4, f)); }
  std::uint64_t le64(const char* f) { return le(8, f); }
  float le_f32(const char* f) { return std::bit_cast<float>(le32(f)); }
  double be_f64(const char* f) { return std::bit_cast<double>(be64(f)); }

  std::span<const std::uint8_t> bytes(std::size_t n, const char* field) {
    need(n, field);
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

 private:
  void need(std::size_t n, const char* field) const {
    if (remaining() < n) {
      throw FormatError(std::string("truncated stream while reading ") + field);
    }
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

// FNV-1a, 64-bit.
inline std::uint64_t fnv1a64(std::span<const std::uint8_t> data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto byte : data) {
    h ^= byte;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace easz
