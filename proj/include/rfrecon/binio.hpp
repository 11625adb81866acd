#pragma once

// Little-endian primitives for the binary container formats.

#include "rfrecon/errors.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

namespace rfrecon::binio {

class Writer {
public:
  template <typename T> void put(T v) {
    static_assert(std::is_integral_v<T> || std::is_floating_point_v<T>);
    std::uint8_t buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big)
      std::reverse(buf, buf + sizeof(T));
    bytes_.insert(bytes_.end(), buf, buf + sizeof(T));
  }
  void put_bytes(std::span<const std::uint8_t> b) { bytes_.insert(bytes_.end(), b.begin(), b.end()); }
  void put_string(const std::string &s) {
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  void put_doubles(std::span<const double> v) {
    for (double x : v)
      put(x);
  }
  std::vector<std::uint8_t> &bytes() { return bytes_; }

private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T> T get() {
    need(sizeof(T));
    std::uint8_t buf[sizeof(T)];
    std::memcpy(buf, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big)
      std::reverse(buf, buf + sizeof(T));
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
  }
  std::string get_string(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char *>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::vector<double> get_doubles(std::size_t count) {
    if (count > remaining() / sizeof(double))
      throw FormatError("truncated array of " + std::to_string(count) + " doubles", pos_);
    std::vector<double> v(count);
    for (double &x : v)
      x = get<double>();
    return v;
  }
  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

private:
  void need(std::size_t n) const {
    if (n > remaining())
      throw FormatError("unexpected end of data", pos_);
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::string &path);
void write_file(const std::string &path, std::span<const std::uint8_t> bytes);

} // namespace rfrecon::binio
