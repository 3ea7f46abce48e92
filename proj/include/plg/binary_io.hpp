#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "plg/common.hpp"

namespace plg {

using Bytes = std::vector<std::uint8_t>;

// Little-endian host layout; every artifact is written and read on x86-64/arm64.
class ByteWriter {
 public:
  template <typename T>
    requires std::is_arithmetic_v<T>
  void put(T value) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void put_string(std::string_view s) {
    put<std::uint64_t>(s.size());
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  void put_bytes(std::span<const std::uint8_t> b) {
    put<std::uint64_t>(b.size());
    bytes_.insert(bytes_.end(), b.begin(), b.end());
  }
  template <typename T>
    requires std::is_arithmetic_v<T>
  void put_array(std::span<const T> values) {
    put<std::uint64_t>(values.size());
    for (T v : values) put(v);
  }

  const Bytes& bytes() const& { return bytes_; }
  Bytes bytes() && { return std::move(bytes_); }

 private:
  Bytes bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
    requires std::is_arithmetic_v<T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  std::string get_string() {
    const auto n = length();
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  Bytes get_bytes() {
    const auto n = length();
    Bytes b(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
            bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return b;
  }
  template <typename T>
    requires std::is_arithmetic_v<T>
  std::vector<T> get_array() {
    const auto n = get<std::uint64_t>();
    if (n > (bytes_.size() - pos_) / sizeof(T)) throw FormatError("array length exceeds payload");
    std::vector<T> out(n);
    for (auto& v : out) v = get<T>();
    return out;
  }
  bool at_end() const { return pos_ == bytes_.size(); }
  void expect_end() const {
    if (!at_end()) throw FormatError("trailing bytes after payload");
  }

 private:
  std::size_t length() {
    const auto n = get<std::uint64_t>();
    need(n);
    return static_cast<std::size_t>(n);
  }
  void need(std::uint64_t n) const {
    if (n > bytes_.size() - pos_) throw FormatError("payload truncated");
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

// Framed artifact: 4-byte magic, u32 format version, u64 payload length,
// payload, u32 CRC-32 of the payload.
using Magic = std::array<char, 4>;

Bytes frame(Magic magic, std::uint32_t version, std::span<const std::uint8_t> payload);

// Validates magic, version, length and checksum; returns the payload.
// A short or corrupted frame raises FormatError mentioning "checksum".
Bytes unframe(std::span<const std::uint8_t> bytes, Magic magic, std::uint32_t version,
              const char* what);

// Reads the magic of a framed file without validating the rest.
Magic peek_magic(std::span<const std::uint8_t> bytes);

Bytes read_file(const std::filesystem::path& path);
// Writes via a sibling temporary file and rename, so readers never observe a
// partial artifact.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

}  // namespace plg
