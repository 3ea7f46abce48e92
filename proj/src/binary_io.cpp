#include "plg/binary_io.hpp"

#include <zlib.h>

#include <fstream>
#include <iterator>

namespace plg {

namespace {

std::uint32_t crc_of(std::span<const std::uint8_t> payload) {
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t offset = 0;
  while (offset < payload.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(payload.size() - offset, 1u << 30));
    crc = crc32(crc, payload.data() + offset, chunk);
    offset += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::string magic_text(Magic m) { return std::string(m.begin(), m.end()); }

}  // namespace

Bytes frame(Magic magic, std::uint32_t version, std::span<const std::uint8_t> payload) {
  ByteWriter w;
  for (char c : magic) w.put(c);
  w.put(version);
  w.put<std::uint64_t>(payload.size());
  Bytes out = std::move(w).bytes();
  out.insert(out.end(), payload.begin(), payload.end());
  const std::uint32_t crc = crc_of(payload);
  const auto* p = reinterpret_cast<const std::uint8_t*>(&crc);
  out.insert(out.end(), p, p + sizeof crc);
  return out;
}

Magic peek_magic(std::span<const std::uint8_t> bytes) {
  Magic m{};
  if (bytes.size() < m.size()) throw FormatError("file too short to carry a format tag");
  std::memcpy(m.data(), bytes.data(), m.size());
  return m;
}

Bytes unframe(std::span<const std::uint8_t> bytes, Magic magic, std::uint32_t version,
              const char* what) {
  constexpr std::size_t kHeader = 4 + 4 + 8;
  if (bytes.size() < kHeader) throw FormatError(std::string(what) + ": checksum failure (truncated header)");
  if (peek_magic(bytes) != magic) {
    throw FormatError(std::string(what) + ": wrong format tag '" + magic_text(peek_magic(bytes)) +
                      "', expected '" + magic_text(magic) + "'");
  }
  std::uint32_t found_version;
  std::uint64_t length;
  std::memcpy(&found_version, bytes.data() + 4, 4);
  std::memcpy(&length, bytes.data() + 8, 8);
  if (found_version != version) {
    throw FormatError(std::string(what) + ": version mismatch (file " + std::to_string(found_version) +
                      ", supported " + std::to_string(version) + ")");
  }
  if (bytes.size() - kHeader < 4 || length != bytes.size() - kHeader - 4) {
    throw FormatError(std::string(what) + ": checksum failure (payload length mismatch)");
  }
  const auto payload = bytes.subspan(kHeader, length);
  std::uint32_t stored;
  std::memcpy(&stored, bytes.data() + kHeader + length, 4);
  if (stored != crc_of(payload)) throw FormatError(std::string(what) + ": checksum failure");
  return Bytes(payload.begin(), payload.end());
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw DataError("short write to " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace plg
