#pragma once

// RDS1 binary snapshot container.
//
//   offset  size  content
//   0       4     magic "RDS1"
//   4       2     format version (u16, currently 1)
//   6       4     nx (u32)
//   10      4     ny (u32)
//   14      1     species count S (u8)
//   15      ...   S names, each u8 length + ASCII bytes
//   ...     8     t (f64)
//   ...     8*nx*ny*S  fields in table order, row-major, x fastest
//   end-4   4     CRC32 (zlib polynomial) of every preceding byte
//
// All integers and floats are little-endian.

#include <zlib.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>
#include <vector>

#include "rdspot/grid.hpp"

namespace rdspot {

struct Snapshot {
  double t = 0.0;
  int nx = 0;
  int ny = 0;
  std::vector<std::string> names;
  std::vector<std::vector<double>> fields;

  friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

class SnapshotError : public std::runtime_error {
 public:
  enum class Kind { io, bad_magic, version, truncated, crc, malformed };

  SnapshotError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

inline constexpr std::uint16_t kSnapshotVersion = 1;

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "snapshot I/O assumes a little-endian host");

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  out.insert(out.end(), raw, raw + sizeof(T));
}

inline std::uint32_t crc32_of(const std::uint8_t* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size) : p_(data), end_(data + size) {}

  template <typename T>
  T get(const char* what) {
    if (static_cast<std::size_t>(end_ - p_) < sizeof(T))
      throw SnapshotError(SnapshotError::Kind::truncated,
                          std::string("snapshot truncated while reading ") + what);
    T v;
    std::memcpy(&v, p_, sizeof(T));
    p_ += sizeof(T);
    return v;
  }
  void bytes(void* dst, std::size_t n, const char* what) {
    if (static_cast<std::size_t>(end_ - p_) < n)
      throw SnapshotError(SnapshotError::Kind::truncated,
                          std::string("snapshot truncated while reading ") + what);
    std::memcpy(dst, p_, n);
    p_ += n;
  }
  std::size_t remaining() const { return static_cast<std::size_t>(end_ - p_); }

 private:
  const std::uint8_t* p_;
  const std::uint8_t* end_;
};

}  // namespace detail

inline std::vector<std::uint8_t> encode_snapshot(const Snapshot& s) {
  if (s.names.size() != s.fields.size() || s.names.size() > 255)
    throw SnapshotError(SnapshotError::Kind::malformed, "bad species table");
  const std::size_t cells = static_cast<std::size_t>(s.nx) * static_cast<std::size_t>(s.ny);
  std::vector<std::uint8_t> out;
  out.reserve(32 + s.fields.size() * cells * 8);
  out.insert(out.end(), {'R', 'D', 'S', '1'});
  detail::put<std::uint16_t>(out, kSnapshotVersion);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(s.nx));
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(s.ny));
  detail::put<std::uint8_t>(out, static_cast<std::uint8_t>(s.names.size()));
  for (const auto& name : s.names) {
    if (name.size() > 255)
      throw SnapshotError(SnapshotError::Kind::malformed, "species name too long");
    detail::put<std::uint8_t>(out, static_cast<std::uint8_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
  }
  detail::put<double>(out, s.t);
  for (const auto& f : s.fields) {
    if (f.size() != cells)
      throw SnapshotError(SnapshotError::Kind::malformed, "field size mismatch");
    const auto* raw = reinterpret_cast<const std::uint8_t*>(f.data());
    out.insert(out.end(), raw, raw + cells * sizeof(double));
  }
  detail::put<std::uint32_t>(out, detail::crc32_of(out.data(), out.size()));
  return out;
}

inline Snapshot decode_snapshot(const std::uint8_t* data, std::size_t size) {
  detail::Reader in(data, size);
  char magic[4];
  in.bytes(magic, 4, "magic");
  if (std::memcmp(magic, "RDS1", 4) != 0)
    throw SnapshotError(SnapshotError::Kind::bad_magic, "not an RDS1 snapshot");
  const auto version = in.get<std::uint16_t>("version");
  if (version != kSnapshotVersion)
    throw SnapshotError(SnapshotError::Kind::version,
                        "unsupported snapshot version " + std::to_string(version));
  Snapshot s;
  s.nx = static_cast<int>(in.get<std::uint32_t>("nx"));
  s.ny = static_cast<int>(in.get<std::uint32_t>("ny"));
  const auto count = in.get<std::uint8_t>("species count");
  for (int n = 0; n < count; ++n) {
    const auto len = in.get<std::uint8_t>("species name length");
    std::string name(len, '\0');
    in.bytes(name.data(), len, "species name");
    s.names.push_back(std::move(name));
  }
  s.t = in.get<double>("time");
  const std::size_t cells = static_cast<std::size_t>(s.nx) * static_cast<std::size_t>(s.ny);
  const std::size_t payload = cells * sizeof(double) * count;
  if (in.remaining() < payload + 4)
    throw SnapshotError(SnapshotError::Kind::truncated,
                        "snapshot truncated: declared " + std::to_string(payload + 4) +
                            " payload bytes, found " + std::to_string(in.remaining()));
  if (in.remaining() > payload + 4)
    throw SnapshotError(SnapshotError::Kind::malformed,
                        "snapshot has trailing bytes after declared payload");
  for (int n = 0; n < count; ++n) {
    std::vector<double> f(cells);
    in.bytes(f.data(), cells * sizeof(double), "field data");
    s.fields.push_back(std::move(f));
  }
  const auto stored = in.get<std::uint32_t>("crc");
  if (stored != detail::crc32_of(data, size - 4))
    throw SnapshotError(SnapshotError::Kind::crc, "snapshot CRC mismatch");
  return s;
}

inline Snapshot decode_snapshot(const std::vector<std::uint8_t>& bytes) {
  return decode_snapshot(bytes.data(), bytes.size());
}

inline void write_snapshot_file(const std::string& path, const Snapshot& s) {
  const auto bytes = encode_snapshot(s);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw SnapshotError(SnapshotError::Kind::io, "cannot open " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw SnapshotError(SnapshotError::Kind::io, "write failed: " + path);
}

inline Snapshot read_snapshot_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SnapshotError(SnapshotError::Kind::io, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_snapshot(bytes);
}

}  // namespace rdspot
