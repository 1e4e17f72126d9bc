#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <type_traits>

#include "ipm/grid.hpp"

namespace ipm {

/// Field snapshot file, all integers and floats little-endian:
///
///   offset  size  content
///   0       8     magic "IPMSNAP1"
///   8       4     uint32 n1
///   12      4     uint32 n2
///   16      8     float64 L
///   24      8     float64 time
///   32      4     uint32 name length N
///   36      N     name bytes (UTF-8, no terminator)
///   36+N    8*n1*n2  float64 samples, row-major, x1 fastest
struct Snapshot {
  RealField field;
  double time = 0.0;
  std::string name;
};

namespace detail {

inline constexpr std::array<char, 8> snapshot_magic{'I', 'P', 'M', 'S', 'N', 'A', 'P', '1'};

template <class T>
void put_le(std::ostream& os, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<unsigned char, sizeof(T)> bytes{};
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  os.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  std::array<unsigned char, sizeof(T)> bytes{};
  if (!is.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) {
    throw std::runtime_error("snapshot: truncated file");
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

}  // namespace detail

inline void write_snapshot(const std::filesystem::path& path, const Snapshot& snap) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("snapshot: cannot open " + path.string() + " for writing");
  const Grid& g = snap.field.grid;
  os.write(detail::snapshot_magic.data(), detail::snapshot_magic.size());
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.n1()));
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.n2()));
  detail::put_le<double>(os, g.L());
  detail::put_le<double>(os, snap.time);
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(snap.name.size()));
  os.write(snap.name.data(), static_cast<std::streamsize>(snap.name.size()));
  for (double v : snap.field.values) detail::put_le<double>(os, v);
  if (!os) throw std::runtime_error("snapshot: write failed for " + path.string());
}

inline Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("snapshot: cannot open " + path.string());
  std::array<char, 8> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != detail::snapshot_magic) {
    throw std::runtime_error("snapshot: bad magic in " + path.string());
  }
  const auto n1 = detail::get_le<std::uint32_t>(is);
  const auto n2 = detail::get_le<std::uint32_t>(is);
  const double L = detail::get_le<double>(is);
  const double time = detail::get_le<double>(is);
  const auto name_len = detail::get_le<std::uint32_t>(is);
  std::string name(name_len, '\0');
  if (name_len > 0 && !is.read(name.data(), name_len)) {
    throw std::runtime_error("snapshot: truncated name");
  }
  Grid grid(static_cast<int>(n1), static_cast<int>(n2), L);
  RealField field(grid);
  for (double& v : field.values) v = detail::get_le<double>(is);
  return Snapshot{std::move(field), time, std::move(name)};
}

}  // namespace ipm
