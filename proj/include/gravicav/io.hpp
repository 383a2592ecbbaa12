// Small file helpers shared by every output writer.
#ifndef GRAVICAV_IO_HPP
#define GRAVICAV_IO_HPP

#include <bit>
#include <cstring>
#include <filesystem>
#include <functional>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>

namespace gravicav {

/// Writes through `fill` into `path.tmp` and renames it over `path`, so a
/// reader never observes a half-written file.
void write_atomically(const std::filesystem::path& path,
                      const std::function<void(std::ostream&)>& fill);

/// Shortest round-trip decimal text for a double ("%.17g").
std::string fmt_double(double x);

/// Little-endian binary field I/O.
template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(T));
  if (!in) throw std::runtime_error("binary read: truncated file");
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace gravicav

#endif  // GRAVICAV_IO_HPP
