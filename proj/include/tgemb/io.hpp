#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "tgemb/errors.hpp"

// Little-endian binary primitives shared by the graph, feature-table and
// checkpoint containers. The host is assumed little-endian (documented in
// the README alongside each byte layout).

namespace tgemb::io {

inline void write_u8(std::ostream& os, uint8_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline void write_u32(std::ostream& os, uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline void write_u64(std::ostream& os, uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline void write_i64(std::ostream& os, int64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline void write_f64(std::ostream& os, double v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline void write_string(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
inline T read_raw(std::istream& is, const char* what) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw DataError(std::string("unexpected end of file while reading ") + what);
  return v;
}

inline uint8_t read_u8(std::istream& is, const char* what = "u8") { return read_raw<uint8_t>(is, what); }
inline uint32_t read_u32(std::istream& is, const char* what = "u32") { return read_raw<uint32_t>(is, what); }
inline uint64_t read_u64(std::istream& is, const char* what = "u64") { return read_raw<uint64_t>(is, what); }
inline int64_t read_i64(std::istream& is, const char* what = "i64") { return read_raw<int64_t>(is, what); }
inline double read_f64(std::istream& is, const char* what = "f64") { return read_raw<double>(is, what); }

inline std::string read_string(std::istream& is, const char* what = "string") {
  const uint32_t n = read_u32(is, what);
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw DataError(std::string("unexpected end of file while reading ") + what);
  return s;
}

}  // namespace tgemb::io
