#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace risv2x::io {

// Native-endian raw dumps; checkpoints are meant to be read back on the
// machine family that wrote them.

inline void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw std::runtime_error("checkpoint: unexpected end of file");
  return v;
}

inline void write_f64(std::ostream& os, double v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); }

inline double read_f64(std::istream& is) {
  double v = 0.0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw std::runtime_error("checkpoint: unexpected end of file");
  return v;
}

inline void write_doubles(std::ostream& os, std::span<const double> v) {
  write_u64(os, v.size());
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
}

inline std::vector<double> read_doubles(std::istream& is) {
  const std::uint64_t n = read_u64(is);
  if (n > (std::uint64_t{1} << 32)) throw std::runtime_error("checkpoint: implausible array length");
  std::vector<double> v(n);
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) throw std::runtime_error("checkpoint: unexpected end of file");
  return v;
}

inline void write_tag(std::ostream& os, const std::string& tag) {
  write_u64(os, tag.size());
  os.write(tag.data(), static_cast<std::streamsize>(tag.size()));
}

inline void expect_tag(std::istream& is, const std::string& tag) {
  const std::uint64_t n = read_u64(is);
  std::string got(n < 256 ? n : 0, '\0');
  if (n >= 256) throw std::runtime_error("checkpoint: corrupt section tag");
  is.read(got.data(), static_cast<std::streamsize>(n));
  if (!is || got != tag) throw std::runtime_error("checkpoint: expected section '" + tag + "', found '" + got + "'");
}

}  // namespace risv2x::io
