#include "angpn/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <istream>
#include <ostream>

#include "angpn/errors.hpp"

namespace angpn {

std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw NumericError("format_double: conversion failed");
  return std::string(buf.data(), ptr);
}

bool parse_double(std::string_view text, double& out) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size();
}

void write_matrix_csv(std::ostream& os, const Matrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      os << format_double(m(i, j));
    }
    os << '\n';
  }
}

void write_u64_le(std::ostream& os, std::uint64_t v) {
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  os.write(b.data(), 8);
}

void write_f64_le(std::ostream& os, double v) { write_u64_le(os, std::bit_cast<std::uint64_t>(v)); }

void write_u8(std::ostream& os, std::uint8_t v) { os.put(static_cast<char>(v)); }

std::uint64_t read_u64_le(std::istream& is) {
  std::array<unsigned char, 8> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), 8)) throw DataError("unexpected end of binary file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double read_f64_le(std::istream& is) { return std::bit_cast<double>(read_u64_le(is)); }

std::uint8_t read_u8(std::istream& is) {
  char c = 0;
  if (!is.get(c)) throw DataError("unexpected end of binary file");
  return static_cast<std::uint8_t>(c);
}

}  // namespace angpn
