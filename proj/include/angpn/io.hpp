#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

#include "angpn/matrix.hpp"

namespace angpn {

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);

/// Parses a full decimal field; returns false on trailing garbage or overflow.
bool parse_double(std::string_view text, double& out);

void write_matrix_csv(std::ostream& os, const Matrix& m);

// Little-endian primitives for the packed binary formats.
void write_u64_le(std::ostream& os, std::uint64_t v);
void write_f64_le(std::ostream& os, double v);
void write_u8(std::ostream& os, std::uint8_t v);
std::uint64_t read_u64_le(std::istream& is);
double read_f64_le(std::istream& is);
std::uint8_t read_u8(std::istream& is);

}  // namespace angpn
