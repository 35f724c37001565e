#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "unishrink/linalg.hpp"

namespace unishrink::csv {

/// One row per line, comma-separated decimal literals, no header.
Matrix read_matrix(const std::filesystem::path& path);
Matrix parse_matrix(const std::string& text);

void write_matrix(const std::filesystem::path& path, const Matrix& m);
void write_matrix(std::ostream& out, const Matrix& m);

/// Shortest decimal literal that round-trips to the same double.
std::string format_double(double x);

void write_row(std::ostream& out, std::span<const double> values);

}  // namespace unishrink::csv
