#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "qfl/matrix.hpp"

namespace qfl::textio {

/// Formats with 17 significant digits so the decimal text round-trips to the
/// identical double.
std::string format_double(double v);

/// Matrix file: "rows cols" header line, then one whitespace-separated row
/// per line, 17 significant digits.
void write_matrix(std::ostream& out, const Matrix& m);
Matrix read_matrix(std::istream& in, const std::string& what);

void write_matrix_file(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix_file(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace qfl::textio
