#pragma once

#include <iosfwd>
#include <string>

#include "xalign/matrix.hpp"

namespace xalign {

/// Comma-separated doubles, one matrix row per line. Ragged rows are an error.
Matrix read_csv_matrix(std::istream& in);
Matrix read_csv_matrix_file(const std::string& path);

void write_csv_matrix(std::ostream& out, const Matrix& m);
void write_csv_matrix_file(const std::string& path, const Matrix& m);

}  // namespace xalign
