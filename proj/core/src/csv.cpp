#include "xalign/csv.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace xalign {

Matrix read_csv_matrix(std::istream& in) {
  std::vector<double> values;
  int cols = -1;
  int rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    int c = 0;
    while (std::getline(ss, cell, ',')) {
      size_t pos = 0;
      double v = std::stod(cell, &pos);
      values.push_back(v);
      ++c;
    }
    if (cols < 0) {
      cols = c;
    } else if (c != cols) {
      throw std::invalid_argument("csv: ragged rows (" + std::to_string(c) + " vs " +
                                  std::to_string(cols) + ")");
    }
    ++rows;
  }
  if (rows == 0) throw std::invalid_argument("csv: empty input");
  return Matrix::from_rows(rows, cols, std::move(values));
}

Matrix read_csv_matrix_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("csv: cannot open " + path);
  return read_csv_matrix(f);
}

void write_csv_matrix(std::ostream& out, const Matrix& m) {
  out << std::setprecision(17);
  for (int i = 0; i < m.rows; ++i) {
    const double* row = m.row_ptr(i);
    for (int j = 0; j < m.cols; ++j) {
      if (j) out << ',';
      out << row[j];
    }
    out << '\n';
  }
}

void write_csv_matrix_file(const std::string& path, const Matrix& m) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("csv: cannot open " + path + " for writing");
  write_csv_matrix(f, m);
}

}  // namespace xalign
