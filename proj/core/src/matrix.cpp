#include "xalign/matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace xalign {

Matrix::Matrix(int rows_, int cols_, double fill)
    : rows(rows_), cols(cols_), data(static_cast<size_t>(rows_) * cols_, fill) {
  if (rows_ < 0 || cols_ < 0) {
    throw std::invalid_argument("Matrix: negative dimension");
  }
}

Matrix Matrix::from_rows(int rows, int cols, std::vector<double> values) {
  if (values.size() != static_cast<size_t>(rows) * cols) {
    throw std::invalid_argument("Matrix::from_rows: data length != rows*cols");
  }
  Matrix m;
  m.rows = rows;
  m.cols = cols;
  m.data = std::move(values);
  return m;
}

Matrix Matrix::identity(int n) {
  Matrix m(n, n, 0.0);
  for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

Matrix Matrix::row_vector(const std::vector<double>& values) {
  return from_rows(1, static_cast<int>(values.size()), values);
}

Matrix Matrix::col_vector(const std::vector<double>& values) {
  return from_rows(static_cast<int>(values.size()), 1, values);
}

double Matrix::scalar() const {
  if (!is_scalar()) throw std::invalid_argument("Matrix::scalar: shape is not 1x1");
  return data[0];
}

bool Matrix::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void require_same_shape(const Matrix& a, const Matrix& b, const std::string& op) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(op + ": shape mismatch (" + std::to_string(a.rows) + "x" +
                                std::to_string(a.cols) + " vs " + std::to_string(b.rows) + "x" +
                                std::to_string(b.cols) + ")");
  }
}

void require_finite(const Matrix& m, const std::string& op) {
  if (!m.all_finite()) {
    throw std::runtime_error(op + ": non-finite entries");
  }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) {
    throw std::invalid_argument("matmul: inner dimensions differ (" + std::to_string(a.cols) +
                                " vs " + std::to_string(b.rows) + ")");
  }
  Matrix out(a.rows, b.cols, 0.0);
  // i-k-j order: the inner loop streams rows of b and out.
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = a.row_ptr(i);
    double* orow = out.row_ptr(i);
    for (int k = 0; k < a.cols; ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = b.row_ptr(k);
      for (int j = 0; j < b.cols; ++j) {
        orow[j] += aik * brow[j];
      }
    }
  }
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols, m.rows);
  for (int i = 0; i < m.rows; ++i) {
    const double* row = m.row_ptr(i);
    for (int j = 0; j < m.cols; ++j) {
      out.at(j, i) = row[j];
    }
  }
  return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "hadamard");
  Matrix out = a;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b.data[i];
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "add");
  Matrix out = a;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
  return out;
}

Matrix sub(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "sub");
  Matrix out = a;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.data[i];
  return out;
}

Matrix scale(const Matrix& a, double s) {
  Matrix out = a;
  for (double& v : out.data) v *= s;
  return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double l2_norm(const std::vector<double>& v) { return std::sqrt(dot(v, v)); }

}  // namespace xalign
