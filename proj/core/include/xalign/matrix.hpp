#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace xalign {

/// Dense row-major matrix of doubles. Value-semantic; the unit of storage
/// for every feature map, weight tensor and transport plan in the library.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int rows_, int cols_, double fill = 0.0);

  static Matrix zeros(int rows, int cols) { return Matrix(rows, cols, 0.0); }
  static Matrix full(int rows, int cols, double v) { return Matrix(rows, cols, v); }
  static Matrix from_rows(int rows, int cols, std::vector<double> values);
  static Matrix identity(int n);
  static Matrix row_vector(const std::vector<double>& values);
  static Matrix col_vector(const std::vector<double>& values);

  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
  double* row_ptr(int r) { return data.data() + static_cast<size_t>(r) * cols; }
  const double* row_ptr(int r) const { return data.data() + static_cast<size_t>(r) * cols; }

  size_t size() const { return data.size(); }
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
  bool is_scalar() const { return rows == 1 && cols == 1; }
  double scalar() const;

  bool all_finite() const;
};

// Shape/finiteness guards. Throw std::invalid_argument / std::runtime_error.
void require_same_shape(const Matrix& a, const Matrix& b, const std::string& op);
void require_finite(const Matrix& m, const std::string& op);

// Out-of-place kernels used by the tape and by plain numeric code.
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);

double dot(const std::vector<double>& a, const std::vector<double>& b);
double l2_norm(const std::vector<double>& v);

}  // namespace xalign
