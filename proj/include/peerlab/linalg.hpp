#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace peerlab {

using Vector = std::vector<double>;

/// Dense row-major matrix. Dimensions here never exceed a few dozen.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  const std::vector<double>& data() const { return data_; }

  Matrix transpose() const;
  double max_abs() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Vector operator*(const Matrix& a, std::span<const double> x);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);

/// LU factorisation with partial pivoting. Throws SingularBelief when the
/// smallest pivot magnitude drops below `pivot_tolerance`.
class LuDecomposition {
 public:
  explicit LuDecomposition(const Matrix& a, double pivot_tolerance = 1e-12);

  Vector solve(std::span<const double> b) const;
  Matrix inverse() const;
  double determinant() const;
  double min_pivot() const { return min_pivot_; }

 private:
  Matrix lu_;
  std::vector<std::size_t> perm_;
  int sign_ = 1;
  double min_pivot_ = 0.0;
};

Matrix inverse(const Matrix& a, double pivot_tolerance = 1e-12);

/// Largest singular value via power iteration on AᵀA.
double spectral_norm(const Matrix& a);

double dot(std::span<const double> a, std::span<const double> b);

}  // namespace peerlab
