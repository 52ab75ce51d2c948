// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "lhsynth/numkit/matrix.hpp"

#include <algorithm>
#include <cmath>

#include "lhsynth/common/error.hpp"
#include "lhsynth/numkit/kernels.hpp"

namespace lhsynth::numkit {

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  Matrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw ContractViolation("Matrix::from_rows: ragged rows");
    std::copy(row.begin(), row.end(), m.row(i++).begin());
  }
  return m;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Matrix::resize(std::size_t rows, std::size_t cols) {
  rows_ = rows;
  cols_ = cols;
  data_.resize(rows * cols);
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Matrix::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) t(c, r) = m(r, c);
  }
  return t;
}

void matmul_into(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  if (a.cols() != b.rows()) {
    throw ContractViolation("matmul: inner dimensions disagree (" + a.shape_string() + " * " +
                            b.shape_string() + ")");
  }
  if (c.rows() != a.rows() || c.cols() != b.cols()) {
    if (accumulate) {
      throw ContractViolation("matmul: output is " + c.shape_string() + ", expected " +
                              std::to_string(a.rows()) + "x" + std::to_string(b.cols()));
    }
    c.resize(a.rows(), b.cols());
  }
  GemmArgs<double> g;
  g.m = a.rows();
  g.n = b.cols();
  g.k = a.cols();
  g.a = a.data();
  g.a_row_stride = a.cols();
  g.a_col_stride = 1;
  g.b = b.data();
  g.ldb = b.cols();
  g.c = c.data();
  g.ldc = c.cols();
  g.accumulate = accumulate;
  kernels().gemm_f64(g);
}

void matmul_tn_into(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  if (a.rows() != b.rows()) {
    throw ContractViolation("matmul_tn: inner dimensions disagree (" + a.shape_string() +
                            "^T * " + b.shape_string() + ")");
  }
  if (c.rows() != a.cols() || c.cols() != b.cols()) {
    if (accumulate) {
      throw ContractViolation("matmul_tn: output is " + c.shape_string() + ", expected " +
                              std::to_string(a.cols()) + "x" + std::to_string(b.cols()));
    }
    c.resize(a.cols(), b.cols());
  }
  GemmArgs<double> g;
  g.m = a.cols();
  g.n = b.cols();
  g.k = a.rows();
  g.a = a.data();
  g.a_row_stride = 1;
  g.a_col_stride = a.cols();
  g.b = b.data();
  g.ldb = b.cols();
  g.c = c.data();
  g.ldc = c.cols();
  g.accumulate = accumulate;
  kernels().gemm_f64(g);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix c;
  matmul_into(a, b, c, false);
  return c;
}

}  // namespace lhsynth::numkit
