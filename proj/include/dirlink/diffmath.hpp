#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "dirlink/graph.hpp"
#include "dirlink/rng.hpp"

namespace dirlink {

template <typename T>
struct BasicMatrixView {
  T* data{nullptr};
  std::size_t rows{0};
  std::size_t cols{0};

  T& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  [[nodiscard]] std::span<T> row(std::size_t r) const { return {data + r * cols, cols}; }
  [[nodiscard]] std::size_t size() const { return rows * cols; }

  operator BasicMatrixView<const T>() const { return {data, rows, cols}; }  // NOLINT
};

using MatrixView = BasicMatrixView<double>;
using ConstMatrixView = BasicMatrixView<const double>;

/// Row-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix from_rows(const std::vector<std::vector<double>>& rows);

  [[nodiscard]] std::size_t rows() const { return rows_; }
  [[nodiscard]] std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  [[nodiscard]] std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  [[nodiscard]] std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  [[nodiscard]] std::span<double> data() { return data_; }
  [[nodiscard]] std::span<const double> data() const { return data_; }

  [[nodiscard]] MatrixView view() { return {data_.data(), rows_, cols_}; }
  [[nodiscard]] ConstMatrixView view() const { return {data_.data(), rows_, cols_}; }
  operator ConstMatrixView() const { return view(); }  // NOLINT

  [[nodiscard]] bool all_finite() const;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_{0};
  std::size_t cols_{0};
  std::vector<double> data_;
};

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// CSR sparse matrix; entries are kept sorted by (row, col) without duplicates.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  /// Throws InputError on duplicate or out-of-range coordinates or non-finite values.
  SparseMatrix(std::size_t rows, std::size_t cols, std::vector<Triplet> entries);

  /// Adjacency matrix with A(u, v) = 1 for every edge (u, v).
  static SparseMatrix adjacency(const DirectedGraph& g);
  static SparseMatrix identity(std::size_t n);

  [[nodiscard]] std::size_t rows() const { return rows_; }
  [[nodiscard]] std::size_t cols() const { return cols_; }
  [[nodiscard]] std::size_t nnz() const { return values_.size(); }

  [[nodiscard]] std::span<const std::size_t> row_cols(std::size_t r) const {
    return {col_idx_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
  }
  [[nodiscard]] std::span<const double> row_values(std::size_t r) const {
    return {values_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
  }

  [[nodiscard]] std::vector<Triplet> entries() const;
  [[nodiscard]] SparseMatrix transpose() const;
  [[nodiscard]] DenseMatrix to_dense() const;

 private:
  std::size_t rows_{0};
  std::size_t cols_{0};
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> col_idx_;
  std::vector<double> values_;
};

/// a * b. Throws InputError on shape mismatch.
DenseMatrix spmm(const SparseMatrix& a, ConstMatrixView b);

/// a * b for dense operands.
DenseMatrix matmul(ConstMatrixView a, ConstMatrixView b);
/// a^T * b.
DenseMatrix matmul_tn(ConstMatrixView a, ConstMatrixView b);
/// a * b^T.
DenseMatrix matmul_nt(ConstMatrixView a, ConstMatrixView b);

/// D_out^-1 * A: every row divided by its sum. Throws on an empty or zero row.
SparseMatrix out_degree_normalize(const SparseMatrix& adj_with_loops);

/// Logistic function, kept strictly inside (0, 1) where exp under- or overflows.
inline double sigmoid(double x) {
  constexpr double lo = std::numeric_limits<double>::denorm_min();
  constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
  if (x >= 0.0) return std::min(1.0 / (1.0 + std::exp(-x)), hi);
  const double e = std::exp(x);
  return std::max(e / (1.0 + e), lo);
}

/// log(1 + e^x) without overflow.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

struct Segment {
  std::string name;
  std::size_t offset{0};
  std::size_t rows{0};
  std::size_t cols{0};

  [[nodiscard]] std::size_t size() const { return rows * cols; }
};

/*
 * All trainable parameters as one flat vector, partitioned into named
 * matrix-shaped segments, with a gradient buffer of the same length.
 */
class ParameterVector {
 public:
  /// Appends a zero-initialised segment; returns its index.
  std::size_t add(std::string name, std::size_t rows, std::size_t cols);

  [[nodiscard]] std::size_t size() const { return values_.size(); }
  [[nodiscard]] const std::vector<Segment>& segments() const { return segments_; }
  [[nodiscard]] const Segment& segment(std::size_t index) const { return segments_.at(index); }
  [[nodiscard]] std::size_t find(const std::string& name) const;
  [[nodiscard]] bool contains(const std::string& name) const;

  [[nodiscard]] std::span<double> values() { return values_; }
  [[nodiscard]] std::span<const double> values() const { return values_; }
  [[nodiscard]] std::span<double> grads() { return grads_; }
  [[nodiscard]] std::span<const double> grads() const { return grads_; }

  [[nodiscard]] MatrixView view(std::size_t index);
  [[nodiscard]] ConstMatrixView view(std::size_t index) const;
  /// View of a segment inside an arbitrary buffer of length size().
  [[nodiscard]] MatrixView view_in(std::span<double> buffer, std::size_t index) const;

  void zero_grad();

 private:
  std::vector<Segment> segments_;
  std::vector<double> values_;
  std::vector<double> grads_;
};

struct FiniteDiffOptions {
  double eps{1e-5};
  double tol{1e-4};
  std::size_t coordinates{200};  // 0 = every coordinate
  // Denominator floor for the relative error. Central differences on an O(1)
  // loss carry ~1e-11 of rounding noise at eps = 1e-5, so smaller gradient
  // entries are compared on an absolute scale of tol * scale_floor.
  double scale_floor{1e-6};
};

struct FiniteDiffReport {
  bool passed{false};
  bool finite{true};
  double max_rel_error{0.0};
  std::size_t worst_index{0};
  double worst_analytic{0.0};
  double worst_numeric{0.0};
  std::size_t checked{0};
};

/*
 * Central differences (f(θ + eps e_i) - f(θ - eps e_i)) / (2 eps) on a random
 * subset of coordinates, compared with `analytic` by
 * |a - n| / max(|a|, |n|, scale_floor).
 */
FiniteDiffReport finite_diff_check(const std::function<double(std::span<const double>)>& loss,
                                   std::span<const double> theta, std::span<const double> analytic,
                                   const FiniteDiffOptions& opts, Rng& rng);

}  // namespace dirlink
