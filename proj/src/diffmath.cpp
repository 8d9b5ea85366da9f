#include "dirlink/diffmath.hpp"

#include <algorithm>
#include <numeric>

namespace dirlink {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) throw InputError("DenseMatrix: data length does not match shape");
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  DenseMatrix m(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw InputError("DenseMatrix::from_rows: ragged rows");
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  }
  return m;
}

bool DenseMatrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols, std::vector<Triplet> entries)
    : rows_(rows), cols_(cols) {
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  row_ptr_.assign(rows + 1, 0);
  col_idx_.reserve(entries.size());
  values_.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& t = entries[i];
    if (t.row >= rows || t.col >= cols) throw InputError("SparseMatrix: entry out of range");
    if (!std::isfinite(t.value)) throw InputError("SparseMatrix: non-finite value");
    if (i > 0 && entries[i - 1].row == t.row && entries[i - 1].col == t.col) {
      throw InputError("SparseMatrix: duplicate entry (" + std::to_string(t.row) + "," +
                       std::to_string(t.col) + ")");
    }
    ++row_ptr_[t.row + 1];
    col_idx_.push_back(t.col);
    values_.push_back(t.value);
  }
  std::partial_sum(row_ptr_.begin(), row_ptr_.end(), row_ptr_.begin());
}

SparseMatrix SparseMatrix::adjacency(const DirectedGraph& g) {
  std::vector<Triplet> t;
  t.reserve(g.num_edges());
  for (const auto& e : g.edges()) t.push_back({e.src, e.dst, 1.0});
  return {g.num_nodes(), g.num_nodes(), std::move(t)};
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < n; ++i) t.push_back({i, i, 1.0});
  return {n, n, std::move(t)};
}

std::vector<Triplet> SparseMatrix::entries() const {
  std::vector<Triplet> out;
  out.reserve(nnz());
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) out.push_back({r, col_idx_[k], values_[k]});
  }
  return out;
}

SparseMatrix SparseMatrix::transpose() const {
  auto t = entries();
  for (auto& e : t) std::swap(e.row, e.col);
  return {cols_, rows_, std::move(t)};
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix d(rows_, cols_);
  for (const auto& t : entries()) d(t.row, t.col) = t.value;
  return d;
}

DenseMatrix spmm(const SparseMatrix& a, ConstMatrixView b) {
  if (a.cols() != b.rows) {
    throw InputError("spmm: shape mismatch " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " * " + std::to_string(b.rows) + "x" + std::to_string(b.cols));
  }
  DenseMatrix out(a.rows(), b.cols);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto dst = out.row(r);
    const auto cols = a.row_cols(r);
    const auto vals = a.row_values(r);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const double w = vals[k];
      const double* src = b.data + cols[k] * b.cols;
      for (std::size_t c = 0; c < b.cols; ++c) dst[c] += w * src[c];
    }
  }
  return out;
}

DenseMatrix matmul(ConstMatrixView a, ConstMatrixView b) {
  if (a.cols != b.rows) throw InputError("matmul: shape mismatch");
  DenseMatrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    auto dst = out.row(i);
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double w = a(i, k);
      if (w == 0.0) continue;
      const double* src = b.data + k * b.cols;
      for (std::size_t j = 0; j < b.cols; ++j) dst[j] += w * src[j];
    }
  }
  return out;
}

DenseMatrix matmul_tn(ConstMatrixView a, ConstMatrixView b) {
  if (a.rows != b.rows) throw InputError("matmul_tn: shape mismatch");
  DenseMatrix out(a.cols, b.cols);
  for (std::size_t k = 0; k < a.rows; ++k) {
    const double* brow = b.data + k * b.cols;
    for (std::size_t i = 0; i < a.cols; ++i) {
      const double w = a(k, i);
      if (w == 0.0) continue;
      auto dst = out.row(i);
      for (std::size_t j = 0; j < b.cols; ++j) dst[j] += w * brow[j];
    }
  }
  return out;
}

DenseMatrix matmul_nt(ConstMatrixView a, ConstMatrixView b) {
  if (a.cols != b.cols) throw InputError("matmul_nt: shape mismatch");
  DenseMatrix out(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = a.data + i * a.cols;
    for (std::size_t j = 0; j < b.rows; ++j) {
      const double* brow = b.data + j * b.cols;
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) s += arow[k] * brow[k];
      out(i, j) = s;
    }
  }
  return out;
}

SparseMatrix out_degree_normalize(const SparseMatrix& adj) {
  auto t = adj.entries();
  std::vector<double> row_sum(adj.rows(), 0.0);
  for (const auto& e : t) row_sum[e.row] += e.value;
  for (std::size_t r = 0; r < adj.rows(); ++r) {
    if (row_sum[r] == 0.0) {
      throw InputError("out_degree_normalize: row " + std::to_string(r) + " has zero out-degree");
    }
  }
  for (auto& e : t) e.value /= row_sum[e.row];
  return {adj.rows(), adj.cols(), std::move(t)};
}

std::size_t ParameterVector::add(std::string name, std::size_t rows, std::size_t cols) {
  if (contains(name)) throw InputError("ParameterVector: duplicate segment " + name);
  segments_.push_back({std::move(name), values_.size(), rows, cols});
  values_.resize(values_.size() + rows * cols, 0.0);
  grads_.resize(values_.size(), 0.0);
  return segments_.size() - 1;
}

std::size_t ParameterVector::find(const std::string& name) const {
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    if (segments_[i].name == name) return i;
  }
  throw InputError("ParameterVector: no segment named " + name);
}

bool ParameterVector::contains(const std::string& name) const {
  return std::any_of(segments_.begin(), segments_.end(), [&](const Segment& s) { return s.name == name; });
}

MatrixView ParameterVector::view(std::size_t index) { return view_in(values_, index); }

ConstMatrixView ParameterVector::view(std::size_t index) const {
  const auto& s = segments_.at(index);
  return {values_.data() + s.offset, s.rows, s.cols};
}

MatrixView ParameterVector::view_in(std::span<double> buffer, std::size_t index) const {
  if (buffer.size() != values_.size()) throw InputError("ParameterVector::view_in: buffer length mismatch");
  const auto& s = segments_.at(index);
  return {buffer.data() + s.offset, s.rows, s.cols};
}

void ParameterVector::zero_grad() { std::fill(grads_.begin(), grads_.end(), 0.0); }

FiniteDiffReport finite_diff_check(const std::function<double(std::span<const double>)>& loss,
                                   std::span<const double> theta, std::span<const double> analytic,
                                   const FiniteDiffOptions& opts, Rng& rng) {
  if (theta.size() != analytic.size()) throw InputError("finite_diff_check: gradient length mismatch");
  FiniteDiffReport report;

  std::vector<std::size_t> coords(theta.size());
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  if (opts.coordinates != 0 && opts.coordinates < coords.size()) {
    coords = rng.sample(std::span<const std::size_t>(coords), opts.coordinates);
  }

  std::vector<double> probe(theta.begin(), theta.end());
  if (!std::isfinite(loss(probe))) {
    report.finite = false;
    return report;
  }
  for (std::size_t i : coords) {
    const double orig = probe[i];
    probe[i] = orig + opts.eps;
    const double up = loss(probe);
    probe[i] = orig - opts.eps;
    const double down = loss(probe);
    probe[i] = orig;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      report.finite = false;
      return report;
    }
    const double numeric = (up - down) / (2.0 * opts.eps);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), opts.scale_floor});
    const double rel = std::abs(analytic[i] - numeric) / denom;
    if (report.checked == 0 || rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_index = i;
      report.worst_analytic = analytic[i];
      report.worst_numeric = numeric;
    }
    ++report.checked;
  }
  report.passed = report.max_rel_error <= opts.tol;
  return report;
}

}  // namespace dirlink
