#include "actsel/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "actsel/errors.hpp"

namespace actsel {

namespace {

std::string shape_of(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

constexpr std::size_t kRowBlock = 4;
constexpr std::size_t kDepthBlock = 128;

// c(i, :) += Σ_k a_at(i, k) * b_row(k)[:], with k visited in increasing order
// for every output element. Rows of c are processed four at a time and the
// depth is tiled so the active slab of b stays in cache.
// skip_zero drops terms whose a values are all exactly zero. With finite b
// every skipped term is ±0 and c never holds -0, so the sums are unchanged.
template <typename AAt, typename BRow>
void accumulate_product(std::size_t m, std::size_t depth, std::size_t n, AAt a_at, BRow b_row,
                        Matrix& c, bool skip_zero) {
  for (std::size_t k0 = 0; k0 < depth; k0 += kDepthBlock) {
    const std::size_t k1 = std::min(depth, k0 + kDepthBlock);
    std::size_t i = 0;
    for (; i + kRowBlock <= m; i += kRowBlock) {
      double* __restrict c0 = c.row(i).data();
      double* __restrict c1 = c.row(i + 1).data();
      double* __restrict c2 = c.row(i + 2).data();
      double* __restrict c3 = c.row(i + 3).data();
      for (std::size_t k = k0; k < k1; ++k) {
        const double a0 = a_at(i, k);
        const double a1 = a_at(i + 1, k);
        const double a2 = a_at(i + 2, k);
        const double a3 = a_at(i + 3, k);
        if (skip_zero && a0 == 0.0 && a1 == 0.0 && a2 == 0.0 && a3 == 0.0) continue;
        const double* __restrict b = b_row(k);
        for (std::size_t j = 0; j < n; ++j) {
          const double bj = b[j];
          c0[j] += a0 * bj;
          c1[j] += a1 * bj;
          c2[j] += a2 * bj;
          c3[j] += a3 * bj;
        }
      }
    }
    for (; i < m; ++i) {
      double* __restrict ci = c.row(i).data();
      for (std::size_t k = k0; k < k1; ++k) {
        const double ai = a_at(i, k);
        if (skip_zero && ai == 0.0) continue;
        const double* __restrict b = b_row(k);
        for (std::size_t j = 0; j < n; ++j) ci[j] += ai * b[j];
      }
    }
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("matrix data length " + std::to_string(data_.size()) + " does not match " +
                     std::to_string(rows_) + "x" + std::to_string(cols_));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() == 0 ? 0 : rows.begin()->size()) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + shape_of(a) + " times " + shape_of(b));
  }
  Matrix c(a.rows(), b.cols());
  const std::size_t lda = a.cols();
  const double* ad = a.data();
  accumulate_product(
      a.rows(), a.cols(), b.cols(), [ad, lda](std::size_t i, std::size_t k) { return ad[i * lda + k]; },
      [&b](std::size_t k) { return b.row(k).data(); }, c, all_finite(b.values()));
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: " + shape_of(a) + " times transpose of " + shape_of(b));
  }
  // Few rows: direct dot products beat materialising bᵀ. Same summation order.
  if (a.rows() < kRowBlock) {
    Matrix c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
      const auto ar = a.row(i);
      for (std::size_t j = 0; j < b.rows(); ++j) {
        const auto br = b.row(j);
        double acc = 0.0;
        for (std::size_t k = 0; k < ar.size(); ++k) acc += ar[k] * br[k];
        c(i, j) = acc;
      }
    }
    return c;
  }
  return matmul(a, transpose(b));
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: transpose of " + shape_of(a) + " times " + shape_of(b));
  }
  Matrix c(a.cols(), b.cols());
  const std::size_t lda = a.cols();
  const double* ad = a.data();
  accumulate_product(
      a.cols(), a.rows(), b.cols(), [ad, lda](std::size_t i, std::size_t k) { return ad[k * lda + i]; },
      [&b](std::size_t k) { return b.row(k).data(); }, c, all_finite(b.values()));
  return c;
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  constexpr std::size_t kTile = 32;
  for (std::size_t r0 = 0; r0 < m.rows(); r0 += kTile) {
    for (std::size_t c0 = 0; c0 < m.cols(); c0 += kTile) {
      const std::size_t r1 = std::min(m.rows(), r0 + kTile);
      const std::size_t c1 = std::min(m.cols(), c0 + kTile);
      for (std::size_t c = c0; c < c1; ++c)
        for (std::size_t r = r0; r < r1; ++r) t(c, r) = m(r, c);
    }
  }
  return t;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix sigmoid(const Matrix& x) {
  Matrix y(x.rows(), x.cols());
  const auto in = x.values();
  auto out = y.values();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = sigmoid(in[i]);
  return y;
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> indices) {
  Matrix out(indices.size(), m.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= m.rows()) throw InputError("row index out of range");
    std::copy_n(m.row(indices[i]).data(), m.cols(), out.row(i).data());
  }
  return out;
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace actsel
