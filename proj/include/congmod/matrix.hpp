#pragma once

#include "congmod/rational.hpp"

#include <cassert>
#include <cstddef>
#include <initializer_list>
#include <vector>

namespace congmod {

// Dense matrix over the rationals, row-major. Vectors are rows throughout the
// library: a lattice is the O-span of the rows of its basis matrix, and linear
// maps act on coordinate rows by right multiplication.
class QMat {
public:
  QMat() : rows_(0), cols_(0) {}
  QMat(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, Rat(0)) {}

  static QMat identity(std::size_t n) {
    QMat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
    return m;
  }

  static QMat from_rows(std::initializer_list<std::initializer_list<Rat>> rows) {
    QMat m(rows.size(), rows.size() ? rows.begin()->size() : 0);
    std::size_t i = 0;
    for (const auto& row : rows) {
      assert(row.size() == m.cols_);
      std::size_t j = 0;
      for (const auto& x : row) m(i, j++) = x;
      ++i;
    }
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  Rat& operator()(std::size_t i, std::size_t j) {
    assert(i < rows_ && j < cols_);
    return data_[i * cols_ + j];
  }
  const Rat& operator()(std::size_t i, std::size_t j) const {
    assert(i < rows_ && j < cols_);
    return data_[i * cols_ + j];
  }

  std::vector<Rat> row(std::size_t i) const {
    std::vector<Rat> r(cols_);
    for (std::size_t j = 0; j < cols_; ++j) r[j] = (*this)(i, j);
    return r;
  }

  void set_row(std::size_t i, const std::vector<Rat>& v) {
    assert(v.size() == cols_);
    for (std::size_t j = 0; j < cols_; ++j) (*this)(i, j) = v[j];
  }

  QMat transpose() const {
    QMat t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  QMat operator*(const QMat& o) const {
    assert(cols_ == o.rows_);
    QMat r(rows_, o.cols_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t k = 0; k < cols_; ++k) {
        const Rat& a = (*this)(i, k);
        if (a == 0) continue;
        for (std::size_t j = 0; j < o.cols_; ++j) {
          if (o(k, j) == 0) continue;
          r(i, j) += a * o(k, j);
        }
      }
    return r;
  }

  QMat operator+(const QMat& o) const {
    assert(rows_ == o.rows_ && cols_ == o.cols_);
    QMat r(rows_, cols_);
    for (std::size_t i = 0; i < data_.size(); ++i) r.data_[i] = data_[i] + o.data_[i];
    return r;
  }

  QMat operator-(const QMat& o) const {
    assert(rows_ == o.rows_ && cols_ == o.cols_);
    QMat r(rows_, cols_);
    for (std::size_t i = 0; i < data_.size(); ++i) r.data_[i] = data_[i] - o.data_[i];
    return r;
  }

  QMat operator*(const Rat& c) const {
    QMat r(rows_, cols_);
    for (std::size_t i = 0; i < data_.size(); ++i) r.data_[i] = data_[i] * c;
    return r;
  }

  friend bool operator==(const QMat& a, const QMat& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

  bool is_zero() const {
    for (const Rat& x : data_) {
      if (x != 0) return false;
    }
    return true;
  }

  // Vertical stack [this; below].
  QMat stack(const QMat& below) const {
    assert(cols_ == below.cols_ || rows_ == 0 || below.rows_ == 0);
    std::size_t c = rows_ ? cols_ : below.cols_;
    QMat r(rows_ + below.rows_, c);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < c; ++j) r(i, j) = (*this)(i, j);
    for (std::size_t i = 0; i < below.rows_; ++i)
      for (std::size_t j = 0; j < c; ++j) r(rows_ + i, j) = below(i, j);
    return r;
  }

  // Horizontal concatenation [this | right].
  QMat concat(const QMat& right) const {
    assert(rows_ == right.rows_ || cols_ == 0 || right.cols_ == 0);
    std::size_t rr = cols_ ? rows_ : right.rows_;
    QMat r(rr, cols_ + right.cols_);
    for (std::size_t i = 0; i < rr; ++i) {
      for (std::size_t j = 0; j < cols_; ++j) r(i, j) = (*this)(i, j);
      for (std::size_t j = 0; j < right.cols_; ++j) r(i, cols_ + j) = right(i, j);
    }
    return r;
  }

  QMat sub_rows(std::size_t begin, std::size_t end) const {
    assert(begin <= end && end <= rows_);
    QMat r(end - begin, cols_);
    for (std::size_t i = begin; i < end; ++i)
      for (std::size_t j = 0; j < cols_; ++j) r(i - begin, j) = (*this)(i, j);
    return r;
  }

private:
  std::size_t rows_, cols_;
  std::vector<Rat> data_;
};

inline std::vector<Rat> row_times_mat(const std::vector<Rat>& v, const QMat& m) {
  assert(v.size() == m.rows());
  std::vector<Rat> r(m.cols(), Rat(0));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] == 0) continue;
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (m(i, j) == 0) continue;
      r[j] += v[i] * m(i, j);
    }
  }
  return r;
}

inline Rat dot(const std::vector<Rat>& a, const std::vector<Rat>& b) {
  assert(a.size() == b.size());
  Rat s(0);
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace congmod
