#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace eft {

/// Exact rational scalar used throughout the subdivision combinatorics.
using Rat = boost::multiprecision::cpp_rational;

/// Small dense matrix over Rat. Row-major storage; sizes here never exceed
/// a handful of rows, so naive algorithms are fine and stay exact.
class RatMat {
public:
  RatMat() = default;
  RatMat(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), a_(rows * cols, Rat(0)) {}

  static RatMat identity(std::size_t n) {
    RatMat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  Rat& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  const Rat& operator()(std::size_t i, std::size_t j) const {
    return a_[i * cols_ + j];
  }

  bool operator==(const RatMat& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && a_ == o.a_;
  }

  RatMat operator*(const RatMat& o) const {
    if (cols_ != o.rows_) throw std::invalid_argument("RatMat: shape mismatch");
    RatMat r(rows_, o.cols_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t k = 0; k < cols_; ++k) {
        const Rat& aik = (*this)(i, k);
        if (aik == 0) continue;
        for (std::size_t j = 0; j < o.cols_; ++j) r(i, j) += aik * o(k, j);
      }
    return r;
  }

  std::vector<Rat> apply(const std::vector<Rat>& x) const {
    if (x.size() != cols_) throw std::invalid_argument("RatMat: vec mismatch");
    std::vector<Rat> y(rows_, Rat(0));
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) y[i] += (*this)(i, j) * x[j];
    return y;
  }

  /// Determinant by Gaussian elimination with exact pivoting.
  Rat determinant() const {
    if (rows_ != cols_) throw std::invalid_argument("RatMat: not square");
    RatMat m = *this;
    Rat det(1);
    for (std::size_t c = 0; c < cols_; ++c) {
      std::size_t piv = c;
      while (piv < rows_ && m(piv, c) == 0) ++piv;
      if (piv == rows_) return Rat(0);
      if (piv != c) {
        for (std::size_t j = 0; j < cols_; ++j) std::swap(m(piv, j), m(c, j));
        det = -det;
      }
      det *= m(c, c);
      const Rat inv = Rat(1) / m(c, c);
      for (std::size_t i = c + 1; i < rows_; ++i) {
        if (m(i, c) == 0) continue;
        const Rat f = m(i, c) * inv;
        for (std::size_t j = c; j < cols_; ++j) m(i, j) -= f * m(c, j);
      }
    }
    return det;
  }

  /// Exact inverse via Gauss-Jordan. Throws on singular input.
  RatMat inverse() const {
    if (rows_ != cols_) throw std::invalid_argument("RatMat: not square");
    RatMat m = *this;
    RatMat inv = identity(rows_);
    for (std::size_t c = 0; c < cols_; ++c) {
      std::size_t piv = c;
      while (piv < rows_ && m(piv, c) == 0) ++piv;
      if (piv == rows_) throw std::domain_error("RatMat: singular matrix");
      if (piv != c)
        for (std::size_t j = 0; j < cols_; ++j) {
          std::swap(m(piv, j), m(c, j));
          std::swap(inv(piv, j), inv(c, j));
        }
      const Rat f = Rat(1) / m(c, c);
      for (std::size_t j = 0; j < cols_; ++j) {
        m(c, j) *= f;
        inv(c, j) *= f;
      }
      for (std::size_t i = 0; i < rows_; ++i) {
        if (i == c || m(i, c) == 0) continue;
        const Rat g = m(i, c);
        for (std::size_t j = 0; j < cols_; ++j) {
          m(i, j) -= g * m(c, j);
          inv(i, j) -= g * inv(c, j);
        }
      }
    }
    return inv;
  }

private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<Rat> a_;
};

inline double to_double(const Rat& r) { return r.convert_to<double>(); }

/// "num/den" form used by the CSV emitters ("3" when the denominator is 1).
inline std::string rat_to_string(const Rat& r) {
  std::ostringstream os;
  os << numerator(r);
  if (denominator(r) != 1) os << '/' << denominator(r);
  return os.str();
}

} // namespace eft
