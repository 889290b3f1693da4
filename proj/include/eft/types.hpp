#pragma once

#include <Eigen/Dense>
#include <complex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace eft {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

enum class Parity : int { Even = 0, Odd = 1 };

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DimensionError : Error {
  using Error::Error;
};
struct ClusterAmbiguity : Error {
  using Error::Error;
};
struct NoGapError : Error {
  using Error::Error;
};
struct ExhaustedError : Error {
  using Error::Error;
};
struct SectorViolation : Error {
  using Error::Error;
};
struct SingularAtOrigin : Error {
  using Error::Error;
};

/// Ambient truncation H_N of the super Hilbert space, with a parity label per
/// basis vector. Defaults to alternating parity so even and odd parts stay
/// balanced as N grows.
struct SuperSpace {
  int N = 0;
  std::vector<Parity> parity;
  bool real_form = false;

  SuperSpace() = default;
  explicit SuperSpace(int n, bool real = false) : N(n), real_form(real) {
    parity.resize(n);
    for (int i = 0; i < n; ++i)
      parity[i] = (i % 2 == 0) ? Parity::Even : Parity::Odd;
  }

  int even_dim() const {
    int c = 0;
    for (auto p : parity)
      if (p == Parity::Even) ++c;
    return c;
  }
  int odd_dim() const { return N - even_dim(); }
};

/// diag(+1 on even, -1 on odd) for an arbitrary parity vector.
inline Matrix grading_involution(const std::vector<Parity>& parity) {
  Matrix eps = Matrix::Zero(parity.size(), parity.size());
  for (std::size_t i = 0; i < parity.size(); ++i)
    eps(i, i) = (parity[i] == Parity::Even) ? 1.0 : -1.0;
  return eps;
}

inline Matrix grading_involution(const SuperSpace& space) {
  return grading_involution(space.parity);
}

/// Columns spanning a graded subspace of H_N. Every column is supported in a
/// single parity block of the ambient space; column_parity records which.
struct GradedFrame {
  Matrix columns;                     // N x r
  std::vector<Parity> column_parity;  // length r

  GradedFrame() = default;
  GradedFrame(Matrix cols, std::vector<Parity> par)
      : columns(std::move(cols)), column_parity(std::move(par)) {}

  int ambient_dim() const { return static_cast<int>(columns.rows()); }
  int rank() const { return static_cast<int>(columns.cols()); }
  int even_rank() const {
    int c = 0;
    for (auto p : column_parity)
      if (p == Parity::Even) ++c;
    return c;
  }
  int odd_rank() const { return rank() - even_rank(); }
  int superdimension() const { return even_rank() - odd_rank(); }

  Matrix fiber_grading() const { return grading_involution(column_parity); }
};

/// Matrix of an odd endomorphism in the coordinates of a graded frame.
/// Oddness means anti-commuting with the frame's grading involution.
struct OddOperator {
  Matrix matrix;                      // r x r
  std::vector<Parity> column_parity;  // grading of the frame it acts on

  OddOperator() = default;
  OddOperator(Matrix m, std::vector<Parity> par)
      : matrix(std::move(m)), column_parity(std::move(par)) {}

  int rank() const { return static_cast<int>(matrix.rows()); }
};

inline double oddness_defect(const Matrix& m, const Matrix& eps) {
  if (m.rows() == 0) return 0.0;
  return (eps * m + m * eps).cwiseAbs().maxCoeff();
}

inline double evenness_defect(const Matrix& m, const Matrix& eps) {
  if (m.rows() == 0) return 0.0;
  return (eps * m - m * eps).cwiseAbs().maxCoeff();
}

inline bool is_odd(const OddOperator& d, double tol = 1e-10) {
  return oddness_defect(d.matrix, grading_involution(d.column_parity)) <= tol;
}

/// One sampled element of a super semigroup: even part A(t), odd part B(t).
struct SuperSemigroupElement {
  double t = 0.0;
  Matrix A;
  Matrix B;
};

/// Line item of a validation report.
struct ReportItem {
  std::string name;
  bool pass = true;
  double residual = 0.0;
  double tol = 0.0;
  std::string detail;
};

struct Report {
  std::vector<ReportItem> items;

  bool pass() const {
    for (const auto& it : items)
      if (!it.pass) return false;
    return true;
  }
  void add(std::string name, bool ok, double residual, double tol,
           std::string detail = {}) {
    items.push_back(
        {std::move(name), ok, residual, tol, std::move(detail)});
  }
  void merge(const Report& other, const std::string& prefix = {}) {
    for (auto it : other.items) {
      if (!prefix.empty()) it.name = prefix + it.name;
      items.push_back(std::move(it));
    }
  }
};

namespace detail {
inline std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}
} // namespace detail

inline std::string to_string(const Report& r) {
  std::ostringstream os;
  for (const auto& it : r.items) {
    os << (it.pass ? "[ok]   " : "[FAIL] ") << it.name
       << "  residual=" << detail::fmt_double(it.residual)
       << "  tol=" << detail::fmt_double(it.tol);
    if (!it.detail.empty()) os << "  " << it.detail;
    os << '\n';
  }
  return os.str();
}

} // namespace eft
