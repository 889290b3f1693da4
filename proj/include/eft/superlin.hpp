#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <unsupported/Eigen/MatrixFunctions>

#include "eft/types.hpp"

namespace eft::superlin {

struct GridTooCoarse : Error {
  using Error::Error;
};

/// exp(M) by eigendecomposition when the eigenvector basis is well
/// conditioned, otherwise by Pade scaling-and-squaring.
inline Matrix expm(const Matrix& m) {
  const int n = static_cast<int>(m.rows());
  if (n == 0) return m;
  Eigen::ComplexEigenSolver<Matrix> es(m);
  if (es.info() == Eigen::Success) {
    const Matrix& v = es.eigenvectors();
    Eigen::JacobiSVD<Matrix> svd(v);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    if (smin > 0 && smax / smin < 1e6) {
      Vector ev = es.eigenvalues();
      for (int i = 0; i < n; ++i) ev(i) = std::exp(ev(i));
      return v * ev.asDiagonal() * v.inverse();
    }
  }
  return m.exp();
}

namespace detail {
inline std::vector<int> parity_indices(const std::vector<Parity>& par,
                                       Parity which) {
  std::vector<int> idx;
  for (std::size_t i = 0; i < par.size(); ++i)
    if (par[i] == which) idx.push_back(static_cast<int>(i));
  return idx;
}

inline Matrix submatrix(const Matrix& m, const std::vector<int>& rows,
                        const std::vector<int>& cols) {
  Matrix r(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) r(i, j) = m(rows[i], cols[j]);
  return r;
}
} // namespace detail

/// exp(-t D^2) computed per parity block, so the result is even by
/// construction; B = A * D.
inline SuperSemigroupElement exp_semigroup(const OddOperator& d, double t) {
  if (!is_odd(d))
    throw Error("exp_semigroup: generator is not odd for the frame grading");
  const auto even = detail::parity_indices(d.column_parity, Parity::Even);
  const auto odd = detail::parity_indices(d.column_parity, Parity::Odd);
  const Matrix d2 = d.matrix * d.matrix;
  Matrix a = Matrix::Zero(d.rank(), d.rank());
  const Matrix ae = expm(-t * detail::submatrix(d2, even, even));
  const Matrix ao = expm(-t * detail::submatrix(d2, odd, odd));
  for (std::size_t i = 0; i < even.size(); ++i)
    for (std::size_t j = 0; j < even.size(); ++j) a(even[i], even[j]) = ae(i, j);
  for (std::size_t i = 0; i < odd.size(); ++i)
    for (std::size_t j = 0; j < odd.size(); ++j) a(odd[i], odd[j]) = ao(i, j);
  return {t, a, a * d.matrix};
}

/// Super Lie semigroup law on sampled elements:
/// (s,theta)(t,eta) = (s+t+theta*eta, theta+eta).
inline SuperSemigroupElement compose(const SuperSemigroupElement& g,
                                     const SuperSemigroupElement& h) {
  return {g.t + h.t, g.A * h.A, g.A * h.B};
}

struct AxiomOptions {
  /// With the Koszul sign the third relation reads A'(s+t) = -B(s)B(t),
  /// which is what the exponential model satisfies under naive matrix
  /// products. Setting this false checks the literal A'(s+t) = +B(s)B(t).
  bool koszul_sign = true;
  /// Cap on how many (s,t) pairs get checked; pairs are subsampled
  /// deterministically beyond that.
  std::size_t max_pairs = 400;
};

/// Verifies the three semigroup relations on a uniformly sampled family.
/// A' is taken by five-point central differences; throws GridTooCoarse when
/// the finite-difference error estimate alone exceeds tol.
inline Report check_semigroup_axioms(
    const std::vector<SuperSemigroupElement>& g, double tol,
    const AxiomOptions& opts = {}) {
  const std::size_t n = g.size();
  if (n < 7) throw GridTooCoarse("need at least 7 uniform samples");
  const double h = g[1].t - g[0].t;
  for (std::size_t i = 1; i < n; ++i)
    if (std::abs(g[i].t - g[i - 1].t - h) > 1e-12 * std::max(1.0, g[i].t))
      throw Error("check_semigroup_axioms: non-uniform t grid");

  // A'(t_i) by the five-point stencil, at unit or doubled stride.
  auto deriv4 = [&](std::size_t i, std::size_t stride) {
    const double hh = h * stride;
    return (-g[i + 2 * stride].A + 8.0 * g[i + stride].A -
            8.0 * g[i - stride].A + g[i - 2 * stride].A) /
           (12.0 * hh);
  };

  // Pairs (i, j): with t_i = (i+1) h the sum t_i + t_j sits at index
  // i + j + 1; keep room for the doubled stencil used by the error estimate.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t k = i + j + 1;
      if (k >= 4 && k + 4 < n) pairs.emplace_back(i, j);
    }
  if (pairs.empty()) throw GridTooCoarse("grid too short for s+t samples");
  std::size_t stride = std::max<std::size_t>(1, pairs.size() / opts.max_pairs);

  double r1 = 0, r2 = 0, r3 = 0, fd = 0;
  for (std::size_t idx = 0; idx < pairs.size(); idx += stride) {
    const auto [i, j] = pairs[idx];
    const std::size_t k = i + j + 1;
    r1 = std::max(r1, (g[k].A - g[i].A * g[j].A).cwiseAbs().maxCoeff());
    r2 = std::max(r2, (g[k].B - g[i].A * g[j].B).cwiseAbs().maxCoeff());
    const Matrix da = deriv4(k, 1);
    const Matrix bb =
        opts.koszul_sign ? Matrix(-g[i].B * g[j].B) : Matrix(g[i].B * g[j].B);
    r3 = std::max(r3, (da - bb).cwiseAbs().maxCoeff());
    // Richardson estimate of the stencil error from the doubled stride.
    fd = std::max(fd, (da - deriv4(k, 2)).cwiseAbs().maxCoeff() / 15.0);
  }
  if (fd > tol)
    throw GridTooCoarse("finite-difference error estimate " +
                        eft::detail::fmt_double(fd) + " exceeds tol");

  Report rep;
  rep.add("semigroup A(s+t)=A(s)A(t)", r1 <= tol, r1, tol);
  rep.add("semigroup B(s+t)=A(s)B(t)", r2 <= tol, r2, tol);
  rep.add(opts.koszul_sign ? "semigroup A'(s+t)=-B(s)B(t)"
                           : "semigroup A'(s+t)=B(s)B(t)",
          r3 <= tol, r3, tol);
  return rep;
}

/// Samples the exponential model on a uniform grid t = h, 2h, ..., n*h.
inline std::vector<SuperSemigroupElement> sample_exponential(
    const OddOperator& d, double h, std::size_t n) {
  std::vector<SuperSemigroupElement> g;
  g.reserve(n);
  for (std::size_t i = 1; i <= n; ++i)
    g.push_back(exp_semigroup(d, h * static_cast<double>(i)));
  return g;
}

inline std::pair<Complex, Complex> trace_supertrace(
    const Matrix& m, const std::vector<Parity>& parity) {
  if (m.rows() != static_cast<long>(parity.size()))
    throw DimensionError("trace_supertrace: parity length mismatch");
  Complex tr = m.trace();
  Complex str = 0;
  for (long i = 0; i < m.rows(); ++i)
    str += (parity[i] == Parity::Even ? 1.0 : -1.0) * m(i, i);
  return {tr, str};
}

// ---------------------------------------------------------------------------
// Generalized eigenspaces via complex Schur + unitary reordering.

struct EigenCluster {
  Complex center;
  int multiplicity = 0;
  Matrix basis; // orthonormal, spans the invariant subspace
};

namespace detail {

/// Swap the adjacent diagonal entries (i, i+1) of upper-triangular t by a
/// unitary similarity, accumulating into u. Same scheme as LAPACK ztrexc.
inline void schur_swap(Matrix& t, Matrix& u, int i) {
  const Complex a = t(i, i), b = t(i, i + 1), d = t(i + 1, i + 1);
  if (std::abs(a - d) == 0.0) return; // equal eigenvalues: order immaterial
  // Eigenvector of [[a,b],[0,d]] for eigenvalue d.
  Complex v1 = b, v2 = d - a;
  const double nrm = std::sqrt(std::norm(v1) + std::norm(v2));
  v1 /= nrm;
  v2 /= nrm;
  Matrix q(2, 2);
  q << v1, -std::conj(v2), v2, std::conj(v1);
  t.block(i, 0, 2, t.cols()) = q.adjoint() * t.block(i, 0, 2, t.cols());
  t.block(0, i, t.rows(), 2) = t.block(0, i, t.rows(), 2) * q;
  u.block(0, i, u.rows(), 2) = u.block(0, i, u.rows(), 2) * q;
  t(i + 1, i) = 0.0;
}

/// Stable-partition the selected eigenvalues to the leading block.
inline void schur_move_selected_front(Matrix& t, Matrix& u,
                                      std::vector<char> selected) {
  const int n = static_cast<int>(t.rows());
  int target = 0;
  for (int i = 0; i < n; ++i) {
    if (!selected[i]) continue;
    for (int j = i; j > target; --j) {
      schur_swap(t, u, j - 1);
      std::swap(selected[j - 1], selected[j]);
    }
    ++target;
  }
}

inline std::vector<std::vector<int>> cluster_indices(
    const std::vector<Complex>& vals, double cluster_tol) {
  const int n = static_cast<int>(vals.size());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(vals[i] - vals[j]) <= cluster_tol)
        parent[find(i)] = find(j);
  std::vector<std::vector<int>> groups;
  std::vector<int> root_to_group(n, -1);
  for (int i = 0; i < n; ++i) {
    int r = find(i);
    if (root_to_group[r] < 0) {
      root_to_group[r] = static_cast<int>(groups.size());
      groups.emplace_back();
    }
    groups[root_to_group[r]].push_back(i);
  }
  return groups;
}

} // namespace detail

/// Clusters the spectrum of m within cluster_tol and returns an orthonormal
/// basis of each corresponding invariant subspace. Throws ClusterAmbiguity
/// when two clusters come closer than 2*cluster_tol.
inline std::vector<EigenCluster> generalized_eigenspaces(const Matrix& m,
                                                         double cluster_tol) {
  const int n = static_cast<int>(m.rows());
  std::vector<EigenCluster> out;
  if (n == 0) return out;
  Eigen::ComplexSchur<Matrix> schur(m, true);
  if (schur.info() != Eigen::Success)
    throw Error("generalized_eigenspaces: Schur decomposition failed");
  const Matrix t0 = schur.matrixT();
  const Matrix u0 = schur.matrixU();
  std::vector<Complex> vals(n);
  for (int i = 0; i < n; ++i) vals[i] = t0(i, i);

  auto groups = detail::cluster_indices(vals, cluster_tol);
  std::vector<Complex> centers;
  for (const auto& grp : groups) {
    Complex c = 0;
    for (int i : grp) c += vals[i];
    centers.push_back(c / static_cast<double>(grp.size()));
  }
  for (std::size_t a = 0; a < groups.size(); ++a)
    for (std::size_t b = a + 1; b < groups.size(); ++b) {
      double dmin = 1e300;
      for (int i : groups[a])
        for (int j : groups[b]) dmin = std::min(dmin, std::abs(vals[i] - vals[j]));
      if (dmin < 2 * cluster_tol)
        throw ClusterAmbiguity("eigenvalue clusters at distance " +
                               eft::detail::fmt_double(dmin) +
                               " < 2*cluster_tol; refine cluster_tol");
    }

  std::vector<std::size_t> order(groups.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double na = std::abs(centers[a]), nb = std::abs(centers[b]);
    if (na != nb) return na > nb;
    return std::arg(centers[a]) < std::arg(centers[b]);
  });

  for (std::size_t g : order) {
    Matrix t = t0, u = u0;
    std::vector<char> sel(n, 0);
    for (int i : groups[g]) sel[i] = 1;
    detail::schur_move_selected_front(t, u, sel);
    EigenCluster c;
    c.center = centers[g];
    c.multiplicity = static_cast<int>(groups[g].size());
    c.basis = u.leftCols(c.multiplicity);
    out.push_back(std::move(c));
  }
  return out;
}

/// Graded variant for an even matrix: runs per parity block so the returned
/// bases have pure-parity columns; clusters are shared across the blocks.
inline std::vector<std::pair<EigenCluster, std::vector<Parity>>>
graded_eigenspaces(const Matrix& m, const std::vector<Parity>& parity,
                   double cluster_tol) {
  const auto even = detail::parity_indices(parity, Parity::Even);
  const auto odd = detail::parity_indices(parity, Parity::Odd);
  const Matrix me = detail::submatrix(m, even, even);
  const Matrix mo = detail::submatrix(m, odd, odd);
  const int n = static_cast<int>(m.rows());

  // Cluster per block, then merge clusters across blocks by value.
  auto ce = me.rows() ? generalized_eigenspaces(me, cluster_tol)
                      : std::vector<EigenCluster>{};
  auto co = mo.rows() ? generalized_eigenspaces(mo, cluster_tol)
                      : std::vector<EigenCluster>{};

  std::vector<Complex> all;
  for (const auto& c : ce) all.push_back(c.center);
  for (const auto& c : co) all.push_back(c.center);
  auto groups = detail::cluster_indices(all, cluster_tol);

  std::vector<std::pair<EigenCluster, std::vector<Parity>>> out;
  for (const auto& grp : groups) {
    EigenCluster merged;
    std::vector<Parity> par;
    Complex ctr = 0;
    int mult = 0;
    std::vector<Matrix> cols;
    for (int gi : grp) {
      const bool is_even = gi < static_cast<int>(ce.size());
      const EigenCluster& c = is_even ? ce[gi] : co[gi - ce.size()];
      const auto& emb = is_even ? even : odd;
      Matrix lifted = Matrix::Zero(n, c.basis.cols());
      for (int r = 0; r < c.basis.rows(); ++r) lifted.row(emb[r]) = c.basis.row(r);
      cols.push_back(lifted);
      for (int k = 0; k < c.multiplicity; ++k)
        par.push_back(is_even ? Parity::Even : Parity::Odd);
      ctr += c.center * static_cast<double>(c.multiplicity);
      mult += c.multiplicity;
    }
    Matrix basis(n, mult);
    int at = 0;
    for (const auto& blk : cols) {
      basis.middleCols(at, blk.cols()) = blk;
      at += static_cast<int>(blk.cols());
    }
    merged.center = ctr / static_cast<double>(mult);
    merged.multiplicity = mult;
    merged.basis = std::move(basis);
    out.emplace_back(std::move(merged), std::move(par));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    const double na = std::abs(a.first.center), nb = std::abs(b.first.center);
    if (na != nb) return na > nb;
    return std::arg(a.first.center) < std::arg(b.first.center);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Pairing checks (adjointness and eigenblock structure).

struct PairingOptions {
  double cluster_tol = 1e-6;
};

/// Verifies L(Abar w, v) = L(w, A v) as Abar^T L = L A, then checks that L
/// pairs generalized eigenspaces only within matching eigenvalues: cross
/// blocks vanish, diagonal blocks are square and nonsingular.
/// Throws when the adjointness identity itself fails.
inline Report check_pairing(const Matrix& l, const Matrix& a,
                            const Matrix& abar, double tol,
                            const PairingOptions& opts = {}) {
  if (l.rows() != abar.rows() || l.cols() != a.rows())
    throw DimensionError("check_pairing: L must be dim(W) x dim(V)");
  const double scale =
      l.size() == 0 ? 1.0 : std::max(1.0, l.cwiseAbs().maxCoeff());
  const double adj = l.size() == 0
                         ? 0.0
                         : (abar.transpose() * l - l * a).cwiseAbs().maxCoeff();
  if (adj > tol * scale)
    throw Error("check_pairing: adjointness Abar^T L = L A fails, residual " +
                eft::detail::fmt_double(adj));
  Report rep;
  rep.add("pairing adjointness", true, adj, tol * scale);
  if (l.rows() == 0) return rep;

  auto cv = generalized_eigenspaces(a, opts.cluster_tol);
  auto cw = generalized_eigenspaces(abar, opts.cluster_tol);

  // Spectra must coincide cluster by cluster.
  bool spectra_ok = cv.size() == cw.size();
  double spectra_dist = 0;
  if (spectra_ok)
    for (std::size_t i = 0; i < cv.size(); ++i) {
      spectra_dist = std::max(spectra_dist, std::abs(cv[i].center - cw[i].center));
      if (cv[i].multiplicity != cw[i].multiplicity) spectra_ok = false;
    }
  rep.add("pairing spectra coincide", spectra_ok && spectra_dist <= opts.cluster_tol,
          spectra_dist, opts.cluster_tol);

  double cross = 0;
  double worst_cond = 1.0;
  for (std::size_t i = 0; i < cw.size(); ++i)
    for (std::size_t j = 0; j < cv.size(); ++j) {
      const Matrix blk = cw[i].basis.transpose() * l * cv[j].basis;
      const bool diag = spectra_ok && i == j;
      if (diag) {
        Eigen::JacobiSVD<Matrix> svd(blk);
        const double smin = svd.singularValues().minCoeff();
        const double smax = svd.singularValues().maxCoeff();
        worst_cond = std::max(worst_cond, smin > 0 ? smax / smin : 1e300);
      } else if (std::abs(cw[i].center - cv[j].center) > opts.cluster_tol) {
        cross = std::max(cross, blk.cwiseAbs().maxCoeff());
      }
    }
  rep.add("pairing cross blocks vanish", cross <= tol * scale, cross, tol * scale);
  rep.add("pairing diagonal blocks nonsingular", worst_cond < 1e12, worst_cond,
          1e12, "condition number");
  return rep;
}

/// max - min of str(exp(-t D^2)) over the grid; McKean-Singer says this
/// should vanish and the common value equals the superdimension.
inline double supertrace_drift(const OddOperator& d,
                               const std::vector<double>& t_grid,
                               double* value_out = nullptr) {
  double lo = 1e300, hi = -1e300;
  for (double t : t_grid) {
    const auto g = exp_semigroup(d, t);
    const auto [tr, str] = trace_supertrace(g.A, d.column_parity);
    (void)tr;
    lo = std::min(lo, str.real());
    hi = std::max(hi, str.real());
  }
  if (value_out) *value_out = 0.5 * (lo + hi);
  return hi - lo;
}

inline double min_singular_value(const Matrix& m) {
  if (m.rows() == 0) return 1.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues().minCoeff();
}

} // namespace eft::superlin
