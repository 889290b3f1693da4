#pragma once

#include <random>

#include "eft/extract.hpp"
#include "eft/synth.hpp"
#include "eft/types.hpp"

namespace eft::testing {

using Rng = std::mt19937_64;

inline Complex random_complex(Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return {u(rng), u(rng)};
}

inline Matrix random_matrix(int rows, int cols, Rng& rng) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = random_complex(rng);
  return m;
}

/// Random odd matrix on a (p|q)-graded space (parity order: p even columns
/// then q odd ones), rescaled to the requested operator norm.
inline OddOperator random_odd(int p, int q, Rng& rng, double norm = 0.5) {
  Matrix m = Matrix::Zero(p + q, p + q);
  m.topRightCorner(p, q) = random_matrix(p, q, rng);
  m.bottomLeftCorner(q, p) = random_matrix(q, p, rng);
  std::vector<Parity> par;
  for (int i = 0; i < p; ++i) par.push_back(Parity::Even);
  for (int i = 0; i < q; ++i) par.push_back(Parity::Odd);
  if (p + q > 0 && norm > 0) {
    Eigen::JacobiSVD<Matrix> svd(m);
    const double top = svd.singularValues().maxCoeff();
    if (top > 0) m *= norm / top;
  }
  return {m, par};
}

/// Jointly orthonormal graded columns: pass per-block even/odd counts and
/// slice the two unitary bases.
struct FramePool {
  Matrix even_basis, odd_basis; // N x N/2 each (ambient alternating parity)
  int even_used = 0, odd_used = 0;
  SuperSpace space;

  FramePool(const SuperSpace& sp, Rng& rng) : space(sp) {
    const int ne = sp.even_dim(), no = sp.odd_dim();
    const Matrix ge = random_matrix(ne, ne, rng);
    const Matrix go = random_matrix(no, no, rng);
    Eigen::HouseholderQR<Matrix> qe(ge), qo(go);
    const Matrix ue = qe.householderQ() * Matrix::Identity(ne, ne);
    const Matrix uo = qo.householderQ() * Matrix::Identity(no, no);
    even_basis = Matrix::Zero(sp.N, ne);
    odd_basis = Matrix::Zero(sp.N, no);
    int ei = 0, oi = 0;
    for (int i = 0; i < sp.N; ++i) {
      if (sp.parity[i] == Parity::Even)
        even_basis.row(i) = ue.row(ei++);
      else
        odd_basis.row(i) = uo.row(oi++);
    }
  }

  GradedFrame take(int n_even, int n_odd) {
    if (even_used + n_even > even_basis.cols() ||
        odd_used + n_odd > odd_basis.cols())
      throw Error("FramePool: ambient space exhausted");
    Matrix cols(space.N, n_even + n_odd);
    std::vector<Parity> par;
    for (int i = 0; i < n_even; ++i) {
      cols.col(i) = even_basis.col(even_used + i);
      par.push_back(Parity::Even);
    }
    for (int i = 0; i < n_odd; ++i) {
      cols.col(n_even + i) = odd_basis.col(odd_used + i);
      par.push_back(Parity::Odd);
    }
    even_used += n_even;
    odd_used += n_odd;
    return {cols, par};
  }
};

/// Odd involution on a (c|c) block: [[0, X], [X^{-1}, 0]].
inline Matrix random_odd_involution(int c, Rng& rng) {
  if (c == 0) return Matrix(0, 0);
  Matrix x = random_matrix(c, c, rng);
  // Push away from singularity.
  x += 2.0 * Matrix::Identity(c, c);
  Matrix a = Matrix::Zero(2 * c, 2 * c);
  a.topRightCorner(c, c) = x;
  a.bottomLeftCorner(c, c) = x.inverse();
  return a;
}

/// Random NQVect k-simplex: nested graded frames with odd involutions on the
/// complements, total rank bounded.
inline synth::NQSimplex random_nq_simplex(int k, int max_total_rank, Rng& rng,
                                          int N = 16) {
  synth::NQSimplex s;
  s.k = k;
  s.space = SuperSpace(N);
  FramePool pool(s.space, rng);

  std::uniform_int_distribution<int> small(0, 1);
  int budget = max_total_rank;
  // Bands carry (c|c); keep at least one nontrivial band when k > 0.
  std::vector<int> band_c(k, 0);
  for (int j = 0; j < k && budget >= 2; ++j) {
    const int c = 1 + (budget >= 4 ? small(rng) : 0);
    band_c[j] = c;
    budget -= 2 * c;
  }
  const int r0e = std::min(budget, small(rng));
  budget -= r0e;
  const int r0o = std::min(budget, small(rng));

  s.v0 = pool.take(r0e, r0o);
  for (int j = 0; j < k; ++j) {
    extract::BandData band;
    band.frame = pool.take(band_c[j], band_c[j]);
    band.alpha = random_odd_involution(band_c[j], rng);
    s.primes.push_back(std::move(band));
  }
  return s;
}

/// Random invertible odd matrix on (c|c) whose spectrum stays strictly inside
/// the sector |Im z| < |Re z|; rejection-sampled, deterministic in the seed.
inline Matrix random_sector_band(int c, Rng& rng, double want_margin = 0.05) {
  for (int tries = 0; tries < 1000; ++tries) {
    Matrix d = Matrix::Zero(2 * c, 2 * c);
    d.topRightCorner(c, c) = random_matrix(c, c, rng);
    d.bottomLeftCorner(c, c) = random_matrix(c, c, rng);
    // Bias toward the real axis: mix in an involution-like block.
    Matrix x = random_matrix(c, c, rng) + 3.0 * Matrix::Identity(c, c);
    d.topRightCorner(c, c) += x;
    d.bottomLeftCorner(c, c) += x.inverse();
    if (superlin::min_singular_value(d) < 0.05) continue;
    if (synth::sector_margin(d) >= want_margin) return d;
  }
  throw Error("random_sector_band: rejection sampling exhausted");
}

} // namespace eft::testing
