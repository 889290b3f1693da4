#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "eft/types.hpp"

namespace eft::spectral {

/// Norm floor below which a spectral point is merged with the origin.
inline constexpr double kOriginFloor = 1e-14;

/// Finite multiset of labelled complex spectral points.
struct SpectralConfig {
  struct Point {
    Complex value;
    int multiplicity = 1;
  };
  std::vector<Point> points;

  int total_multiplicity() const {
    int n = 0;
    for (const auto& p : points) n += p.multiplicity;
    return n;
  }

  std::vector<Complex> expanded() const {
    std::vector<Complex> v;
    for (const auto& p : points)
      for (int i = 0; i < p.multiplicity; ++i) v.push_back(p.value);
    return v;
  }
};

/// Eigenvalues of m as a configuration; values within merge_tol of each other
/// are grouped, values below the origin floor are snapped to 0.
inline SpectralConfig config_from_matrix(const Matrix& m,
                                         double merge_tol = 1e-9) {
  SpectralConfig c;
  if (m.rows() == 0) return c;
  Eigen::ComplexEigenSolver<Matrix> es(m, false);
  if (es.info() != Eigen::Success)
    throw Error("config_from_matrix: eigensolver failed");
  std::vector<Complex> vals(es.eigenvalues().data(),
                            es.eigenvalues().data() + m.rows());
  for (auto& v : vals)
    if (std::abs(v) < kOriginFloor) v = 0.0;
  std::sort(vals.begin(), vals.end(), [](Complex a, Complex b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  for (const Complex v : vals) {
    if (!c.points.empty() && std::abs(c.points.back().value - v) <= merge_tol)
      ++c.points.back().multiplicity;
    else
      c.points.push_back({v, 1});
  }
  return c;
}

namespace detail {

/// Feasibility at threshold t: a partial matching where unmatched points must
/// have |z| <= t and matched pairs |z - w| <= t. Encoded as perfect matching
/// on padded sides (the classic bottleneck construction with the diagonal
/// replaced by the origin).
inline bool matchable_at(const std::vector<Complex>& a,
                         const std::vector<Complex>& b, double t) {
  const int na = static_cast<int>(a.size());
  const int nb = static_cast<int>(b.size());
  const int n = na + nb; // left: a + nb virtual, right: b + na virtual
  auto edge = [&](int i, int j) {
    const bool ia = i < na, jb = j < nb;
    if (ia && jb) return std::abs(a[i] - b[j]) <= t;
    if (ia && !jb) return std::abs(a[i]) <= t;
    if (!ia && jb) return std::abs(b[j]) <= t;
    return true;
  };
  std::vector<int> match_r(n, -1), match_l(n, -1);
  std::vector<char> seen(n);
  std::function<bool(int)> augment = [&](int i) {
    for (int j = 0; j < n; ++j) {
      if (seen[j] || !edge(i, j)) continue;
      seen[j] = 1;
      if (match_r[j] < 0 || augment(match_r[j])) {
        match_r[j] = i;
        match_l[i] = j;
        return true;
      }
    }
    return false;
  };
  for (int i = 0; i < n; ++i) {
    std::fill(seen.begin(), seen.end(), 0);
    if (!augment(i)) return false;
  }
  return true;
}

} // namespace detail

/// Bottleneck-style matching distance with unmatched points priced at their
/// distance to the origin. Zero iff the configurations agree as multisets.
inline double config_distance(const SpectralConfig& c1,
                              const SpectralConfig& c2) {
  const auto a = c1.expanded();
  const auto b = c2.expanded();
  if (a.empty() && b.empty()) return 0.0;
  std::vector<double> cand{0.0};
  for (const auto& z : a) cand.push_back(std::abs(z));
  for (const auto& z : b) cand.push_back(std::abs(z));
  for (const auto& z : a)
    for (const auto& w : b) cand.push_back(std::abs(z - w));
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  // Smallest candidate threshold admitting a feasible matching.
  int lo = 0, hi = static_cast<int>(cand.size()) - 1;
  while (lo < hi) {
    const int mid = (lo + hi) / 2;
    if (detail::matchable_at(a, b, cand[mid]))
      hi = mid;
    else
      lo = mid + 1;
  }
  return cand[lo];
}

struct ContinuityReport {
  bool pass = true;
  double worst_excess = 0.0; // max over steps of distance - bound(step)
  std::size_t worst_step = 0;
  std::vector<double> distances;
};

/// Checks consecutive configuration distances against a modulus of the step
/// size. Rank changes are automatically priced at distance-to-origin by the
/// metric itself.
inline ContinuityReport verify_spectral_continuity(
    const std::vector<SpectralConfig>& configs,
    const std::vector<double>& steps,
    const std::function<double(double)>& bound) {
  if (configs.size() < 2 || steps.size() + 1 != configs.size())
    throw DimensionError("verify_spectral_continuity: need n configs, n-1 steps");
  ContinuityReport rep;
  rep.worst_excess = -1e300;
  for (std::size_t i = 0; i + 1 < configs.size(); ++i) {
    const double d = config_distance(configs[i], configs[i + 1]);
    rep.distances.push_back(d);
    const double excess = d - bound(steps[i]);
    if (excess > rep.worst_excess) {
      rep.worst_excess = excess;
      rep.worst_step = i;
    }
    if (excess > 0) rep.pass = false;
  }
  return rep;
}

inline ContinuityReport verify_spectral_continuity(
    const std::vector<SpectralConfig>& configs, double step,
    const std::function<double(double)>& bound) {
  return verify_spectral_continuity(
      configs, std::vector<double>(configs.size() - 1, step), bound);
}

// ---------------------------------------------------------------------------
// Newton-Girard machinery. Templated over the scalar so the same recurrence
// runs in doubles, complex doubles, or exact rationals.

inline std::vector<Complex> power_sums(const Matrix& m, int kmax) {
  if (kmax < 1) throw DimensionError("power_sums: kmax >= 1 required");
  std::vector<Complex> p;
  Matrix pw = m;
  for (int j = 1; j <= kmax; ++j) {
    p.push_back(pw.trace());
    if (j < kmax) pw = pw * m;
  }
  return p;
}

/// e_1..e_n from p_1..p_n via j*e_j = sum_{i=1..j} (-1)^{i-1} e_{j-i} p_i.
template <typename K>
std::vector<K> power_sums_to_elementary(const std::vector<K>& p) {
  const std::size_t n = p.size();
  std::vector<K> e(n + 1, K(0));
  e[0] = K(1);
  for (std::size_t j = 1; j <= n; ++j) {
    K acc(0);
    for (std::size_t i = 1; i <= j; ++i) {
      const K term = e[j - i] * p[i - 1];
      acc += (i % 2 == 1) ? term : K(0) - term;
    }
    e[j] = acc / K(static_cast<int>(j));
  }
  return std::vector<K>(e.begin() + 1, e.end());
}

/// Inverse direction: p_j = (-1)^{j-1} j e_j + sum_{i=1..j-1} (-1)^{i-1} e_i p_{j-i}.
template <typename K>
std::vector<K> elementary_to_power_sums(const std::vector<K>& e) {
  const std::size_t n = e.size();
  std::vector<K> p(n, K(0));
  for (std::size_t j = 1; j <= n; ++j) {
    K acc = (j % 2 == 1) ? e[j - 1] * K(static_cast<int>(j))
                         : K(0) - e[j - 1] * K(static_cast<int>(j));
    for (std::size_t i = 1; i < j; ++i) {
      const K term = e[i - 1] * p[j - i - 1];
      acc += (i % 2 == 1) ? term : K(0) - term;
    }
    p[j - 1] = acc;
  }
  return p;
}

/// Roots of z^n - e_1 z^{n-1} + e_2 z^{n-2} - ... via the companion matrix.
inline std::vector<Complex> elementary_to_roots(const std::vector<Complex>& e) {
  const int n = static_cast<int>(e.size());
  if (n == 0) return {};
  Matrix comp = Matrix::Zero(n, n);
  for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
  for (int i = 0; i < n; ++i) {
    const double sgn = (i % 2 == 0) ? 1.0 : -1.0;
    comp(0, i) = sgn * e[i];
  }
  Eigen::ComplexEigenSolver<Matrix> es(comp, false);
  std::vector<Complex> roots(es.eigenvalues().data(),
                             es.eigenvalues().data() + n);
  return roots;
}

// ---------------------------------------------------------------------------
// Resolvent radius search.

struct GapReport {
  double mu = 0.0;     // radius in (0,1)
  double margin = 0.0; // no sampled norm within margin of mu
  double gap_lo = 0.0;
  double gap_hi = 0.0;
};

/// Widest gap among the sampled norms inside (0,1); ties break toward the
/// larger radius. Throws NoGapError when no gap reaches min_margin.
inline GapReport find_resolvent_radius(
    const std::vector<SpectralConfig>& configs, double min_margin) {
  std::vector<double> norms{0.0, 1.0};
  for (const auto& c : configs)
    for (const auto& p : c.points) {
      const double a = std::abs(p.value);
      if (a < 1.0) norms.push_back(a);
    }
  std::sort(norms.begin(), norms.end());
  GapReport best;
  for (std::size_t i = 0; i + 1 < norms.size(); ++i) {
    const double w = norms[i + 1] - norms[i];
    const double mu = 0.5 * (norms[i] + norms[i + 1]);
    if (w / 2 > best.margin || (w / 2 == best.margin && mu > best.mu)) {
      best = {mu, w / 2, norms[i], norms[i + 1]};
    }
  }
  if (best.margin < min_margin)
    throw NoGapError("no resolvent gap of margin " +
                     eft::detail::fmt_double(min_margin) +
                     " (best " + eft::detail::fmt_double(best.margin) + ")");
  return best;
}

} // namespace eft::spectral
