#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "eft/simplicial.hpp"
#include "eft/spectral.hpp"
#include "eft/superlin.hpp"
#include "eft/types.hpp"

namespace eft::family {

/// C-infinity step: 0 for u <= 0, 1 for u >= 1, exp-flat at both ends.
inline double smooth_step(double u) {
  auto bump = [](double v) { return v <= 0.0 ? 0.0 : std::exp(-1.0 / v); };
  const double a = bump(u), b = bump(1.0 - u);
  return a / (a + b);
}

/// Barycentric sample grid over the standard k-simplex: all tuples n/m with
/// n summing to m, plus an optional collar of points with one slightly
/// negative coordinate (width 1/(4m)) so families can be probed just outside
/// each facet.
struct BaryGrid {
  int k = 0;
  int m = 1;
  std::vector<RealVector> points;
  std::vector<bool> collar;

  static BaryGrid standard(int k, int m, bool with_collar = false) {
    if (k < 0 || m < 1) throw DimensionError("BaryGrid: k >= 0, m >= 1");
    BaryGrid g;
    g.k = k;
    g.m = m;
    std::vector<int> n(k + 1, 0);
    std::function<void(int, int)> rec = [&](int idx, int rest) {
      if (idx == k) {
        n[k] = rest;
        RealVector x(k + 1);
        for (int i = 0; i <= k; ++i) x(i) = double(n[i]) / m;
        g.points.push_back(x);
        g.collar.push_back(false);
        return;
      }
      for (int v = rest; v >= 0; --v) {
        n[idx] = v;
        rec(idx + 1, rest - v);
      }
    };
    rec(0, m);
    if (with_collar) {
      const double c = 1.0 / (4.0 * m);
      const std::size_t interior = g.points.size();
      for (std::size_t p = 0; p < interior; ++p) {
        const RealVector& x = g.points[p];
        int jmax = 0;
        for (int i = 0; i <= k; ++i)
          if (x(i) > x(jmax)) jmax = i;
        for (int i = 0; i <= k; ++i) {
          if (x(i) != 0.0 || i == jmax) continue;
          RealVector y = x;
          y(i) = -c;
          y(jmax) += c;
          g.points.push_back(y);
          g.collar.push_back(true);
        }
      }
    }
    return g;
  }

  int size() const { return static_cast<int>(points.size()); }

  int find(const RealVector& x, double atol = 1e-9) const {
    for (int i = 0; i < size(); ++i)
      if ((points[i] - x).cwiseAbs().maxCoeff() <= atol) return i;
    return -1;
  }

  int nearest(const RealVector& x) const {
    int best = 0;
    double bd = 1e300;
    for (int i = 0; i < size(); ++i) {
      const double d = (points[i] - x).norm();
      if (d < bd) {
        bd = d;
        best = i;
      }
    }
    return best;
  }

  /// Largest negative coordinate tolerated, zero without collar points.
  double collar_width() const {
    double w = 0;
    for (const auto& x : points) w = std::min(w, x.minCoeff());
    return -w;
  }
};

/// Fiber of the module at one sample point: graded frame in H_N, the odd
/// generator in fiber coordinates, and per-summand vanishing annotations
/// (true = this summand is turned off here, constrained to vanish to all
/// orders).
struct FiberData {
  GradedFrame frame;
  Matrix D;
  std::vector<bool> vanish_flags;

  OddOperator odd() const { return {D, frame.column_parity}; }
  int rank() const { return frame.rank(); }
};

/// Everything the family knows at one parameter point.
struct PointSample {
  GradedFrame frameV, frameW;
  Matrix DV, DW;
  Matrix L; // r_W x r_V
  std::vector<bool> vanish_flags;
};

/// Fiberwise model of a quadruple (V, W, L, R) over a barycentric grid. R is
/// never stored extensionally: it is generated by D through the exponential
/// formula, except when a custom sampled semigroup is attached (used for
/// counterexamples and non-exponential inputs).
struct FieldTheoryFamily {
  SuperSpace space;
  BaryGrid grid;
  std::vector<FiberData> fibersV, fibersW;
  std::vector<Matrix> pairing;
  bool generator_given = true;

  /// Optional analytic model; when absent, off-grid evaluation falls back to
  /// the nearest stored sample (the file is the resolution-m knowledge).
  std::function<PointSample(const RealVector&)> evaluator;

  /// Optional sampled semigroup overriding exp(-tD^2); indexed by grid point.
  std::function<SuperSemigroupElement(int, double)> custom_semigroup;

  int point_count() const { return grid.size(); }

  PointSample sample_at_index(int i) const {
    return {fibersV[i].frame, fibersW[i].frame, fibersV[i].D, fibersW[i].D,
            pairing[i], fibersV[i].vanish_flags};
  }

  PointSample at(const RealVector& x) const {
    if (x.size() != grid.k + 1)
      throw DimensionError("FieldTheoryFamily::at: wrong coordinate size");
    if (std::abs(x.sum() - 1.0) > 1e-9)
      throw Error("FieldTheoryFamily::at: coordinates must sum to 1");
    if (x.minCoeff() < -(grid.collar_width() + 1e-9))
      throw Error("FieldTheoryFamily::at: point outside sampled region");
    const int idx = grid.find(x);
    if (idx >= 0) return sample_at_index(idx);
    if (evaluator) return evaluator(x);
    return interpolate(x);
  }

  /// Sampled families are evaluated off-grid by linear interpolation over
  /// the containing lattice cell (Kuhn triangulation in partial-sum
  /// coordinates), falling back to the nearest sample in the collar and at
  /// rank jumps where interpolation has no well-defined frame.
  PointSample interpolate(const RealVector& x) const;

  SuperSemigroupElement semigroup(int point_index, double t) const {
    if (custom_semigroup) return custom_semigroup(point_index, t);
    return superlin::exp_semigroup(fibersV[point_index].odd(), t);
  }

  Matrix a1_at(const RealVector& x) const {
    const PointSample s = at(x);
    const int idx = grid.find(x);
    if (custom_semigroup && idx >= 0) return custom_semigroup(idx, 1.0).A;
    if (s.frameV.rank() == 0) return Matrix(0, 0);
    return superlin::exp_semigroup({s.DV, s.frameV.column_parity}, 1.0).A;
  }

  spectral::SpectralConfig config_at(const RealVector& x,
                                     double merge_tol = 1e-9) const {
    return spectral::config_from_matrix(a1_at(x), merge_tol);
  }
};

namespace detail {

inline Matrix orthonormalize(const Matrix& m) {
  if (m.cols() == 0) return m;
  Eigen::HouseholderQR<Matrix> qr(m);
  return qr.householderQ() * Matrix::Identity(m.rows(), m.cols());
}

/// Orthonormalizes a graded column set per parity block, preserving the
/// column parity layout.
inline GradedFrame orthonormalize_graded(const Matrix& cols,
                                         const std::vector<Parity>& parity) {
  Matrix out = cols;
  for (Parity which : {Parity::Even, Parity::Odd}) {
    std::vector<int> idx;
    for (std::size_t j = 0; j < parity.size(); ++j)
      if (parity[j] == which) idx.push_back(static_cast<int>(j));
    if (idx.empty()) continue;
    Matrix blk(cols.rows(), idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) blk.col(j) = cols.col(idx[j]);
    const Matrix q = orthonormalize(blk);
    for (std::size_t j = 0; j < idx.size(); ++j) out.col(idx[j]) = q.col(j);
  }
  return {out, parity};
}

inline double frame_parity_defect(const GradedFrame& f,
                                  const std::vector<Parity>& ambient) {
  double worst = 0;
  for (int j = 0; j < f.rank(); ++j)
    for (int i = 0; i < f.ambient_dim(); ++i)
      if (ambient[i] != f.column_parity[j])
        worst = std::max(worst, std::abs(f.columns(i, j)));
  return worst;
}

inline double orthonormality_defect(const GradedFrame& f) {
  if (f.rank() == 0) return 0;
  return (f.columns.adjoint() * f.columns -
          Matrix::Identity(f.rank(), f.rank()))
      .cwiseAbs()
      .maxCoeff();
}

/// Largest principal angle between equal-rank spans, via projectors.
inline double span_angle(const Matrix& a, const Matrix& b) {
  if (a.cols() == 0 && b.cols() == 0) return 0;
  const Matrix pa = a * a.adjoint();
  const Matrix pb = b * b.adjoint();
  Eigen::JacobiSVD<Matrix> svd(pa - pb);
  const double s = std::min(1.0, svd.singularValues().maxCoeff());
  return std::asin(s);
}

inline std::vector<std::pair<int, int>> grid_neighbors(const BaryGrid& g) {
  std::vector<std::pair<int, int>> out;
  const double h = 1.0 / g.m;
  for (int i = 0; i < g.size(); ++i)
    for (int j = i + 1; j < g.size(); ++j) {
      const double d = (g.points[i] - g.points[j]).cwiseAbs().sum();
      if (d <= 2.0 * h + 1e-9) out.emplace_back(i, j);
    }
  return out;
}

} // namespace detail

inline PointSample FieldTheoryFamily::interpolate(const RealVector& x) const {
  const int k = grid.k, m = grid.m;
  auto nearest_sample = [&] { return sample_at_index(grid.nearest(x)); };
  if (k == 0) return nearest_sample();
  if (x.minCoeff() < -1e-12) return nearest_sample(); // collar region

  // Kuhn cell in partial-sum coordinates T_j = m (x_0 + ... + x_j).
  std::vector<long> base(k);
  std::vector<double> frac(k);
  double acc = 0;
  for (int j = 0; j < k; ++j) {
    acc += x(j);
    const double t = m * std::min(1.0, acc);
    base[j] = std::max<long>(0, std::min<long>(static_cast<long>(t), m));
    frac[j] = std::max(0.0, std::min(1.0, t - base[j]));
  }
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (frac[a] != frac[b]) return frac[a] > frac[b];
    return a > b;
  });
  std::vector<double> w(k + 1);
  w[0] = 1.0 - frac[order[0]];
  for (int l = 1; l < k; ++l) w[l] = frac[order[l - 1]] - frac[order[l]];
  w[k] = frac[order[k - 1]];
  for (double& v : w) v = std::max(0.0, v);

  std::vector<int> cell;
  std::vector<long> s = base;
  for (int l = 0; l <= k; ++l) {
    if (l > 0) s[order[l - 1]] += 1;
    RealVector coords(k + 1);
    long prev = 0;
    bool valid = true;
    for (int j = 0; j < k; ++j) {
      const long n = s[j] - prev;
      if (n < 0) valid = false;
      coords(j) = double(n) / m;
      prev = s[j];
    }
    if (m - prev < 0) valid = false;
    coords(k) = double(m - prev) / m;
    const int idx = valid ? grid.find(coords) : -1;
    if (idx < 0) return nearest_sample();
    cell.push_back(idx);
  }

  const int rank = fibersV[cell[0]].rank();
  for (int idx : cell)
    if (fibersV[idx].rank() != rank ||
        fibersV[idx].frame.column_parity !=
            fibersV[cell[0]].frame.column_parity ||
        fibersW[idx].rank() != fibersW[cell[0]].rank())
      return nearest_sample(); // rank jump: no well-defined interpolation

  PointSample out;
  if (rank == 0) return sample_at_index(cell[0]);
  const auto& parV = fibersV[cell[0]].frame.column_parity;
  const auto& parW = fibersW[cell[0]].frame.column_parity;
  Matrix sumV = Matrix::Zero(space.N, rank);
  Matrix sumW = Matrix::Zero(space.N, fibersW[cell[0]].rank());
  for (int l = 0; l <= k; ++l) {
    sumV += w[l] * fibersV[cell[l]].frame.columns;
    sumW += w[l] * fibersW[cell[l]].frame.columns;
  }
  out.frameV = detail::orthonormalize_graded(sumV, parV);
  out.frameW = detail::orthonormalize_graded(sumW, parW);
  Matrix dv = Matrix::Zero(rank, rank);
  Matrix dw = Matrix::Zero(sumW.cols(), sumW.cols());
  Matrix l0 = Matrix::Zero(sumW.cols(), rank);
  for (int l = 0; l <= k; ++l) {
    const Matrix cv = fibersV[cell[l]].frame.columns.adjoint() * out.frameV.columns;
    const Matrix cw = fibersW[cell[l]].frame.columns.adjoint() * out.frameW.columns;
    dv += w[l] * (cv.adjoint() * fibersV[cell[l]].D * cv);
    dw += w[l] * (cw.adjoint() * fibersW[cell[l]].D * cw);
    l0 += w[l] * (cw.transpose() * pairing[cell[l]] * cv);
  }
  out.DV = dv;
  out.DW = dw;
  out.L = l0;
  int best = 0;
  for (int l = 1; l <= k; ++l)
    if (w[l] > w[best]) best = l;
  out.vanish_flags = fibersV[cell[best]].vanish_flags;
  return out;
}

// ---------------------------------------------------------------------------
// Validation.

struct ValidateOptions {
  double tol = 1e-8;
  double axiom_t_step = 1e-3; // rescaled per point by 1/(1 + |D^2|)
  int axiom_samples = 24;
  double cluster_tol = 1e-6;
  double mckean_singer_tol = 1e-9;
  double frame_angle_budget = 0.2;   // radians, adjacent same-rank frames
  double trace_lipschitz = 400.0;    // default trace modulus slope
  std::function<double(double)> trace_modulus; // overrides the default
};


/// Checks the three defining conditions pointwise plus the structural
/// invariants: frames graded and orthonormal, D odd, semigroup axioms,
/// identity limit under t = s^2, pairing adjointness, trace/supertrace
/// finite and discretely continuous across the grid.
inline Report validate_family(const FieldTheoryFamily& fam,
                              const ValidateOptions& opts = {}) {
  Report rep;
  const auto trace_bound =
      opts.trace_modulus
          ? opts.trace_modulus
          : [&opts](double h) { return opts.trace_lipschitz * h + opts.tol; };

  double worst_frame = 0, worst_parity = 0, worst_odd = 0;
  double worst_axiom = 0, worst_identity = 0, worst_ms = 0;
  double min_sv = 1e300;
  bool pairing_ok = true;
  std::string pairing_msg;

  const int np = fam.point_count();
  std::vector<char> usable(np, 1);
  for (int p = 0; p < np; ++p) {
    const auto& fv = fam.fibersV[p];
    const auto& fw = fam.fibersW[p];
    worst_frame = std::max(worst_frame, detail::orthonormality_defect(fv.frame));
    worst_frame = std::max(worst_frame, detail::orthonormality_defect(fw.frame));
    worst_parity = std::max(
        worst_parity, detail::frame_parity_defect(fv.frame, fam.space.parity));
    worst_parity = std::max(
        worst_parity, detail::frame_parity_defect(fw.frame, fam.space.parity));
    double odd_here = 0;
    if (fv.rank() > 0) {
      odd_here = std::max(oddness_defect(fv.D, fv.frame.fiber_grading()),
                          oddness_defect(fw.D, fw.frame.fiber_grading()));
      worst_odd = std::max(worst_odd, odd_here);
    }
    if (fam.pairing[p].rows() != fw.rank() || fam.pairing[p].cols() != fv.rank())
      throw DimensionError("validate_family: pairing dimensions mismatch");

    // A non-odd generator already fails the oddness item; the exponential
    // machinery below requires oddness, so skip it for this point.
    if (odd_here > 1e-8 && !fam.custom_semigroup) {
      usable[p] = 0;
      continue;
    }

    if (fv.rank() > 0) {
      // Semigroup axioms on a per-point t grid, step scaled by the stiffness
      // of D^2 so the finite-difference estimate stays honest.
      const double stiff =
          fam.custom_semigroup ? 1.0 : (fv.D * fv.D).cwiseAbs().maxCoeff();
      const double h = opts.axiom_t_step / (1.0 + stiff);
      std::vector<SuperSemigroupElement> g;
      for (int i = 1; i <= opts.axiom_samples; ++i)
        g.push_back(fam.semigroup(p, h * i));
      const Report axioms = superlin::check_semigroup_axioms(g, opts.tol);
      for (const auto& it : axioms.items)
        worst_axiom = std::max(worst_axiom, it.residual);
      if (!axioms.pass()) {
        rep.merge(axioms, "point " + std::to_string(p) + ": ");
      }

      // Identity limit along t = s^2.
      const double smin = 1e-5 / std::sqrt(1.0 + stiff);
      double resid = 0;
      for (double s : {1.0, 1e-1, 1e-2, smin}) {
        const auto gs = fam.semigroup(p, s * s);
        const double r =
            (gs.A - Matrix::Identity(fv.rank(), fv.rank())).cwiseAbs().maxCoeff();
        resid = r; // log-spaced descent; keep the smallest-s residual
      }
      worst_identity = std::max(worst_identity, resid);

      // McKean-Singer drift and no-kernel. Invertibility is probed at a
      // stiffness-scaled time so the exponential stays inside double range;
      // by the semigroup law that certifies invertibility at every t.
      const auto g1 = fam.semigroup(p, 1.0 / (1.0 + stiff));
      min_sv = std::min(min_sv, superlin::min_singular_value(g1.A));
      if (!fam.custom_semigroup) {
        double value = 0;
        const double drift = superlin::supertrace_drift(
            fv.odd(), {0.01, 0.1, 0.5, 1.0, 2.0, 4.0}, &value);
        const double sdim_err =
            std::abs(value - fv.frame.superdimension());
        worst_ms = std::max(worst_ms, std::max(drift, sdim_err));
      }

      // Pairing adjointness at this point.
      const Matrix a1v = fam.semigroup(p, 1.0).A;
      const Matrix a1w =
          fam.custom_semigroup
              ? Matrix(a1v.transpose())
              : superlin::exp_semigroup(fw.odd(), 1.0).A;
      try {
        const Report pr = superlin::check_pairing(
            fam.pairing[p], a1v, a1w, opts.tol, {opts.cluster_tol});
        if (!pr.pass()) {
          pairing_ok = false;
          pairing_msg = "point " + std::to_string(p);
        }
      } catch (const Error& e) {
        pairing_ok = false;
        pairing_msg = "point " + std::to_string(p) + ": " + e.what();
      }
    }
  }

  rep.add("frames orthonormal", worst_frame <= 1e-9, worst_frame, 1e-9);
  rep.add("frames graded", worst_parity <= 1e-12, worst_parity, 1e-12);
  rep.add("generators odd", worst_odd <= 1e-12, worst_odd, 1e-12);
  rep.add("semigroup axioms", worst_axiom <= opts.tol, worst_axiom, opts.tol);
  rep.add("identity limit A(s^2) -> Id", worst_identity <= opts.tol,
          worst_identity, opts.tol);
  rep.add("A(1) invertible (no kernel)", min_sv > 0, min_sv, 0,
          "min singular value");
  rep.add("McKean-Singer supertrace constancy", worst_ms <= opts.mckean_singer_tol,
          worst_ms, opts.mckean_singer_tol);
  rep.add("pairing adjointness pointwise", pairing_ok, pairing_ok ? 0 : 1, 0.5,
          pairing_msg);

  // Trace / supertrace continuity across the grid, and frame continuity
  // where the rank is locally constant.
  const auto nbrs = detail::grid_neighbors(fam.grid);
  double worst_trace_excess = -1e300;
  double worst_angle = 0;
  int rank_jumps = 0;
  for (const auto& [i, j] : nbrs) {
    if (!usable[i] || !usable[j]) continue;
    const double h = (fam.grid.points[i] - fam.grid.points[j]).cwiseAbs().sum();
    for (double t : {0.25, 1.0, 4.0}) {
      const auto gi = fam.fibersV[i].rank() ? fam.semigroup(i, t).A : Matrix(0, 0);
      const auto gj = fam.fibersV[j].rank() ? fam.semigroup(j, t).A : Matrix(0, 0);
      const auto [tri, stri] =
          superlin::trace_supertrace(gi, fam.fibersV[i].frame.column_parity);
      const auto [trj, strj] =
          superlin::trace_supertrace(gj, fam.fibersV[j].frame.column_parity);
      if (!std::isfinite(tri.real()) || !std::isfinite(trj.real()))
        throw Error("validate_family: non-finite trace");
      worst_trace_excess =
          std::max(worst_trace_excess,
                   std::max(std::abs(tri - trj), std::abs(stri - strj)) -
                       trace_bound(h));
    }
    if (fam.fibersV[i].rank() == fam.fibersV[j].rank()) {
      if (fam.fibersV[i].rank() > 0)
        worst_angle = std::max(
            worst_angle, detail::span_angle(fam.fibersV[i].frame.columns,
                                            fam.fibersV[j].frame.columns));
    } else {
      ++rank_jumps;
    }
  }
  rep.add("trace/supertrace discrete continuity", worst_trace_excess <= 0,
          worst_trace_excess, 0, "excess over modulus");
  rep.add("frame continuity at constant rank",
          worst_angle <= opts.frame_angle_budget, worst_angle,
          opts.frame_angle_budget, "max principal angle");
  rep.add("rank-jump pairs (informational)", true,
          static_cast<double>(rank_jumps), 1e300,
          "jump loci flagged, tested per stratum");
  return rep;
}

// ---------------------------------------------------------------------------
// The running example: a path of theories connecting the empty theory to a
// superdimension-zero plane with vanishing generator.

inline int superdimension(const FiberData& f) {
  return f.frame.superdimension();
}

/// Path family over the 1-simplex, x = x_1: zero fiber for x <= 0, a fixed
/// (1|1)-plane for x > 0 with generator (1 - beta(x))/x times the swap, so
/// the generator is 1/x near 0 and vanishes at x = 1.
inline FieldTheoryFamily example_path_theory(int m, int N = 16) {
  if (m < 4) throw DimensionError("example_path_theory: m >= 4 required");
  FieldTheoryFamily fam;
  fam.space = SuperSpace(N, true);
  fam.grid = BaryGrid::standard(1, m, true);

  const int e0 = 0, o0 = 1; // first even / odd ambient basis vectors
  auto build = [=](const RealVector& x) {
    PointSample s;
    const double xv = x(1);
    if (xv <= 0.0) {
      s.frameV = GradedFrame(Matrix::Zero(N, 0), {});
      s.frameW = s.frameV;
      s.DV = Matrix(0, 0);
      s.DW = Matrix(0, 0);
      s.L = Matrix(0, 0);
      s.vanish_flags = {true};
      return s;
    }
    Matrix cols = Matrix::Zero(N, 2);
    cols(e0, 0) = 1.0;
    cols(o0, 1) = 1.0;
    s.frameV = GradedFrame(cols, {Parity::Even, Parity::Odd});
    s.frameW = s.frameV;
    const double beta = smooth_step((xv - 0.25) / 0.5);
    const double gen = (1.0 - beta) / xv;
    Matrix d(2, 2);
    d << 0, gen, gen, 0;
    s.DV = d;
    s.DW = d.transpose();
    s.L = Matrix::Identity(2, 2);
    s.vanish_flags = {false};
    return s;
  };

  for (const auto& x : fam.grid.points) {
    const PointSample s = build(x);
    fam.fibersV.push_back({s.frameV, s.DV, s.vanish_flags});
    fam.fibersW.push_back({s.frameW, s.DW, s.vanish_flags});
    fam.pairing.push_back(s.L);
  }
  fam.evaluator = build;
  return fam;
}

// ---------------------------------------------------------------------------
// Pullback along a map between parameter simplices.

struct SmoothMap {
  int k_src = 0, k_dst = 0;
  std::function<RealVector(const RealVector&)> eval;

  static SmoothMap affine(const simplicial::AffineMap& a) {
    Eigen::MatrixXd m(a.k_dst + 1, a.k_src + 1);
    for (int i = 0; i <= a.k_dst; ++i)
      for (int j = 0; j <= a.k_src; ++j) m(i, j) = to_double(a.columns(i, j));
    return {a.k_src, a.k_dst,
            [m](const RealVector& x) { return RealVector(m * x); }};
  }

  static SmoothMap identity(int k) {
    return {k, k, [](const RealVector& x) { return x; }};
  }

  static SmoothMap constant(int k_src, const RealVector& target) {
    return {k_src, static_cast<int>(target.size()) - 1,
            [target](const RealVector&) { return target; }};
  }
};

inline FieldTheoryFamily pullback_family(const FieldTheoryFamily& fam,
                                         const SmoothMap& phi,
                                         const BaryGrid& target_grid) {
  if (phi.k_dst != fam.grid.k || target_grid.k != phi.k_src)
    throw DimensionError("pullback_family: dimension mismatch");
  FieldTheoryFamily out;
  out.space = fam.space;
  out.grid = target_grid;
  out.generator_given = fam.generator_given;
  for (const auto& x : target_grid.points) {
    const PointSample s = fam.at(phi.eval(x)); // throws if outside region
    out.fibersV.push_back({s.frameV, s.DV, s.vanish_flags});
    out.fibersW.push_back({s.frameW, s.DW, s.vanish_flags});
    out.pairing.push_back(s.L);
  }
  if (fam.evaluator) {
    auto inner = fam.evaluator;
    auto map = phi.eval;
    out.evaluator = [inner, map](const RealVector& x) { return inner(map(x)); };
  }
  return out;
}

} // namespace eft::family
