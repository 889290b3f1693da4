#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "eft/extract.hpp"
#include "eft/family.hpp"

namespace eft::synth {

// ---------------------------------------------------------------------------
// Fixed profile functions. Only the germs are forced: rho = 1/x^2 on (0, a],
// rho = 0 on [b, 1]. The interpolation decays log-linearly with exp-flat
// splices at both ends, which keeps the germs exact to all orders and spreads
// the spectral transition of e^{-rho^2} as widely as the interval allows
// (steeper interpolations make the resolvent planning needlessly deep).

struct ProfileRho {
  double a = 0.3, b = 0.95;
  double taper = 11.0; // log-decay rate across (a, b)

  /// Ramp that vanishes to all orders at 0, grows linearly through the
  /// middle, and blows up at 1 so the product is identically flat at b.
  static double shape(double u) {
    const double lin = u * family::smooth_step(u / 0.2);
    const double tail =
        family::smooth_step((u - 0.8) / 0.2) * (u - 0.8) / (1.0 - u);
    return lin + tail;
  }

  double operator()(double x) const {
    if (x <= 0) return std::numeric_limits<double>::infinity();
    if (x >= b) return 0.0;
    if (x <= a) return 1.0 / (x * x);
    const double u = (x - a) / (b - a);
    return std::exp(-0.5 * taper * shape(u)) / (x * x);
  }

  /// 1/rho extended by continuity: 0 at x <= 0, +inf where rho vanishes.
  double inv(double x) const {
    if (x <= 0) return 0.0;
    if (x >= b) return std::numeric_limits<double>::infinity();
    if (x <= a) return x * x;
    const double u = (x - a) / (b - a);
    return x * x * std::exp(0.5 * taper * shape(u));
  }
};

struct ProfilePhi {
  double lo = 0.25, hi = 0.75;

  double operator()(double s) const {
    return 1.0 - family::smooth_step((s - lo) / (hi - lo));
  }
};

inline double rho(double x) { return ProfileRho{}(x); }
inline double phi(double s) { return ProfilePhi{}(s); }

// ---------------------------------------------------------------------------
// NQVect k-simplex data: nested frames given by V_0 and the complements
// V_1', ..., V_k' with odd involutions.

struct NQSimplex {
  int k = 0;
  SuperSpace space;
  GradedFrame v0;
  std::vector<extract::BandData> primes; // size k

  int total_rank() const {
    int r = v0.rank();
    for (const auto& p : primes) r += p.frame.rank();
    return r;
  }

  int rank_up_to(int i) const { // rank of V_i
    int r = v0.rank();
    for (int j = 0; j < i; ++j) r += primes[j].frame.rank();
    return r;
  }
};

inline Report nq_wellformed(const NQSimplex& s) {
  Report rep;
  if (static_cast<int>(s.primes.size()) != s.k)
    throw DimensionError("nq_wellformed: need k involution blocks");
  Matrix joint(s.space.N, s.total_rank());
  int at = 0;
  joint.leftCols(s.v0.rank()) = s.v0.columns;
  at += s.v0.rank();
  double inv_defect = 0, odd_defect = 0, balance = 0;
  for (const auto& p : s.primes) {
    joint.middleCols(at, p.frame.rank()) = p.frame.columns;
    at += p.frame.rank();
    const int b = p.frame.rank();
    if (b == 0) continue;
    inv_defect = std::max(
        inv_defect,
        (p.alpha * p.alpha - Matrix::Identity(b, b)).cwiseAbs().maxCoeff());
    odd_defect = std::max(
        odd_defect, oddness_defect(p.alpha, p.frame.fiber_grading()));
    balance = std::max(balance, std::abs(p.alpha.trace()));
  }
  double ortho = 0;
  if (joint.cols() > 0)
    ortho = (joint.adjoint() * joint -
             Matrix::Identity(joint.cols(), joint.cols()))
                .cwiseAbs()
                .maxCoeff();
  rep.add("frames jointly orthonormal", ortho <= 1e-9, ortho, 1e-9);
  rep.add("involutions square to identity", inv_defect <= 1e-9, inv_defect, 1e-9);
  rep.add("involutions odd", odd_defect <= 1e-12, odd_defect, 1e-12);
  rep.add("involution +/- balanced", balance <= 1e-9, balance, 1e-9);
  return rep;
}

// ---------------------------------------------------------------------------
// The map F: cocycle simplex -> family of field theories.

/// Family over the k-grid whose fiber at x is V_0 plus every complement V_j'
/// with s_j(x) = x_j + ... + x_k > 0, and whose generator is
/// 0 + rho(s_1) alpha_1 + ... + rho(s_k) alpha_k on the active summands.
/// W = V, L the restricted standard pairing, so the W-side generator is the
/// transpose.
inline family::FieldTheoryFamily synthesize_family(const NQSimplex& sigma,
                                                   int m,
                                                   ProfileRho profile = {}) {
  if (!nq_wellformed(sigma).pass())
    throw Error("synthesize_family: malformed cocycle simplex");
  family::FieldTheoryFamily fam;
  fam.space = sigma.space;
  fam.grid = family::BaryGrid::standard(sigma.k, m, true);

  const NQSimplex sg = sigma;
  auto build = [sg, profile](const RealVector& x) {
    family::PointSample ps;
    const int k = sg.k;
    std::vector<bool> active(k, false);
    std::vector<double> tail(k, 0.0);
    for (int j = 1; j <= k; ++j) {
      double s = 0;
      for (int l = j; l <= k; ++l) s += x(l);
      tail[j - 1] = s;
      active[j - 1] = s > 0;
    }
    int rank = sg.v0.rank();
    for (int j = 0; j < k; ++j)
      if (active[j]) rank += sg.primes[j].frame.rank();

    Matrix cols(sg.space.N, rank);
    std::vector<Parity> par;
    Matrix d = Matrix::Zero(rank, rank);
    int at = 0;
    cols.leftCols(sg.v0.rank()) = sg.v0.columns;
    par.insert(par.end(), sg.v0.column_parity.begin(),
               sg.v0.column_parity.end());
    at += sg.v0.rank();
    for (int j = 0; j < k; ++j) {
      if (!active[j]) continue;
      const auto& blk = sg.primes[j];
      const int b = blk.frame.rank();
      cols.middleCols(at, b) = blk.frame.columns;
      par.insert(par.end(), blk.frame.column_parity.begin(),
                 blk.frame.column_parity.end());
      const double r = profile(tail[j]);
      d.block(at, at, b, b) = r * blk.alpha;
      at += b;
    }
    ps.frameV = GradedFrame(cols, par);
    ps.frameW = ps.frameV;
    ps.DV = d;
    ps.DW = d.transpose();
    ps.L = Matrix::Identity(rank, rank);
    for (int j = 0; j < k; ++j) ps.vanish_flags.push_back(!active[j]);
    return ps;
  };

  for (const auto& x : fam.grid.points) {
    const family::PointSample ps = build(x);
    fam.fibersV.push_back({ps.frameV, ps.DV, ps.vanish_flags});
    fam.fibersW.push_back({ps.frameW, ps.DW, ps.vanish_flags});
    fam.pairing.push_back(ps.L);
  }
  fam.evaluator = build;
  return fam;
}

// ---------------------------------------------------------------------------
// Reparametrizations of Prop-style homotopies.

/// A_s(t) = A(s^4 t), B_s(t) = s^2 B(s^4 t); for generator-given families
/// this is D -> s^2 D. s = 0 yields the topological theory.
inline family::FieldTheoryFamily reparam_slow(
    const family::FieldTheoryFamily& fam, double s) {
  family::FieldTheoryFamily out = fam;
  const double c = s * s;
  for (auto& f : out.fibersV) f.D *= c;
  for (auto& f : out.fibersW) f.D *= c;
  if (fam.evaluator) {
    auto inner = fam.evaluator;
    out.evaluator = [inner, c](const RealVector& x) {
      family::PointSample ps = inner(x);
      ps.DV *= c;
      ps.DW *= c;
      return ps;
    };
  }
  if (fam.custom_semigroup) {
    auto inner = fam.custom_semigroup;
    const double s4 = s * s * s * s;
    out.custom_semigroup = [inner, c, s4](int p, double t) {
      if (s4 == 0.0) {
        SuperSemigroupElement id = inner(p, 1.0);
        id.t = t;
        id.A = Matrix::Identity(id.A.rows(), id.A.cols());
        id.B = Matrix::Zero(id.B.rows(), id.B.cols());
        return id;
      }
      SuperSemigroupElement g = inner(p, s4 * t);
      g.t = t;
      g.B *= c;
      return g;
    };
  }
  return out;
}

/// A_s(t) = A(t / s^4), B_s(t) = B(t / s^4) / s^2, i.e. D -> D / s^2.
/// Requires s > 0 and every eigenvalue norm of A(1) strictly below 1 on the
/// nonzero fibers, which is what washes the summand out as s -> 0.
inline family::FieldTheoryFamily reparam_fast(
    const family::FieldTheoryFamily& fam, double s) {
  if (s <= 0) throw Error("reparam_fast: s must be positive");
  double worst = 0;
  for (int i = 0; i < fam.point_count(); ++i) {
    if (fam.fibersV[i].rank() == 0) continue;
    const auto cfg = spectral::config_from_matrix(fam.semigroup(i, 1.0).A);
    for (const auto& pt : cfg.points)
      worst = std::max(worst, std::abs(pt.value));
  }
  if (worst >= 1.0)
    throw Error("reparam_fast: spectral bound violated, |A(1)| has norm " +
                eft::detail::fmt_double(worst));
  family::FieldTheoryFamily out = fam;
  const double c = 1.0 / (s * s);
  for (auto& f : out.fibersV) f.D *= c;
  for (auto& f : out.fibersW) f.D *= c;
  if (fam.evaluator) {
    auto inner = fam.evaluator;
    out.evaluator = [inner, c](const RealVector& x) {
      family::PointSample ps = inner(x);
      ps.DV *= c;
      ps.DW *= c;
      return ps;
    };
  }
  if (fam.custom_semigroup) {
    auto inner = fam.custom_semigroup;
    const double s4 = s * s * s * s;
    out.custom_semigroup = [inner, c, s4](int p, double t) {
      SuperSemigroupElement g = inner(p, t / s4);
      g.t = t;
      g.B *= c;
      return g;
    };
  }
  return out;
}

// ---------------------------------------------------------------------------
// The deformation along the homotopy parameter, defined through its inverse:
// D_s^{-1} = s^2 D^{-1} + phi(s) alpha / rho(band_coords).
// Convex combinations in the inverse keep the spectrum inside the sector
// |Im z| < |Re z| because alpha is the sign(Re) involution of D.

inline bool sector_check(const Matrix& d);
inline double sector_margin(const Matrix& d);

inline Matrix deform_generator(const Matrix& d, const Matrix& alpha,
                               double band_coords, double s,
                               ProfileRho profile_rho = {},
                               ProfilePhi profile_phi = {},
                               double floor = 1e-12) {
  if (d.rows() == 0) return d;
  if (band_coords < 0)
    throw Error("deform_generator: band coordinates must be >= 0");
  if (band_coords == 0.0 && s == 0.0)
    throw SingularAtOrigin("deform_generator: joint origin (x, s) = (0, 0)");
  if (superlin::min_singular_value(d) < floor)
    throw Error("deform_generator: D is not invertible on the band");

  const double rinv = profile_rho.inv(band_coords);
  const double ph = profile_phi(s);
  Matrix minv;
  if (std::isinf(rinv)) {
    // Outside the germ region the second term dominates completely; the
    // deformation degenerates to the zero generator unless phi vanishes.
    if (ph > 0) return Matrix::Zero(d.rows(), d.cols());
    minv = (s * s) * d.inverse();
  } else {
    minv = (s * s) * d.inverse() + (ph * rinv) * alpha;
  }
  const double sv = superlin::min_singular_value(minv);
  if (sv < floor)
    throw SingularAtOrigin(
        "deform_generator: inverse below the floor near the vanishing locus");
  Matrix ds = minv.inverse();
  if (sector_margin(ds) <= 0)
    throw SectorViolation(
        "deform_generator: spectrum left the sector |Im z| < |Re z|");
  return ds;
}

/// min over eigenvalues of |Re z| - |Im z|; positive iff strictly inside the
/// open sector. Empty matrices sit vacuously inside.
inline double sector_margin(const Matrix& d) {
  if (d.rows() == 0) return std::numeric_limits<double>::infinity();
  Eigen::ComplexEigenSolver<Matrix> es(d, false);
  double m = std::numeric_limits<double>::infinity();
  for (int i = 0; i < d.rows(); ++i) {
    const Complex z = es.eigenvalues()(i);
    m = std::min(m, std::abs(z.real()) - std::abs(z.imag()));
  }
  return m;
}

inline bool sector_check(const Matrix& d) { return sector_margin(d) > 0; }

// ---------------------------------------------------------------------------
// Closed-form prediction of the extracted cocycle for a synthesized family:
// the independent route used by the round-trip comparison. Eigenvalue norms
// at x are exp(-rho(s_j)^2) on each active summand and 1 on V_0.

inline extract::Cocycle expected_cocycle(const NQSimplex& sigma,
                                         const extract::ResolventPlan& plan,
                                         ProfileRho profile = {}) {
  extract::Cocycle out;
  out.k = plan.k;
  out.q = plan.q;
  out.m_tile = plan.m_tile;
  out.N = sigma.space.N;
  const int k = plan.k;

  const auto words = simplicial::enumerate_subdivision_simplices(k, plan.q);
  for (const auto& J : words) {
    extract::CocycleSimplex cs;
    cs.word = J;
    const auto th = extract::vertex_thresholds(plan, J);
    cs.lambdas = th.lambda;
    const auto pts = extract::tile_sample_points(J, plan.m_tile);

    cs.bundles.assign(k + 1, {});
    cs.involutions.assign(k, {});
    for (const auto& x : pts) {
      std::vector<double> value(k, 0.0);
      std::vector<bool> active(k, false);
      for (int j = 1; j <= k; ++j) {
        double s = 0;
        for (int l = j; l <= k; ++l) s += x(l);
        active[j - 1] = s > 0;
        if (active[j - 1]) {
          const double r = profile(s);
          value[j - 1] = std::exp(-r * r);
        }
      }
      for (int i = 0; i <= k; ++i) {
        int rank = sigma.v0.rank();
        for (int j = 0; j < k; ++j)
          if (active[j] && value[j] > th.lambda[i])
            rank += sigma.primes[j].frame.rank();
        Matrix cols(sigma.space.N, rank);
        std::vector<Parity> par;
        int at = sigma.v0.rank();
        cols.leftCols(at) = sigma.v0.columns;
        par.insert(par.end(), sigma.v0.column_parity.begin(),
                   sigma.v0.column_parity.end());
        for (int j = 0; j < k; ++j) {
          if (!(active[j] && value[j] > th.lambda[i])) continue;
          const int b = sigma.primes[j].frame.rank();
          cols.middleCols(at, b) = sigma.primes[j].frame.columns;
          par.insert(par.end(), sigma.primes[j].frame.column_parity.begin(),
                     sigma.primes[j].frame.column_parity.end());
          at += b;
        }
        cs.bundles[i].push_back(GradedFrame(cols, par));
      }
      for (int i = 1; i <= k; ++i) {
        int rank = 0;
        for (int j = 0; j < k; ++j)
          if (active[j] && value[j] > th.lambda[i] &&
              value[j] < th.lambda[i - 1])
            rank += sigma.primes[j].frame.rank();
        extract::BandData band;
        Matrix cols(sigma.space.N, rank);
        std::vector<Parity> par;
        Matrix alpha = Matrix::Zero(rank, rank);
        int at = 0;
        for (int j = 0; j < k; ++j) {
          if (!(active[j] && value[j] > th.lambda[i] &&
                value[j] < th.lambda[i - 1]))
            continue;
          const int b = sigma.primes[j].frame.rank();
          cols.middleCols(at, b) = sigma.primes[j].frame.columns;
          par.insert(par.end(), sigma.primes[j].frame.column_parity.begin(),
                     sigma.primes[j].frame.column_parity.end());
          alpha.block(at, at, b, b) = sigma.primes[j].alpha;
          at += b;
        }
        band.frame = GradedFrame(cols, par);
        band.alpha = alpha;
        cs.involutions[i - 1].push_back(std::move(band));
      }
    }
    out.simplices.push_back(std::move(cs));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cocycle comparison: rank profiles, involution signatures, frame spans.

struct CompareOptions {
  double span_tol = 1e-6; // radians
};

namespace detail {

/// Refines a spatially constant cocycle to a deeper subdivision by copying
/// its data onto every refined word with the matching prefix.
inline extract::Cocycle refine_constant_cocycle(const extract::Cocycle& c,
                                                int q_fine) {
  extract::Cocycle out = c;
  out.q = q_fine;
  out.simplices.clear();
  const auto words = simplicial::enumerate_subdivision_simplices(c.k, q_fine);
  for (const auto& J : words) {
    const auto prefix = J.prefix(c.q);
    const extract::CocycleSimplex* src = nullptr;
    for (const auto& cs : c.simplices)
      if (cs.word == prefix) {
        src = &cs;
        break;
      }
    if (!src) throw Error("refine_constant_cocycle: missing prefix simplex");
    for (const auto& lvl : src->bundles)
      for (const auto& f : lvl)
        if (family::detail::span_angle(f.columns, lvl.front().columns) > 1e-9)
          throw Error("refine_constant_cocycle: cocycle is not constant");
    extract::CocycleSimplex cs = *src;
    cs.word = J;
    out.simplices.push_back(std::move(cs));
  }
  return out;
}

} // namespace detail

/// Per little simplex: equal rank profiles, equal involution signatures
/// (rank with parity split), and matching frame spans. Throws on a
/// structural mismatch (different k); depths are aligned by refining the
/// coarser side when its data is spatially constant.
inline Report compare_cocycles(const extract::Cocycle& a,
                               const extract::Cocycle& b,
                               const CompareOptions& opts = {}) {
  if (a.k != b.k)
    throw Error("compare_cocycles: structural mismatch (different k)");
  const extract::Cocycle& fine = (a.q >= b.q) ? a : b;
  extract::Cocycle coarse = (a.q >= b.q) ? b : a;
  if (coarse.q != fine.q)
    coarse = detail::refine_constant_cocycle(coarse, fine.q);
  if (coarse.simplices.size() != fine.simplices.size())
    throw Error("compare_cocycles: simplex count mismatch");

  Report rep;
  bool ranks_ok = true, sig_ok = true;
  double worst_span = 0;
  for (std::size_t s = 0; s < fine.simplices.size(); ++s) {
    const auto& fa = fine.simplices[s];
    const auto& fb = coarse.simplices[s];
    if (!(fa.word == fb.word))
      throw Error("compare_cocycles: word enumeration mismatch");
    if (fa.bundles.size() != fb.bundles.size()) {
      ranks_ok = false;
      continue;
    }
    for (std::size_t i = 0; i < fa.bundles.size(); ++i) {
      const auto& la = fa.bundles[i];
      const auto& lb = fb.bundles[i];
      const std::size_t ns = std::min(la.size(), lb.size());
      for (std::size_t t = 0; t < ns; ++t) {
        if (la[t].rank() != lb[t].rank() ||
            la[t].even_rank() != lb[t].even_rank()) {
          ranks_ok = false;
          continue;
        }
        worst_span = std::max(
            worst_span,
            family::detail::span_angle(la[t].columns, lb[t].columns));
      }
    }
    for (std::size_t i = 0; i < fa.involutions.size(); ++i) {
      const auto& ba = fa.involutions[i];
      const auto& bb = fb.involutions[i];
      const std::size_t ns = std::min(ba.size(), bb.size());
      for (std::size_t t = 0; t < ns; ++t) {
        if (ba[t].frame.rank() != bb[t].frame.rank() ||
            ba[t].frame.even_rank() != bb[t].frame.even_rank())
          sig_ok = false;
        else if (ba[t].frame.rank() > 0)
          worst_span = std::max(worst_span,
                                family::detail::span_angle(
                                    ba[t].frame.columns, bb[t].frame.columns));
      }
    }
  }
  rep.add("rank profiles equal", ranks_ok, ranks_ok ? 0 : 1, 0.5);
  rep.add("involution signatures equal", sig_ok, sig_ok ? 0 : 1, 0.5);
  rep.add("frame spans match", worst_span <= opts.span_tol, worst_span,
          opts.span_tol, "max principal angle");
  return rep;
}

} // namespace eft::synth
