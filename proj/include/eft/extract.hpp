#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <tuple>
#include <vector>

#include "eft/detail/parallel.hpp"
#include "eft/family.hpp"
#include "eft/simplicial.hpp"
#include "eft/spectral.hpp"
#include "eft/superlin.hpp"

namespace eft::extract {

// ---------------------------------------------------------------------------
// Plan data: one cover element per little p-simplex (the choice function f is
// the identity), each an enlargement of the tile in pullback coordinates. The
// slack is computed so that every fine simplex meeting the tile lies inside
// the enlargement, which is exactly the neighbor-containment condition.

struct CoverElement {
  simplicial::SubdivisionWord word; // depth p
  simplicial::AffineMap map;
  RatMat inverse;
  Eigen::MatrixXd inverse_dbl;
  Rat slack;       // pullback slack of the enlargement U
  double mu = 0;   // resolvent radius
  double margin = 0;
};

struct ResolventPlan {
  int k = 0, p = 0, q = 0;
  int m_tile = 1; // per-little-simplex sampling resolution
  std::vector<CoverElement> cover;
};

struct PlanOptions {
  int m_tile = 1;
  int q_offset = 2; // q = p + q_offset for p >= 1, q = 0 for p = 0
  double cluster_tol = 1e-6;
};

namespace detail {

inline std::vector<Rat> rat_coords_from_grid(const family::BaryGrid& g, int i) {
  // Grid coordinates are multiples of 1/(4m) (collar width included).
  const long den = 4L * g.m;
  std::vector<Rat> out(g.k + 1);
  for (int c = 0; c <= g.k; ++c) {
    const long num = std::lround(g.points[i](c) * den);
    out[c] = Rat(num, den);
  }
  return out;
}

inline RealVector to_dbl(const std::vector<Rat>& x) {
  RealVector v(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) v(i) = to_double(x[i]);
  return v;
}

/// Exact membership with a double prefilter.
inline bool tile_contains(const CoverElement& ce, const std::vector<Rat>& x,
                          const RealVector& x_dbl, bool enlarged) {
  const RealVector y = ce.inverse_dbl * x_dbl;
  const double s = enlarged ? to_double(ce.slack) : 0.0;
  if (y.minCoeff() > -s + 1e-9) return true;
  if (y.minCoeff() < -s - 1e-9) return false;
  const auto yr = ce.inverse.apply(x);
  const Rat slack = enlarged ? ce.slack : Rat(0);
  for (const auto& yi : yr)
    if (yi < -slack) return false;
  return true;
}

inline CoverElement make_cover_element(const simplicial::SubdivisionWord& w,
                                       const simplicial::AffineMap& b) {
  CoverElement ce;
  ce.word = w;
  ce.map = b;
  ce.inverse = b.columns.inverse();
  ce.inverse_dbl.resize(ce.inverse.rows(), ce.inverse.cols());
  for (std::size_t i = 0; i < ce.inverse.rows(); ++i)
    for (std::size_t j = 0; j < ce.inverse.cols(); ++j)
      ce.inverse_dbl(i, j) = to_double(ce.inverse(i, j));
  ce.slack = 0;
  return ce;
}

struct PointKey {
  std::vector<std::int64_t> v;
  bool operator<(const PointKey& o) const { return v < o.v; }
  bool operator==(const PointKey& o) const { return v == o.v; }
};

/// Keys are exact for subdivision data: distinct vertices at the depths used
/// here differ by far more than the rounding unit.
inline PointKey key_of(const RealVector& x) {
  PointKey k;
  k.v.resize(x.size());
  for (int i = 0; i < x.size(); ++i) k.v[i] = std::llround(x(i) * 1e9);
  return k;
}

/// Exact barycentric sample coordinates of the standard m-grid mapped by the
/// word's affine map, in grid order. m = 1 gives the tile's vertices.
inline std::vector<std::vector<Rat>> tile_sample_coords(
    const simplicial::AffineMap& b, int k, int m_tile) {
  const auto grid = family::BaryGrid::standard(k, m_tile, false);
  std::vector<std::vector<Rat>> out;
  out.reserve(grid.points.size());
  for (const auto& gp : grid.points) {
    std::vector<Rat> x(k + 1, Rat(0));
    for (int j = 0; j <= k; ++j) {
      const long num = std::lround(gp(j) * m_tile);
      if (num == 0) continue;
      for (int i = 0; i <= k; ++i) x[i] += b.columns(i, j) * Rat(num, m_tile);
    }
    out.push_back(std::move(x));
  }
  return out;
}

/// Geometry shared by planning and extraction: the fine words with their
/// affine maps, deduplicated sample points, and the vertex/tile incidence.
/// A fine tile meets a coarse tile exactly when one of its vertices lies in
/// it, and every coarse tile containing a fine vertex arises as the p-prefix
/// of some fine word through that vertex.
struct FineGeometry {
  int k = 0, p = 0, q = 0, m_tile = 1;
  std::vector<simplicial::SubdivisionWord> words;
  std::vector<std::vector<int>> word_samples;  // sample ids per word
  std::vector<std::vector<int>> word_vertices; // vertex sample ids (k+1)
  std::vector<std::vector<Rat>> sample_coords;
  std::vector<RealVector> sample_dbl;
  std::vector<std::vector<int>> vertex_cover;  // cover ids incident to vertex
  std::map<PointKey, int> index;

  int sample_id(const RealVector& x) const {
    const auto it = index.find(key_of(x));
    if (it == index.end()) throw Error("FineGeometry: unknown sample point");
    return it->second;
  }
};

inline FineGeometry build_fine_geometry(int k, int p, int q, int m_tile) {
  FineGeometry geo;
  geo.k = k;
  geo.p = p;
  geo.q = q;
  geo.m_tile = m_tile;

  const auto perms = simplicial::all_permutations(k);
  const long perm_count = static_cast<long>(perms.size());

  auto register_point = [&](std::vector<Rat>&& x) {
    const RealVector xd = to_dbl(x);
    const auto key = key_of(xd);
    auto it = geo.index.find(key);
    if (it != geo.index.end()) return it->second;
    const int id = static_cast<int>(geo.sample_coords.size());
    geo.index.emplace(key, id);
    geo.sample_coords.push_back(std::move(x));
    geo.sample_dbl.push_back(xd);
    return id;
  };

  std::vector<std::set<int>> vertex_cover_sets;
  for (auto& [w, b] : simplicial::enumerate_with_maps(k, q)) {
    const int widx = static_cast<int>(geo.words.size());
    geo.words.push_back(w);
    // p-prefix index in enumeration order (words are enumerated
    // lexicographically, so the prefix index is given by the leading digits).
    long prefix = 0;
    for (int lvl = 0; lvl < p; ++lvl) {
      const auto it =
          std::lower_bound(perms.begin(), perms.end(), w.word[lvl]);
      prefix = prefix * perm_count + (it - perms.begin());
    }
    geo.word_samples.emplace_back();
    for (auto& x : tile_sample_coords(b, k, m_tile))
      geo.word_samples[widx].push_back(register_point(std::move(x)));
    geo.word_vertices.emplace_back();
    for (int i = 0; i <= k; ++i) {
      std::vector<Rat> x = b.column(i);
      const int id = register_point(std::move(x));
      geo.word_vertices[widx].push_back(id);
      if (static_cast<int>(vertex_cover_sets.size()) <= id)
        vertex_cover_sets.resize(id + 1);
      vertex_cover_sets[id].insert(static_cast<int>(prefix));
    }
  }
  vertex_cover_sets.resize(geo.sample_coords.size());
  geo.vertex_cover.reserve(vertex_cover_sets.size());
  for (auto& s : vertex_cover_sets)
    geo.vertex_cover.emplace_back(s.begin(), s.end());
  return geo;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Planner.

/// Searches the smallest subdivision depth p such that every enlarged little
/// p-simplex admits a resolvent radius: a gap of the requested margin among
/// all sampled eigenvalue norms over the enlargement (fine-tile samples plus
/// the family's own grid points), chosen so that no sampled norm crosses the
/// radius inside any single fine tile (the rank of the threshold bundle is
/// then constant over each fine tile at this sampling resolution). The
/// enlargement slack is computed exactly so that every fine simplex meeting
/// the tile is contained, which is the neighbor-containment condition.
inline ResolventPlan plan_resolvent_subdivision(
    const family::FieldTheoryFamily& fam, double min_margin, int p_max,
    const PlanOptions& opts = {}) {
  const int k = fam.grid.k;

  // Configurations of the family's own grid.
  std::vector<std::vector<Rat>> grid_rat;
  std::vector<RealVector> grid_dbl;
  std::vector<std::vector<double>> grid_norms;
  for (int i = 0; i < fam.grid.size(); ++i) {
    grid_rat.push_back(detail::rat_coords_from_grid(fam.grid, i));
    grid_dbl.push_back(fam.grid.points[i]);
    std::vector<double> norms;
    if (fam.fibersV[i].rank() > 0) {
      const auto cfg = spectral::config_from_matrix(fam.semigroup(i, 1.0).A,
                                                    opts.cluster_tol);
      for (const auto& pt : cfg.points)
        for (int t = 0; t < pt.multiplicity; ++t)
          norms.push_back(std::abs(pt.value));
    }
    grid_norms.push_back(std::move(norms));
  }

  std::string last_failure = "no candidate depth admitted a gap";
  for (int p = 0; p <= p_max; ++p) {
    const int q = (p == 0) ? 0 : p + opts.q_offset;
    auto geo = detail::build_fine_geometry(k, p, q, opts.m_tile);

    std::vector<CoverElement> cover;
    for (auto& [w, b] : simplicial::enumerate_with_maps(k, p))
      cover.push_back(detail::make_cover_element(w, b));

    // Incident fine words per cover element, via vertex incidence.
    std::vector<std::vector<int>> incident(cover.size());
    for (std::size_t w = 0; w < geo.words.size(); ++w) {
      std::set<int> touched;
      for (int v : geo.word_vertices[w])
        for (int c : geo.vertex_cover[v]) touched.insert(c);
      for (int c : touched) incident[c].push_back(static_cast<int>(w));
    }

    // Exact slack: the enlargement must contain every incident fine tile.
    for (std::size_t c = 0; c < cover.size(); ++c) {
      Rat slack(1, 4L * fam.grid.m); // at least one grid cell in pullback
      for (int w : incident[c])
        for (int sid : geo.word_samples[w])
          for (const auto& y : cover[c].inverse.apply(geo.sample_coords[sid]))
            if (-y > slack) slack = -y;
      cover[c].slack = slack;
    }

    // Sampled eigenvalue norms at every fine sample point.
    std::vector<std::vector<double>> sample_norms(geo.sample_coords.size());
    eft::detail::parallel_for(geo.sample_coords.size(), [&](std::size_t i) {
      const auto cfg = fam.config_at(geo.sample_dbl[i], opts.cluster_tol);
      for (const auto& pt : cfg.points)
        for (int t = 0; t < pt.multiplicity; ++t)
          sample_norms[i].push_back(std::abs(pt.value));
    });

    bool all_ok = true;
    for (std::size_t c = 0; c < cover.size() && all_ok; ++c) {
      // Norm pool over the enlargement: incident fine samples plus grid
      // points inside U.
      std::vector<double> pool{0.0, 1.0};
      std::set<int> seen;
      for (int w : incident[c])
        for (int sid : geo.word_samples[w])
          if (seen.insert(sid).second)
            for (double n : sample_norms[sid])
              if (n < 1.0) pool.push_back(n);
      for (int gi = 0; gi < fam.grid.size(); ++gi)
        if (detail::tile_contains(cover[c], grid_rat[gi], grid_dbl[gi], true))
          for (double n : grid_norms[gi])
            if (n < 1.0) pool.push_back(n);
      std::sort(pool.begin(), pool.end());

      // Candidate radii: gaps with enough margin, best first; a candidate is
      // admissible when no incident fine tile has sampled norms on both
      // sides of it.
      std::vector<std::pair<double, double>> cands; // (margin, mu)
      for (std::size_t i = 0; i + 1 < pool.size(); ++i) {
        const double w = pool[i + 1] - pool[i];
        if (w / 2 >= min_margin)
          cands.emplace_back(w / 2, 0.5 * (pool[i] + pool[i + 1]));
      }
      std::sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second > b.second;
      });
      bool found = false;
      for (const auto& [margin, mu] : cands) {
        bool constant = true;
        for (int w : incident[c]) {
          int count0 = -1;
          for (int sid : geo.word_samples[w]) {
            int count = 0;
            for (double n : sample_norms[sid]) count += (n > mu);
            if (count0 < 0) count0 = count;
            if (count != count0) {
              constant = false;
              break;
            }
          }
          if (!constant) break;
        }
        if (constant) {
          cover[c].mu = mu;
          cover[c].margin = margin;
          found = true;
          break;
        }
      }
      if (!found) {
        last_failure =
            "cover element " + std::to_string(c) + " at depth p=" +
            std::to_string(p) + ": no admissible radius with margin " +
            eft::detail::fmt_double(min_margin);
        all_ok = false;
      }
    }
    if (!all_ok) continue;

    ResolventPlan plan;
    plan.k = k;
    plan.p = p;
    plan.q = q;
    plan.m_tile = opts.m_tile;
    plan.cover = std::move(cover);
    return plan;
  }
  throw ExhaustedError(
      "plan_resolvent_subdivision: no depth p <= " + std::to_string(p_max) +
      " admits resolvent data at this resolution (" + last_failure +
      "); raise the grid resolution m or relax the margin");
}

// ---------------------------------------------------------------------------
// Vertex thresholds.

struct ThresholdData {
  std::vector<double> lambda; // k+1 values, non-increasing along the vertices
  std::vector<double> margin; // margin of the cover element realizing each max
};

/// lambda_i = max over cover elements whose closed tile contains vertex i of
/// b_J. The maximum exists because the tiles tile the simplex.
inline ThresholdData vertex_thresholds(const ResolventPlan& plan,
                                       const simplicial::SubdivisionWord& J) {
  if (J.k != plan.k || J.depth() != plan.q)
    throw DimensionError("vertex_thresholds: word does not match plan");
  const auto b = simplicial::compose_word(J);
  ThresholdData out;
  for (int i = 0; i <= plan.k; ++i) {
    const auto x = b.column(i);
    const RealVector xd = detail::to_dbl(x);
    double best = -1, bestmargin = 0;
    for (const auto& ce : plan.cover) {
      if (!detail::tile_contains(ce, x, xd, false)) continue;
      if (ce.mu > best) {
        best = ce.mu;
        bestmargin = ce.margin;
      }
    }
    if (best < 0) throw Error("vertex_thresholds: vertex outside every tile");
    out.lambda.push_back(best);
    out.margin.push_back(bestmargin);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Spectral data per sample point, shared by bundles and involutions.

struct SpectralData {
  GradedFrame fiber; // ambient frame at the sample
  Matrix D;          // odd generator, fiber coordinates
  struct Cluster {
    Complex center;
    Matrix basis; // fiber coordinates, graded columns
    std::vector<Parity> parity;
  };
  std::vector<Cluster> clusters;
};

inline SpectralData spectral_data_at(const family::FieldTheoryFamily& fam,
                                     const RealVector& x, double cluster_tol) {
  const family::PointSample s = fam.at(x);
  SpectralData sd;
  sd.fiber = s.frameV;
  sd.D = s.DV;
  if (s.frameV.rank() == 0) return sd;
  const Matrix a1 =
      superlin::exp_semigroup({s.DV, s.frameV.column_parity}, 1.0).A;
  for (auto& [cl, par] :
       superlin::graded_eigenspaces(a1, s.frameV.column_parity, cluster_tol))
    sd.clusters.push_back({cl.center, cl.basis, par});
  return sd;
}

/// Invariant subspace of A(1) for eigenvalue norms > lambda, as an ambient
/// graded frame. Throws when some eigenvalue norm sits within margin_floor
/// of the threshold.
inline GradedFrame threshold_frame(const SpectralData& sd, double lambda,
                                   double margin_floor) {
  int rank = 0;
  for (const auto& c : sd.clusters) {
    const double n = std::abs(c.center);
    if (std::abs(n - lambda) < margin_floor)
      throw Error("threshold_frame: eigenvalue norm " +
                  eft::detail::fmt_double(n) + " within margin of lambda " +
                  eft::detail::fmt_double(lambda));
    if (n > lambda) rank += static_cast<int>(c.basis.cols());
  }
  Matrix cols(sd.fiber.ambient_dim(), rank);
  std::vector<Parity> par;
  int at = 0;
  for (const auto& c : sd.clusters) {
    if (std::abs(c.center) <= lambda) continue;
    cols.middleCols(at, c.basis.cols()) = sd.fiber.columns * c.basis;
    at += static_cast<int>(c.basis.cols());
    par.insert(par.end(), c.parity.begin(), c.parity.end());
  }
  return {cols, par};
}

/// Band with an odd involution: eigenvalue norms of A(1) strictly between lo
/// and hi, with alpha = sign(Re) of the generator on the band.
struct BandData {
  GradedFrame frame; // ambient
  Matrix alpha;      // band coordinates
};

namespace detail {

/// sign(Re) spectral involution of a matrix with no eigenvalues near the
/// imaginary axis: Schur reordering plus a small Sylvester solve gives the
/// exact spectral projector even for defective matrices.
inline Matrix sign_re_involution(const Matrix& m, double re_floor = 1e-10) {
  const int n = static_cast<int>(m.rows());
  if (n == 0) return m;
  Eigen::ComplexSchur<Matrix> schur(m, true);
  if (schur.info() != Eigen::Success)
    throw Error("sign_re_involution: Schur failed");
  Matrix t = schur.matrixT(), u = schur.matrixU();
  std::vector<char> sel(n, 0);
  int npos = 0;
  for (int i = 0; i < n; ++i) {
    if (std::abs(t(i, i).real()) <= re_floor)
      throw Error("sign_re_involution: eigenvalue with |Re| <= floor (" +
                  eft::detail::fmt_double(t(i, i).real()) + ")");
    if (t(i, i).real() > 0) {
      sel[i] = 1;
      ++npos;
    }
  }
  superlin::detail::schur_move_selected_front(t, u, sel);
  const int nneg = n - npos;
  Matrix r = Matrix::Zero(npos, nneg);
  if (npos > 0 && nneg > 0) {
    const Matrix tpp = t.topLeftCorner(npos, npos);
    const Matrix tmm = t.bottomRightCorner(nneg, nneg);
    const Matrix x = t.topRightCorner(npos, nneg);
    // The spectral projector along the splitting is [[I, R], [0, 0]] with
    // tpp * r - r * tmm = x; solve via the Kronecker system.
    Matrix sys = Matrix::Zero(npos * nneg, npos * nneg);
    Vector rhs(npos * nneg);
    for (int j = 0; j < nneg; ++j)
      for (int i = 0; i < npos; ++i) {
        const int row = j * npos + i;
        rhs(row) = x(i, j);
        for (int a = 0; a < npos; ++a) sys(row, j * npos + a) += tpp(i, a);
        for (int b = 0; b < nneg; ++b) sys(row, b * npos + i) -= tmm(b, j);
      }
    const Vector vec = sys.partialPivLu().solve(rhs);
    for (int j = 0; j < nneg; ++j)
      for (int i = 0; i < npos; ++i) r(i, j) = vec(j * npos + i);
  }
  Matrix alpha_schur = Matrix::Zero(n, n);
  alpha_schur.topLeftCorner(npos, npos) = Matrix::Identity(npos, npos);
  alpha_schur.bottomRightCorner(nneg, nneg) = -Matrix::Identity(nneg, nneg);
  alpha_schur.topRightCorner(npos, nneg) = 2.0 * r;
  return u * alpha_schur * u.adjoint();
}

} // namespace detail

inline BandData band_data(const SpectralData& sd, double lo, double hi,
                          double margin_floor) {
  int rank = 0;
  for (const auto& c : sd.clusters) {
    const double n = std::abs(c.center);
    if (std::abs(n - lo) < margin_floor || std::abs(n - hi) < margin_floor)
      throw Error("band_data: eigenvalue norm within margin of a threshold");
    if (n > lo && n < hi) rank += static_cast<int>(c.basis.cols());
  }
  BandData band;
  Matrix basis(static_cast<int>(sd.D.rows()), rank); // fiber coordinates
  std::vector<Parity> par;
  int at = 0;
  for (const auto& c : sd.clusters) {
    const double n = std::abs(c.center);
    if (!(n > lo && n < hi)) continue;
    basis.middleCols(at, c.basis.cols()) = c.basis;
    at += static_cast<int>(c.basis.cols());
    par.insert(par.end(), c.parity.begin(), c.parity.end());
  }
  band.frame = {sd.fiber.columns * basis, par};
  if (rank == 0) {
    band.alpha = Matrix(0, 0);
    return band;
  }
  const Matrix dband = basis.adjoint() * sd.D * basis;
  band.alpha = detail::sign_re_involution(dband);
  // The two halves must balance; the generator is odd.
  const double tr = std::abs(band.alpha.trace());
  if (tr > 1e-8)
    throw Error("band_data: +/- eigenspaces of the involution unbalanced");
  return band;
}

// ---------------------------------------------------------------------------
// Public per-region operations (sampled over one little simplex).

inline std::vector<RealVector> tile_sample_points(
    const simplicial::SubdivisionWord& J, int m_tile) {
  const auto b = simplicial::compose_word(J);
  std::vector<RealVector> out;
  for (auto& x : detail::tile_sample_coords(b, J.k, m_tile))
    out.push_back(detail::to_dbl(x));
  return out;
}

namespace detail {

inline Matrix orthonormalize(const Matrix& m) {
  if (m.cols() == 0) return m;
  Eigen::HouseholderQR<Matrix> qr(m);
  Matrix q = qr.householderQ() * Matrix::Identity(m.rows(), m.cols());
  return q;
}

/// Aligns `next` to `prev` per parity block by projecting the previous frame
/// onto the new invariant subspace and re-orthonormalizing.
inline GradedFrame align_frame(const GradedFrame& prev, const GradedFrame& next) {
  if (prev.rank() != next.rank()) return next;
  Matrix cols = next.columns;
  for (Parity which : {Parity::Even, Parity::Odd}) {
    std::vector<int> pi, ni;
    for (int j = 0; j < prev.rank(); ++j)
      if (prev.column_parity[j] == which) pi.push_back(j);
    for (int j = 0; j < next.rank(); ++j)
      if (next.column_parity[j] == which) ni.push_back(j);
    if (pi.size() != ni.size() || ni.empty()) continue;
    Matrix np(next.ambient_dim(), ni.size()), pp(next.ambient_dim(), pi.size());
    for (std::size_t j = 0; j < ni.size(); ++j) np.col(j) = next.columns.col(ni[j]);
    for (std::size_t j = 0; j < pi.size(); ++j) pp.col(j) = prev.columns.col(pi[j]);
    const Matrix proj = np * (np.adjoint() * pp);
    Eigen::JacobiSVD<Matrix> svd(proj);
    if (svd.singularValues().minCoeff() < 0.2) continue; // keep fresh basis
    const Matrix q = orthonormalize(proj);
    for (std::size_t j = 0; j < ni.size(); ++j) cols.col(ni[j]) = q.col(j);
  }
  GradedFrame out{cols, next.column_parity};
  return out;
}

} // namespace detail

/// Frame field of the invariant subspace for eigenvalue norms > lambda over
/// the sampled little simplex; rank must be constant across the samples.
inline std::vector<GradedFrame> threshold_subbundle(
    const std::vector<SpectralData>& samples, double lambda,
    double margin_floor) {
  std::vector<GradedFrame> out;
  for (const auto& sd : samples) {
    GradedFrame f = threshold_frame(sd, lambda, margin_floor);
    if (!out.empty()) {
      if (f.rank() != out.back().rank())
        throw Error("threshold_subbundle: rank not constant over the region");
      f = detail::align_frame(out.back(), f);
    }
    out.push_back(std::move(f));
  }
  return out;
}

inline std::vector<BandData> spectral_involution(
    const std::vector<SpectralData>& samples, double lo, double hi,
    double margin_floor) {
  if (hi >= 1.0 + 1e-12)
    throw Error("spectral_involution: upper threshold must stay below 1");
  std::vector<BandData> out;
  for (const auto& sd : samples) {
    BandData b = band_data(sd, lo, hi, margin_floor);
    if (!out.empty() && b.frame.rank() != out.back().frame.rank())
      throw Error("spectral_involution: band rank not constant over region");
    out.push_back(std::move(b));
  }
  return out;
}

/// Convenience overloads sampling a family over one little simplex.
inline std::vector<GradedFrame> threshold_subbundle(
    const family::FieldTheoryFamily& fam, double lambda,
    const simplicial::SubdivisionWord& J, int m_tile, double margin_floor,
    double cluster_tol = 1e-6) {
  std::vector<SpectralData> samples;
  for (const auto& x : tile_sample_points(J, m_tile))
    samples.push_back(spectral_data_at(fam, x, cluster_tol));
  return threshold_subbundle(samples, lambda, margin_floor);
}

inline std::vector<BandData> spectral_involution(
    const family::FieldTheoryFamily& fam, double lo, double hi,
    const simplicial::SubdivisionWord& J, int m_tile, double margin_floor,
    double cluster_tol = 1e-6) {
  std::vector<SpectralData> samples;
  for (const auto& x : tile_sample_points(J, m_tile))
    samples.push_back(spectral_data_at(fam, x, cluster_tol));
  return spectral_involution(samples, lo, hi, margin_floor);
}

// ---------------------------------------------------------------------------
// Cocycle data.

struct CocycleSimplex {
  simplicial::SubdivisionWord word;
  std::vector<double> lambdas;                    // k+1, non-increasing
  std::vector<std::vector<GradedFrame>> bundles;  // [level i][sample]
  std::vector<std::vector<BandData>> involutions; // [i-1][sample], i = 1..k
};

struct Cocycle {
  int k = 0, q = 0, m_tile = 1;
  int N = 0;
  std::vector<CocycleSimplex> simplices;

  std::vector<int> rank_profile(std::size_t s) const {
    std::vector<int> r;
    for (const auto& lvl : simplices[s].bundles)
      r.push_back(lvl.empty() ? 0 : lvl.front().rank());
    return r;
  }
};

struct ExtractOptions {
  double cluster_tol = 1e-6;
  double face_tol = 1e-6; // span agreement at shared samples (radians)
  bool check_faces = true;
};

/// Construction of the subdivided cocycle: per little q-simplex, thresholds
/// from the cover radii at its vertices, nested threshold bundles, and
/// sign(Re) involutions on the bands between consecutive thresholds.
inline Cocycle extract_cocycle(const family::FieldTheoryFamily& fam,
                               const ResolventPlan& plan,
                               const ExtractOptions& opts = {}) {
  Cocycle out;
  out.k = plan.k;
  out.q = plan.q;
  out.m_tile = plan.m_tile;
  out.N = fam.space.N;

  auto geo = detail::build_fine_geometry(plan.k, plan.p, plan.q, plan.m_tile);

  // Per-vertex thresholds: max radius over the cover tiles meeting the
  // vertex (the incidence was computed from prefixes, which enumerates the
  // cover in the same order as the plan).
  std::vector<double> vertex_lambda(geo.sample_coords.size(), -1.0);
  std::vector<double> vertex_margin(geo.sample_coords.size(), 0.0);
  for (std::size_t v = 0; v < geo.vertex_cover.size(); ++v) {
    for (int c : geo.vertex_cover[v]) {
      if (plan.cover[c].mu > vertex_lambda[v]) {
        vertex_lambda[v] = plan.cover[c].mu;
        vertex_margin[v] = plan.cover[c].margin;
      }
    }
  }

  // Spectral data at every distinct sample point, in parallel.
  std::vector<SpectralData> data(geo.sample_coords.size());
  eft::detail::parallel_for(geo.sample_coords.size(), [&](std::size_t i) {
    data[i] = spectral_data_at(fam, geo.sample_dbl[i], opts.cluster_tol);
  });

  out.simplices.resize(geo.words.size());
  eft::detail::parallel_for(geo.words.size(), [&](std::size_t w) {
    CocycleSimplex cs;
    cs.word = geo.words[w];
    try {
      std::vector<double> margins;
      for (int i = 0; i <= plan.k; ++i) {
        const int vid = geo.word_vertices[w][i];
        if (vertex_lambda[vid] < 0)
          throw Error("vertex outside every cover tile");
        cs.lambdas.push_back(vertex_lambda[vid]);
        margins.push_back(vertex_margin[vid]);
      }
      std::vector<SpectralData> samples;
      for (int sid : geo.word_samples[w]) samples.push_back(data[sid]);

      for (int i = 0; i <= plan.k; ++i)
        cs.bundles.push_back(
            threshold_subbundle(samples, cs.lambdas[i], 0.5 * margins[i]));
      for (int i = 1; i <= plan.k; ++i) {
        const double floor = 0.5 * std::min(margins[i], margins[i - 1]);
        cs.involutions.push_back(spectral_involution(
            samples, cs.lambdas[i], cs.lambdas[i - 1], floor));
      }
    } catch (const Error& e) {
      throw Error("extract_cocycle: little simplex " + std::to_string(w) +
                  ": " + e.what());
    }
    out.simplices[w] = std::move(cs);
  });

  // Shared faces: wherever two little simplices sample the same point with
  // the same threshold, the bundle spans must agree.
  if (opts.check_faces) {
    std::map<int, std::vector<std::pair<std::size_t, std::size_t>>> shared;
    for (std::size_t w = 0; w < geo.words.size(); ++w)
      for (std::size_t s = 0; s < geo.word_samples[w].size(); ++s)
        shared[geo.word_samples[w][s]].emplace_back(w, s);
    for (const auto& [sid, occ] : shared) {
      if (occ.size() < 2) continue;
      const auto& [w0, s0] = occ.front();
      for (std::size_t aidx = 1; aidx < occ.size(); ++aidx) {
        const auto& [wa, sa] = occ[aidx];
        for (int i = 0; i <= plan.k; ++i)
          for (int j = 0; j <= plan.k; ++j) {
            if (std::abs(out.simplices[w0].lambdas[i] -
                         out.simplices[wa].lambdas[j]) > 1e-12)
              continue;
            const double ang = family::detail::span_angle(
                out.simplices[w0].bundles[i][s0].columns,
                out.simplices[wa].bundles[j][sa].columns);
            if (ang > opts.face_tol)
              throw Error("extract_cocycle: face mismatch between simplices " +
                          std::to_string(w0) + " and " + std::to_string(wa));
          }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Well-formedness of cocycle data.

inline Report cocycle_wellformed(const Cocycle& c, double tol = 1e-8) {
  Report rep;
  bool lambda_ok = true, rank_ok = true;
  double nest_resid = 0, alpha_inv = 0, alpha_odd = 0, alpha_tr = 0;
  double indep = 1.0;
  for (const auto& cs : c.simplices) {
    for (std::size_t i = 1; i < cs.lambdas.size(); ++i)
      if (cs.lambdas[i] > cs.lambdas[i - 1] + 1e-15) lambda_ok = false;
    for (const auto& lvl : cs.bundles)
      for (const auto& f : lvl)
        if (f.rank() != lvl.front().rank()) rank_ok = false;
    const std::size_t ns = cs.bundles.empty() ? 0 : cs.bundles[0].size();
    for (std::size_t s = 0; s < ns; ++s) {
      for (std::size_t i = 1; i < cs.bundles.size(); ++i) {
        const auto& small = cs.bundles[i - 1][s];
        const auto& big = cs.bundles[i][s];
        if (small.rank() == 0) continue;
        const Matrix p = big.columns * big.columns.adjoint();
        nest_resid = std::max(
            nest_resid,
            (small.columns - p * small.columns).cwiseAbs().maxCoeff());
      }
      for (std::size_t i = 0; i < cs.involutions.size(); ++i) {
        const auto& band = cs.involutions[i][s];
        const int b = band.frame.rank();
        if (b == 0) continue;
        alpha_inv = std::max(
            alpha_inv, (band.alpha * band.alpha - Matrix::Identity(b, b))
                           .cwiseAbs()
                           .maxCoeff());
        alpha_odd = std::max(
            alpha_odd,
            oddness_defect(band.alpha, band.frame.fiber_grading()));
        alpha_tr = std::max(alpha_tr, std::abs(band.alpha.trace()));
        // Complement of bundles[i] inside bundles[i+1].
        const auto& small = cs.bundles[i][s];
        const auto& big = cs.bundles[i + 1][s];
        const Matrix p = big.columns * big.columns.adjoint();
        nest_resid = std::max(
            nest_resid,
            (band.frame.columns - p * band.frame.columns).cwiseAbs().maxCoeff());
        if (small.rank() + b != big.rank()) rank_ok = false;
        if (small.rank() > 0) {
          Matrix joint(c.N, small.rank() + b);
          joint.leftCols(small.rank()) = small.columns;
          joint.rightCols(b) = band.frame.columns;
          Eigen::JacobiSVD<Matrix> svd(joint);
          indep = std::min(indep, svd.singularValues().minCoeff());
        }
      }
    }
  }
  rep.add("lambda sequence non-increasing", lambda_ok, lambda_ok ? 0 : 1, 0.5);
  rep.add("ranks constant over little simplices", rank_ok, rank_ok ? 0 : 1, 0.5);
  rep.add("bundles nested", nest_resid <= tol, nest_resid, tol);
  rep.add("involutions square to identity", alpha_inv <= tol, alpha_inv, tol);
  rep.add("involutions odd", alpha_odd <= tol, alpha_odd, tol);
  rep.add("involution +/- dimensions balanced", alpha_tr <= tol, alpha_tr, tol);
  rep.add("bands independent of the smaller bundle", indep > 1e-6, indep, 1e-6);
  return rep;
}

} // namespace eft::extract
