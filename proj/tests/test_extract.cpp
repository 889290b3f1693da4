#include <catch2/catch_amalgamated.hpp>

#include "eft/extract.hpp"
#include "eft/testing.hpp"

using namespace eft;
using namespace eft::extract;
using eft::testing::Rng;

namespace {

family::FieldTheoryFamily constant_exponential(int k, int m,
                                               const GradedFrame& frame,
                                               const Matrix& d) {
  family::FieldTheoryFamily fam;
  fam.space = SuperSpace(16);
  fam.grid = family::BaryGrid::standard(k, m, true);
  auto build = [frame, d](const RealVector&) {
    family::PointSample s;
    s.frameV = frame;
    s.frameW = frame;
    s.DV = d;
    s.DW = d.transpose();
    s.L = Matrix::Identity(frame.rank(), frame.rank());
    return s;
  };
  for (const auto& x : fam.grid.points) {
    const auto s = build(x);
    fam.fibersV.push_back({s.frameV, s.DV, {}});
    fam.fibersW.push_back({s.frameW, s.DW, {}});
    fam.pairing.push_back(s.L);
  }
  fam.evaluator = build;
  return fam;
}

Matrix swap_scaled(double c) {
  Matrix d(2, 2);
  d << 0, c, c, 0;
  return d;
}

SpectralData fake_data(const std::vector<double>& norms) {
  SpectralData sd;
  const int n = static_cast<int>(norms.size());
  sd.fiber = GradedFrame(Matrix::Identity(16, 16).leftCols(n),
                         std::vector<Parity>(n, Parity::Even));
  sd.D = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    SpectralData::Cluster c;
    c.center = norms[i];
    c.basis = Matrix::Zero(n, 1);
    c.basis(i, 0) = 1.0;
    c.parity = {Parity::Even};
    sd.clusters.push_back(std::move(c));
  }
  return sd;
}

} // namespace

TEST_CASE("planner on a constant family") {
  Rng rng(301);
  testing::FramePool pool(SuperSpace(16), rng);
  const GradedFrame frame = pool.take(1, 1);
  // D = swap: A(1) = e^{-1} Id.
  const auto fam = constant_exponential(1, 4, frame, swap_scaled(1.0));
  const auto plan = plan_resolvent_subdivision(fam, 0.05, 3);
  CHECK(plan.p == 0);
  CHECK(plan.q == 0);
  REQUIRE(plan.cover.size() == 1);
  // Widest gap between the e^{-1} cluster and the sentinel 1.
  const double e1 = std::exp(-1.0);
  CHECK(plan.cover[0].mu == Catch::Approx(0.5 * (e1 + 1.0)).margin(1e-12));
  CHECK(plan.cover[0].margin == Catch::Approx(0.5 * (1.0 - e1)).margin(1e-12));

  const auto th = vertex_thresholds(plan, {1, {}});
  CHECK(th.lambda == std::vector<double>{plan.cover[0].mu, plan.cover[0].mu});
}

TEST_CASE("planner reports exhaustion when the spectrum is too dense") {
  // Five bands at norms 0.1, 0.3, ..., 0.9 at every point: the widest gap in
  // (0, 1) has margin 0.1, below the requested minimum, at every depth.
  Rng rng(303);
  testing::FramePool pool(SuperSpace(16), rng);
  const GradedFrame frame = pool.take(5, 5);
  Matrix d = Matrix::Zero(10, 10);
  for (int j = 0; j < 5; ++j) {
    const double c = std::sqrt(-std::log(0.1 + 0.2 * j));
    d(j, 5 + j) = c;
    d(5 + j, j) = c;
  }
  const auto fam = constant_exponential(1, 4, frame, d);
  CHECK_THROWS_AS(plan_resolvent_subdivision(fam, 0.12, 1), ExhaustedError);
}

TEST_CASE("vertex thresholds take the max over incident tiles") {
  // Hand-built plan: k = 1, p = 1, radii 0.3 (left tile) and 0.6 (right).
  ResolventPlan plan;
  plan.k = 1;
  plan.p = 1;
  plan.q = 2;
  plan.m_tile = 1;
  int idx = 0;
  for (auto& [w, b] : simplicial::enumerate_with_maps(1, 1)) {
    auto ce = extract::detail::make_cover_element(w, b);
    ce.mu = (idx == 0) ? 0.3 : 0.6;
    ce.margin = 0.05;
    plan.cover.push_back(std::move(ce));
    ++idx;
  }
  // Words at depth 2; find one whose vertex lands on the shared barycenter.
  bool found = false;
  for (const auto& J : simplicial::enumerate_subdivision_simplices(1, 2)) {
    const auto b = simplicial::compose_word(J);
    const auto th = vertex_thresholds(plan, J);
    for (int i = 0; i <= 1; ++i) {
      if (b.column(i) == std::vector<Rat>{Rat(1, 2), Rat(1, 2)}) {
        CHECK(th.lambda[i] == 0.6);
        found = true;
      }
    }
    // Monotone non-increasing along the vertex order.
    CHECK(th.lambda[0] >= th.lambda[1]);
  }
  CHECK(found);
}

TEST_CASE("threshold frames from spectral data") {
  const auto sd = fake_data({0.9, 0.1});
  CHECK(threshold_frame(sd, 0.5, 0.05).rank() == 1);
  CHECK(threshold_frame(sd, 0.05, 0.01).rank() == 2);
  CHECK(threshold_frame(sd, 0.95, 0.01).rank() == 0);
  CHECK_THROWS_AS(threshold_frame(sd, 0.9, 0.05), Error);

  // Rank must stay constant across a region.
  CHECK_THROWS_AS(
      threshold_subbundle({fake_data({0.9, 0.1}), fake_data({0.9, 0.9})}, 0.5,
                          0.01),
      Error);
}

TEST_CASE("sign-of-real-part involution") {
  SECTION("swap generator gives the swap involution") {
    const Matrix alpha = extract::detail::sign_re_involution(swap_scaled(2.5));
    CHECK((alpha - swap_scaled(1.0)).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SECTION("imaginary spectrum is refused") {
    Matrix rot(2, 2);
    rot << 0, 1, -1, 0; // eigenvalues +/- i
    CHECK_THROWS_AS(extract::detail::sign_re_involution(rot), Error);
  }
  SECTION("random sector generators give odd involutions") {
    Rng rng(307);
    for (int trial = 0; trial < 10; ++trial) {
      const Matrix d = testing::random_sector_band(2, rng);
      const Matrix alpha = extract::detail::sign_re_involution(d);
      CHECK((alpha * alpha - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() <=
            1e-10);
      std::vector<Parity> par{Parity::Even, Parity::Even, Parity::Odd,
                              Parity::Odd};
      CHECK(oddness_defect(alpha, grading_involution(par)) <= 1e-8);
      CHECK((alpha * d - d * alpha).cwiseAbs().maxCoeff() <= 1e-8);
    }
  }
}

TEST_CASE("band data on a two-norm spectrum") {
  Rng rng(311);
  testing::FramePool pool(SuperSpace(16), rng);
  const GradedFrame frame = pool.take(1, 1);
  const auto fam = constant_exponential(1, 2, frame, swap_scaled(1.0));
  RealVector x(2);
  x << 0.5, 0.5;
  const auto sd = spectral_data_at(fam, x, 1e-6);
  const double e1 = std::exp(-1.0);
  const auto band = band_data(sd, e1 - 0.1, e1 + 0.1, 0.01);
  CHECK(band.frame.rank() == 2);
  CHECK((band.alpha * band.alpha - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() <=
        1e-10);
  // Empty band away from the cluster.
  const auto none = band_data(sd, 0.8, 0.9, 0.01);
  CHECK(none.frame.rank() == 0);
}

TEST_CASE("extraction on a topological theory: constant vertex cocycle") {
  Rng rng(313);
  testing::FramePool pool(SuperSpace(16), rng);
  const GradedFrame frame = pool.take(2, 1);
  const auto fam = constant_exponential(1, 4, frame, Matrix::Zero(3, 3));
  const auto plan = plan_resolvent_subdivision(fam, 0.05, 2);
  const auto cocycle = extract_cocycle(fam, plan);
  const Report wf = cocycle_wellformed(cocycle);
  INFO(to_string(wf));
  CHECK(wf.pass());
  for (const auto& cs : cocycle.simplices) {
    for (const auto& lvl : cs.bundles)
      for (const auto& f : lvl) CHECK(f.rank() == 3); // everything at norm 1
    for (const auto& band : cs.involutions)
      for (const auto& b : band) CHECK(b.frame.rank() == 0);
  }
}

TEST_CASE("extraction on the example path theory") {
  const auto fam = family::example_path_theory(8);
  const auto plan = plan_resolvent_subdivision(fam, 0.02, 4);
  const auto cocycle = extract_cocycle(fam, plan);
  const Report wf = cocycle_wellformed(cocycle);
  INFO(to_string(wf));
  CHECK(wf.pass());

  // The fiber ranks 0 (near x = 0) and 2 (near x = 1) both appear, and some
  // little simplex carries a rank-2 band: the spectrum entering from the
  // origin.
  int rank0 = 0, rank2 = 0, bands = 0;
  for (std::size_t s = 0; s < cocycle.simplices.size(); ++s) {
    const auto prof = cocycle.rank_profile(s);
    if (prof.front() == 0) ++rank0;
    if (prof.back() == 2) ++rank2;
    for (const auto& band : cocycle.simplices[s].involutions)
      for (const auto& b : band)
        if (b.frame.rank() == 2) {
          ++bands;
          break;
        }
  }
  CHECK(rank0 > 0);
  CHECK(rank2 > 0);
  CHECK(bands > 0);
}

TEST_CASE("cocycle wellformedness catches mutations") {
  Rng rng(317);
  testing::FramePool pool(SuperSpace(16), rng);
  const GradedFrame frame = pool.take(1, 1);
  const auto fam = constant_exponential(1, 4, frame, swap_scaled(1.0));
  const auto plan = plan_resolvent_subdivision(fam, 0.05, 2);
  auto cocycle = extract_cocycle(fam, plan);
  REQUIRE(cocycle_wellformed(cocycle).pass());

  SECTION("increasing lambda sequence") {
    auto broken = cocycle;
    broken.simplices[0].lambdas[0] = 0.1;
    broken.simplices[0].lambdas[1] = 0.9;
    CHECK_FALSE(cocycle_wellformed(broken).pass());
  }
  SECTION("involution that fails to square to the identity") {
    auto broken = cocycle;
    bool mutated = false;
    for (auto& cs : broken.simplices)
      for (auto& band : cs.involutions)
        for (auto& b : band)
          if (b.frame.rank() > 0) {
            b.alpha *= 2.0;
            mutated = true;
          }
    if (mutated) CHECK_FALSE(cocycle_wellformed(broken).pass());
  }
}
