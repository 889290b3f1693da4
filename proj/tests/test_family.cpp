#include <catch2/catch_amalgamated.hpp>

#include "eft/family.hpp"
#include "eft/testing.hpp"

using namespace eft;
using namespace eft::family;
using eft::testing::Rng;

namespace {

/// Constant family over the k-grid with a fixed frame and generator.
FieldTheoryFamily constant_family(int k, int m, const GradedFrame& frame,
                                  const Matrix& d, int N = 16) {
  FieldTheoryFamily fam;
  fam.space = SuperSpace(N);
  fam.grid = BaryGrid::standard(k, m, true);
  auto build = [frame, d](const RealVector&) {
    PointSample s;
    s.frameV = frame;
    s.frameW = frame;
    s.DV = d;
    s.DW = d.transpose();
    s.L = Matrix::Identity(frame.rank(), frame.rank());
    return s;
  };
  for (const auto& x : fam.grid.points) {
    const PointSample s = build(x);
    fam.fibersV.push_back({s.frameV, s.DV, {}});
    fam.fibersW.push_back({s.frameW, s.DW, {}});
    fam.pairing.push_back(s.L);
  }
  fam.evaluator = build;
  return fam;
}

} // namespace

TEST_CASE("barycentric grids") {
  const auto g = BaryGrid::standard(2, 4, false);
  CHECK(g.size() == 15); // C(4+2, 2)
  for (const auto& x : g.points) CHECK(std::abs(x.sum() - 1.0) <= 1e-12);

  const auto gc = BaryGrid::standard(1, 4, true);
  CHECK(gc.collar_width() == Catch::Approx(1.0 / 16).margin(1e-15));
  int collar_count = 0;
  for (bool c : gc.collar) collar_count += c;
  CHECK(collar_count == 2); // one beyond each endpoint
  for (const auto& x : gc.points) CHECK(std::abs(x.sum() - 1.0) <= 1e-12);
}

TEST_CASE("validate_family: topological theory passes") {
  Rng rng(211);
  testing::FramePool pool(SuperSpace(16), rng);
  const GradedFrame frame = pool.take(2, 1);
  const auto fam = constant_family(1, 4, frame, Matrix::Zero(3, 3));
  const Report rep = validate_family(fam);
  INFO(to_string(rep));
  CHECK(rep.pass());
}

TEST_CASE("validate_family: smooth exponential family passes") {
  Rng rng(223);
  testing::FramePool pool(SuperSpace(16), rng);
  const GradedFrame frame = pool.take(2, 2);
  const Matrix d0 = testing::random_odd(2, 2, rng, 0.8).matrix;
  const Matrix d1 = testing::random_odd(2, 2, rng, 0.8).matrix;

  FieldTheoryFamily fam;
  fam.space = SuperSpace(16);
  fam.grid = BaryGrid::standard(1, 6, true);
  auto build = [frame, d0, d1](const RealVector& x) {
    PointSample s;
    s.frameV = frame;
    s.frameW = frame;
    s.DV = (1.0 - x(1)) * d0 + x(1) * d1;
    s.DW = s.DV.transpose();
    s.L = Matrix::Identity(4, 4);
    return s;
  };
  for (const auto& x : fam.grid.points) {
    const PointSample s = build(x);
    fam.fibersV.push_back({s.frameV, s.DV, {}});
    fam.fibersW.push_back({s.frameW, s.DW, {}});
    fam.pairing.push_back(s.L);
  }
  fam.evaluator = build;
  const Report rep = validate_family(fam);
  INFO(to_string(rep));
  CHECK(rep.pass());
}

TEST_CASE("validate_family: inserted kernel breaks the identity limit") {
  Rng rng(227);
  testing::FramePool pool(SuperSpace(16), rng);
  const GradedFrame frame = pool.take(2, 2);
  auto fam = constant_family(1, 1, frame, Matrix::Zero(4, 4));
  fam.generator_given = false;
  fam.custom_semigroup = [](int point, double t) {
    SuperSemigroupElement g;
    g.t = t;
    g.A = Matrix::Identity(4, 4) * std::exp(-t);
    if (point == 1) {
      g.A(2, 2) = 0.0; // rank-2 kernel inserted at one point
      g.A(3, 3) = 0.0;
      g.A(0, 0) = std::exp(-t);
      g.A(1, 1) = std::exp(-t);
    }
    g.B = Matrix::Zero(4, 4);
    return g;
  };
  const Report rep = validate_family(fam);
  CHECK_FALSE(rep.pass());
  bool identity_item_failed = false;
  for (const auto& it : rep.items)
    if (it.name.find("identity limit") != std::string::npos && !it.pass)
      identity_item_failed = true;
  CHECK(identity_item_failed);
}

TEST_CASE("example path theory") {
  const auto fam = example_path_theory(8);

  SECTION("fibers and generator at the strata") {
    // x <= 0: zero fiber, empty spectrum.
    RealVector x0(2);
    x0 << 1.0, 0.0;
    CHECK(fam.at(x0).frameV.rank() == 0);
    CHECK(fam.config_at(x0).points.empty());
    RealVector collar(2);
    collar << 1.0 + 1.0 / 32, -1.0 / 32;
    CHECK(fam.at(collar).frameV.rank() == 0);

    // x = 1: D = 0, A(t) = Id on the (1|1)-plane.
    RealVector x1(2);
    x1 << 0.0, 1.0;
    const auto s1 = fam.at(x1);
    CHECK(s1.frameV.rank() == 2);
    CHECK(s1.DV.cwiseAbs().maxCoeff() == 0.0);
    CHECK(s1.frameV.superdimension() == 0);

    // Small x: generator is 1/x times the swap (beta = 0 on the germ).
    RealVector xs(2);
    xs << 1.0 - 0.125, 0.125;
    CHECK(fam.at(xs).DV(0, 1).real() == Catch::Approx(8.0).margin(1e-12));
  }

  SECTION("supertrace vanishes identically") {
    for (int i = 0; i < fam.point_count(); ++i) {
      if (fam.fibersV[i].rank() == 0) continue;
      for (double t : {0.1, 1.0, 3.0}) {
        const auto g = fam.semigroup(i, t);
        const auto [tr, str] =
            superlin::trace_supertrace(g.A, fam.fibersV[i].frame.column_parity);
        (void)tr;
        CHECK(std::abs(str) <= 1e-12);
      }
    }
  }

  SECTION("validates") {
    const Report rep = validate_family(fam);
    INFO(to_string(rep));
    CHECK(rep.pass());
  }

  SECTION("spectral continuity with the creation-at-origin modulus") {
    const auto fine = example_path_theory(40);
    std::vector<spectral::SpectralConfig> configs;
    const double h = 1.0 / 40;
    for (int i = 0; i <= 40; ++i) {
      RealVector x(2);
      x << 1.0 - i * h, i * h;
      configs.push_back(fine.config_at(x));
    }
    const auto rep = spectral::verify_spectral_continuity(
        configs, h, [](double step) {
          return 20.0 * step + 2.0 * std::exp(-1.0 / (step * step));
        });
    CHECK(rep.pass);

    // The rank-appearance step prices at the origin.
    CHECK(configs[0].points.empty());
    REQUIRE_FALSE(configs[1].points.empty());
    for (const auto& p : configs[1].points) CHECK(std::abs(p.value) <= 1e-6);
  }
}

TEST_CASE("superdimension") {
  Rng rng(229);
  testing::FramePool pool(SuperSpace(16), rng);
  CHECK(superdimension({pool.take(1, 1), Matrix::Zero(2, 2), {}}) == 0);
  CHECK(superdimension({pool.take(2, 0), Matrix::Zero(2, 2), {}}) == 2);
  CHECK(superdimension({GradedFrame(Matrix::Zero(16, 0), {}), Matrix(0, 0), {}}) ==
        0);
}

TEST_CASE("pullback") {
  const auto fam = example_path_theory(8);

  SECTION("identity gives the same family") {
    const auto back =
        pullback_family(fam, SmoothMap::identity(1), fam.grid);
    for (int i = 0; i < fam.point_count(); ++i) {
      CHECK(back.fibersV[i].rank() == fam.fibersV[i].rank());
      if (fam.fibersV[i].rank())
        CHECK((back.fibersV[i].D - fam.fibersV[i].D).cwiseAbs().maxCoeff() <=
              1e-14);
    }
  }

  SECTION("constant map at a vertex gives a constant family") {
    RealVector v1(2);
    v1 << 0.0, 1.0;
    const auto constant = pullback_family(
        fam, SmoothMap::constant(1, v1), BaryGrid::standard(1, 4, false));
    for (int i = 0; i < constant.point_count(); ++i) {
      CHECK(constant.fibersV[i].rank() == 2);
      CHECK(constant.fibersV[i].D.cwiseAbs().maxCoeff() == 0.0);
    }
  }

  SECTION("pullback along a subdivision word preserves ranks pointwise") {
    // Right half [1/2, 1] in the path coordinate: ranks stay 2.
    const simplicial::SubdivisionWord right{1,
                                            {simplicial::Permutation{{1, 0}}}};
    const auto b = simplicial::compose_word(right);
    const auto grid = BaryGrid::standard(1, 4, false);
    const auto part = pullback_family(fam, SmoothMap::affine(b), grid);
    for (int i = 0; i < part.point_count(); ++i) {
      const RealVector mapped = SmoothMap::affine(b).eval(grid.points[i]);
      CHECK(part.fibersV[i].rank() == fam.at(mapped).frameV.rank());
    }
  }

  SECTION("maps out of the sampled region are refused") {
    RealVector outside(2);
    outside << 1.5, -0.5;
    CHECK_THROWS_AS(pullback_family(fam, SmoothMap::constant(1, outside),
                                    BaryGrid::standard(1, 2, false)),
                    Error);
  }
}
