#include <catch2/catch_amalgamated.hpp>

#include <functional>
#include <random>

#include "eft/rational.hpp"
#include "eft/spectral.hpp"
#include "eft/testing.hpp"

using namespace eft;
using namespace eft::spectral;
using eft::testing::Rng;

namespace {

// Brute-force matching oracle: try every partial matching, price unmatched
// points at their distance to the origin, take the min over matchings of the
// max cost. Exponential, fine for <= 6 expanded points.
double oracle_distance(const std::vector<Complex>& a,
                       const std::vector<Complex>& b) {
  std::vector<char> used(b.size(), 0);
  double best = 1e300;
  std::function<void(std::size_t, double)> rec = [&](std::size_t i,
                                                     double cost) {
    if (cost >= best) return;
    if (i == a.size()) {
      double total = cost;
      for (std::size_t j = 0; j < b.size(); ++j)
        if (!used[j]) total = std::max(total, std::abs(b[j]));
      best = std::min(best, total);
      return;
    }
    rec(i + 1, std::max(cost, std::abs(a[i]))); // leave a[i] unmatched
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (used[j]) continue;
      used[j] = 1;
      rec(i + 1, std::max(cost, std::abs(a[i] - b[j])));
      used[j] = 0;
    }
  };
  rec(0, 0.0);
  return best;
}

SpectralConfig make_config(std::vector<std::pair<Complex, int>> pts) {
  SpectralConfig c;
  for (auto& [v, m] : pts) c.points.push_back({v, m});
  return c;
}

SpectralConfig random_config(Rng& rng, int max_points) {
  std::uniform_int_distribution<int> n(0, max_points);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SpectralConfig c;
  const int count = n(rng);
  for (int i = 0; i < count; ++i)
    c.points.push_back({{u(rng), u(rng)}, 1});
  return c;
}

// Exact elementary symmetric polynomials by expanding prod (z - r_i).
std::vector<Rat> elementary_by_expansion(const std::vector<Rat>& roots) {
  std::vector<Rat> coeff{Rat(1)}; // coefficients of prod (z - r), leading first
  for (const Rat& r : roots) {
    std::vector<Rat> next(coeff.size() + 1, Rat(0));
    for (std::size_t i = 0; i < coeff.size(); ++i) {
      next[i] += coeff[i];
      next[i + 1] -= coeff[i] * r;
    }
    coeff = std::move(next);
  }
  // prod (z - r) = z^n - e_1 z^{n-1} + e_2 z^{n-2} - ...
  std::vector<Rat> e;
  for (std::size_t j = 1; j < coeff.size(); ++j)
    e.push_back(j % 2 == 1 ? Rat(-coeff[j]) : coeff[j]);
  return e;
}

} // namespace

TEST_CASE("config distance: pinned examples") {
  const auto c1 = make_config({{{0.3, 0.4}, 1}});
  CHECK(config_distance(c1, c1) == 0.0);
  CHECK(config_distance({}, c1) == Catch::Approx(0.5).margin(1e-14));
  const auto dbl = make_config({{{1.0, 0.0}, 2}});
  const auto split = make_config({{{1.1, 0.0}, 1}, {{0.9, 0.0}, 1}});
  CHECK(config_distance(dbl, split) == Catch::Approx(0.1).margin(1e-12));
}

TEST_CASE("config distance agrees with the brute-force oracle") {
  Rng rng(101);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = random_config(rng, 4);
    const auto b = random_config(rng, 4);
    const double fast = config_distance(a, b);
    const double slow = oracle_distance(a.expanded(), b.expanded());
    CHECK(fast == Catch::Approx(slow).margin(1e-12));
  }
}

TEST_CASE("config distance is a metric") {
  Rng rng(103);
  for (int trial = 0; trial < 60; ++trial) {
    const auto a = random_config(rng, 3);
    const auto b = random_config(rng, 3);
    const auto c = random_config(rng, 3);
    const double dab = config_distance(a, b);
    const double dba = config_distance(b, a);
    const double dac = config_distance(a, c);
    const double dbc = config_distance(b, c);
    CHECK(dab == dba);
    CHECK(dab >= 0);
    CHECK(dac <= dab + dbc + 1e-12);
    CHECK(config_distance(a, a) == 0.0);
  }
}

TEST_CASE("spectra converge as matrices converge") {
  Rng rng(107);
  const Matrix m = testing::random_matrix(4, 4, rng);
  const Matrix noise = testing::random_matrix(4, 4, rng);
  double prev = 1e300;
  for (double eps : {1e-1, 1e-3, 1e-5, 1e-7}) {
    const double d = config_distance(config_from_matrix(m),
                                     config_from_matrix(m + eps * noise));
    CHECK(d < std::max(prev, 1e-2));
    prev = d;
  }
  CHECK(prev <= 1e-5);
}

TEST_CASE("spectral continuity verification") {
  SECTION("constant family") {
    const auto c = make_config({{{0.5, 0.0}, 2}});
    const auto rep = verify_spectral_continuity({c, c, c}, 0.1,
                                                [](double) { return 1e-12; });
    CHECK(rep.pass);
    for (double d : rep.distances) CHECK(d == 0.0);
  }
  SECTION("a unit jump fails every small bound") {
    const auto a = make_config({{{1.0, 0.0}, 1}});
    const auto b = make_config({{{2.0, 0.0}, 1}});
    const auto rep = verify_spectral_continuity({a, b}, 0.1,
                                                [](double) { return 0.9; });
    CHECK_FALSE(rep.pass);
    CHECK(rep.worst_excess == Catch::Approx(0.1).margin(1e-12));
  }
}

TEST_CASE("power sums") {
  CHECK(power_sums(Matrix::Identity(3, 3), 4) ==
        std::vector<Complex>{
            {3, 0}, {3, 0}, {3, 0}, {3, 0}});
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 2;
  m(1, 1) = 3;
  const auto p = power_sums(m, 2);
  CHECK(std::abs(p[0] - Complex(5, 0)) <= 1e-14);
  CHECK(std::abs(p[1] - Complex(13, 0)) <= 1e-14);
  Matrix nil = Matrix::Zero(3, 3);
  nil(0, 1) = 1;
  nil(1, 2) = 1;
  for (const auto& v : power_sums(nil, 3)) CHECK(std::abs(v) <= 1e-14);
}

TEST_CASE("Newton-Girard recurrences") {
  SECTION("hand example {2,3}") {
    const std::vector<Rat> p{Rat(5), Rat(13)};
    const auto e = power_sums_to_elementary(p);
    REQUIRE(e.size() == 2);
    CHECK(e[0] == 5);
    CHECK(e[1] == 6);
    CHECK(elementary_to_power_sums(e) == p);
  }
  SECTION("all power sums zero") {
    const std::vector<Rat> p{Rat(0), Rat(0), Rat(0)};
    for (const auto& v : power_sums_to_elementary(p)) CHECK(v == 0);
  }
  SECTION("exact rational roundtrip for random integer spectra") {
    Rng rng(109);
    std::uniform_int_distribution<int> entry(-5, 5);
    std::uniform_int_distribution<int> size(1, 6);
    for (int trial = 0; trial < 50; ++trial) {
      const int n = size(rng);
      std::vector<Rat> roots;
      for (int i = 0; i < n; ++i) roots.push_back(entry(rng));
      std::vector<Rat> p(n, Rat(0));
      for (int j = 1; j <= n; ++j)
        for (const Rat& r : roots) {
          Rat pw(1);
          for (int t = 0; t < j; ++t) pw *= r;
          p[j - 1] += pw;
        }
      const auto e = power_sums_to_elementary(p);
      CHECK(e == elementary_by_expansion(roots));
      CHECK(elementary_to_power_sums(e) == p);
    }
  }
  SECTION("roots from elementary symmetric functions") {
    const std::vector<Complex> e{{5, 0}, {6, 0}};
    auto roots = elementary_to_roots(e);
    std::sort(roots.begin(), roots.end(),
              [](Complex a, Complex b) { return a.real() < b.real(); });
    CHECK(std::abs(roots[0] - Complex(2, 0)) <= 1e-10);
    CHECK(std::abs(roots[1] - Complex(3, 0)) <= 1e-10);
  }
}

TEST_CASE("resolvent radius search") {
  SECTION("two norms") {
    const auto rep = find_resolvent_radius(
        {make_config({{{0.1, 0}, 1}, {{0.9, 0}, 1}})}, 0.05);
    CHECK(rep.mu == Catch::Approx(0.5).margin(1e-14));
    CHECK(rep.margin == Catch::Approx(0.4).margin(1e-14));
  }
  SECTION("empty spectrum") {
    const auto rep = find_resolvent_radius({SpectralConfig{}}, 0.05);
    CHECK(rep.mu == Catch::Approx(0.5).margin(1e-14));
    CHECK(rep.margin == Catch::Approx(0.5).margin(1e-14));
  }
  SECTION("tie breaks toward the larger radius") {
    const auto rep = find_resolvent_radius(
        {make_config({{{0.49, 0}, 1}, {{0.51, 0}, 1}})}, 0.05);
    CHECK(rep.mu == Catch::Approx(0.755).margin(1e-14));
  }
  SECTION("norms at or above 1 are ignored") {
    const auto rep = find_resolvent_radius(
        {make_config({{{1.0, 0}, 2}, {{0.2, 0}, 1}})}, 0.05);
    CHECK(rep.mu == Catch::Approx(0.6).margin(1e-14));
  }
  SECTION("no gap raises") {
    std::vector<SpectralConfig> configs;
    for (int i = 1; i < 100; ++i)
      configs.push_back(make_config({{{i / 100.0, 0}, 1}}));
    CHECK_THROWS_AS(find_resolvent_radius(configs, 0.05), NoGapError);
  }
  SECTION("reported gap really avoids every norm") {
    Rng rng(113);
    std::uniform_real_distribution<double> u(0.0, 1.2);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<SpectralConfig> configs;
      for (int i = 0; i < 5; ++i) {
        SpectralConfig c;
        for (int j = 0; j < 3; ++j) c.points.push_back({{u(rng), 0}, 1});
        configs.push_back(c);
      }
      try {
        const auto rep = find_resolvent_radius(configs, 0.01);
        CHECK(rep.mu > 0);
        CHECK(rep.mu < 1);
        for (const auto& c : configs)
          for (const auto& pt : c.points) {
            const double norm = std::abs(pt.value);
            if (norm < 1) CHECK(std::abs(norm - rep.mu) >= rep.margin - 1e-12);
          }
      } catch (const NoGapError&) {
        // acceptable for dense draws
      }
    }
  }
}
