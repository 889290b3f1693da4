#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "eft/simplicial.hpp"

using namespace eft;
using namespace eft::simplicial;

namespace {

// Independent oracle: maximal chains in the poset of non-empty subsets of
// {0..k}. Each chain S_1 c S_2 c ... c S_{k+1} with |S_i| = i corresponds to
// one non-degenerate k-simplex of sd Delta^k.
long count_maximal_chains(int k, unsigned current = 0) {
  const unsigned full = (1u << (k + 1)) - 1;
  if (current == full) return 1;
  long total = 0;
  for (int v = 0; v <= k; ++v)
    if (!(current & (1u << v))) total += count_maximal_chains(k, current | (1u << v));
  return total;
}

Rat volume_sum(int k, int p) {
  Rat s(0);
  for (const auto& w : enumerate_subdivision_simplices(k, p))
    s += compose_word(w).volume_factor();
  return s;
}

std::vector<Rat> rat_point(std::initializer_list<Rat> xs) { return xs; }

} // namespace

TEST_CASE("word counts match the chain-enumeration oracle") {
  CHECK(enumerate_subdivision_simplices(0, 3).size() == 1);
  CHECK(enumerate_subdivision_simplices(1, 1).size() == 2);
  CHECK(enumerate_subdivision_simplices(2, 1).size() == 6);
  for (int k = 0; k <= 3; ++k) {
    const long chains = count_maximal_chains(k);
    for (int p = 0; p <= 2; ++p) {
      long expect = 1;
      for (int i = 0; i < p; ++i) expect *= chains;
      CHECK(enumerate_subdivision_simplices(k, p).size() ==
            static_cast<std::size_t>(expect));
    }
  }
  // Depth 3 spot check at k = 2: 6^3.
  CHECK(enumerate_subdivision_simplices(2, 3).size() == 216);
}

TEST_CASE("barycentric map formula") {
  const Permutation id{{0, 1}};
  const Permutation swap{{1, 0}};
  const AffineMap b_id = barycentric_map(id);
  CHECK(b_id.columns(0, 0) == 1);
  CHECK(b_id.columns(1, 0) == 0);
  CHECK(b_id.columns(0, 1) == Rat(1, 2));
  CHECK(b_id.columns(1, 1) == Rat(1, 2));
  const AffineMap b_swap = barycentric_map(swap);
  CHECK(b_swap.columns(0, 0) == 0);
  CHECK(b_swap.columns(1, 0) == 1);
  CHECK(b_swap.columns(0, 1) == Rat(1, 2));
  CHECK(b_swap.columns(1, 1) == Rat(1, 2));
  const AffineMap b0 = barycentric_map(Permutation{{0}});
  CHECK(b0.columns(0, 0) == 1);
  CHECK_THROWS_AS(barycentric_map(Permutation{{0, 0}}), Error);
}

TEST_CASE("compose_word basics") {
  SubdivisionWord empty{1, {}};
  CHECK(compose_word(empty).columns == RatMat::identity(2));

  SubdivisionWord single{1, {Permutation{{1, 0}}}};
  CHECK(compose_word(single).columns ==
        barycentric_map(Permutation{{1, 0}}).columns);

  // Hand-multiplied: b_id * b_id maps v_1 to (3/4, 1/4).
  SubdivisionWord twice{1, {Permutation{{0, 1}}, Permutation{{0, 1}}}};
  const AffineMap b = compose_word(twice);
  CHECK(b.columns(0, 1) == Rat(3, 4));
  CHECK(b.columns(1, 1) == Rat(1, 4));
  CHECK(b.column_stochastic());
}

TEST_CASE("images tile the simplex: exact volumes and disjoint interiors") {
  for (int k = 0; k <= 2; ++k)
    for (int p = 0; p <= 2; ++p) CHECK(volume_sum(k, p) == 1);
  CHECK(volume_sum(3, 1) == 1);

  // Interior disjointness: the barycenter of each tile lies in no other tile.
  for (int p = 1; p <= 2; ++p) {
    const auto words = enumerate_subdivision_simplices(2, p);
    std::vector<TileFrame> tiles;
    for (const auto& w : words) tiles.emplace_back(w);
    for (std::size_t a = 0; a < words.size(); ++a) {
      std::vector<Rat> bary(3, Rat(0));
      for (int i = 0; i <= 2; ++i) {
        const auto col = tiles[a].map.column(i);
        for (int r = 0; r <= 2; ++r) bary[r] += col[r] / 3;
      }
      for (std::size_t b = 0; b < words.size(); ++b) {
        if (a == b) continue;
        CHECK_FALSE(tiles[b].contains(bary));
      }
      CHECK(tiles[a].contains(bary));
    }
  }
}

TEST_CASE("last vertex map on subsets") {
  const auto subsets = subdivision_vertex_subsets(2);
  const VertexMap h = last_vertex(2);
  auto index_of = [&](std::vector<int> s) {
    return std::find(subsets.begin(), subsets.end(), s) - subsets.begin();
  };
  CHECK(h.images[index_of({0, 2})] == 2);
  CHECK(h.images[index_of({0})] == 0);
  // Chain {1} c {0,1} maps to the degenerate edge (1, 1).
  CHECK(h.images[index_of({1})] == 1);
  CHECK(h.images[index_of({0, 1})] == 1);
  // Monotone on chains: S subset of T implies max S <= max T.
  for (std::size_t i = 0; i < subsets.size(); ++i)
    for (std::size_t j = 0; j < subsets.size(); ++j) {
      if (!std::includes(subsets[j].begin(), subsets[j].end(),
                         subsets[i].begin(), subsets[i].end()))
        continue;
      CHECK(h.images[i] <= h.images[j]);
    }
}

TEST_CASE("last vertex commutes with face inclusion") {
  // Face map delta_i : Delta^{k-1} -> Delta^k skips the value i. On subsets
  // h(delta_i(S)) must equal delta_i(h(S)).
  for (int k = 1; k <= 3; ++k) {
    const auto subsets = subdivision_vertex_subsets(k - 1);
    for (int skip = 0; skip <= k; ++skip) {
      auto delta = [&](int v) { return v < skip ? v : v + 1; };
      for (const auto& s : subsets) {
        std::vector<int> mapped;
        for (int v : s) mapped.push_back(delta(v));
        CHECK(mapped.back() == delta(s.back()));
      }
    }
  }
}

TEST_CASE("level last-vertex maps and iterated words") {
  CHECK(level_last_vertex(Permutation{{1, 0, 2}}) == std::vector<int>{1, 1, 2});
  CHECK(level_last_vertex(Permutation{{2, 0, 1}}) == std::vector<int>{2, 2, 2});
  // Empty word: identity.
  CHECK(last_vertex_on_word({2, {}}) == std::vector<int>{0, 1, 2});
}

TEST_CASE("subdivision complex: faces and h^q agree across words") {
  for (int k = 1; k <= 2; ++k)
    for (int q = 1; q <= 2; ++q) {
      // Construction itself asserts cross-word consistency.
      const auto sc = build_subdivision_complex(k, q);
      CHECK(sc.vertex_count() > 0);
      const VertexMap h = last_vertex_vertexwise(sc);
      CHECK(extends_to_simplicial(sc, h));
      CHECK(is_face_preserving(sc, h));
    }
}

TEST_CASE("face-preserving: counterexamples and malformed input") {
  const auto sc = build_subdivision_complex(1, 1);
  // Constant map to vertex 0 is simplicial but not face-preserving: the
  // vertex {1} is assigned the face {1}.
  VertexMap constant0{sc.vertex_count() - 1, 1,
                      std::vector<int>(sc.vertex_count(), 0)};
  CHECK(extends_to_simplicial(sc, constant0));
  CHECK_FALSE(is_face_preserving(sc, constant0));

  const auto sc0 = build_subdivision_complex(0, 2);
  VertexMap any{sc0.vertex_count() - 1, 0,
                std::vector<int>(sc0.vertex_count(), 0)};
  CHECK(is_face_preserving(sc0, any));

  VertexMap malformed{2, 1, {0, 9, 0}};
  CHECK_THROWS_AS(is_face_preserving(sc, malformed), Error);
}

TEST_CASE("prism decomposition") {
  const auto p0 = prism_decomposition(0);
  REQUIRE(p0.size() == 1);
  CHECK(p0[0].vertices ==
        std::vector<std::pair<int, int>>{{0, 0}, {0, 1}});

  const auto p1 = prism_decomposition(1);
  REQUIRE(p1.size() == 2);
  CHECK(p1[0].vertices ==
        std::vector<std::pair<int, int>>{{0, 0}, {0, 1}, {1, 1}});
  CHECK(p1[1].vertices ==
        std::vector<std::pair<int, int>>{{0, 0}, {1, 0}, {1, 1}});

  // Face gluing d_{j+1} g_j = d_{j+1} g_{j+1} for k <= 2.
  for (int k = 1; k <= 2; ++k) {
    const auto g = prism_decomposition(k);
    for (int j = 0; j + 1 <= k; ++j) {
      auto face_a = g[j].vertices;
      auto face_b = g[j + 1].vertices;
      face_a.erase(face_a.begin() + (j + 1));
      face_b.erase(face_b.begin() + (j + 1));
      CHECK(face_a == face_b);
    }
  }
}

TEST_CASE("subdivision homotopy instructions") {
  SECTION("k = 0: both endpoints are the identity point map") {
    const auto sc = build_subdivision_complex(0, 1);
    const VertexMap f = last_vertex_vertexwise(sc);
    const auto ins = subdivision_homotopy(sc, f, sc.words.front());
    REQUIRE(ins.size() == 1);
    CHECK(ins[0].map.columns(0, 0) == 1);
    CHECK(ins[0].map.columns(0, 1) == 1);
    CHECK(ins[0].vmap.images == std::vector<int>{0, 0});
  }

  SECTION("k = 1, f = h^q: level-0 face of H o g_1 is b_J") {
    const auto sc = build_subdivision_complex(1, 2);
    const VertexMap f = last_vertex_vertexwise(sc);
    for (const auto& J : sc.words) {
      const auto ins = subdivision_homotopy(sc, f, J);
      REQUIRE(ins.size() == 2);
      const AffineMap bj = compose_word(J);
      // g_1 has vertices 0,1 on level 0; the restriction of the affine part
      // to those columns must equal b_J.
      for (int i = 0; i <= 1; ++i)
        for (int r = 0; r <= 1; ++r)
          CHECK(ins[1].map.columns(r, i) == bj.columns(r, i));
    }
  }

  SECTION("vertex maps are monotone whenever f is face-preserving, k <= 2") {
    for (int k = 1; k <= 2; ++k) {
      const auto sc = build_subdivision_complex(k, 2);
      const VertexMap f = last_vertex_vertexwise(sc);
      for (const auto& J : sc.words)
        for (const auto& ins : subdivision_homotopy(sc, f, J))
          CHECK(ins.vmap.monotone());
    }
  }

  SECTION("rejects non-face-preserving data") {
    const auto sc = build_subdivision_complex(1, 1);
    VertexMap constant0{sc.vertex_count() - 1, 1,
                        std::vector<int>(sc.vertex_count(), 0)};
    CHECK_THROWS_AS(subdivision_homotopy(sc, constant0, sc.words.front()),
                    Error);
  }
}

TEST_CASE("affine maps: tile membership pullback") {
  const SubdivisionWord left{1, {Permutation{{0, 1}}}};
  const TileFrame tile(left);
  CHECK(tile.contains(rat_point({Rat(3, 4), Rat(1, 4)})));
  CHECK_FALSE(tile.contains(rat_point({Rat(1, 4), Rat(3, 4)})));
  CHECK(tile.contains(rat_point({Rat(1, 2), Rat(1, 2)})));
  CHECK(tile.contains(rat_point({Rat(2, 5), Rat(3, 5)}), Rat(1, 4)));
}
