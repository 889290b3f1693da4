#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <numeric>
#include <utility>
#include <vector>

#include "eft/rational.hpp"
#include "eft/types.hpp"

namespace eft::simplicial {

/// Bijection of {0,...,k}, written by its image sequence.
struct Permutation {
  std::vector<int> images;

  int k() const { return static_cast<int>(images.size()) - 1; }

  bool valid() const {
    std::vector<char> seen(images.size(), 0);
    for (int v : images) {
      if (v < 0 || v >= static_cast<int>(images.size()) || seen[v]) return false;
      seen[v] = 1;
    }
    return true;
  }

  bool operator==(const Permutation& o) const { return images == o.images; }
  bool operator<(const Permutation& o) const { return images < o.images; }
};

inline std::vector<Permutation> all_permutations(int k) {
  std::vector<int> base(k + 1);
  std::iota(base.begin(), base.end(), 0);
  std::vector<Permutation> out;
  do {
    out.push_back({base});
  } while (std::next_permutation(base.begin(), base.end()));
  return out;
}

/// Index of one little simplex of sd^p Delta^k: a length-p sequence of
/// permutations, outermost subdivision first.
struct SubdivisionWord {
  int k = 0;
  std::vector<Permutation> word;

  int depth() const { return static_cast<int>(word.size()); }
  bool operator==(const SubdivisionWord& o) const {
    return k == o.k && word == o.word;
  }
  bool operator<(const SubdivisionWord& o) const { return word < o.word; }

  SubdivisionWord prefix(int p) const {
    return {k, std::vector<Permutation>(word.begin(), word.begin() + p)};
  }
};

/// All ((k+1)!)^p words at depth p, in lexicographic order. Depth 0 yields
/// the single empty word.
inline std::vector<SubdivisionWord> enumerate_subdivision_simplices(int k,
                                                                    int p) {
  if (k < 0 || p < 0) throw DimensionError("enumerate: k, p must be >= 0");
  const auto perms = all_permutations(k);
  std::vector<SubdivisionWord> out{{k, {}}};
  for (int level = 0; level < p; ++level) {
    std::vector<SubdivisionWord> next;
    next.reserve(out.size() * perms.size());
    for (const auto& w : out)
      for (const auto& s : perms) {
        SubdivisionWord e = w;
        e.word.push_back(s);
        next.push_back(std::move(e));
      }
    out = std::move(next);
  }
  return out;
}

/// Affine map between standard simplices in barycentric coordinates.
/// Column j is the image of vertex v_j; every column is a probability vector.
struct AffineMap {
  int k_src = 0, k_dst = 0;
  RatMat columns; // (k_dst+1) x (k_src+1)

  static AffineMap identity(int k) {
    return {k, k, RatMat::identity(k + 1)};
  }

  std::vector<Rat> apply(const std::vector<Rat>& x) const {
    return columns.apply(x);
  }

  /// Composition (this after other): src of other, dst of this.
  AffineMap after(const AffineMap& other) const {
    if (other.k_dst != k_src) throw DimensionError("AffineMap: compose mismatch");
    return {other.k_src, k_dst, columns * other.columns};
  }

  std::vector<Rat> column(int j) const {
    std::vector<Rat> c(k_dst + 1);
    for (int i = 0; i <= k_dst; ++i) c[i] = columns(i, j);
    return c;
  }

  bool column_stochastic() const {
    for (std::size_t j = 0; j < columns.cols(); ++j) {
      Rat s(0);
      for (std::size_t i = 0; i < columns.rows(); ++i) {
        if (columns(i, j) < 0) return false;
        s += columns(i, j);
      }
      if (s != 1) return false;
    }
    return true;
  }

  /// Barycentric volume scaling factor |det|.
  Rat volume_factor() const {
    if (k_src != k_dst) throw DimensionError("volume_factor: not square");
    Rat d = columns.determinant();
    return d < 0 ? Rat(-d) : d;
  }
};

/// b_sigma : v_i -> (1/(i+1)) (v_{sigma(0)} + ... + v_{sigma(i)}).
inline AffineMap barycentric_map(const Permutation& sigma) {
  if (!sigma.valid()) throw Error("barycentric_map: invalid permutation");
  const int k = sigma.k();
  AffineMap m{k, k, RatMat(k + 1, k + 1)};
  for (int i = 0; i <= k; ++i) {
    const Rat w = Rat(1) / Rat(i + 1);
    for (int j = 0; j <= i; ++j) m.columns(sigma.images[j], i) += w;
  }
  return m;
}

/// b_I = b_{sigma_1} o ... o b_{sigma_p}; identity for the empty word.
inline AffineMap compose_word(const SubdivisionWord& I) {
  AffineMap m = AffineMap::identity(I.k);
  for (const auto& s : I.word) m = m.after(barycentric_map(s));
  return m;
}

/// Words of a given depth together with their affine maps, built
/// incrementally (one matrix product per word rather than p per word).
inline std::vector<std::pair<SubdivisionWord, AffineMap>> enumerate_with_maps(
    int k, int p) {
  std::vector<std::pair<SubdivisionWord, AffineMap>> out{
      {SubdivisionWord{k, {}}, AffineMap::identity(k)}};
  const auto perms = all_permutations(k);
  std::vector<AffineMap> level_maps;
  level_maps.reserve(perms.size());
  for (const auto& s : perms) level_maps.push_back(barycentric_map(s));
  for (int level = 0; level < p; ++level) {
    std::vector<std::pair<SubdivisionWord, AffineMap>> next;
    next.reserve(out.size() * perms.size());
    for (const auto& [w, b] : out)
      for (std::size_t s = 0; s < perms.size(); ++s) {
        SubdivisionWord e = w;
        e.word.push_back(perms[s]);
        next.emplace_back(std::move(e), b.after(level_maps[s]));
      }
    out = std::move(next);
  }
  return out;
}

/// Total map on an abstract vertex set {0..k_src} -> {0..k_dst}.
struct VertexMap {
  int k_src = 0, k_dst = 0;
  std::vector<int> images;

  bool total() const {
    if (static_cast<int>(images.size()) != k_src + 1) return false;
    for (int v : images)
      if (v < 0 || v > k_dst) return false;
    return true;
  }
  bool monotone() const {
    for (std::size_t i = 1; i < images.size(); ++i)
      if (images[i] < images[i - 1]) return false;
    return true;
  }
};

// ---------------------------------------------------------------------------
// Last-vertex maps.

/// Vertices of sd Delta^k: non-empty subsets of {0..k} in bitmask order.
inline std::vector<std::vector<int>> subdivision_vertex_subsets(int k) {
  std::vector<std::vector<int>> out;
  for (int mask = 1; mask < (1 << (k + 1)); ++mask) {
    std::vector<int> s;
    for (int i = 0; i <= k; ++i)
      if (mask & (1 << i)) s.push_back(i);
    out.push_back(std::move(s));
  }
  return out;
}

/// h : sd Delta^k -> Delta^k on vertices, each subset to its largest element.
/// Domain indexed by subdivision_vertex_subsets order.
inline VertexMap last_vertex(int k) {
  const auto subsets = subdivision_vertex_subsets(k);
  VertexMap vm{static_cast<int>(subsets.size()) - 1, k, {}};
  for (const auto& s : subsets) vm.images.push_back(s.back());
  return vm;
}

/// Restriction of h to the little simplex sigma of sd Delta^k, as a vertex
/// map [k] -> [k]: i -> max(sigma(0..i)).
inline std::vector<int> level_last_vertex(const Permutation& sigma) {
  std::vector<int> m(sigma.k() + 1);
  int cur = -1;
  for (int i = 0; i <= sigma.k(); ++i) {
    cur = std::max(cur, sigma.images[i]);
    m[i] = cur;
  }
  return m;
}

/// h^q restricted to the little simplex J of sd^q Delta^k, as [k] -> [k].
/// Composite of the level maps, outermost level applied last.
inline std::vector<int> last_vertex_on_word(const SubdivisionWord& J) {
  std::vector<int> m(J.k + 1);
  std::iota(m.begin(), m.end(), 0);
  for (auto it = J.word.rbegin(); it != J.word.rend(); ++it) {
    const auto lvl = level_last_vertex(*it);
    for (int& v : m) v = lvl[v];
  }
  return m;
}

// ---------------------------------------------------------------------------
// The realized complex sd^q Delta^k: canonical vertex table with exact
// barycentric coordinates, per-word vertex indices, the assigned faces S_v,
// and the vertexwise h^q.

struct SubdivisionComplex {
  int k = 0, q = 0;
  std::vector<SubdivisionWord> words;
  std::vector<std::vector<Rat>> vertex_coords;     // canonical order
  std::vector<std::vector<int>> word_vertices;     // [word][i] -> vertex id
  std::vector<std::vector<int>> assigned_face;     // S_v per vertex (sorted)
  std::vector<int> h_q;                            // h^q per vertex

  int vertex_count() const { return static_cast<int>(vertex_coords.size()); }

  int vertex_index(const std::vector<Rat>& coords) const {
    const auto it = index_.find(coords);
    if (it == index_.end()) throw Error("SubdivisionComplex: unknown vertex");
    return it->second;
  }

  std::map<std::vector<Rat>, int> index_;
};

inline SubdivisionComplex build_subdivision_complex(int k, int q) {
  SubdivisionComplex sc;
  sc.k = k;
  sc.q = q;
  sc.words = enumerate_subdivision_simplices(k, q);

  // Gather exact vertex coordinates.
  std::vector<std::vector<std::vector<Rat>>> per_word_coords;
  per_word_coords.reserve(sc.words.size());
  for (const auto& w : sc.words) {
    const AffineMap b = compose_word(w);
    std::vector<std::vector<Rat>> cols;
    for (int i = 0; i <= k; ++i) cols.push_back(b.column(i));
    per_word_coords.push_back(std::move(cols));
  }
  for (const auto& cols : per_word_coords)
    for (const auto& c : cols)
      if (!sc.index_.count(c)) sc.index_.emplace(c, 0);
  int id = 0;
  for (auto& [coords, idx] : sc.index_) {
    idx = id++;
    sc.vertex_coords.push_back(coords);
  }

  sc.word_vertices.resize(sc.words.size());
  sc.assigned_face.assign(sc.vertex_count(), {});
  sc.h_q.assign(sc.vertex_count(), -1);

  for (std::size_t w = 0; w < sc.words.size(); ++w) {
    const auto& word = sc.words[w];
    const auto hq = last_vertex_on_word(word);
    // Suffix level map carries slot i to a vertex of the outermost level.
    std::vector<int> suffix(k + 1);
    std::iota(suffix.begin(), suffix.end(), 0);
    for (std::size_t lvl = word.word.size(); lvl > 1; --lvl) {
      const auto m = level_last_vertex(word.word[lvl - 1]);
      for (int& v : suffix) v = m[v];
    }
    for (int i = 0; i <= k; ++i) {
      const int vid = sc.index_.at(per_word_coords[w][i]);
      sc.word_vertices[w].push_back(vid);
      // S_v: the subset reached in sd Delta^k by (q-1)-fold last vertex.
      std::vector<int> face;
      if (q == 0) {
        face = {i};
      } else {
        const auto& outer = word.word.front().images;
        face.assign(outer.begin(), outer.begin() + suffix[i] + 1);
        std::sort(face.begin(), face.end());
      }
      if (sc.assigned_face[vid].empty()) {
        sc.assigned_face[vid] = face;
      } else if (sc.assigned_face[vid] != face) {
        throw Error("build_subdivision_complex: inconsistent face assignment");
      }
      if (sc.h_q[vid] < 0)
        sc.h_q[vid] = hq[i];
      else if (sc.h_q[vid] != hq[i])
        throw Error("build_subdivision_complex: inconsistent last-vertex map");
    }
  }
  return sc;
}

/// h^q as a VertexMap on the canonical vertices of sd^q Delta^k.
inline VertexMap last_vertex_vertexwise(const SubdivisionComplex& sc) {
  return {sc.vertex_count() - 1, sc.k, sc.h_q};
}

/// f extends to a simplicial map sd^q Delta^k -> Delta^k iff its images are
/// weakly increasing along every little simplex's vertex chain.
inline bool extends_to_simplicial(const SubdivisionComplex& sc,
                                  const VertexMap& f) {
  if (!f.total() || f.k_src != sc.vertex_count() - 1 || f.k_dst != sc.k)
    throw Error("extends_to_simplicial: malformed vertex data");
  for (const auto& wv : sc.word_vertices)
    for (std::size_t i = 1; i < wv.size(); ++i)
      if (f.images[wv[i]] < f.images[wv[i - 1]]) return false;
  return true;
}

/// Face-preserving: every vertex lands inside the face assigned to it by the
/// (q-1)-fold last-vertex map.
inline bool is_face_preserving(const SubdivisionComplex& sc,
                               const VertexMap& f) {
  if (!f.total() || f.k_src != sc.vertex_count() - 1 || f.k_dst != sc.k)
    throw Error("is_face_preserving: malformed vertex data");
  for (int v = 0; v < sc.vertex_count(); ++v) {
    const auto& face = sc.assigned_face[v];
    if (!std::binary_search(face.begin(), face.end(), f.images[v]))
      return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Prism decomposition and the subdivision homotopy.

/// One non-degenerate (k+1)-simplex of Delta^k x Delta^1, by vertex pairs
/// (base vertex, level).
struct PrismSimplex {
  int k = 0;
  std::vector<std::pair<int, int>> vertices; // size k+2, level in {0,1}
};

/// The k+1 maximal simplices g_0..g_k of the prism; g_j places vertices
/// 0..j on level 0 and the rest on level 1. Consecutive maps share a k-face.
inline std::vector<PrismSimplex> prism_decomposition(int k) {
  std::vector<PrismSimplex> out;
  for (int j = 0; j <= k; ++j) {
    PrismSimplex g{k, {}};
    for (int i = 0; i <= k + 1; ++i) {
      if (i <= j)
        g.vertices.emplace_back(i, 0);
      else
        g.vertices.emplace_back(i - 1, 1);
    }
    out.push_back(std::move(g));
  }
  return out;
}

/// One prism pullback instruction of the homotopy between the barycentric
/// and the algebraic subdivision: the affine map Delta^{k+1} -> Delta^k and
/// the vertex map [k+1] -> [k] built from f|_J and h^q|_J.
struct HomotopyInstruction {
  AffineMap map;   // k_src = k+1, k_dst = k
  VertexMap vmap;  // [k+1] -> [k]
};

inline std::vector<HomotopyInstruction> subdivision_homotopy(
    const SubdivisionComplex& sc, const VertexMap& f,
    const SubdivisionWord& J) {
  const int k = sc.k;
  if (J.k != k || J.depth() != sc.q)
    throw DimensionError("subdivision_homotopy: word does not match complex");
  if (!is_face_preserving(sc, f))
    throw Error("subdivision_homotopy: f is not face-preserving");

  const AffineMap bj = compose_word(J);
  const auto hq = last_vertex_on_word(J);

  // f restricted to the vertices of J, in J's vertex order.
  auto wit = std::find(sc.words.begin(), sc.words.end(), J);
  if (wit == sc.words.end()) throw Error("subdivision_homotopy: unknown word");
  const auto& jverts = sc.word_vertices[wit - sc.words.begin()];
  std::vector<int> f_j(k + 1);
  for (int i = 0; i <= k; ++i) f_j[i] = f.images[jverts[i]];

  std::vector<HomotopyInstruction> out;
  for (int j = 0; j <= k; ++j) {
    HomotopyInstruction ins;
    ins.map = {k + 1, k, RatMat(k + 1, k + 2)};
    ins.vmap = {k + 1, k, std::vector<int>(k + 2)};
    for (int i = 0; i <= k + 1; ++i) {
      if (i <= j) {
        for (int r = 0; r <= k; ++r) ins.map.columns(r, i) = bj.columns(r, i);
        ins.vmap.images[i] = f_j[i];
      } else {
        ins.map.columns(hq[i - 1], i) = 1; // algebraic-subdivision endpoint
        ins.vmap.images[i] = hq[i - 1];
      }
    }
    out.push_back(std::move(ins));
  }
  return out;
}

inline std::vector<HomotopyInstruction> subdivision_homotopy(
    int k, int q, const VertexMap& f, const SubdivisionWord& J) {
  const auto sc = build_subdivision_complex(k, q);
  return subdivision_homotopy(sc, f, J);
}

// ---------------------------------------------------------------------------
// Membership utilities used by the resolvent planner.

/// Solves M y = x for the (square, invertible) affine matrix of a word map;
/// x is inside the closed tile iff all components are >= 0.
struct TileFrame {
  AffineMap map;
  RatMat inverse;

  explicit TileFrame(const SubdivisionWord& w)
      : map(compose_word(w)), inverse(map.columns.inverse()) {}

  std::vector<Rat> pullback(const std::vector<Rat>& x) const {
    return inverse.apply(x);
  }

  bool contains(const std::vector<Rat>& x, const Rat& slack = Rat(0)) const {
    const auto y = pullback(x);
    for (const auto& yi : y)
      if (yi < -slack) return false;
    return true;
  }
};

} // namespace eft::simplicial
