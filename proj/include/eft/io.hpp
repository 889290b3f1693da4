#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "eft/extract.hpp"
#include "eft/family.hpp"
#include "eft/synth.hpp"

namespace eft::io {

using nlohmann::json;

struct FileError : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Complex matrices as flat row-major lists of [re, im] pairs.

inline json matrix_to_json(const Matrix& m) {
  json out = json::array();
  for (long i = 0; i < m.rows(); ++i)
    for (long j = 0; j < m.cols(); ++j)
      out.push_back({m(i, j).real(), m(i, j).imag()});
  return out;
}

inline Matrix matrix_from_json(const json& j, long rows, long cols,
                               const std::string& what) {
  if (!j.is_array() || static_cast<long>(j.size()) != rows * cols)
    throw FileError("bad matrix size for " + what);
  Matrix m(rows, cols);
  long at = 0;
  for (long i = 0; i < rows; ++i)
    for (long c = 0; c < cols; ++c, ++at) {
      const auto& e = j[at];
      if (!e.is_array() || e.size() != 2)
        throw FileError("complex entries must be [re, im] in " + what);
      m(i, c) = Complex(e[0].get<double>(), e[1].get<double>());
    }
  return m;
}

namespace detail {

inline std::vector<Parity> derive_column_parity(
    const Matrix& cols, const std::vector<Parity>& ambient,
    const std::string& what) {
  std::vector<Parity> out;
  for (long j = 0; j < cols.cols(); ++j) {
    double even_norm = 0, odd_norm = 0;
    for (long i = 0; i < cols.rows(); ++i) {
      const double a = std::abs(cols(i, j));
      (ambient[i] == Parity::Even ? even_norm : odd_norm) += a;
    }
    const Parity p = even_norm >= odd_norm ? Parity::Even : Parity::Odd;
    const double off = p == Parity::Even ? odd_norm : even_norm;
    if (off > 1e-9)
      throw FileError("frame column " + std::to_string(j) + " of " + what +
                      " is not parity-pure");
    out.push_back(p);
  }
  return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Family files.

inline json family_to_json(const family::FieldTheoryFamily& fam) {
  json out;
  out["k"] = fam.grid.k;
  out["m"] = fam.grid.m;
  out["N"] = fam.space.N;
  json par = json::array();
  for (auto p : fam.space.parity) par.push_back(p == Parity::Even ? 0 : 1);
  out["parity"] = par;
  out["real"] = fam.space.real_form;
  json pts = json::array();
  for (int i = 0; i < fam.point_count(); ++i) {
    json pt;
    json bary = json::array();
    for (int c = 0; c <= fam.grid.k; ++c) bary.push_back(fam.grid.points[i](c));
    pt["bary"] = bary;
    pt["frameV"] = matrix_to_json(fam.fibersV[i].frame.columns);
    pt["frameW"] = matrix_to_json(fam.fibersW[i].frame.columns);
    pt["D"] = matrix_to_json(fam.fibersV[i].D);
    pt["L"] = matrix_to_json(fam.pairing[i]);
    pts.push_back(std::move(pt));
  }
  out["points"] = pts;
  return out;
}

inline family::FieldTheoryFamily family_from_json(const json& j) {
  family::FieldTheoryFamily fam;
  try {
    const int k = j.at("k").get<int>();
    const int m = j.at("m").get<int>();
    const int n = j.at("N").get<int>();
    fam.space = SuperSpace(n, j.value("real", false));
    const auto& par = j.at("parity");
    if (static_cast<int>(par.size()) != n)
      throw FileError("parity length must equal N");
    for (int i = 0; i < n; ++i)
      fam.space.parity[i] = par[i].get<int>() == 0 ? Parity::Even : Parity::Odd;
    fam.grid.k = k;
    fam.grid.m = m;
    for (const auto& pt : j.at("points")) {
      const auto& bary = pt.at("bary");
      if (static_cast<int>(bary.size()) != k + 1)
        throw FileError("bary tuple must have k+1 entries");
      RealVector x(k + 1);
      bool collar = false;
      for (int c = 0; c <= k; ++c) {
        x(c) = bary[c].get<double>();
        collar |= x(c) < 0;
      }
      fam.grid.points.push_back(x);
      fam.grid.collar.push_back(collar);

      const auto& fv = pt.at("frameV");
      if (fv.size() % n != 0) throw FileError("frameV size not divisible by N");
      const long rv = static_cast<long>(fv.size()) / n;
      const Matrix cv = matrix_from_json(fv, n, rv, "frameV");
      const auto& fw = pt.at("frameW");
      if (fw.size() % n != 0) throw FileError("frameW size not divisible by N");
      const long rw = static_cast<long>(fw.size()) / n;
      const Matrix cw = matrix_from_json(fw, n, rw, "frameW");
      const Matrix d = matrix_from_json(pt.at("D"), rv, rv, "D");
      const Matrix l = matrix_from_json(pt.at("L"), rw, rv, "L");

      GradedFrame gv(cv, detail::derive_column_parity(cv, fam.space.parity,
                                                      "frameV"));
      GradedFrame gw(cw, detail::derive_column_parity(cw, fam.space.parity,
                                                      "frameW"));
      // The file pins the V-side generator; the W-side one is determined by
      // the pairing (transpose-conjugation), falling back to the plain
      // transpose for identity-like pairings.
      Matrix dw;
      if (rv == rw && rv > 0) {
        Eigen::FullPivLU<Matrix> lu(l);
        dw = lu.isInvertible()
                 ? Matrix((l * d * lu.inverse()).transpose())
                 : Matrix(d.transpose());
      } else if (rv == rw) {
        dw = d.transpose();
      } else {
        throw FileError("fiber ranks of V and W differ");
      }
      fam.fibersV.push_back({gv, d, {}});
      fam.fibersW.push_back({gw, dw, {}});
      fam.pairing.push_back(l);
    }
  } catch (const json::exception& e) {
    throw FileError(std::string("family JSON: ") + e.what());
  }
  return fam;
}

// ---------------------------------------------------------------------------
// Cocycle files.

inline json cocycle_to_json(const extract::Cocycle& c,
                            const std::vector<Parity>& ambient = {}) {
  json out;
  out["k"] = c.k;
  out["q"] = c.q;
  out["m_tile"] = c.m_tile;
  out["N"] = c.N;
  if (!ambient.empty()) {
    json par = json::array();
    for (auto p : ambient) par.push_back(p == Parity::Even ? 0 : 1);
    out["parity"] = par;
  }
  json simplices = json::array();
  for (const auto& cs : c.simplices) {
    json s;
    json word = json::array();
    for (const auto& perm : cs.word.word) word.push_back(perm.images);
    s["word"] = word;
    s["lambdas"] = cs.lambdas;
    json bundles = json::array();
    for (const auto& lvl : cs.bundles) {
      json b;
      b["rank"] = lvl.empty() ? 0 : lvl.front().rank();
      json frames = json::array();
      for (const auto& f : lvl) frames.push_back(matrix_to_json(f.columns));
      b["frames"] = frames;
      bundles.push_back(std::move(b));
    }
    s["bundles"] = bundles;
    json involutions = json::array();
    for (const auto& band : cs.involutions) {
      json b;
      b["rank"] = band.empty() ? 0 : band.front().frame.rank();
      json frames = json::array(), alphas = json::array();
      for (const auto& bd : band) {
        frames.push_back(matrix_to_json(bd.frame.columns));
        alphas.push_back(matrix_to_json(bd.alpha));
      }
      b["frames"] = frames;
      b["alphas"] = alphas;
      involutions.push_back(std::move(b));
    }
    s["involutions"] = involutions;
    simplices.push_back(std::move(s));
  }
  out["simplices"] = simplices;
  return out;
}

inline extract::Cocycle cocycle_from_json(const json& j) {
  extract::Cocycle c;
  try {
    c.k = j.at("k").get<int>();
    c.q = j.at("q").get<int>();
    c.m_tile = j.value("m_tile", 1);
    c.N = j.at("N").get<int>();
    std::vector<Parity> ambient = SuperSpace(c.N).parity;
    if (j.contains("parity")) {
      const auto& par = j.at("parity");
      if (static_cast<int>(par.size()) != c.N)
        throw FileError("ambient parity length mismatch");
      for (int i = 0; i < c.N; ++i)
        ambient[i] = par[i].get<int>() == 0 ? Parity::Even : Parity::Odd;
    }
    for (const auto& s : j.at("simplices")) {
      extract::CocycleSimplex cs;
      cs.word.k = c.k;
      for (const auto& perm : s.at("word")) {
        simplicial::Permutation sigma{perm.get<std::vector<int>>()};
        if (!sigma.valid() || sigma.k() != c.k)
          throw FileError("invalid permutation in word");
        cs.word.word.push_back(std::move(sigma));
      }
      cs.lambdas = s.at("lambdas").get<std::vector<double>>();
      for (const auto& b : s.at("bundles")) {
        const long rank = b.at("rank").get<long>();
        std::vector<GradedFrame> lvl;
        for (const auto& f : b.at("frames")) {
          const Matrix cols = matrix_from_json(f, c.N, rank, "bundle frame");
          lvl.emplace_back(
              cols, detail::derive_column_parity(cols, ambient, "bundle"));
        }
        cs.bundles.push_back(std::move(lvl));
      }
      for (const auto& b : s.at("involutions")) {
        const long rank = b.at("rank").get<long>();
        std::vector<extract::BandData> lvl;
        const auto& frames = b.at("frames");
        const auto& alphas = b.at("alphas");
        if (frames.size() != alphas.size())
          throw FileError("involution frames/alphas length mismatch");
        for (std::size_t i = 0; i < frames.size(); ++i) {
          extract::BandData bd;
          const Matrix cols =
              matrix_from_json(frames[i], c.N, rank, "band frame");
          bd.frame = GradedFrame(
              cols, detail::derive_column_parity(cols, ambient, "band"));
          bd.alpha = matrix_from_json(alphas[i], rank, rank, "alpha");
          lvl.push_back(std::move(bd));
        }
        cs.involutions.push_back(std::move(lvl));
      }
      c.simplices.push_back(std::move(cs));
    }
  } catch (const json::exception& e) {
    throw FileError(std::string("cocycle JSON: ") + e.what());
  }
  return c;
}

// ---------------------------------------------------------------------------
// CSV emitters.

inline std::string sd_csv(int k, int p) {
  const auto words = simplicial::enumerate_subdivision_simplices(k, p);
  std::ostringstream os;
  os << "index,word";
  for (int i = 0; i <= k; ++i)
    for (int j = 0; j <= k; ++j) os << ",b_" << i << "_" << j;
  os << "\n";
  for (std::size_t w = 0; w < words.size(); ++w) {
    os << w << ",";
    for (std::size_t lvl = 0; lvl < words[w].word.size(); ++lvl) {
      if (lvl) os << "|";
      const auto& img = words[w].word[lvl].images;
      for (std::size_t i = 0; i < img.size(); ++i) {
        if (i) os << " ";
        os << img[i];
      }
    }
    const auto b = simplicial::compose_word(words[w]);
    for (int i = 0; i <= k; ++i)
      for (int j = 0; j <= k; ++j) os << "," << rat_to_string(b.columns(i, j));
    os << "\n";
  }
  return os.str();
}

inline std::string spectrum_csv(const family::FieldTheoryFamily& fam,
                                double merge_tol = 1e-9) {
  std::ostringstream os;
  os.precision(17);
  for (int c = 0; c <= fam.grid.k; ++c) os << (c ? "," : "") << "x_" << c;
  os << ",re,im,multiplicity\n";
  for (int i = 0; i < fam.point_count(); ++i) {
    Matrix a1 = fam.fibersV[i].rank() ? fam.semigroup(i, 1.0).A : Matrix(0, 0);
    const auto cfg = spectral::config_from_matrix(a1, merge_tol);
    for (const auto& pt : cfg.points) {
      for (int c = 0; c <= fam.grid.k; ++c)
        os << (c ? "," : "") << fam.grid.points[i](c);
      os << "," << pt.value.real() << "," << pt.value.imag() << ","
         << pt.multiplicity << "\n";
    }
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// File helpers.

inline json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FileError("malformed JSON in " + path + ": " + e.what());
  }
  return j;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw FileError("cannot write " + path);
  out << content;
}

} // namespace eft::io
