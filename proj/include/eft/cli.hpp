#pragma once

#include <iostream>
#include <sstream>
#include <string>

#include "eft/io.hpp"

namespace eft::cli {

struct RunConfig {
  std::string command; // verify | extract | synth | deform | sd | spectrum
  std::string input;
  std::string output;      // -o
  std::string csv_path;    // --csv
  std::string report_path; // --report
  double tol = 1e-8;
  long seed = 0;
  int m = 8;
  int k = 1, p = 1;
  int p_max = 4;
  double min_margin = 0.02;
  std::string s_grid = "0:1:0.05";
};

namespace detail {

inline std::vector<double> parse_grid(const std::string& spec) {
  double lo = 0, hi = 1, step = 0.05;
  if (std::sscanf(spec.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3 ||
      step <= 0)
    throw Error("bad grid spec '" + spec + "', expected lo:hi:step");
  std::vector<double> out;
  for (double v = lo; v <= hi + 1e-12; v += step) out.push_back(v);
  return out;
}

inline void emit(const std::string& path, const std::string& content,
                 std::ostream& os) {
  if (path.empty())
    os << content;
  else
    io::write_file(path, content);
}

} // namespace detail

inline int run_verify(const RunConfig& cfg, std::ostream& os) {
  const auto fam = io::family_from_json(io::load_json(cfg.input));
  family::ValidateOptions opts;
  opts.tol = cfg.tol;
  const Report rep = family::validate_family(fam, opts);
  os << to_string(rep);
  os << (rep.pass() ? "PASS\n" : "FAIL\n");
  return rep.pass() ? 0 : 1;
}

inline int run_extract(const RunConfig& cfg, std::ostream& os) {
  const auto fam = io::family_from_json(io::load_json(cfg.input));
  const auto plan =
      extract::plan_resolvent_subdivision(fam, cfg.min_margin, cfg.p_max);
  os << "plan: p=" << plan.p << " q=" << plan.q
     << " cover=" << plan.cover.size() << "\n";
  const auto cocycle = extract::extract_cocycle(fam, plan);
  const Report rep = extract::cocycle_wellformed(cocycle, cfg.tol);
  os << to_string(rep);
  if (!cfg.output.empty())
    io::write_file(cfg.output,
                   io::cocycle_to_json(cocycle, fam.space.parity).dump(1));
  os << (rep.pass() ? "PASS\n" : "FAIL\n");
  return rep.pass() ? 0 : 1;
}

inline int run_synth(const RunConfig& cfg, std::ostream& os) {
  const auto cocycle = io::cocycle_from_json(io::load_json(cfg.input));
  if (cocycle.q != 0 || cocycle.simplices.size() != 1)
    throw DimensionError(
        "synth needs a single undivided simplex (q = 0) as input");
  const auto& cs = cocycle.simplices.front();
  for (const auto& lvl : cs.bundles)
    for (const auto& f : lvl)
      if (family::detail::span_angle(f.columns, lvl.front().columns) > 1e-9)
        throw DimensionError("synth input must be spatially constant");

  synth::NQSimplex sigma;
  sigma.k = cocycle.k;
  sigma.space = SuperSpace(cocycle.N);
  sigma.v0 = cs.bundles.front().front();
  for (const auto& band : cs.involutions) sigma.primes.push_back(band.front());
  const auto fam = synth::synthesize_family(sigma, cfg.m);
  const Report rep = family::validate_family(fam);
  os << to_string(rep);
  if (!cfg.output.empty())
    io::write_file(cfg.output, io::family_to_json(fam).dump(1));
  os << (rep.pass() ? "PASS\n" : "FAIL\n");
  return rep.pass() ? 0 : 1;
}

inline int run_deform(const RunConfig& cfg, std::ostream& os) {
  const auto fam = io::family_from_json(io::load_json(cfg.input));
  const auto grid = detail::parse_grid(cfg.s_grid);
  std::ostringstream rep;
  rep.precision(12);
  rep << "point,s,sector_margin,status\n";
  bool ok = true;
  for (int i = 0; i < fam.point_count(); ++i) {
    const auto& fib = fam.fibersV[i];
    if (fib.rank() == 0 ||
        superlin::min_singular_value(fib.D) < 1e-10) {
      rep << i << ",-,-,skipped (topological or singular generator)\n";
      continue;
    }
    Matrix alpha;
    try {
      alpha = extract::detail::sign_re_involution(fib.D);
    } catch (const Error&) {
      rep << i << ",-,-,skipped (generator has near-imaginary spectrum)\n";
      ok = false;
      continue;
    }
    double band = 0;
    for (int c = 1; c <= fam.grid.k; ++c) band += fam.grid.points[i](c);
    band = std::max(band, 0.0);
    for (double s : grid) {
      if (band == 0.0 && s == 0.0) continue;
      try {
        const Matrix ds =
            synth::deform_generator(fib.D, alpha, band, s);
        if (ds.cwiseAbs().maxCoeff() == 0.0) {
          rep << i << "," << s << ",-,degenerate (outside germ)\n";
          continue;
        }
        const double margin = synth::sector_margin(ds);
        rep << i << "," << s << "," << margin << ","
            << (margin > 0 ? "ok" : "violation") << "\n";
        if (margin <= 0) ok = false;
      } catch (const SingularAtOrigin&) {
        rep << i << "," << s << ",-,refused (inverse below floor)\n";
      }
    }
  }
  detail::emit(cfg.report_path, rep.str(), os);
  os << (ok ? "PASS\n" : "FAIL\n");
  return ok ? 0 : 1;
}

inline int run_sd(const RunConfig& cfg, std::ostream& os) {
  detail::emit(cfg.csv_path, io::sd_csv(cfg.k, cfg.p), os);
  return 0;
}

inline int run_spectrum(const RunConfig& cfg, std::ostream& os) {
  const auto fam = io::family_from_json(io::load_json(cfg.input));
  detail::emit(cfg.csv_path, io::spectrum_csv(fam), os);
  return 0;
}

/// Dispatches one command. Exit status: 0 pass, 1 validation failure,
/// 2 structural or file errors.
inline int run(const RunConfig& cfg, std::ostream& os = std::cout) {
  try {
    if (cfg.command == "verify") return run_verify(cfg, os);
    if (cfg.command == "extract") return run_extract(cfg, os);
    if (cfg.command == "synth") return run_synth(cfg, os);
    if (cfg.command == "deform") return run_deform(cfg, os);
    if (cfg.command == "sd") return run_sd(cfg, os);
    if (cfg.command == "spectrum") return run_spectrum(cfg, os);
    os << "unknown command '" << cfg.command << "'\n";
    return 2;
  } catch (const io::FileError& e) {
    os << "file error: " << e.what() << "\n";
    return 2;
  } catch (const DimensionError& e) {
    os << "structural error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    os << "error: " << e.what() << "\n";
    return 1;
  }
}

} // namespace eft::cli
