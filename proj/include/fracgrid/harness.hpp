#pragma once

// Experiment scenarios: each reads its parameters from a config tree, runs the
// pipeline (kernels -> solve -> level-set analysis), and records measured
// quantities plus code-evaluated verdicts in a Report.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <json.hpp>

#include "fracgrid/config.hpp"
#include "fracgrid/degiorgi.hpp"
#include "fracgrid/exponents.hpp"
#include "fracgrid/kernels.hpp"
#include "fracgrid/solver.hpp"

namespace fracgrid {

using Json = nlohmann::ordered_json;

/// %.17g: round-trips every double and is stable across runs.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Short form for labels.
inline std::string format_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct Verdict {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct Series {
  std::string name;
  std::string xLabel;
  std::string yLabel;
  std::vector<std::pair<double, double>> points;
};

struct Report {
  std::string scenario;
  std::string anchor;    // the statement being exercised
  std::string criterion; // pass rule, fixed before running
  std::uint64_t seed = 0;
  Json parameters = Json::object();
  Json measured = Json::object();
  std::vector<Verdict> verdicts;
  std::vector<Series> series;
  std::vector<std::pair<std::string, std::string>> tables; // name, CSV text
  std::vector<std::string> artifacts;
  double seconds = 0.0;

  void check(std::string name, bool pass, std::string detail = {}) {
    verdicts.push_back({std::move(name), pass, std::move(detail)});
  }

  /// A report without verdicts is invalid and never passes.
  bool passed() const {
    return !verdicts.empty() && std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
  }

  Json to_json() const {
    Json j;
    j["scenario"] = scenario;
    j["anchor"] = anchor;
    j["criterion"] = criterion;
    j["seed"] = seed;
    j["parameters"] = parameters;
    j["measured"] = measured;
    Json vs = Json::array();
    for (const auto& v : verdicts) vs.push_back({{"name", v.name}, {"pass", v.pass}, {"detail", v.detail}});
    j["verdicts"] = vs;
    j["passed"] = passed();
    j["artifacts"] = artifacts;
    j["seconds"] = seconds;
    return j;
  }
};

struct Scenario {
  std::string name;
  ConfigTree config;
  std::uint64_t seed = 0;
};

inline std::string kernel_csv(const KernelGrid& k) {
  std::string out = "node,time,cell_integral\n";
  for (std::size_t i = 0; i < k.size(); ++i)
    out += std::to_string(i + 1) + "," + format_double(k.grid().time(i + 1)) + "," + format_double(k.cell(i)) + "\n";
  return out;
}

inline std::string trace_csv(const IterationTrace& tr) {
  std::string out = "n,kappa_n,Y_n,measure_n,energy_n\n";
  for (std::size_t n = 0; n < tr.yn.size(); ++n)
    out += std::to_string(n) + "," + format_double(tr.levels.levels[n]) + "," + format_double(tr.yn[n]) + "," +
           format_double(tr.measures[n]) + "," + format_double(tr.energies[n]) + "\n";
  return out;
}

inline std::string solution_csv(const GridFunction& u) {
  std::string out = "m,cell,value\n";
  for (std::size_t m = 0; m < u.slices(); ++m)
    for (std::size_t c = 0; c < u.domain().size(); ++c)
      out += std::to_string(m) + "," + std::to_string(c) + "," + format_double(u.at(m, c)) + "\n";
  return out;
}

namespace detail {

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline ConfigTree section(const ConfigTree& t, const std::string& name) {
  auto child = t.get_child_optional(name);
  return child ? *child : ConfigTree{};
}

inline std::string describe(double v) { return format_double(v); }

/// Discrete L_s norm of the source over interior cells and slices 1..M.
inline double source_norm(const SolveConfig& cfg, Exponent s) {
  const auto& d = cfg.domain;
  double acc = 0.0;
  for (std::size_t m = 1; m <= cfg.time.steps(); ++m)
    for (std::size_t c = 0; c < d.size(); ++c) {
      if (d.is_boundary(c)) continue;
      const double f = std::abs(cfg.source(cfg.time.time(m), m, c, d.center(c)));
      acc = s.is_infinite() ? std::max(acc, f) : acc + cfg.time.tau() * d.cell_volume() * std::pow(f, s.value());
    }
  return s.is_infinite() ? acc : std::pow(acc, 1.0 / s.value());
}

inline SolveConfig refined(const ConfigTree& t, std::uint64_t seed, std::size_t factor) {
  ConfigTree copy = t;
  const auto cells = get_list(t, "domain.cells", {64.0, 64.0});
  std::string joined;
  for (double c : cells) joined += format_double(c * static_cast<double>(factor)) + " ";
  copy.put("domain.cells", joined);
  copy.put("time.steps", config_value<std::size_t>(t, "time.steps", 100) * factor);
  return parse_solve_config(copy, seed);
}

inline int spatial_dimension(const SolveConfig& cfg) { return cfg.domain.is_point() ? 1 : cfg.domain.dimension(); }

inline double pair_l1_residual(const KernelPair& pair) {
  double acc = 0.0;
  for (double r : pair_residual_profile(pair.k(), pair.l())) acc += pair.grid().tau() * std::abs(r);
  return acc;
}

inline double pair_tail_residual(const KernelPair& pair, double from) {
  const auto r = pair_residual_profile(pair.k(), pair.l());
  double worst = 0.0;
  for (std::size_t m = 0; m < r.size(); ++m)
    if (pair.grid().time(m + 1) >= from) worst = std::max(worst, std::abs(r[m]));
  return worst;
}

} // namespace detail

inline Report kernel_diagnostics(const ConfigTree& root, Report rep) {
  const auto t = detail::section(root, "kernels");
  const auto alphas = get_list(t, "alpha", {0.25, 0.5, 0.75});
  const double mu = config_value<double>(t, "mu", 0.0);
  const double T = config_value<double>(t, "horizon", 1.0);
  const auto M = config_value<std::size_t>(t, "steps", 1000);
  const auto Mres = config_value<std::size_t>(t, "resolventSteps", 500);
  const auto ns = get_list(t, "n", {1, 4, 16, 64});
  const double tol = config_value<double>(t, "pairTol", 0.05);
  const double resTol = config_value<double>(t, "resolventTol", 1e-10);
  rep.anchor = "k * l = 1 for the PC pair; h_n + n h_n * l = n l; k_n = k * h_n stays nonnegative, nonincreasing and tends to k in L1";
  rep.criterion = "max_m |k*l - 1| <= pairTol at M and decreasing under M -> 2M; resolvent residual <= resolventTol; h_n >= 0; k_n flags; L1(k_n - k) decreasing in n";
  rep.parameters = {{"alpha", alphas}, {"mu", mu}, {"horizon", T}, {"steps", M}, {"resolventSteps", Mres}, {"n", ns},
                    {"pairTol", tol}, {"resolventTol", resTol}};

  for (double alpha : alphas) {
    const auto pair = pc_pair({alpha, mu}, TimeGrid(T, M));
    const auto fine = pc_pair({alpha, mu}, TimeGrid(T, 2 * M));
    const std::string tag = "alpha=" + format_label(alpha);
    Json m;
    m["pairResidual"] = pair.pair_residual();
    m["pairResidualRefined"] = fine.pair_residual();
    m["l1Residual"] = detail::pair_l1_residual(pair);
    m["l1ResidualRefined"] = detail::pair_l1_residual(fine);
    m["tailResidual"] = detail::pair_tail_residual(pair, 0.01 * T);
    m["tailResidualRefined"] = detail::pair_tail_residual(fine, 0.01 * T);
    m["kNonnegative"] = pair.k().is_nonnegative();
    m["kNonincreasing"] = pair.k().is_nonincreasing();
    rep.check(tag + " pair residual <= " + format_label(tol), pair.pair_residual() <= tol,
              "max residual " + format_double(pair.pair_residual()));
    rep.check(tag + " pair residual decreases under M -> 2M", fine.pair_residual() < pair.pair_residual(),
              format_double(pair.pair_residual()) + " -> " + format_double(fine.pair_residual()));
    rep.tables.emplace_back("kernel_k_" + tag, kernel_csv(pair.k()));
    rep.tables.emplace_back("kernel_l_" + tag, kernel_csv(pair.l()));
    rep.check(tag + " k nonnegative and nonincreasing", pair.k().is_nonnegative() && pair.k().is_nonincreasing());

    Series prof{"pair_residual_" + tag, "t", "(k*l)(t)-1", {}};
    const auto r = pair_residual_profile(pair.k(), pair.l());
    for (std::size_t i = 0; i < r.size(); ++i) prof.points.emplace_back(pair.grid().time(i + 1), r[i]);
    rep.series.push_back(std::move(prof));

    const auto pr = pc_pair({alpha, mu}, TimeGrid(T, Mres));
    Json per = Json::array();
    double prevL1 = std::numeric_limits<double>::infinity();
    bool l1Monotone = true;
    Series l1s{"yosida_l1_" + tag, "n", "L1(k_n - k)", {}};
    for (double nd : ns) {
      const auto n = static_cast<std::size_t>(nd);
      const auto h = resolvent_kernel(pr.l(), n);
      const auto kn = yosida_kernel(pr, n);
      const double res = resolvent_residual(pr.l(), h, n);
      const double l1 = l1_distance(kn, pr.k());
      l1Monotone = l1Monotone && l1 < prevL1;
      prevL1 = l1;
      per.push_back({{"n", n}, {"resolventResidual", res}, {"hNonnegative", h.is_nonnegative()},
                     {"knNonnegative", kn.is_nonnegative()}, {"knNonincreasing", kn.is_nonincreasing()},
                     {"l1Distance", l1}});
      rep.check(tag + " n=" + std::to_string(n) + " resolvent residual <= " + format_label(resTol), res <= resTol,
                format_double(res));
      rep.check(tag + " n=" + std::to_string(n) + " h_n >= 0", h.is_nonnegative());
      rep.check(tag + " n=" + std::to_string(n) + " k_n nonnegative and nonincreasing",
                kn.is_nonnegative() && kn.is_nonincreasing());
      l1s.points.emplace_back(nd, l1);
    }
    rep.check(tag + " L1(k_n - k) decreasing in n", l1Monotone);
    m["resolvent"] = per;
    rep.measured[tag] = m;
    rep.series.push_back(std::move(l1s));
  }
  return rep;
}

struct OdeStudy {
  std::vector<double> steps;
  std::vector<double> errors;
  double order = 0.0;
  double exact = 0.0;
};

/// Spatially homogeneous problem with f = 1, u0 = 0: u = g_{1+alpha}(t).
inline OdeStudy fractional_ode_study(double alpha, double T, const std::vector<double>& steps) {
  OdeStudy st;
  st.steps = steps;
  st.exact = std::pow(T, alpha) / std::tgamma(1.0 + alpha);
  for (double Md : steps) {
    const auto M = static_cast<std::size_t>(Md);
    SolveConfig cfg{.kernel = FracParams{alpha, 0.0},
                    .domain = DomainGrid::point(),
                    .time = TimeGrid(T, M),
                    .nonlinearity = {},
                    .source = constant_field(1.0),
                    .inner = {}};
    const auto res = solve(cfg);
    st.errors.push_back(std::abs(res.u.at(M, 0) - st.exact) / st.exact);
  }
  std::vector<double> taus;
  for (double M : steps) taus.push_back(T / M);
  st.order = detail::loglog_slope(taus, st.errors);
  return st;
}

inline Report fractional_ode(const ConfigTree& root, Report rep) {
  const auto t = detail::section(root, "fractionalODE");
  const double alpha = config_value<double>(t, "alpha", 0.5);
  const double T = config_value<double>(t, "horizon", 1.0);
  const auto steps = get_list(t, "steps", {250, 500, 1000, 2000});
  const double ref = config_value<double>(t, "referenceSteps", 1000);
  const double tol = config_value<double>(t, "relTol", 0.02);
  const double minOrder = config_value<double>(t, "minOrder", 0.5);
  rep.anchor = "k * l = 1 makes u = g_alpha * f the solution of the homogeneous-in-space problem";
  rep.criterion = "relative error at referenceSteps <= relTol and fitted order >= minOrder";
  rep.parameters = {{"alpha", alpha}, {"horizon", T}, {"steps", steps}, {"referenceSteps", ref},
                    {"relTol", tol}, {"minOrder", minOrder}};
  const auto st = fractional_ode_study(alpha, T, steps);
  rep.measured = {{"exact", st.exact}, {"errors", st.errors}, {"order", st.order}};
  Series s{"refinement", "tau", "relative error", {}};
  for (std::size_t i = 0; i < steps.size(); ++i) {
    s.points.emplace_back(T / steps[i], st.errors[i]);
    if (steps[i] == ref)
      rep.check("relative error at M=" + format_label(ref) + " <= " + format_label(tol), st.errors[i] <= tol,
                format_double(st.errors[i]));
  }
  rep.check("measured order >= " + format_label(minOrder), st.order >= minOrder, format_double(st.order));
  rep.series.push_back(std::move(s));
  return rep;
}

inline Report max_principle(const ConfigTree& root, Report rep) {
  const auto t = detail::section(root, "maxPrinciple");
  const auto ps = get_list(t, "p", {1.5, 2.0, 3.0});
  const auto alphas = get_list(t, "alpha", {0.3, 0.7});
  const auto runs = config_value<std::size_t>(t, "runs", 10);
  const auto cells = config_value<std::size_t>(t, "cells", 128);
  const auto steps = config_value<std::size_t>(t, "steps", 256);
  const double T = config_value<double>(t, "horizon", 1.0);
  const double K = config_value<double>(t, "amplitude", 1.0);
  const double tol = config_value<double>(t, "tol", 1e-9);
  const double constant = config_value<double>(t, "constant", 0.5);
  const double innerTol = config_value<double>(t, "innerTol", 1e-10);
  rep.anchor = "with f = 0, u <= max{0, sup u0, sup boundary} and the mirrored lower bound";
  rep.criterion = "every run: max u <= max u0 + tol and min u >= -tol; constant data reproduced to innerTol";
  rep.parameters = {{"p", ps}, {"alpha", alphas}, {"runs", runs}, {"cells", cells}, {"steps", steps},
                    {"horizon", T}, {"amplitude", K}, {"tol", tol}, {"constant", constant}, {"innerTol", innerTol}};

  auto config = [&](double p, double alpha) {
    SolveConfig cfg{.kernel = FracParams{alpha, 0.0},
                    .domain = DomainGrid::interval(1.0, cells),
                    .time = TimeGrid(T, steps),
                    .nonlinearity = {},
                    .inner = {}};
    cfg.nonlinearity.p = p;
    if (p < 2.0) cfg.nonlinearity.epsilonReg = 1e-8;
    cfg.inner.tol = innerTol;
    return cfg;
  };

  Json runsOut = Json::array();
  for (std::size_t i = 0; i < runs; ++i) {
    const double p = ps[i % ps.size()];
    const double alpha = alphas[(i / ps.size()) % alphas.size()];
    auto cfg = config(p, alpha);
    cfg.initial = parse_field("random:0," + format_double(K), cfg.domain, rep.seed + i);
    const auto res = solve(cfg);
    double u0max = 0.0;
    for (double v : res.u.slice(0)) u0max = std::max(u0max, v);
    const double umax = res.u.max(), umin = res.u.min();
    const std::string tag = "run " + std::to_string(i) + " (p=" + format_label(p) + ", alpha=" + format_label(alpha) + ")";
    rep.check(tag + " max u <= max u0 + tol", umax <= u0max + tol,
              "max u - max u0 = " + format_double(umax - u0max));
    rep.check(tag + " min u >= -tol", umin >= -tol, "min u = " + format_double(umin));
    runsOut.push_back({{"p", p}, {"alpha", alpha}, {"seed", rep.seed + i}, {"maxU0", u0max}, {"maxU", umax},
                       {"minU", umin}, {"seconds", res.diagnostics.seconds}});
    if (i == 0) {
      Series s{"slice_final", "x", "u(T,x)", {}};
      for (std::size_t c = 0; c < cfg.domain.size(); ++c) s.points.emplace_back(cfg.domain.center(c)[0], res.u.at(steps, c));
      rep.series.push_back(std::move(s));
      Series mx{"slice_max", "t", "max_x u(t,x)", {}};
      for (std::size_t m = 0; m < res.diagnostics.sliceMax.size(); ++m) mx.points.emplace_back(cfg.time.time(m), res.diagnostics.sliceMax[m]);
      rep.series.push_back(std::move(mx));
    }
  }
  rep.measured["runs"] = runsOut;

  Json consts = Json::array();
  for (double p : ps)
    for (double alpha : alphas) {
      auto cfg = config(p, alpha);
      cfg.initial = constant_field(constant);
      cfg.boundary = constant_field(constant);
      const auto res = solve(cfg);
      double dev = 0.0;
      for (double v : res.u.values()) dev = std::max(dev, std::abs(v - constant));
      rep.check("constant preserved (p=" + format_label(p) + ", alpha=" + format_label(alpha) + ")",
                dev <= innerTol, "max deviation " + format_double(dev));
      consts.push_back({{"p", p}, {"alpha", alpha}, {"maxDeviation", dev}});
    }
  rep.measured["constantPreservation"] = consts;
  return rep;
}

struct EnergyStudy {
  double tildeKappa = 0.0;
  std::vector<double> levels;
  std::vector<double> ratios;
  double cEmp = std::numeric_limits<double>::quiet_NaN();
  bool finite = false;
};

inline EnergyStudy energy_study(const GridFunction& u, double delta, std::size_t count, double gamma, Exponent q,
                                double p, Exponent s) {
  EnergyStudy st;
  st.tildeKappa = data_level(u);
  for (std::size_t j = 0; j <= count; ++j) st.levels.push_back(st.tildeKappa + static_cast<double>(j) * delta);
  st.finite = true;
  for (double k : st.levels) {
    const double rhs = energy_rhs(u, k, gamma, s);
    const double lhs = truncated_energy(u, k, q, p).total();
    const double ratio = rhs > 0.0 ? lhs / rhs : (lhs == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    st.ratios.push_back(ratio);
    if (!std::isfinite(ratio)) st.finite = false;
  }
  st.cEmp = st.ratios.empty() ? 0.0 : *std::max_element(st.ratios.begin(), st.ratios.end());
  // An all-empty level family gives no information about the constant.
  if (!(st.cEmp > 0.0)) st.finite = false;
  return st;
}

inline Report energy_estimate(const ConfigTree& root, Report rep) {
  const auto t = detail::section(root, "energyEstimate");
  const auto cfg = parse_solve_config(root, rep.seed);
  const double gamma = config_value<double>(t, "gamma", 2.0);
  const Exponent q = get_exponent(t, "q", Exponent(1.5));
  const Exponent s = get_exponent(t, "s", Exponent::infinity());
  const double delta = config_value<double>(t, "delta", 0.1);
  const auto count = config_value<std::size_t>(t, "levels", 10);
  const auto factor = config_value<std::size_t>(t, "refine", 2);
  const double maxVar = config_value<double>(t, "maxVariation", 0.25);
  const double p = cfg.nonlinearity.p;
  const int N = detail::spatial_dimension(cfg);
  rep.anchor = "|(u-k)_+|^2_{L_2q(L_2)} + |D(u-k)_+|^p_{L_p} <= C (int int_{A_k} u^gamma + (int |A_k|)^{1/s'}) for k >= tilde kappa";
  rep.criterion = "C_emp = max ratio over k in {tilde kappa + j delta} is finite and changes by < maxVariation under one refinement";
  rep.parameters = {{"gamma", gamma}, {"q", q.value()}, {"s", s.value()}, {"delta", delta}, {"levels", count},
                    {"refine", factor}, {"maxVariation", maxVar}, {"N", N}, {"p", p}};

  const auto exps = derive_exponents({.N = N, .p = p, .q = q, .gamma = gamma, .s = s});
  rep.measured["sThreshold"] = exps.sThreshold;
  rep.check("source exponent s above N/p + q'", exps.sAdmissible,
            "s=" + format_double(s.value()) + " threshold " + format_double(exps.sThreshold));
  rep.measured["sourceNorm"] = detail::source_norm(cfg, s);
  if (const auto* fp = std::get_if<FracParams>(&cfg.kernel)) {
    const auto adm = check_fractional_admissibility(N, p, fp->alpha, q, s);
    rep.check("l = g_alpha lies in L_q (q < 1/(1-alpha))", adm.kernelAdmissible);
  }

  const auto base = solve(cfg);
  const auto fine = solve(detail::refined(root, rep.seed, factor));
  const auto a = energy_study(base.u, delta, count, gamma, q, p, s);
  const auto b = energy_study(fine.u, delta, count, gamma, q, p, s);
  const double variation = std::abs(b.cEmp - a.cEmp) / a.cEmp;
  rep.measured["base"] = {{"tildeKappa", a.tildeKappa}, {"levels", a.levels}, {"ratios", a.ratios}, {"cEmp", a.cEmp},
                          {"maxU", base.u.max()}};
  rep.measured["refined"] = {{"tildeKappa", b.tildeKappa}, {"levels", b.levels}, {"ratios", b.ratios},
                             {"cEmp", b.cEmp}, {"maxU", fine.u.max()}};
  rep.measured["variation"] = variation;
  rep.check("C_emp finite (base grid)", a.finite, format_double(a.cEmp));
  rep.check("C_emp finite (refined grid)", b.finite, format_double(b.cEmp));
  rep.check("C_emp variation under refinement < " + format_label(maxVar), a.finite && b.finite && variation < maxVar,
            format_double(variation));
  Series sr{"energy_ratio", "kappa", "truncated_energy / energy_rhs", {}};
  for (std::size_t i = 0; i < a.levels.size(); ++i) sr.points.emplace_back(a.levels[i], a.ratios[i]);
  rep.series.push_back(std::move(sr));
  return rep;
}

inline Report apriori_bound_scenario(const ConfigTree& root, Report rep) {
  const auto t = detail::section(root, "aprioriBound");
  const auto cfg = parse_solve_config(root, rep.seed);
  const double gamma = config_value<double>(t, "gamma", 2.0);
  const Exponent q = get_exponent(t, "q", Exponent(1.5));
  const Exponent s = get_exponent(t, "s", Exponent::infinity());
  const double Chat = config_value<double>(t, "Chat", 1.0);
  const auto nMax = config_value<std::size_t>(t, "nMax", 40);
  const auto amps = get_list(t, "amplitudes", {0.25, 0.5, 1.0, 2.0});
  const double p = cfg.nonlinearity.p;
  const int N = detail::spatial_dimension(cfg);
  rep.anchor = "kappa = tilde kappa + max{1, (Chat int int u_+^gamma)^{alpha r/(gamma(r-gamma))}} gives Y_n -> 0 and sup u <= 2 kappa";
  rep.criterion = "Y_n strictly decreasing until collapse, collapse reached, max u <= 2 kappa; sup u nondecreasing in |f|_s";
  rep.parameters = {{"gamma", gamma}, {"q", q.value()}, {"s", s.value()}, {"Chat", Chat}, {"nMax", nMax},
                    {"amplitudes", amps}, {"N", N}, {"p", p}};

  const auto exps = derive_exponents({.N = N, .p = p, .q = q, .gamma = gamma, .s = s});
  rep.check("gamma in (1, r)", exps.gammaAdmissible, "r=" + format_double(exps.r));
  rep.check("source exponent s above N/p + q'", exps.sAdmissible);
  const auto res = solve(cfg);
  const double tk = data_level(res.u);
  const auto tr = run_iteration(res.u, tk, gamma, exps, Chat, nMax);
  rep.measured["tildeKappa"] = tk;
  rep.measured["kappa"] = tr.levels.kappa;
  rep.measured["maxU"] = res.u.max();
  rep.measured["massGamma"] = tr.massGamma;
  rep.measured["Yn"] = tr.yn;
  rep.measured["measures"] = tr.measures;
  rep.measured["energies"] = tr.energies;
  rep.measured["decaySlope"] = tr.decaySlope;
  rep.measured["collapsedAt"] = tr.collapsedAt ? Json(*tr.collapsedAt) : Json(nullptr);
  rep.tables.emplace_back("trace", trace_csv(tr));
  rep.measured["boundFormula"] = apriori_bound(tk, Chat, gamma, exps, tr.massGamma);
  rep.check("Y_n strictly decreasing until collapse", tr.strictlyDecreasing);
  rep.check("level sets collapse within nMax", tr.collapsedAt.has_value());
  rep.check("max u <= 2 kappa", tr.maxBelowTwoKappa,
            "max u " + format_double(res.u.max()) + ", 2 kappa " + format_double(2.0 * tr.levels.kappa));

  Series ys{"log_Yn", "n", "log Y_n", {}};
  for (std::size_t n = 0; n < tr.yn.size(); ++n)
    if (tr.yn[n] > 0.0) ys.points.emplace_back(static_cast<double>(n), std::log(tr.yn[n]));
  rep.series.push_back(std::move(ys));

  Series sweep{"sup_vs_source", "|f|_s", "sup u", {}};
  double prevSup = -std::numeric_limits<double>::infinity();
  bool monotone = true;
  for (double a : amps) {
    SolveConfig scaled = cfg;
    const FieldFn f = cfg.source;
    scaled.source = [f, a](double tt, std::size_t m, std::size_t c, const std::array<double, 2>& x) { return a * f(tt, m, c, x); };
    const double sup = solve(scaled).u.max();
    monotone = monotone && sup >= prevSup - 1e-12;
    prevSup = sup;
    sweep.points.emplace_back(detail::source_norm(scaled, s), sup);
  }
  Json sw = Json::array();
  for (const auto& [x, y] : sweep.points) sw.push_back({{"sourceNorm", x}, {"supU", y}});
  rep.measured["amplitudeSweep"] = sw;
  rep.check("sup u nondecreasing in |f|_s", monotone);
  rep.series.push_back(std::move(sweep));
  return rep;
}

inline Report sharpness_sweep(const ConfigTree& root, Report rep) {
  const auto t = detail::section(root, "sharpness");
  const int N = config_value<int>(t, "N", 4);
  const double p = config_value<double>(t, "p", 3.0);
  const double alpha = config_value<double>(t, "alpha", 0.6);
  const double tol = config_value<double>(t, "tol", 1e-9);
  const double thr = N / p + 1.0 / alpha;
  const double sMin = config_value<double>(t, "sMin", std::max(1.0 / alpha, 1.0) + 1e-3);
  const double sMax = config_value<double>(t, "sMax", p == 2.0 ? thr + 4.0 : static_cast<double>(N));
  const auto count = config_value<std::size_t>(t, "count", 41);
  rep.anchor = "omega1 < omega2 is equivalent to s > N/p + 1/alpha";
  rep.criterion = "sign(omega2 - omega1) = sign(s - N/p - 1/alpha) on the sweep, and the bisected flip point is within tol of N/p + 1/alpha";
  rep.parameters = {{"N", N}, {"p", p}, {"alpha", alpha}, {"tol", tol}, {"sMin", sMin}, {"sMax", sMax}, {"count", count}};
  rep.measured["threshold"] = thr;

  const auto probe = sharpness_exponents({.N = N, .p = p, .alpha = alpha, .s = 0.5 * (sMin + sMax)});
  if (probe.status == SharpnessStatus::outOfScope || probe.status == SharpnessStatus::windowEmpty) {
    rep.measured["status"] = to_string(probe.status);
    rep.check("parameters inside the sharpness preconditions", false, to_string(probe.status));
    return rep;
  }
  Json rows = Json::array();
  std::string csv = "s,rHat,omega1,omega2,verdict\n";
  Series s1{"omega1", "s", "omega1", {}}, s2{"omega2", "s", "omega2", {}};
  bool signsAgree = true;
  double lo = -1.0, hi = -1.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double sv = sMin + (sMax - sMin) * static_cast<double>(i) / static_cast<double>(count - 1);
    const auto c = sharpness_exponents({.N = N, .p = p, .alpha = alpha, .s = sv});
    rows.push_back({{"s", sv}, {"rHat", c.rHat}, {"omega1", c.omega1}, {"omega2", c.omega2},
                    {"ordered", c.omegaOrdered}, {"status", to_string(c.status)}});
    csv += format_double(sv) + "," + format_double(c.rHat) + "," + format_double(c.omega1) + "," +
           format_double(c.omega2) + "," + (c.omegaOrdered ? "ordered" : "reversed") + "\n";
    s1.points.emplace_back(sv, c.omega1);
    s2.points.emplace_back(sv, c.omega2);
    if (std::abs(sv - thr) > 1e-12) signsAgree = signsAgree && (c.omegaOrdered == (sv > thr));
    if (!c.omegaOrdered) lo = sv;
    if (c.omegaOrdered && hi < 0.0) hi = sv;
  }
  rep.measured["rows"] = rows;
  rep.tables.emplace_back("sharpness", csv);
  rep.check("sign(omega2 - omega1) = sign(s - threshold) at every sweep point", signsAgree);
  if (lo > 0.0 && hi > lo) {
    const double flip = sharpness_flip_point(N, p, alpha, lo, hi);
    rep.measured["flipPoint"] = flip;
    rep.check("flip point within " + format_label(tol) + " of N/p + 1/alpha", std::abs(flip - thr) <= tol,
              "flip " + format_double(flip) + ", threshold " + format_double(thr));
  } else {
    rep.check("sweep brackets the flip point", false);
  }
  rep.series.push_back(std::move(s1));
  rep.series.push_back(std::move(s2));
  return rep;
}

inline Report lemma_suite(const ConfigTree& root, Report rep) {
  using Wide = boost::multiprecision::cpp_bin_float_50;
  const auto t = detail::section(root, "lemmas");
  const auto tuples = config_value<std::size_t>(t, "tuples", 100);
  const auto nMax = config_value<std::size_t>(t, "nMax", 50);
  const double relTol = config_value<double>(t, "relTol", 1e-12);
  rep.anchor = "Y_0 at the lemma thresholds gives Y_n <= threshold b^{-n/alpha}";
  rep.criterion = "bound holds for every n <= nMax and every seeded tuple, in both modes";
  rep.parameters = {{"tuples", tuples}, {"nMax", nMax}, {"relTol", relTol}};
  std::mt19937_64 rng(rep.seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::size_t fails[2] = {0, 0};
  double worst[2] = {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  std::size_t probeViolations = 0;
  for (std::size_t i = 0; i < tuples; ++i) {
    RecursionParams r;
    // (1, 10] and (0, 2] by reflection of [0, 1).
    r.C = 10.0 - 9.0 * U(rng);
    r.b = 10.0 - 9.0 * U(rng);
    r.alpha = 2.0 - 2.0 * U(rng);
    r.delta = r.alpha + 2.0 * U(rng);
    for (int mode = 0; mode < 2; ++mode) {
      const auto lm = mode == 0 ? LemmaMode::single : LemmaMode::twoTerm;
      const auto res = lemma_iterate_log<Wide>(r, lm, lemma_log_threshold<Wide>(r, lm), nMax, relTol);
      if (!res.boundHolds) ++fails[mode];
      worst[mode] = std::max(worst[mode], res.worstExcess);
    }
    const auto probe = lemma_iterate_log<Wide>(r, LemmaMode::single,
                                               lemma_log_threshold<Wide>(r, LemmaMode::single) + Wide(std::log(2.0)), nMax, relTol);
    if (!probe.boundHolds) ++probeViolations;
  }
  rep.measured = {{"singleFailures", fails[0]}, {"twoTermFailures", fails[1]}, {"singleWorstLogExcess", worst[0]},
                  {"twoTermWorstLogExcess", worst[1]}, {"doubledStartViolations", probeViolations}};
  rep.check("single-term lemma bound holds for all tuples", fails[0] == 0, std::to_string(fails[0]) + " failures");
  rep.check("two-term lemma bound holds for all tuples", fails[1] == 0, std::to_string(fails[1]) + " failures");
  return rep;
}

inline Report embedding_suite(const ConfigTree& root, Report rep) {
  const auto t = detail::section(root, "embedding");
  const auto tuples = config_value<std::size_t>(t, "tuples", 1000);
  const double relTol = config_value<double>(t, "relTol", 1e-12);
  rep.anchor = "1/eta = beta/p + (1-beta)/2; theta = alpha r/gamma; threshold predicates agree; embedding branch identities; r >= 2 iff p >= 2N/(N+2)";
  rep.criterion = "every identity holds to relTol on every seeded tuple";
  rep.parameters = {{"tuples", tuples}, {"relTol", relTol}};
  std::mt19937_64 rng(rep.seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::uniform_int_distribution<int> Nd(1, 6);
  std::size_t etaFail = 0, thetaFail = 0, predFail = 0, gnFail = 0, sobFail = 0, remarkFail = 0, gnCount = 0, sobCount = 0;
  for (std::size_t i = 0; i < tuples; ++i) {
    StructureParams sp;
    sp.N = Nd(rng);
    sp.p = 1.0 + 1e-3 + 6.0 * U(rng);
    sp.q = Exponent(1.0 + 1e-3 + 20.0 * U(rng));
    sp.s = Exponent(1.0 + 1e-3 + 30.0 * U(rng));
    const double r = derive_exponents(sp).r;
    sp.gamma = 1.0 + (r - 1.0) * (0.01 + 0.98 * U(rng));
    const auto e = derive_exponents(sp);
    if (std::abs(1.0 / e.eta - (e.beta / sp.p + (1.0 - e.beta) / 2.0)) > relTol / e.eta) ++etaFail;
    if (std::abs(e.theta - e.alphaDG * e.r / sp.gamma) > relTol * std::max(1.0, std::abs(e.theta))) ++thetaFail;
    const bool a = sp.s.value() > e.sThreshold;
    const bool b = (1.0 - sp.s.reciprocal()) / e.eta > 1.0 / e.r;
    const bool c = e.alphaDG > 0.0;
    if (std::abs(sp.s.value() - e.sThreshold) > 1e-9 * e.sThreshold && !(a == b && b == c)) ++predFail;
    const auto chk = check_embedding_identities(sp, relTol);
    if (chk.gagliardoNirenberg != BranchVerdict::notApplicable) {
      ++gnCount;
      if (chk.gagliardoNirenberg != BranchVerdict::pass) ++gnFail;
    }
    if (chk.sobolev != BranchVerdict::notApplicable) {
      ++sobCount;
      if (chk.sobolev != BranchVerdict::pass) ++sobFail;
    }
    if (!chk.rAtLeastTwoRemark) ++remarkFail;
  }
  rep.measured = {{"etaFailures", etaFail}, {"thetaFailures", thetaFail}, {"predicateFailures", predFail},
                  {"interpolationBranchCases", gnCount}, {"interpolationBranchFailures", gnFail},
                  {"sobolevBranchCases", sobCount}, {"sobolevBranchFailures", sobFail},
                  {"remarkFailures", remarkFail}};
  rep.check("1/eta = beta/p + (1-beta)/2", etaFail == 0, std::to_string(etaFail) + " failures");
  rep.check("theta = alphaDG r / gamma", thetaFail == 0, std::to_string(thetaFail) + " failures");
  rep.check("threshold predicates agree", predFail == 0, std::to_string(predFail) + " failures");
  rep.check("r_hat = 2q for p > 2N/(N+2)", gnFail == 0 && gnCount > 0,
            std::to_string(gnFail) + " failures of " + std::to_string(gnCount));
  rep.check("second branch identity = 2 for p <= 2N/(N+2), p < N", sobFail == 0 && sobCount > 0,
            std::to_string(sobFail) + " failures of " + std::to_string(sobCount));
  rep.check("r >= 2 iff p >= 2N/(N+2)", remarkFail == 0, std::to_string(remarkFail) + " failures");
  return rep;
}

inline Report natural_growth(const ConfigTree& root, Report rep) {
  const auto t = detail::section(root, "naturalGrowth");
  auto cfg = parse_solve_config(root, rep.seed);
  cfg.nonlinearity.kind = NonlinearityKind::naturalGrowth;
  const double tol = config_value<double>(t, "tol", 1e-8);
  rep.anchor = "|b| <= C2 |Du|^p with f = 0: |u|_inf <= max{|u0|_inf, sup_boundary |u|} for bounded solutions";
  rep.criterion = "fixed point converges, cap never active, and max |u| <= data sup + tol";
  rep.parameters = {{"C2", cfg.nonlinearity.C2}, {"growthCap", cfg.nonlinearity.growthCap}, {"tol", tol}};
  try {
    const auto res = solve(cfg);
    double dataSup = 0.0, uSup = 0.0;
    for (double v : res.u.slice(0)) dataSup = std::max(dataSup, std::abs(v));
    for (std::size_t m = 1; m < res.u.slices(); ++m)
      for (std::size_t c = 0; c < cfg.domain.size(); ++c)
        if (cfg.domain.is_boundary(c)) dataSup = std::max(dataSup, std::abs(res.u.at(m, c)));
    for (double v : res.u.values()) uSup = std::max(uSup, std::abs(v));
    rep.measured = {{"dataSup", dataSup}, {"uSup", uSup}, {"capActive", res.diagnostics.capActive},
                    {"fixedPointIterations", res.diagnostics.fixedPointIterations}};
    rep.check("fixed point converged", true);
    rep.check("inside structure (Q): cap never active", !res.diagnostics.capActive);
    rep.check("max |u| <= data sup + tol", uSup <= dataSup + tol, format_double(uSup - dataSup));
  } catch (const SolverError& e) {
    rep.measured = {{"error", e.what()}};
    rep.check("fixed point converged", false, e.what());
  }
  return rep;
}

struct ClassicalStudy {
  std::vector<double> timeSteps, timeErrors, cells, spaceErrors;
  double timeOrder = 0.0, spaceOrder = 0.0;
};

/// Heat equation through the unit point-mass kernel: u_t - u_xx = f on [0, 1]
/// with exact Dirichlet data in the ring cells.
inline ClassicalStudy classical_limit_study(const std::vector<double>& steps, std::size_t fineCells,
                                            const std::vector<double>& cells, std::size_t fewSteps) {
  const double pi = std::acos(-1.0);
  auto run = [](std::size_t nc, std::size_t M, double T, auto exact, auto source) {
    const TimeGrid tg(T, M);
    SolveConfig cfg{.kernel = classical_kernel(tg),
                    .domain = DomainGrid::interval(1.0, nc),
                    .time = tg,
                    .nonlinearity = {},
                    .inner = {}};
    auto field = [exact](double t, std::size_t, std::size_t, const std::array<double, 2>& x) { return exact(t, x[0]); };
    cfg.initial = field;
    cfg.boundary = field;
    cfg.source = [source](double t, std::size_t, std::size_t, const std::array<double, 2>& x) { return source(t, x[0]); };
    const auto res = solve(cfg);
    double err = 0.0;
    for (std::size_t c = 0; c < nc; ++c) err = std::max(err, std::abs(res.u.at(M, c) - exact(T, cfg.domain.center(c)[0])));
    return err;
  };
  ClassicalStudy st;
  // Decaying mode: time error dominates on a fine grid.
  auto decay = [pi](double t, double x) { return std::exp(-pi * pi * t) * std::sin(pi * x); };
  auto none = [](double, double) { return 0.0; };
  for (double M : steps) {
    st.timeSteps.push_back(0.1 / M);
    st.timeErrors.push_back(run(fineCells, static_cast<std::size_t>(M), 0.1, decay, none));
  }
  // Linear in time: backward Euler is exact, only the h^2 error remains.
  auto linear = [pi](double t, double x) { return (1.0 + t) * std::sin(pi * x); };
  auto forcing = [pi](double t, double x) { return std::sin(pi * x) * (1.0 + pi * pi * (1.0 + t)); };
  for (double nc : cells) {
    st.cells.push_back(1.0 / nc);
    st.spaceErrors.push_back(run(static_cast<std::size_t>(nc), fewSteps, 0.5, linear, forcing));
  }
  st.timeOrder = detail::loglog_slope(st.timeSteps, st.timeErrors);
  st.spaceOrder = detail::loglog_slope(st.cells, st.spaceErrors);
  return st;
}

inline Report classical_limit(const ConfigTree& root, Report rep) {
  const auto t = detail::section(root, "classicalLimit");
  const auto steps = get_list(t, "steps", {10, 20, 40, 80});
  const auto fineCells = config_value<std::size_t>(t, "fineCells", 800);
  const auto cells = get_list(t, "cells", {16, 32, 64, 128});
  const double rel = config_value<double>(t, "orderTol", 0.2);
  rep.anchor = "alpha -> 1, p = 2 is the heat equation; the scheme becomes backward Euler";
  rep.criterion = "measured orders within orderTol (relative) of 1 in tau and 2 in h";
  rep.parameters = {{"steps", steps}, {"fineCells", fineCells}, {"cells", cells}, {"orderTol", rel}};
  const auto st = classical_limit_study(steps, fineCells, cells, 4);
  rep.measured = {{"timeErrors", st.timeErrors}, {"timeOrder", st.timeOrder}, {"spaceErrors", st.spaceErrors},
                  {"spaceOrder", st.spaceOrder}};
  rep.check("time order within tolerance of 1", std::abs(st.timeOrder - 1.0) <= rel, format_double(st.timeOrder));
  rep.check("space order within tolerance of 2", std::abs(st.spaceOrder - 2.0) <= 2.0 * rel, format_double(st.spaceOrder));
  Series ts{"time_refinement", "tau", "error", {}}, ss{"space_refinement", "h", "error", {}};
  for (std::size_t i = 0; i < st.timeSteps.size(); ++i) ts.points.emplace_back(st.timeSteps[i], st.timeErrors[i]);
  for (std::size_t i = 0; i < st.cells.size(); ++i) ss.points.emplace_back(st.cells[i], st.spaceErrors[i]);
  rep.series.push_back(std::move(ts));
  rep.series.push_back(std::move(ss));
  return rep;
}

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {"maxPrinciple",  "energyEstimate",    "aprioriBound",
                                                 "fractionalODE", "sharpnessSweep",    "kernelDiagnostics",
                                                 "naturalGrowth", "lemmas",            "embedding",
                                                 "classicalLimit"};
  return names;
}

inline Report run_scenario(const Scenario& s) {
  using Runner = Report (*)(const ConfigTree&, Report);
  static const std::vector<std::pair<std::string, Runner>> table = {
      {"maxPrinciple", max_principle},     {"energyEstimate", energy_estimate}, {"aprioriBound", apriori_bound_scenario},
      {"fractionalODE", fractional_ode},   {"sharpnessSweep", sharpness_sweep}, {"kernelDiagnostics", kernel_diagnostics},
      {"naturalGrowth", natural_growth},   {"lemmas", lemma_suite},             {"embedding", embedding_suite},
      {"classicalLimit", classical_limit}};
  const auto it = std::find_if(table.begin(), table.end(), [&](const auto& e) { return e.first == s.name; });
  if (it == table.end()) throw std::invalid_argument("run_scenario: unknown scenario '" + s.name + "'");
  Report rep;
  rep.scenario = s.name;
  rep.seed = s.seed;
  const auto start = std::chrono::steady_clock::now();
  try {
    rep = it->second(s.config, std::move(rep));
  } catch (const std::exception& e) {
    throw std::runtime_error("scenario " + s.name + ": " + e.what());
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

/// Two-column gnuplot files, one per series, plus manifest.json.
inline std::vector<std::string> emit_plotdata(Report& rep, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> files;
  Json manifest = Json::array();
  for (const auto& s : rep.series) {
    std::string name = rep.scenario + "_" + s.name + ".dat";
    for (char& c : name)
      if (c == '=' || c == ' ') c = '_';
    std::string body = "# " + s.xLabel + "\t" + s.yLabel + "\n";
    for (const auto& [x, y] : s.points) body += format_double(x) + "\t" + format_double(y) + "\n";
    write_text(dir / name, body);
    files.push_back((dir / name).string());
    manifest.push_back({{"file", name}, {"series", s.name}, {"x", s.xLabel}, {"y", s.yLabel}, {"points", s.points.size()}});
  }
  write_text(dir / (rep.scenario + "_manifest.json"), manifest.dump(2) + "\n");
  files.push_back((dir / (rep.scenario + "_manifest.json")).string());
  rep.artifacts.insert(rep.artifacts.end(), files.begin(), files.end());
  return files;
}

inline Json exponents_json(const ExponentSet& e) {
  auto num = [](double v) { return std::isfinite(v) ? Json(v) : Json("inf"); };
  return Json{{"r", e.r},
              {"beta", e.beta},
              {"eta", e.eta},
              {"theta", e.theta},
              {"sThreshold", e.sThreshold},
              {"alphaDG", e.alphaDG},
              {"deltaDG", e.deltaDG},
              {"gammaAdmissible", e.gammaAdmissible},
              {"sAdmissible", e.sAdmissible},
              {"params",
               {{"N", e.params.N}, {"p", e.params.p}, {"q", num(e.params.q.value())}, {"gamma", e.params.gamma},
                {"s", num(e.params.s.value())}}}};
}

} // namespace fracgrid
