#pragma once

// INI experiment descriptions:
//
//   [kernel]        alpha, mu            | kind = classical | kind = file, path (one cell integral per line)
//   [domain]        dim (0 = single cell, 1, 2), extents, cells
//   [time]          horizon, steps
//   [nonlinearity]  kind, p, gamma, C0 C1 C2 c0 c1 c2, epsilonReg, growthCap
//   [data]          u0, boundary, f as constant:v | bump:amp,width | random:lo,hi |
//                   powerlaw:amp,exponent | file:path
//   [inner]         tol, maxIter, method, fixedPointTol, fixedPointMaxIter
//
// Scenario sections are read by the harness from the same tree.

#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "fracgrid/solver.hpp"

namespace fracgrid {

using ConfigTree = boost::property_tree::ptree;

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline ConfigTree load_config(const std::string& path) {
  ConfigTree tree;
  try {
    boost::property_tree::read_ini(path, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("cannot read config '" + path + "': " + e.message());
  }
  return tree;
}

inline ConfigTree parse_config(const std::string& text) {
  ConfigTree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("cannot parse config: " + e.message());
  }
  return tree;
}

/// Value at key, or fallback when absent; a present but malformed value throws.
template <class T>
T config_value(const ConfigTree& t, const std::string& key, T fallback) {
  const auto raw = t.get_optional<std::string>(key);
  if (!raw) return fallback;
  try {
    return t.get<T>(key);
  } catch (const boost::property_tree::ptree_error&) {
    throw ConfigError("bad value for '" + key + "': '" + *raw + "'");
  }
}

/// Whitespace- or comma-separated list of numbers.
inline std::vector<double> parse_list(const std::string& text) {
  std::string s = text;
  for (char& c : s)
    if (c == ',' || c == ';') c = ' ';
  std::istringstream in(s);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ConfigError("not a number: '" + tok + "' in '" + text + "'");
    }
  }
  return out;
}

inline std::vector<double> get_list(const ConfigTree& t, const std::string& key, std::vector<double> fallback) {
  auto v = t.get_optional<std::string>(key);
  return v ? parse_list(*v) : fallback;
}

inline Exponent get_exponent(const ConfigTree& t, const std::string& key, Exponent fallback) {
  auto v = t.get_optional<std::string>(key);
  if (!v) return fallback;
  if (*v == "inf" || *v == "infinity") return Exponent::infinity();
  const auto xs = parse_list(*v);
  if (xs.size() != 1) throw ConfigError("expected one exponent for '" + key + "'");
  return Exponent(xs[0]);
}

inline std::vector<double> read_numbers(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open data file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_list(buf.str());
}

/// Field specification "kind:args". Random fields draw one value per cell from
/// the seeded generator at parse time.
inline FieldFn parse_field(const std::string& spec, const DomainGrid& domain, std::uint64_t seed) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string rest = colon == std::string::npos ? std::string{} : spec.substr(colon + 1);
  if (kind == "file") {
    if (rest.empty()) throw ConfigError("field 'file' needs a path");
    const auto values = read_numbers(rest);
    if (values.size() != domain.size())
      throw ConfigError("field file '" + rest + "' has " + std::to_string(values.size()) + " values, domain has " +
                        std::to_string(domain.size()) + " cells");
    return [values](double, std::size_t, std::size_t c, const std::array<double, 2>&) { return values[c]; };
  }
  const std::vector<double> args = parse_list(rest);
  auto need = [&](std::size_t n) {
    if (args.size() != n) throw ConfigError("field '" + spec + "' expects " + std::to_string(n) + " arguments");
  };
  if (kind == "constant") {
    need(1);
    return constant_field(args[0]);
  }
  if (kind == "bump") {
    // amp * exp(-|x - centre|^2 / width^2) about the domain centre.
    need(2);
    const double amp = args[0], width = args[1];
    const std::array<double, 2> mid{0.5 * domain.extent(0), domain.dimension() == 2 ? 0.5 * domain.extent(1) : 0.0};
    return [=](double, std::size_t, std::size_t, const std::array<double, 2>& x) {
      const double r2 = (x[0] - mid[0]) * (x[0] - mid[0]) + (x[1] - mid[1]) * (x[1] - mid[1]);
      return amp * std::exp(-r2 / (width * width));
    };
  }
  if (kind == "random") {
    need(2);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(args[0], args[1]);
    std::vector<double> values(domain.size());
    for (double& v : values) v = U(rng);
    return [values](double, std::size_t, std::size_t c, const std::array<double, 2>&) { return values[c]; };
  }
  if (kind == "powerlaw") {
    // amp |x - centre|^{-exponent}: in L_s exactly for s < N / exponent.
    need(2);
    const double amp = args[0], expo = args[1];
    const std::array<double, 2> mid{0.5 * domain.extent(0), domain.dimension() == 2 ? 0.5 * domain.extent(1) : 0.0};
    return [=](double, std::size_t, std::size_t, const std::array<double, 2>& x) {
      const double r = std::hypot(x[0] - mid[0], x[1] - mid[1]);
      return amp * std::pow(r, -expo);
    };
  }
  throw ConfigError("unknown field kind '" + kind + "'");
}

inline DomainGrid parse_domain(const ConfigTree& t) {
  const int dim = config_value<int>(t, "domain.dim", 1);
  if (dim == 0) return DomainGrid::point();
  const auto extents = get_list(t, "domain.extents", {1.0, 1.0});
  const auto cells = get_list(t, "domain.cells", {64.0, 64.0});
  auto count = [](double v) {
    if (!(v >= 1.0) || v != std::floor(v)) throw ConfigError("domain.cells must be positive integers");
    return static_cast<std::size_t>(v);
  };
  if (dim == 1) return DomainGrid::interval(extents.at(0), count(cells.at(0)));
  if (dim == 2) {
    if (extents.size() < 2 || cells.size() < 2) throw ConfigError("2D domain needs two extents and two cell counts");
    return DomainGrid::rectangle(extents[0], extents[1], count(cells[0]), count(cells[1]));
  }
  throw ConfigError("domain.dim must be 0, 1 or 2");
}

inline NonlinearityKind parse_kind(const std::string& s) {
  if (s == "pLaplace") return NonlinearityKind::pLaplace;
  if (s == "pLaplaceLowerOrder") return NonlinearityKind::pLaplaceLowerOrder;
  if (s == "naturalGrowth") return NonlinearityKind::naturalGrowth;
  throw ConfigError("unknown nonlinearity kind '" + s + "'");
}

inline Nonlinearity parse_nonlinearity(const ConfigTree& t) {
  Nonlinearity n;
  n.kind = parse_kind(config_value<std::string>(t, "nonlinearity.kind", "pLaplace"));
  n.p = config_value<double>(t, "nonlinearity.p", 2.0);
  n.gamma = config_value<double>(t, "nonlinearity.gamma", 2.0);
  n.C0 = config_value<double>(t, "nonlinearity.C0", 1.0);
  n.C1 = config_value<double>(t, "nonlinearity.C1", 1.0);
  n.C2 = config_value<double>(t, "nonlinearity.C2", 0.0);
  n.c0 = config_value<double>(t, "nonlinearity.c0", 0.0);
  n.c1 = config_value<double>(t, "nonlinearity.c1", 0.0);
  n.c2 = config_value<double>(t, "nonlinearity.c2", 0.0);
  n.epsilonReg = config_value<double>(t, "nonlinearity.epsilonReg", n.p < 2.0 ? 1e-8 : 0.0);
  n.growthCap = config_value<double>(t, "nonlinearity.growthCap", 1e6);
  n.validate();
  return n;
}

inline InnerOptions parse_inner(const ConfigTree& t) {
  InnerOptions o;
  o.tol = config_value<double>(t, "inner.tol", o.tol);
  o.maxIter = config_value<std::size_t>(t, "inner.maxIter", o.maxIter);
  const auto method = config_value<std::string>(t, "inner.method", "newton");
  if (method == "newton")
    o.method = InnerMethod::newton;
  else if (method == "gradientDescent")
    o.method = InnerMethod::gradientDescent;
  else
    throw ConfigError("unknown inner.method '" + method + "'");
  o.fixedPointTol = config_value<double>(t, "inner.fixedPointTol", o.fixedPointTol);
  o.fixedPointMaxIter = config_value<std::size_t>(t, "inner.fixedPointMaxIter", o.fixedPointMaxIter);
  if (!(o.tol > 0.0) || !(o.fixedPointTol > 0.0)) throw ConfigError("inner tolerances must be > 0");
  return o;
}

inline std::variant<FracParams, KernelGrid> parse_kernel(const ConfigTree& t, const TimeGrid& time) {
  const auto kind = config_value<std::string>(t, "kernel.kind", "fractional");
  if (kind == "classical") return classical_kernel(time);
  if (kind == "file") return KernelGrid(time, read_numbers(t.get<std::string>("kernel.path")));
  if (kind != "fractional") throw ConfigError("unknown kernel.kind '" + kind + "'");
  FracParams fp{config_value<double>(t, "kernel.alpha", 0.5), config_value<double>(t, "kernel.mu", 0.0)};
  fp.validate();
  return fp;
}

/// Builds a SolveConfig; `seed` feeds random field specs (u0 uses seed, f seed + 1, boundary seed + 2).
inline SolveConfig parse_solve_config(const ConfigTree& t, std::uint64_t seed) {
  try {
    const TimeGrid time(config_value<double>(t, "time.horizon", 1.0), config_value<std::size_t>(t, "time.steps", 100));
    DomainGrid domain = parse_domain(t);
    SolveConfig cfg{.kernel = parse_kernel(t, time),
                    .domain = domain,
                    .time = time,
                    .nonlinearity = parse_nonlinearity(t),
                    .initial = parse_field(config_value<std::string>(t, "data.u0", "constant:0"), domain, seed),
                    .boundary = parse_field(config_value<std::string>(t, "data.boundary", "constant:0"), domain, seed + 2),
                    .source = parse_field(config_value<std::string>(t, "data.f", "constant:0"), domain, seed + 1),
                    .inner = parse_inner(t)};
    return cfg;
  } catch (const boost::property_tree::ptree_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

inline StructureParams parse_structure(const ConfigTree& t, const std::string& section = "exponents") {
  StructureParams sp;
  sp.N = config_value<int>(t, section + ".N", 2);
  sp.p = config_value<double>(t, section + ".p", 2.0);
  sp.q = get_exponent(t, section + ".q", Exponent(2.0));
  sp.gamma = config_value<double>(t, section + ".gamma", 1.5);
  sp.s = get_exponent(t, section + ".s", Exponent::infinity());
  sp.validate();
  return sp;
}

} // namespace fracgrid
