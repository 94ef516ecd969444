#pragma once

// De Giorgi iteration: the two geometric-convergence lemmas, level-set
// functionals on discrete space-time fields, and the sup bound built from them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include <boost/math/special_functions/log1p.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "fracgrid/exponents.hpp"
#include "fracgrid/grid.hpp"

namespace fracgrid {

enum class LemmaMode {
  single,  // Y_{n+1} <= C b^n Y_n^{1+alpha}
  twoTerm  // Y_{n+1} <= C b^n (Y_n^{1+alpha} + Y_n^{1+delta})
};

struct RecursionParams {
  double C = 2.0;
  double b = 2.0;
  double alpha = 1.0;
  double delta = 1.0;

  void validate() const {
    if (!(C > 1.0)) throw std::invalid_argument("RecursionParams: C must be > 1");
    if (!(b > 1.0)) throw std::invalid_argument("RecursionParams: b must be > 1");
    if (!(alpha > 0.0)) throw std::invalid_argument("RecursionParams: alpha must be > 0");
    if (!(delta >= alpha)) throw std::invalid_argument("RecursionParams: delta must be >= alpha");
  }
};

/// ln of the admissible Y_0: C^{-1/alpha} b^{-1/alpha^2}, with C -> 2C in two-term mode.
template <class Real = double>
Real lemma_log_threshold(const RecursionParams& r, LemmaMode mode) {
  using std::log;
  const Real C = mode == LemmaMode::single ? Real(r.C) : Real(2) * Real(r.C);
  const Real a = r.alpha;
  return -log(C) / a - log(Real(r.b)) / (a * a);
}

struct LemmaResult {
  std::vector<double> logY;                 // ln Y_n, n = 0..last computed
  bool boundHolds = true;                   // Y_n <= threshold b^{-n/alpha} for every computed n
  std::optional<std::size_t> firstViolation;
  std::optional<std::size_t> divergedAt;    // Y_n left the double range
  double worstExcess = -std::numeric_limits<double>::infinity(); // max_n ln(Y_n / bound_n)
};

/// Runs the recursion with equality, in log space and in arithmetic type Real.
/// The bound is accepted when ln(Y_n / bound_n) <= relTol.
template <class Real = double>
LemmaResult lemma_iterate_log(const RecursionParams& r, LemmaMode mode, Real logY0, std::size_t nMax,
                              double relTol = 1e-12) {
  using std::exp;
  using std::log;
  r.validate();
  const Real logC = log(Real(r.C));
  const Real logB = log(Real(r.b));
  const Real a = r.alpha;
  const Real d = r.delta;
  const Real logThreshold = lemma_log_threshold<Real>(r, mode);
  const Real overflow = log(Real(std::numeric_limits<double>::max()));

  LemmaResult out;
  Real ell = logY0;
  for (std::size_t n = 0; n <= nMax; ++n) {
    if (ell > overflow) {
      out.divergedAt = n;
      out.boundHolds = false;
      if (!out.firstViolation) out.firstViolation = n;
      break;
    }
    out.logY.push_back(static_cast<double>(ell));
    const Real excess = ell - (logThreshold - Real(static_cast<double>(n)) * logB / a);
    out.worstExcess = std::max(out.worstExcess, static_cast<double>(excess));
    if (excess > Real(relTol) && !out.firstViolation) {
      out.firstViolation = n;
      out.boundHolds = false;
    }
    if (n == nMax) break;
    Real next = logC + Real(static_cast<double>(n)) * logB + (Real(1) + a) * ell;
    if (mode == LemmaMode::twoTerm) next += boost::math::log1p(exp((d - a) * ell));
    ell = next;
  }
  return out;
}

/// Y0 is taken as an exact binary value; the recursion runs in 50 decimal digits
/// because a relative perturbation grows like (1 + alpha)^n along the iteration.
inline LemmaResult lemma_iterate(const RecursionParams& r, LemmaMode mode, double Y0, std::size_t nMax,
                                 double relTol = 1e-12) {
  using Wide = boost::multiprecision::cpp_bin_float_50;
  if (!(Y0 > 0.0)) throw std::invalid_argument("lemma_iterate: Y0 must be > 0");
  return lemma_iterate_log<Wide>(r, mode, Wide(log(Wide(Y0))), nMax, relTol);
}

struct LevelMeasure {
  double measure = 0.0; // int_0^T |A_kappa(t)| dt
  double yGamma = 0.0;  // int_0^T int (u - kappa)_+^gamma dx dt
};

/// Space-time level-set functionals; slices m = 1..M with weight tau x cell volume.
inline LevelMeasure level_measure(const GridFunction& u, double kappa, double gamma = 1.0) {
  const auto& d = u.domain();
  const double w = u.time_grid().tau() * d.cell_volume();
  LevelMeasure out;
  for (std::size_t m = 1; m < u.slices(); ++m) {
    for (double v : u.slice(m)) {
      if (v > kappa) {
        out.measure += w;
        out.yGamma += w * std::pow(v - kappa, gamma);
      }
    }
  }
  return out;
}

struct TruncatedEnergy {
  double timeNormTerm = 0.0; // |(u - kappa)_+|^2 in L_{2q}(0,T; L_2)
  double gradientTerm = 0.0; // |D (u - kappa)_+|^p in L_p
  double total() const noexcept { return timeNormTerm + gradientTerm; }
};

inline TruncatedEnergy truncated_energy(const GridFunction& u, double kappa, Exponent q, double p) {
  const auto& d = u.domain();
  const double tau = u.time_grid().tau();
  const double vol = d.cell_volume();
  std::vector<double> w(d.size());

  TruncatedEnergy out;
  double timeAcc = 0.0;
  for (std::size_t m = 1; m < u.slices(); ++m) {
    const auto s = u.slice(m);
    double l2sq = 0.0;
    for (std::size_t c = 0; c < d.size(); ++c) {
      w[c] = std::max(s[c] - kappa, 0.0);
      l2sq += vol * w[c] * w[c];
    }
    if (q.is_infinite())
      timeAcc = std::max(timeAcc, l2sq);
    else
      timeAcc += tau * std::pow(l2sq, q.value());
    for (std::size_t c = 0; c < d.size(); ++c)
      out.gradientTerm += tau * vol * std::pow(forward_gradient_sq(d, w, c), 0.5 * p);
  }
  out.timeNormTerm = q.is_infinite() ? timeAcc : std::pow(timeAcc, 1.0 / q.value());
  return out;
}

/// int int_{A_kappa} u^gamma + (int |A_kappa| dt)^{(s-1)/s}, without the constant.
inline double energy_rhs(const GridFunction& u, double kappa, double gamma, Exponent s) {
  const auto& d = u.domain();
  const double w = u.time_grid().tau() * d.cell_volume();
  double mass = 0.0;
  double measure = 0.0;
  for (std::size_t m = 1; m < u.slices(); ++m) {
    for (double v : u.slice(m)) {
      if (v > kappa) {
        mass += w * std::pow(v, gamma);
        measure += w;
      }
    }
  }
  return mass + (measure > 0.0 ? std::pow(measure, s.conjugate_reciprocal()) : 0.0);
}

/// 2 (K + max{1, C massGamma^{theta/(r - gamma)}}).
inline double apriori_bound(double K, double C, double gamma, const ExponentSet& exps, double massGamma) {
  if (!(gamma < exps.r)) throw std::domain_error("apriori_bound: gamma must be < r");
  if (!(gamma > 1.0)) throw std::domain_error("apriori_bound: gamma must be > 1");
  if (!(massGamma >= 0.0)) throw std::invalid_argument("apriori_bound: massGamma must be >= 0");
  const double expo = exps.theta / (exps.r - gamma);
  const double term = massGamma > 0.0 ? C * std::pow(massGamma, expo) : 0.0;
  return 2.0 * (K + std::max(1.0, term));
}

struct LevelSequence {
  double kappa = 1.0;
  double tildeKappa = 0.0;
  std::vector<double> levels; // kappa (2 - 2^{-n})
};

inline LevelSequence make_levels(double kappa, double tildeKappa, std::size_t nMax) {
  if (!(kappa >= std::max(tildeKappa, 1.0)))
    throw std::invalid_argument("make_levels: kappa must be >= max{tildeKappa, 1}");
  LevelSequence seq{kappa, tildeKappa, {}};
  seq.levels.reserve(nMax + 1);
  for (std::size_t n = 0; n <= nMax; ++n) seq.levels.push_back(kappa * (2.0 - std::ldexp(1.0, -static_cast<int>(n))));
  return seq;
}

struct IterationTrace {
  LevelSequence levels;
  std::vector<double> yn;
  std::vector<double> measures;
  std::vector<double> energies;
  double massGamma = 0.0;                  // int int u_+^gamma
  std::optional<std::size_t> collapsedAt;  // first n with Y_n = 0
  bool strictlyDecreasing = true;          // Y_{n+1} < Y_n up to collapse
  bool maxBelowTwoKappa = false;
  double decaySlope = std::numeric_limits<double>::quiet_NaN(); // LSQ slope of ln Y_n on the positive prefix
};

/// Level choice kappa = tildeKappa + max{1, (Chat int int u_+^gamma)^{alpha r / (gamma (r - gamma))}}.
inline double iteration_base_level(double tildeKappa, double massGamma, double gamma, const ExponentSet& exps,
                                   double Chat) {
  if (!(exps.alphaDG > 0.0)) throw std::invalid_argument("iteration_base_level: source exponent s not admissible");
  if (!(gamma > 1.0 && gamma < exps.r)) throw std::invalid_argument("iteration_base_level: need 1 < gamma < r");
  if (!(Chat > 0.0)) throw std::invalid_argument("iteration_base_level: Chat must be > 0");
  const double expo = exps.alphaDG * exps.r / (gamma * (exps.r - gamma));
  return tildeKappa + std::max(1.0, std::pow(Chat * massGamma, expo));
}

inline IterationTrace run_iteration(const GridFunction& u, double tildeKappa, double gamma, const ExponentSet& exps,
                                    double Chat, std::size_t nMax = 40) {
  IterationTrace t;
  t.massGamma = level_measure(u, 0.0, gamma).yGamma;
  const double kappa = iteration_base_level(tildeKappa, t.massGamma, gamma, exps, Chat);
  t.levels = make_levels(kappa, tildeKappa, nMax);

  for (std::size_t n = 0; n <= nMax; ++n) {
    const double level = t.levels.levels[n];
    const LevelMeasure lm = level_measure(u, level, gamma);
    t.yn.push_back(lm.yGamma);
    t.measures.push_back(lm.measure);
    t.energies.push_back(truncated_energy(u, level, exps.params.q, exps.params.p).total());
    if (n > 0 && !(t.yn[n] < t.yn[n - 1])) t.strictlyDecreasing = false;
    if (lm.yGamma == 0.0) {
      t.collapsedAt = n;
      break;
    }
  }
  t.maxBelowTwoKappa = u.max() <= 2.0 * kappa;

  std::vector<double> xs, ys;
  for (std::size_t n = 0; n < t.yn.size(); ++n) {
    if (t.yn[n] <= 0.0) break;
    xs.push_back(static_cast<double>(n));
    ys.push_back(std::log(t.yn[n]));
  }
  if (xs.size() >= 2) {
    const double k = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sx += xs[i];
      sy += ys[i];
      sxx += xs[i] * xs[i];
      sxy += xs[i] * ys[i];
    }
    t.decaySlope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  }
  return t;
}

/// Ratios truncated_energy / energy_rhs at the given levels; levels with an
/// empty level set (rhs = 0) are skipped.
inline std::vector<double> energy_ratios(const GridFunction& u, std::span<const double> levels, double gamma,
                                         Exponent q, double p, Exponent s) {
  std::vector<double> out;
  for (double kappa : levels) {
    const double rhs = energy_rhs(u, kappa, gamma, s);
    if (rhs <= 0.0) continue;
    out.push_back(truncated_energy(u, kappa, q, p).total() / rhs);
  }
  return out;
}

} // namespace fracgrid
