#pragma once

// Implicit solver for d/dt (k * (u - u0)) - div a(Du) = b + f on rectangular
// cell-centred grids with Dirichlet data in the boundary ring.
//
// Time: backward difference of the product-integration quadrature of k * (u - u0),
//   D_m(u) = lead (u_m - u0) - sum_{i=1}^{m-1} w_i (u_{m-i} - u0),
//   lead = K_1 / tau,  w_i = (K_i - K_{i+1}) / tau >= 0 for nonincreasing k.
// Space: each step minimizes the strictly convex energy
//   E(v) = sum_Omega vol [lead/2 (v - shift)^2 - f v + R(v)] + sum_cells vol F(D_h v),
//   F(g) = (|g|^2 + eps^2)^{p/2} / p,
// whose Euler-Lagrange equation is the discrete step equation.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "fracgrid/grid.hpp"
#include "fracgrid/kernels.hpp"

namespace fracgrid {

enum class NonlinearityKind {
  pLaplace,           // a = Phi_eps(Du), b = 0
  pLaplaceLowerOrder, // a = Phi_eps(Du), b = -c2 |u|^{gamma-2} u (regularized)
  naturalGrowth       // a = Phi_eps(Du), b = C2 min(|Du|^p, cap), lagged
};

struct Nonlinearity {
  NonlinearityKind kind = NonlinearityKind::pLaplace;
  double p = 2.0;
  double gamma = 2.0;
  double C0 = 1.0, C1 = 1.0, C2 = 0.0;
  double c0 = 0.0, c1 = 0.0, c2 = 0.0;
  double epsilonReg = 0.0;
  double growthCap = 1e6;

  void validate() const {
    if (!(p > 1.0)) throw std::invalid_argument("Nonlinearity: p must be > 1");
    if (!(C0 > 0.0)) throw std::invalid_argument("Nonlinearity: C0 must be > 0");
    if (!(epsilonReg >= 0.0)) throw std::invalid_argument("Nonlinearity: epsilonReg must be >= 0");
    if (p < 2.0 && epsilonReg == 0.0)
      throw std::invalid_argument("Nonlinearity: singular case p < 2 needs epsilonReg > 0");
    if (kind == NonlinearityKind::pLaplaceLowerOrder) {
      if (!(gamma > 1.0)) throw std::invalid_argument("Nonlinearity: gamma must be > 1");
      if (!(c2 >= 0.0)) throw std::invalid_argument("Nonlinearity: c2 must be >= 0");
      if (gamma < 2.0 && epsilonReg == 0.0)
        throw std::invalid_argument("Nonlinearity: gamma < 2 needs epsilonReg > 0");
    }
    if (kind == NonlinearityKind::naturalGrowth && !(growthCap > 0.0))
      throw std::invalid_argument("Nonlinearity: growthCap must be > 0");
  }
};

enum class InnerMethod { newton, gradientDescent };

struct InnerOptions {
  double tol = 1e-10;
  std::size_t maxIter = 200;
  InnerMethod method = InnerMethod::newton;
  double fixedPointTol = 1e-10;
  std::size_t fixedPointMaxIter = 200;
};

/// Data callback f(t, m, cell, x); used for u0 (t = 0, m = 0), boundary values and sources.
using FieldFn = std::function<double(double t, std::size_t m, std::size_t cell, const std::array<double, 2>& x)>;

inline FieldFn constant_field(double value) {
  return [value](double, std::size_t, std::size_t, const std::array<double, 2>&) { return value; };
}

struct SolveConfig {
  std::variant<FracParams, KernelGrid> kernel;
  DomainGrid domain;
  TimeGrid time;
  Nonlinearity nonlinearity;
  FieldFn initial = constant_field(0.0);
  FieldFn boundary = constant_field(0.0);
  FieldFn source = constant_field(0.0);
  InnerOptions inner;
};

inline KernelGrid resolve_kernel(const SolveConfig& cfg) {
  if (const auto* fp = std::get_if<FracParams>(&cfg.kernel)) {
    fp->validate();
    return weighted_rl_kernel(1.0 - fp->alpha, fp->mu, cfg.time);
  }
  const auto& k = std::get<KernelGrid>(cfg.kernel);
  if (!(k.grid() == cfg.time)) throw std::invalid_argument("SolveConfig: kernel grid does not match time grid");
  return k;
}

struct StepWeights {
  double lead = 0.0;          // K_1 / tau
  std::vector<double> memory; // (K_i - K_{i+1}) / tau for lag i = 1..M-1, stored at i-1
  bool monotone = true;       // all memory weights >= 0
};

inline StepWeights step_weights(const KernelGrid& k) {
  const auto K = k.cell_integrals();
  if (!(K[0] > 0.0)) throw std::domain_error("step_weights: leading cell integral must be > 0");
  const double tau = k.grid().tau();
  StepWeights w;
  w.lead = K[0] / tau;
  w.memory.resize(K.size() > 0 ? K.size() - 1 : 0);
  for (std::size_t i = 0; i + 1 < K.size(); ++i) {
    w.memory[i] = (K[i] - K[i + 1]) / tau;
    if (w.memory[i] < 0.0) w.monotone = false;
  }
  return w;
}

/// D_m(u) for a scalar history u_0..u_m (m = history.size() - 1).
inline double discrete_time_derivative(const StepWeights& w, std::span<const double> history) {
  if (history.size() < 2) throw std::invalid_argument("discrete_time_derivative: need u_0 and u_m");
  const std::size_t m = history.size() - 1;
  const double u0 = history[0];
  double acc = w.lead * (history[m] - u0);
  for (std::size_t i = 1; i < m; ++i) acc -= w.memory.at(i - 1) * (history[m - i] - u0);
  return acc;
}

struct StepStats {
  std::size_t innerIterations = 0;
  double gradientNorm = 0.0;
  double energy = 0.0;
  std::size_t fixedPointIterations = 0;
  bool capActive = false;
};

class SolverError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class Stepper {
public:
  explicit Stepper(const SolveConfig& cfg)
      : cfg_(cfg), kernel_(resolve_kernel(cfg)), weights_(step_weights(kernel_)) {
    cfg_.nonlinearity.validate();
    if (!(cfg_.inner.tol > 0.0) || !(cfg_.inner.fixedPointTol > 0.0))
      throw std::invalid_argument("InnerOptions: tolerances must be > 0");
    const auto& d = cfg_.domain;
    unknown_.assign(d.size(), -1);
    for (std::size_t c = 0; c < d.size(); ++c)
      if (!d.is_boundary(c)) {
        unknown_[c] = static_cast<long>(cells_.size());
        cells_.push_back(c);
      }
  }

  const KernelGrid& kernel() const noexcept { return kernel_; }
  const StepWeights& weights() const noexcept { return weights_; }
  const SolveConfig& config() const noexcept { return cfg_; }

  /// Writes slice 0 (u0 in Omega, boundary data on the ring).
  void initialize(GridFunction& u) const {
    const auto& d = cfg_.domain;
    for (std::size_t c = 0; c < d.size(); ++c) {
      const auto x = d.center(c);
      u.at(0, c) = d.is_boundary(c) ? cfg_.boundary(0.0, 0, c, x) : cfg_.initial(0.0, 0, c, x);
    }
  }

  /// Solves slice m from slices 0..m-1. extraSource (full cell length) is added to f.
  StepStats implicit_step(GridFunction& u, std::size_t m, std::span<const double> extraSource = {}) const {
    if (m < 1 || m >= u.slices()) throw std::out_of_range("implicit_step: slice index out of range");
    const auto& d = cfg_.domain;
    const double t = cfg_.time.time(m);

    Problem pb;
    pb.shift.assign(d.size(), 0.0);
    pb.f.assign(d.size(), 0.0);
    const auto u0 = u.slice(0);
    for (std::size_t c : cells_) {
      double hist = 0.0;
      for (std::size_t i = 1; i < m; ++i) hist += weights_.memory[i - 1] * (u.at(m - i, c) - u0[c]);
      pb.shift[c] = u0[c] + hist / weights_.lead;
      pb.f[c] = cfg_.source(t, m, c, d.center(c)) + (extraSource.empty() ? 0.0 : extraSource[c]);
    }

    std::vector<double> v(u.slice(m - 1).begin(), u.slice(m - 1).end());
    for (std::size_t c = 0; c < d.size(); ++c)
      if (d.is_boundary(c)) v[c] = cfg_.boundary(t, m, c, d.center(c));

    StepStats stats = minimize(pb, v);
    std::copy(v.begin(), v.end(), u.slice(m).begin());
    return stats;
  }

  /// Lagged fixed point for b = C2 min(|D_h u|^p, cap).
  StepStats natural_growth_step(GridFunction& u, std::size_t m) const {
    const auto& d = cfg_.domain;
    const auto& nl = cfg_.nonlinearity;
    std::vector<double> b(d.size(), 0.0);
    std::vector<double> prev(u.slice(m - 1).begin(), u.slice(m - 1).end());
    StepStats stats;
    for (std::size_t it = 1; it <= cfg_.inner.fixedPointMaxIter; ++it) {
      for (std::size_t c : cells_) {
        const double g = std::pow(forward_gradient_sq(d, prev, c), 0.5 * nl.p);
        if (g > nl.growthCap) stats.capActive = true;
        b[c] = nl.C2 * std::min(g, nl.growthCap);
      }
      const StepStats inner = implicit_step(u, m, b);
      stats.innerIterations += inner.innerIterations;
      stats.gradientNorm = inner.gradientNorm;
      stats.energy = inner.energy;
      stats.fixedPointIterations = it;
      double diff = 0.0, scale = 0.0;
      const auto cur = u.slice(m);
      for (std::size_t c = 0; c < d.size(); ++c) {
        diff = std::max(diff, std::abs(cur[c] - prev[c]));
        scale = std::max(scale, std::abs(cur[c]));
      }
      // it == 1 compares against the previous slice, not a lagged iterate.
      if (it > 1 && diff <= cfg_.inner.fixedPointTol * (1.0 + scale)) return stats;
      if (nl.C2 == 0.0) return stats;
      prev.assign(cur.begin(), cur.end());
    }
    std::ostringstream msg;
    msg << "natural_growth_step: fixed point stalled at step " << m << " after "
        << cfg_.inner.fixedPointMaxIter << " iterations";
    throw SolverError(msg.str());
  }

  StepStats step(GridFunction& u, std::size_t m) const {
    if (cfg_.nonlinearity.kind == NonlinearityKind::naturalGrowth) return natural_growth_step(u, m);
    return implicit_step(u, m);
  }

private:
  struct Problem {
    std::vector<double> shift;
    std::vector<double> f;
    double eps = 0.0; // regularization used by this solve
  };

  // F(g) pieces for |g|^2 = sq: value, phi = F'(g)/g, and the rank-one factor.
  struct Flux {
    double value, phi, rankOne;
  };

  Flux flux(double sq, double eps) const {
    const auto& nl = cfg_.nonlinearity;
    const double s = sq + eps * eps;
    if (s == 0.0) return {0.0, nl.p == 2.0 ? 1.0 : 0.0, 0.0};
    const double phi = std::pow(s, 0.5 * (nl.p - 2.0));
    return {phi * s / nl.p, phi, phi * (nl.p - 2.0) / s};
  }

  // Reaction potential R(v) = c2/gamma ((v^2 + eps^2)^{gamma/2} - eps^gamma) and derivatives.
  std::array<double, 3> reaction(double v, double eps) const {
    const auto& nl = cfg_.nonlinearity;
    if (nl.kind != NonlinearityKind::pLaplaceLowerOrder || nl.c2 == 0.0) return {0.0, 0.0, 0.0};
    const double e2 = eps * eps;
    const double s = v * v + e2;
    if (s == 0.0) return {0.0, 0.0, nl.gamma == 2.0 ? nl.c2 : 0.0};
    const double q = std::pow(s, 0.5 * (nl.gamma - 2.0));
    const double val = nl.c2 / nl.gamma * (q * s - std::pow(e2, 0.5 * nl.gamma));
    return {val, nl.c2 * q * v, nl.c2 * q * (1.0 + (nl.gamma - 2.0) * v * v / s)};
  }

  double energy(const Problem& pb, const std::vector<double>& v) const {
    const auto& d = cfg_.domain;
    const double vol = d.cell_volume();
    double e = 0.0;
    for (std::size_t c : cells_) {
      const double dv = v[c] - pb.shift[c];
      e += vol * (0.5 * weights_.lead * dv * dv - pb.f[c] * v[c] + reaction(v[c], pb.eps)[0]);
    }
    if (!d.is_point())
      for (std::size_t c = 0; c < d.size(); ++c) e += vol * flux(forward_gradient_sq(d, v, c), pb.eps).value;
    return e;
  }

  // Gradient over unknowns; optionally assembles the Hessian.
  Eigen::VectorXd gradient(const Problem& pb, const std::vector<double>& v,
                           Eigen::SparseMatrix<double>* hess) const {
    const auto& d = cfg_.domain;
    const double vol = d.cell_volume();
    const double h = d.spacing();
    const auto n = static_cast<Eigen::Index>(cells_.size());
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    std::vector<Eigen::Triplet<double>> trip;

    for (std::size_t c : cells_) {
      const auto k = unknown_[c];
      const auto rx = reaction(v[c], pb.eps);
      g[k] += vol * (weights_.lead * (v[c] - pb.shift[c]) - pb.f[c] + rx[1]);
      if (hess) trip.emplace_back(k, k, vol * (weights_.lead + rx[2]));
    }
    if (!d.is_point()) {
      for (std::size_t c = 0; c < d.size(); ++c) {
        // Stencil: the cell itself and its forward neighbours along each axis.
        std::array<long, 2> nb{d.forward(c, 0), d.dimension() == 2 ? d.forward(c, 1) : -1};
        std::array<double, 2> comp{0.0, 0.0};
        double sq = 0.0;
        for (int a = 0; a < 2; ++a)
          if (nb[a] >= 0) {
            comp[a] = (v[static_cast<std::size_t>(nb[a])] - v[c]) / h;
            sq += comp[a] * comp[a];
          }
        if (nb[0] < 0 && nb[1] < 0) continue;
        const Flux fl = flux(sq, pb.eps);
        // dF/dv_j = sum_a phi comp_a dcomp_a/dv_j with dcomp_a/dv_c = -1/h, dcomp_a/dv_nb = 1/h.
        for (int a = 0; a < 2; ++a) {
          if (nb[a] < 0) continue;
          const double fa = vol * fl.phi * comp[a] / h;
          if (unknown_[static_cast<std::size_t>(nb[a])] >= 0) g[unknown_[static_cast<std::size_t>(nb[a])]] += fa;
          if (unknown_[c] >= 0) g[unknown_[c]] -= fa;
        }
        if (!hess) continue;
        // Hessian of F in gradient space: phi I + rankOne comp comp^T; chain through B.
        for (int a = 0; a < 2; ++a) {
          if (nb[a] < 0) continue;
          for (int b = 0; b < 2; ++b) {
            if (nb[b] < 0) continue;
            const double hab = vol * ((a == b ? fl.phi : 0.0) + fl.rankOne * comp[a] * comp[b]) / (h * h);
            if (hab == 0.0) continue;
            // B rows: +1 at nb[a], -1 at c.
            const std::array<std::pair<long, double>, 2> ra{{{nb[a], 1.0}, {static_cast<long>(c), -1.0}}};
            const std::array<std::pair<long, double>, 2> rb{{{nb[b], 1.0}, {static_cast<long>(c), -1.0}}};
            for (const auto& [ci, si] : ra) {
              const long ui = unknown_[static_cast<std::size_t>(ci)];
              if (ui < 0) continue;
              for (const auto& [cj, sj] : rb) {
                const long uj = unknown_[static_cast<std::size_t>(cj)];
                if (uj < 0) continue;
                trip.emplace_back(ui, uj, si * sj * hab);
              }
            }
          }
        }
      }
    }
    if (hess) {
      hess->resize(n, n);
      hess->setFromTriplets(trip.begin(), trip.end());
    }
    return g;
  }

  // Singular fluxes (p < 2 or gamma < 2) are stiff where the argument is near
  // zero; the regularization is lowered geometrically from 1, warm-starting each
  // stage, and only the final stage is held to the requested tolerance.
  StepStats minimize(Problem& pb, std::vector<double>& v) const {
    const auto& nl = cfg_.nonlinearity;
    const bool singular = nl.p < 2.0 || (nl.kind == NonlinearityKind::pLaplaceLowerOrder && nl.gamma < 2.0);
    std::size_t iterations = 0;
    if (singular) {
      for (double eps = 1.0; eps > nl.epsilonReg * 10.0; eps *= 0.1) {
        pb.eps = eps;
        iterations += minimize_at(pb, v, 1e-6, false).innerIterations;
      }
    }
    pb.eps = nl.epsilonReg;
    StepStats st = minimize_at(pb, v, cfg_.inner.tol, true);
    st.innerIterations += iterations;
    return st;
  }

  StepStats minimize_at(const Problem& pb, std::vector<double>& v, double tol, bool strict) const {
    const auto& opt = cfg_.inner;
    const bool newton = opt.method == InnerMethod::newton;
    Eigen::SparseMatrix<double> H;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    StepStats st;
    double e = energy(pb, v);
    std::vector<double> trial(v.size());

    for (std::size_t it = 0;; ++it) {
      Eigen::VectorXd g = gradient(pb, v, newton ? &H : nullptr);
      st.gradientNorm = g.norm();
      st.energy = e;
      st.innerIterations = it;
      if (st.gradientNorm <= tol * (1.0 + std::abs(e))) return st;
      if (it >= opt.maxIter) break;

      Eigen::VectorXd dir;
      if (newton) {
        ldlt.compute(H);
        if (ldlt.info() != Eigen::Success) throw SolverError("implicit_step: Hessian factorization failed");
        dir = -ldlt.solve(g);
      } else {
        dir = -g / (cfg_.domain.cell_volume() * weights_.lead);
      }
      const double slope = g.dot(dir);
      double stepLen = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 60; ++ls) {
        trial = v;
        for (std::size_t i = 0; i < cells_.size(); ++i) trial[cells_[i]] += stepLen * dir[static_cast<Eigen::Index>(i)];
        double et = energy(pb, trial);
        // Near the minimum the predicted decrease drops below the rounding of E;
        // a step that keeps E within rounding and lowers the gradient is then accepted.
        const bool armijo = et <= e + 1e-4 * stepLen * slope;
        const bool flat = !armijo && et <= e + 1e-12 * (1.0 + std::abs(e)) &&
                          gradient(pb, trial, nullptr).norm() < st.gradientNorm;
        if (armijo || flat) {
          // Sub-quadratic energies (p < 2) make Newton overshoot; shorter steps are
          // kept while they still lower E.
          for (int more = 0; armijo && more < 30; ++more) {
            std::vector<double> shorter = v;
            for (std::size_t i = 0; i < cells_.size(); ++i)
              shorter[cells_[i]] += 0.5 * stepLen * dir[static_cast<Eigen::Index>(i)];
            const double es = energy(pb, shorter);
            if (!(es < et)) break;
            trial.swap(shorter);
            et = es;
            stepLen *= 0.5;
          }
          v.swap(trial);
          e = et;
          accepted = true;
          break;
        }
        stepLen *= 0.5;
      }
      if (!accepted) break;
    }
    if (!strict) return st;
    std::ostringstream msg;
    msg << "implicit_step: inner solver did not reach tolerance; gradient norm " << st.gradientNorm
        << " after " << st.innerIterations << " iterations (target " << tol * (1.0 + std::abs(e)) << ")";
    throw SolverError(msg.str());
  }

  SolveConfig cfg_;
  KernelGrid kernel_;
  StepWeights weights_;
  std::vector<long> unknown_;
  std::vector<std::size_t> cells_;
};

struct SolveDiagnostics {
  std::vector<std::size_t> innerIterations;
  std::vector<std::size_t> fixedPointIterations;
  std::vector<double> gradientNorms;
  std::vector<double> sliceMax;
  std::vector<double> sliceMin;
  bool capActive = false; // natural growth left structure (Q) somewhere
  bool kernelMonotone = true;
  double seconds = 0.0;
};

struct SolveResult {
  GridFunction u;
  SolveDiagnostics diagnostics;
};

inline SolveResult solve(const SolveConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const Stepper stepper(cfg);
  SolveResult res{GridFunction(cfg.domain, cfg.time), {}};
  auto& diag = res.diagnostics;
  diag.kernelMonotone = stepper.weights().monotone;
  stepper.initialize(res.u);
  auto record = [&](std::size_t m) {
    const auto s = res.u.slice(m);
    diag.sliceMax.push_back(*std::max_element(s.begin(), s.end()));
    diag.sliceMin.push_back(*std::min_element(s.begin(), s.end()));
  };
  record(0);
  for (std::size_t m = 1; m < res.u.slices(); ++m) {
    const StepStats st = stepper.step(res.u, m);
    diag.innerIterations.push_back(st.innerIterations);
    diag.fixedPointIterations.push_back(st.fixedPointIterations);
    diag.gradientNorms.push_back(st.gradientNorm);
    diag.capActive = diag.capActive || st.capActive;
    record(m);
  }
  diag.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

} // namespace fracgrid
