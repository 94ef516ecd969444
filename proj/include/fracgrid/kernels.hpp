#pragma once

// Convolution kernels on the half line, sampled on a uniform time grid.
//
// A kernel is stored by its cell integrals K_i = int_{(i-1)tau}^{i tau} k(t) dt
// (i = 1..M, kept 0-based in memory), so integrable singularities at t = 0
// land in K_1 and stay finite. Convolution with a node sequence uses
// piecewise-constant product integration that is exact in the kernel factor:
//
//   (k * v)(t_m) ~= sum_{j=1..m} K_{m-j+1} v_j.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fracgrid/time_grid.hpp"

namespace fracgrid {

class KernelGrid {
public:
  KernelGrid(TimeGrid grid, std::vector<double> cellIntegrals)
      : grid_(grid), cells_(std::move(cellIntegrals)) {
    if (cells_.size() != grid_.steps())
      throw std::invalid_argument("KernelGrid: expected " + std::to_string(grid_.steps()) +
                                  " cell integrals, got " + std::to_string(cells_.size()));
    nonnegative_ = true;
    nonincreasing_ = true;
    for (std::size_t i = 0; i < cells_.size(); ++i) {
      if (!std::isfinite(cells_[i]))
        throw std::invalid_argument("KernelGrid: non-finite cell integral at index " +
                                    std::to_string(i));
      if (cells_[i] < 0.0) nonnegative_ = false;
      if (i + 1 < cells_.size() && cells_[i] < cells_[i + 1]) nonincreasing_ = false;
    }
  }

  const TimeGrid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return cells_.size(); }
  std::span<const double> cell_integrals() const noexcept { return cells_; }

  /// Cell i covers (i tau, (i+1) tau); cell(0) is K_1.
  double cell(std::size_t i) const { return cells_.at(i); }

  /// Cell averages K_i / tau, the node values used when this kernel is the
  /// second factor of a convolution.
  std::vector<double> averages() const {
    std::vector<double> out(cells_.size());
    const double tau = grid_.tau();
    std::transform(cells_.begin(), cells_.end(), out.begin(), [tau](double c) { return c / tau; });
    return out;
  }

  bool is_nonnegative() const noexcept { return nonnegative_; }
  bool is_nonincreasing() const noexcept { return nonincreasing_; }

private:
  TimeGrid grid_;
  std::vector<double> cells_;
  bool nonnegative_ = true;
  bool nonincreasing_ = true;
};

/// Parameters of the weighted fractional pair k = g_{1-alpha} e^{-mu t}.
struct FracParams {
  double alpha;
  double mu = 0.0;

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0))
      throw std::domain_error("FracParams: alpha must lie in (0,1)");
    if (!(mu >= 0.0)) throw std::domain_error("FracParams: mu must be >= 0");
  }
};

/// (a * v)(t_m) for m = 1..M; v holds node values v_1..v_M.
inline std::vector<double> convolve(const KernelGrid& a, std::span<const double> v) {
  if (v.size() != a.size())
    throw std::invalid_argument("convolve: sequence length " + std::to_string(v.size()) +
                                " does not match kernel grid length " + std::to_string(a.size()));
  const auto K = a.cell_integrals();
  std::vector<double> out(v.size(), 0.0);
  for (std::size_t m = 0; m < v.size(); ++m) {
    double acc = 0.0;
    for (std::size_t j = 0; j <= m; ++j) acc += K[m - j] * v[j];
    out[m] = acc;
  }
  return out;
}

/// Pointwise residual (k * l)(t_m) - 1, m = 1..M, with l entering through
/// its cell averages.
inline std::vector<double> pair_residual_profile(const KernelGrid& k, const KernelGrid& l) {
  auto conv = convolve(k, l.averages());
  for (double& c : conv) c -= 1.0;
  return conv;
}

class KernelPair {
public:
  KernelPair(KernelGrid k, KernelGrid l) : k_(std::move(k)), l_(std::move(l)) {
    if (!(k_.grid() == l_.grid()))
      throw std::invalid_argument("KernelPair: k and l must share the same time grid");
    residual_ = 0.0;
    for (double r : pair_residual_profile(k_, l_)) residual_ = std::max(residual_, std::abs(r));
  }

  const KernelGrid& k() const noexcept { return k_; }
  const KernelGrid& l() const noexcept { return l_; }
  const TimeGrid& grid() const noexcept { return k_.grid(); }

  /// max_m |(k * l)(t_m) - 1|, recomputed from the stored grids.
  double pair_residual() const noexcept { return residual_; }

private:
  KernelGrid k_;
  KernelGrid l_;
  double residual_ = 0.0;
};

namespace detail {

constexpr double kCellQuadratureTol = 1e-10;
constexpr unsigned kCellQuadratureDepth = 20;

template <class F>
double integrate(F&& f, double a, double b) {
  if (b <= a) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 21>::integrate(
      std::forward<F>(f), a, b, kCellQuadratureDepth, kCellQuadratureTol);
}

/// i^beta - (i-1)^beta without cancellation for large i.
inline double power_increment(double i, double beta) {
  if (i <= 1.0) return 1.0;
  return -std::pow(i, beta) * std::expm1(beta * std::log1p(-1.0 / i));
}

/// int_a^b s^{beta-1} e^{-mu s} ds / Gamma(beta) via w = s^beta, which makes
/// the integrand smooth on every cell including the first.
inline double weighted_rl_integral(double beta, double mu, double a, double b) {
  const double wa = std::pow(a, beta);
  const double wb = std::pow(b, beta);
  const double inv = 1.0 / beta;
  const double scale = 1.0 / std::tgamma(beta + 1.0);
  return scale * integrate([=](double w) { return std::exp(-mu * std::pow(w, inv)); }, wa, wb);
}

} // namespace detail

/// Riemann-Liouville kernel g_beta(t) = t^{beta-1} / Gamma(beta), exact cell integrals.
inline KernelGrid rl_kernel(double beta, const TimeGrid& grid) {
  if (!(beta > 0.0)) throw std::domain_error("rl_kernel: beta must be > 0");
  const double scale = std::pow(grid.tau(), beta) / std::tgamma(beta + 1.0);
  std::vector<double> cells(grid.steps());
  for (std::size_t i = 0; i < cells.size(); ++i)
    cells[i] = scale * detail::power_increment(static_cast<double>(i + 1), beta);
  return KernelGrid(grid, std::move(cells));
}

/// The alpha -> 1 limit of g_{1-alpha}: a unit point mass at t = 0, so that
/// d/dt (k * v) = v' and the time stepping reduces to backward Euler.
inline KernelGrid classical_kernel(const TimeGrid& grid) {
  std::vector<double> cells(grid.steps(), 0.0);
  cells[0] = 1.0;
  return KernelGrid(grid, std::move(cells));
}

/// Cell integrals of g_beta(t) e^{-mu t} by adaptive quadrature.
inline KernelGrid weighted_rl_kernel(double beta, double mu, const TimeGrid& grid) {
  if (!(beta > 0.0)) throw std::domain_error("weighted_rl_kernel: beta must be > 0");
  if (mu == 0.0) return rl_kernel(beta, grid);
  std::vector<double> cells(grid.steps());
  for (std::size_t i = 0; i < cells.size(); ++i)
    cells[i] = detail::weighted_rl_integral(beta, mu, grid.time(i), grid.time(i + 1));
  return KernelGrid(grid, std::move(cells));
}

/// The pair k = g_{1-alpha} e^{-mu t}, l = g_alpha e^{-mu t} + mu (1 * [g_alpha e^{-mu .}]).
inline KernelPair pc_pair(const FracParams& params, const TimeGrid& grid) {
  params.validate();
  const double alpha = params.alpha;
  const double mu = params.mu;
  if (mu == 0.0) return KernelPair(rl_kernel(1.0 - alpha, grid), rl_kernel(alpha, grid));

  KernelGrid k = weighted_rl_kernel(1.0 - alpha, mu, grid);
  KernelGrid e = weighted_rl_kernel(alpha, mu, grid);
  KernelGrid e1 = weighted_rl_kernel(alpha + 1.0, mu, grid);

  // With G(t) = int_0^t g_alpha(s) e^{-mu s} ds and t g_alpha = alpha g_{alpha+1},
  // integration by parts gives int_a^b G = b G(b) - a G(a) - alpha int_a^b g_{alpha+1} e^{-mu t}.
  std::vector<double> cells(grid.steps());
  double Ga = 0.0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const double a = grid.time(i);
    const double b = grid.time(i + 1);
    const double Gb = Ga + e.cell(i);
    const double cellG = b * Gb - a * Ga - alpha * e1.cell(i);
    cells[i] = e.cell(i) + mu * cellG;
    Ga = Gb;
  }
  return KernelPair(std::move(k), KernelGrid(grid, std::move(cells)));
}

/// Discrete resolvent of n*l: h + n (h * l) = n l at every node, solved by
/// forward substitution for the cell averages of h.
inline KernelGrid resolvent_kernel(const KernelGrid& l, std::size_t n) {
  if (n < 1) throw std::invalid_argument("resolvent_kernel: n must be >= 1");
  if (!l.is_nonnegative()) throw std::invalid_argument("resolvent_kernel: l must be nonnegative");
  const auto L = l.cell_integrals();
  if (!(L[0] > 0.0))
    throw std::domain_error("resolvent_kernel: leading cell integral of l must be > 0");

  const double tau = l.grid().tau();
  const double nn = static_cast<double>(n);
  const double lead = 1.0 + nn * L[0];
  std::vector<double> h(L.size());
  for (std::size_t m = 0; m < L.size(); ++m) {
    double hist = 0.0;
    for (std::size_t j = 0; j < m; ++j) hist += L[m - j] * h[j];
    h[m] = (nn * L[m] / tau - nn * hist) / lead;
  }
  for (double& v : h) v *= tau;
  return KernelGrid(l.grid(), std::move(h));
}

/// max_m |h_m + n (h * l)_m - n l_m| in node-value units.
inline double resolvent_residual(const KernelGrid& l, const KernelGrid& h, std::size_t n) {
  const auto hAvg = h.averages();
  const auto lAvg = l.averages();
  const auto conv = convolve(l, hAvg);
  const double nn = static_cast<double>(n);
  double worst = 0.0;
  for (std::size_t m = 0; m < hAvg.size(); ++m)
    worst = std::max(worst, std::abs(hAvg[m] + nn * conv[m] - nn * lAvg[m]));
  return worst;
}

/// Yosida-regularized kernel k_n = k * h_n.
inline KernelGrid yosida_kernel(const KernelPair& pair, std::size_t n) {
  const KernelGrid h = resolvent_kernel(pair.l(), n);
  auto cells = convolve(pair.k(), h.averages());
  const double tau = pair.grid().tau();
  for (double& c : cells) c *= tau;
  return KernelGrid(pair.grid(), std::move(cells));
}

/// sum_i |a_i - b_i| over cell integrals: the discrete L1([0,T]) distance.
inline double l1_distance(const KernelGrid& a, const KernelGrid& b) {
  if (!(a.grid() == b.grid())) throw std::invalid_argument("l1_distance: grid mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a.cell(i) - b.cell(i));
  return acc;
}

enum class Truncation { plus, minus };

struct IdentityCheck {
  double identityResidual = 0.0;    // max_m |lhs - rhs| of the fundamental identity
  double inequalityViolation = 0.0; // max_m (D(k * H(u)) - H'(u) D(k * u))_+
};

namespace detail {

inline double trunc_part(double y, Truncation t) {
  return t == Truncation::plus ? std::max(y, 0.0) : std::min(y, 0.0);
}

/// d/dt (k * v) at the nodes by backward differencing the product-integration quadrature.
inline std::vector<double> differentiated_convolution(const KernelGrid& k, std::span<const double> v) {
  const auto conv = convolve(k, v);
  const double tau = k.grid().tau();
  std::vector<double> out(conv.size());
  for (std::size_t m = 0; m < conv.size(); ++m)
    out[m] = (conv[m] - (m > 0 ? conv[m - 1] : 0.0)) / tau;
  return out;
}

} // namespace detail

/// Evaluates both sides of the identity
///   H'(u) d/dt(k*u) = d/dt(k*H(u)) + (-H(u) + H'(u)u) k(t)
///                     + int_0^t (H(u(t-s)) - H(u(t)) - H'(u(t))[u(t-s)-u(t)]) (-k'(s)) ds
/// for H = (y_+)^2/2 or (y_-)^2/2, together with the inequality
///   u_pm d/dt(k*u) >= 1/2 d/dt(k*(u_pm)^2).
/// The point value k(t_m) is read as K_m / tau and -k'(s) ds on lag i as (K_i - K_{i+1}) / tau.
inline IdentityCheck check_fundamental_identity(const KernelGrid& k, std::span<const double> u,
                                                Truncation variant) {
  if (!k.is_nonincreasing())
    throw std::invalid_argument("check_fundamental_identity: kernel must be nonincreasing");
  if (u.size() != k.size())
    throw std::invalid_argument("check_fundamental_identity: sequence length mismatch");

  const auto H = [variant](double y) {
    const double t = detail::trunc_part(y, variant);
    return 0.5 * t * t;
  };
  const auto dH = [variant](double y) { return detail::trunc_part(y, variant); };

  std::vector<double> Hu(u.size());
  std::transform(u.begin(), u.end(), Hu.begin(), H);

  const auto du = detail::differentiated_convolution(k, u);
  const auto dHu = detail::differentiated_convolution(k, Hu);
  const auto K = k.cell_integrals();
  const double tau = k.grid().tau();

  IdentityCheck out;
  for (std::size_t m = 0; m < u.size(); ++m) {
    const double lhs = dH(u[m]) * du[m];
    const double boundary = (-Hu[m] + dH(u[m]) * u[m]) * K[m] / tau;
    double memory = 0.0;
    for (std::size_t i = 1; i <= m; ++i) {
      const double weight = (K[i - 1] - K[i]) / tau;
      const double past = u[m - i];
      memory += (Hu[m - i] - Hu[m] - dH(u[m]) * (past - u[m])) * weight;
    }
    const double rhs = dHu[m] + boundary + memory;
    out.identityResidual = std::max(out.identityResidual, std::abs(lhs - rhs));
    out.inequalityViolation = std::max(out.inequalityViolation, dHu[m] - lhs);
  }
  out.inequalityViolation = std::max(out.inequalityViolation, 0.0);
  return out;
}

} // namespace fracgrid
