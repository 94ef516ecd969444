#pragma once

// Structural exponents of the quasilinear problem and their admissibility
// logic. Everything here is closed-form arithmetic on value types.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace fracgrid {

/// An integrability exponent in (1, infinity]. Infinity is a first-class value
/// so that 1/q = 0 and q' = 1 hold exactly in the classical limit.
class Exponent {
public:
  constexpr explicit Exponent(double value) : value_(value) {}
  static constexpr Exponent infinity() { return Exponent(std::numeric_limits<double>::infinity()); }

  constexpr double value() const noexcept { return value_; }
  constexpr bool is_infinite() const noexcept { return value_ == std::numeric_limits<double>::infinity(); }
  constexpr double reciprocal() const noexcept { return is_infinite() ? 0.0 : 1.0 / value_; }
  /// Hoelder conjugate q' = q/(q-1), equal to 1 for q = infinity.
  constexpr double conjugate() const noexcept { return 1.0 / (1.0 - reciprocal()); }
  constexpr double conjugate_reciprocal() const noexcept { return 1.0 - reciprocal(); }

private:
  double value_;
};

/// a > b + tol. The admissibility conditions are all strict; tol defaults to 0.
constexpr bool strictly_exceeds(double a, double b, double tol = 0.0) noexcept { return a > b + tol; }

struct StructureParams {
  int N = 1;
  double p = 2.0;
  Exponent q{2.0};
  double gamma = 1.5;
  Exponent s = Exponent::infinity();

  void validate() const {
    if (N < 1) throw std::invalid_argument("StructureParams: N must be >= 1");
    if (!(p > 1.0)) throw std::invalid_argument("StructureParams: p must be > 1");
    if (!(q.value() > 1.0)) throw std::invalid_argument("StructureParams: q must be > 1");
    if (!(gamma > 1.0)) throw std::invalid_argument("StructureParams: gamma must be > 1");
    if (!(s.value() > 1.0)) throw std::invalid_argument("StructureParams: s must be > 1");
  }
};

struct ExponentSet {
  StructureParams params;
  double r = 0.0;          // parabolic embedding exponent
  double beta = 0.0;       // interpolation weight on the gradient
  double eta = 0.0;        // (beta/p + (1-beta)/2)^{-1}
  double theta = 0.0;      // exponent in the sup bound
  double sThreshold = 0.0; // N/p + q'
  double alphaDG = 0.0;    // gamma (1/(eta s') - 1/r)
  double deltaDG = 0.0;    // gamma (1/eta - 1/r)
  bool gammaAdmissible = false;
  bool sAdmissible = false;
};

inline ExponentSet derive_exponents(const StructureParams& params, double tol = 0.0) {
  params.validate();
  const double N = params.N;
  const double p = params.p;
  const double iq = params.q.reciprocal();
  const double is = params.s.reciprocal();
  const double isConj = 1.0 - is; // 1/s'

  ExponentSet e;
  e.params = params;
  const double denomR = (1.0 / p) * (1.0 - iq) + iq / N;
  e.r = (1.0 - iq + 2.0 / N) / denomR;
  e.beta = (1.0 - iq) / (1.0 - iq + 2.0 / N);
  e.eta = 1.0 / (e.beta / p + (1.0 - e.beta) / 2.0);
  e.sThreshold = N / p + params.q.conjugate();
  e.theta = ((1.0 / N) * (1.0 - iq) - is * ((1.0 / p) * (1.0 - iq) + 1.0 / N)) / denomR;
  e.alphaDG = params.gamma * (isConj / e.eta - 1.0 / e.r);
  e.deltaDG = params.gamma * (1.0 / e.eta - 1.0 / e.r);
  e.gammaAdmissible = strictly_exceeds(params.gamma, 1.0, tol) && strictly_exceeds(e.r, params.gamma, tol);
  e.sAdmissible = params.s.is_infinite() || strictly_exceeds(params.s.value(), e.sThreshold, tol);
  return e;
}

enum class BranchVerdict { pass, fail, notApplicable };

inline const char* to_string(BranchVerdict v) {
  switch (v) {
  case BranchVerdict::pass: return "pass";
  case BranchVerdict::fail: return "fail";
  case BranchVerdict::notApplicable: return "not applicable";
  }
  return "?";
}

struct EmbeddingCheck {
  BranchVerdict gagliardoNirenberg = BranchVerdict::notApplicable; // p > 2N/(N+2): r_hat = 2q
  BranchVerdict sobolev = BranchVerdict::notApplicable;            // p <= 2N/(N+2), p < N
  bool rAtLeastTwoRemark = false; // (r >= 2) <=> (p >= 2N/(N+2))
  double rHat = 0.0;
  double sobolevValue = 0.0;
};

inline double critical_p(int N) { return 2.0 * N / (N + 2.0); }

/// Checks the two algebraic identities behind the parabolic embedding and the
/// "r >= 2 iff p >= 2N/(N+2)" remark.
inline EmbeddingCheck check_embedding_identities(const StructureParams& params, double relTol = 1e-12) {
  const ExponentSet e = derive_exponents(params);
  const double N = params.N;
  const double p = params.p;
  const double r = e.r;
  const double b = e.beta;
  const double pc = critical_p(params.N);

  EmbeddingCheck out;
  if (p > pc) {
    const double denom = p - b * r;
    if (params.q.is_infinite()) {
      // r_hat = 2q = infinity means the denominator p - beta r vanishes.
      out.rHat = std::numeric_limits<double>::infinity();
      out.gagliardoNirenberg =
          std::abs(denom) <= relTol * p ? BranchVerdict::pass : BranchVerdict::fail;
    } else {
      out.rHat = (1.0 - b) * r * p / denom;
      const double target = 2.0 * params.q.value();
      out.gagliardoNirenberg =
          std::abs(out.rHat - target) <= relTol * target ? BranchVerdict::pass : BranchVerdict::fail;
    }
  }
  if (p <= pc && p < N) {
    out.sobolevValue = r * (1.0 - b) * N * p / (N * p - (N - p) * r * b);
    out.sobolev = std::abs(out.sobolevValue - 2.0) <= relTol * 2.0 ? BranchVerdict::pass
                                                                   : BranchVerdict::fail;
  }
  const bool nearCritical = std::abs(p - pc) <= relTol * pc;
  if (nearCritical)
    out.rAtLeastTwoRemark = std::abs(r - 2.0) <= 1e3 * relTol * 2.0;
  else
    out.rAtLeastTwoRemark = (r >= 2.0) == (p >= pc);
  return out;
}

struct FractionalAdmissibility {
  double threshold = 0.0;       // N/p + 1/alpha
  double qThreshold = 0.0;      // N/p + q'
  bool kernelAdmissible = false; // q < 1/(1-alpha): l = g_alpha in L_q
  bool jointAdmissible = false;  // s > N/p + q' > N/p + 1/alpha
  bool sClearsThreshold = false; // s > N/p + 1/alpha
};

inline FractionalAdmissibility check_fractional_admissibility(int N, double p, double alpha, Exponent q,
                                                              Exponent s, double tol = 0.0) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::domain_error("check_fractional_admissibility: alpha must lie in (0,1)");
  if (N < 1 || !(p > 1.0) || !(q.value() > 1.0) || !(s.value() > 1.0))
    throw std::invalid_argument("check_fractional_admissibility: invalid N, p, q or s");

  FractionalAdmissibility out;
  out.threshold = N / p + 1.0 / alpha;
  out.qThreshold = N / p + q.conjugate();
  out.kernelAdmissible = strictly_exceeds(q.conjugate(), 1.0 / alpha, tol);
  const bool sAbove = s.is_infinite() || strictly_exceeds(s.value(), out.qThreshold, tol);
  out.jointAdmissible = sAbove && strictly_exceeds(out.qThreshold, out.threshold, tol);
  out.sClearsThreshold = s.is_infinite() || strictly_exceeds(s.value(), out.threshold, tol);
  return out;
}

enum class SharpnessStatus {
  inWindow,      // preconditions hold at this s
  outsideWindow, // formulas evaluated, but s lies outside the admissible window
  windowEmpty,   // no s can satisfy the preconditions for these (N, p, alpha)
  outOfScope     // 1 < p < 2: not covered
};

inline const char* to_string(SharpnessStatus s) {
  switch (s) {
  case SharpnessStatus::inWindow: return "in window";
  case SharpnessStatus::outsideWindow: return "outside window";
  case SharpnessStatus::windowEmpty: return "window empty";
  case SharpnessStatus::outOfScope: return "out of scope";
  }
  return "?";
}

struct SharpnessCase {
  int N = 1;
  double p = 2.0;
  double alpha = 0.5;
  double s = 2.0;
  double rHat = std::numeric_limits<double>::quiet_NaN();
  double omega1 = std::numeric_limits<double>::quiet_NaN();
  double omega2 = std::numeric_limits<double>::quiet_NaN();
  bool omegaOrdered = false; // omega1 < omega2
  SharpnessStatus status = SharpnessStatus::outOfScope;

  double threshold() const { return N / p + 1.0 / alpha; }
};

/// Fills r_hat, omega_1, omega_2 for the maximal-regularity argument:
///   (p-1)/r_hat = 1/s + (p-2)/N,
///   omega_1 = (N/s) / (2 - N/r_hat + N/s),
///   omega_2 = (alpha - 1/s) / (alpha - 1/s + 1/(s(p-1))).
/// Values are produced whenever s > 1/alpha so that the predicate can be
/// swept across the window boundary; status says whether s is admissible.
inline SharpnessCase sharpness_exponents(SharpnessCase c) {
  if (c.N < 1 || !(c.s > 1.0)) throw std::invalid_argument("sharpness_exponents: need N >= 1, s > 1");
  if (!(c.alpha > 0.0 && c.alpha < 1.0))
    throw std::domain_error("sharpness_exponents: alpha must lie in (0,1)");
  if (c.p < 2.0) {
    c.status = SharpnessStatus::outOfScope;
    return c;
  }
  const double N = c.N;
  const double p = c.p;
  const double s = c.s;
  const double a = c.alpha;
  const bool linear = p == 2.0;

  c.rHat = (p - 1.0) / (1.0 / s + (p - 2.0) / N);
  c.omega1 = (N / s) / (2.0 - N / c.rHat + N / s);
  c.omega2 = (a - 1.0 / s) / (a - 1.0 / s + 1.0 / (s * (p - 1.0)));
  c.omegaOrdered = c.omega1 < c.omega2;

  if (linear) {
    c.status = s > c.threshold() ? SharpnessStatus::inWindow : SharpnessStatus::outsideWindow;
  } else {
    const double pConj = p / (p - 1.0);
    const bool alphaOk = a > pConj / N && a < 1.0;
    if (!alphaOk || !(c.threshold() < N))
      c.status = SharpnessStatus::windowEmpty;
    else
      c.status = (s > c.threshold() && s < N) ? SharpnessStatus::inWindow : SharpnessStatus::outsideWindow;
  }
  return c;
}

/// Locates the s where omega1 < omega2 switches on by bisection on [lo, hi].
/// Requires the predicate to be false at lo and true at hi.
inline double sharpness_flip_point(int N, double p, double alpha, double lo, double hi, double tol = 1e-13) {
  auto ordered = [&](double s) {
    return sharpness_exponents(SharpnessCase{.N = N, .p = p, .alpha = alpha, .s = s}).omegaOrdered;
  };
  if (ordered(lo) || !ordered(hi))
    throw std::invalid_argument("sharpness_flip_point: predicate must be false at lo and true at hi");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (ordered(mid) ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

} // namespace fracgrid
