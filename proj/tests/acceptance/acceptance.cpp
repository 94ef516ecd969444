// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Extra indented lines carry the measured numbers.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "fracgrid/fracgrid.hpp"

using namespace fracgrid;

namespace {

int failures = 0;

void verdict(int id, const std::string& title, bool pass) {
  std::printf("[%s] criterion %2d: %s\n", pass ? "PASS" : "FAIL", id, title.c_str());
  if (!pass) ++failures;
}

template <class... A>
void note(const char* fmt, A... args) {
  std::printf("         ");
  std::printf(fmt, args...);
  std::printf("\n");
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void kernel_pair_identity() {
  bool ok = true;
  for (double alpha : {0.25, 0.5, 0.75}) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto pair = pc_pair({alpha, 0.0}, TimeGrid(1.0, 1000));
    const double secs = seconds_since(t0);
    const auto fine = pc_pair({alpha, 0.0}, TimeGrid(1.0, 2000));
    const double r = pair.pair_residual(), rf = fine.pair_residual();
    const bool pass = r <= 0.05 && rf < r && secs < 1.0;
    ok = ok && pass;
    double l1 = 0.0, l1f = 0.0, tail = 0.0;
    const auto prof = pair_residual_profile(pair.k(), pair.l());
    const auto proff = pair_residual_profile(fine.k(), fine.l());
    for (std::size_t m = 0; m < prof.size(); ++m) {
      l1 += 1e-3 * std::abs(prof[m]);
      if ((m + 1) * 1e-3 >= 0.01) tail = std::max(tail, std::abs(prof[m]));
    }
    for (double v : proff) l1f += 0.5e-3 * std::abs(v);
    note("alpha=%.2f  max|k*l-1| %.6f (M=1000) -> %.6f (M=2000), %.3f s", alpha, r, rf, secs);
    note("            L1 residual %.3e -> %.3e, max over t>=0.01 %.3e", l1, l1f, tail);
  }
  verdict(1, "kernel pair k*l = 1 within 0.05 at M=1000, decreasing under M -> 2M", ok);
}

void resolvent() {
  const auto pair = pc_pair({0.5, 0.0}, TimeGrid(1.0, 500));
  bool ok = true;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t n : {1u, 4u, 16u, 64u}) {
    const auto h = resolvent_kernel(pair.l(), n);
    const auto kn = yosida_kernel(pair, n);
    const double res = resolvent_residual(pair.l(), h, n);
    const double l1 = l1_distance(kn, pair.k());
    ok = ok && res <= 1e-10 && h.is_nonnegative() && kn.is_nonnegative() && kn.is_nonincreasing() && l1 < prev;
    prev = l1;
    note("n=%-3zu residual %.2e  h>=0 %d  k_n>=0 %d  k_n nonincreasing %d  L1(k_n-k) %.4f", n, res,
         h.is_nonnegative(), kn.is_nonnegative(), kn.is_nonincreasing(), l1);
  }
  verdict(2, "resolvent residual <= 1e-10, h_n >= 0, k_n monotone, L1(k_n - k) decreasing", ok);
}

void lemma_suite_check() {
  using Wide = boost::multiprecision::cpp_bin_float_50;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::size_t bad = 0;
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < 100; ++i) {
    RecursionParams r;
    r.C = 10.0 - 9.0 * U(rng);
    r.b = 10.0 - 9.0 * U(rng);
    r.alpha = 2.0 - 2.0 * U(rng);
    r.delta = r.alpha + 2.0 * U(rng);
    for (auto mode : {LemmaMode::single, LemmaMode::twoTerm}) {
      const auto res = lemma_iterate_log<Wide>(r, mode, lemma_log_threshold<Wide>(r, mode), 50);
      if (!res.boundHolds || res.logY.size() != 51) ++bad;
      worst = std::max(worst, res.worstExcess);
    }
  }
  const double secs = seconds_since(t0);
  note("200 recursions, %zu violations, worst ln(Y_n / bound_n) %.3e, %.3f s", bad, worst, secs);
  verdict(3, "lemma decay bound at both thresholds, 100 tuples, n <= 50", bad == 0 && secs < 1.0);
}

void exponent_identities() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::uniform_int_distribution<int> Nd(1, 6);
  std::size_t bad = 0, gn = 0, sob = 0;
  for (int i = 0; i < 1000; ++i) {
    StructureParams sp;
    sp.N = Nd(rng);
    sp.p = 1.001 + 6.0 * U(rng);
    sp.q = Exponent(1.001 + 20.0 * U(rng));
    sp.s = Exponent(1.001 + 30.0 * U(rng));
    const double N = sp.N, p = sp.p, q = sp.q.value();
    const double rLib = derive_exponents(sp).r;
    sp.gamma = 1.0 + (rLib - 1.0) * (0.01 + 0.98 * U(rng));
    const auto e = derive_exponents(sp);
    const double etaRhs = e.beta / p + (1.0 - e.beta) / 2.0;
    bool ok = std::abs(1.0 / e.eta - etaRhs) <= 1e-12 * etaRhs;
    ok = ok && std::abs(e.theta - e.alphaDG * e.r / sp.gamma) <= 1e-12 * std::max(1.0, std::abs(e.theta));
    const double sv = sp.s.value(), sc = 1.0 - 1.0 / sv;
    const bool a = sv > N / p + q / (q - 1.0), b = sc / e.eta > 1.0 / e.r, c = e.alphaDG > 0.0;
    if (std::abs(sv - e.sThreshold) > 1e-9 * e.sThreshold) ok = ok && a == b && b == c;
    const auto chk = check_embedding_identities(sp, 1e-12);
    if (chk.gagliardoNirenberg != BranchVerdict::notApplicable) {
      ++gn;
      ok = ok && chk.gagliardoNirenberg == BranchVerdict::pass && std::abs(chk.rHat - 2.0 * q) <= 1e-12 * 2.0 * q;
    }
    if (chk.sobolev != BranchVerdict::notApplicable) {
      ++sob;
      ok = ok && chk.sobolev == BranchVerdict::pass && std::abs(chk.sobolevValue - 2.0) <= 2e-12;
    }
    ok = ok && chk.rAtLeastTwoRemark;
    if (!ok) ++bad;
  }
  note("1000 tuples, %zu failing; interpolation branch %zu, second branch %zu", bad, gn, sob);
  verdict(4, "exponent identities, threshold predicates, branch identities, r >= 2 remark", bad == 0 && gn > 0 && sob > 0);
}

void sharpness() {
  struct Case { int N; double p, alpha, lo, hi; };
  const std::vector<Case> cases = {{1, 2.0, 0.5, 2.01, 6.0}, {2, 2.0, 0.7, 1.5, 6.0}, {3, 2.0, 0.4, 2.6, 9.0},
                                   {4, 2.0, 0.6, 1.7, 9.0}, {4, 3.0, 0.6, 1.7, 4.0}};
  bool ok = true;
  for (const auto& c : cases) {
    const double thr = c.N / c.p + 1.0 / c.alpha;
    const double flip = sharpness_flip_point(c.N, c.p, c.alpha, c.lo, c.hi);
    bool signs = true;
    for (int i = 0; i <= 200; ++i) {
      const double s = c.lo + (c.hi - c.lo) * i / 200.0;
      if (std::abs(s - thr) < 1e-9) continue;
      const auto sc = sharpness_exponents({.N = c.N, .p = c.p, .alpha = c.alpha, .s = s});
      signs = signs && sc.omegaOrdered == (s > thr);
    }
    ok = ok && std::abs(flip - thr) <= 1e-9 && signs;
    note("N=%d p=%g alpha=%g  flip %.12f  N/p+1/alpha %.12f  signs agree %d", c.N, c.p, c.alpha, flip, thr, signs);
  }
  verdict(5, "omega1 < omega2 flips at s = N/p + 1/alpha within 1e-9", ok);
}

void fractional_ode_check() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto st = fractional_ode_study(0.5, 1.0, {250, 500, 1000, 2000});
  const double secs = seconds_since(t0);
  const double exact = 2.0 / std::sqrt(std::acos(-1.0));
  for (std::size_t i = 0; i < st.steps.size(); ++i) note("M=%-5.0f relative error %.4e", st.steps[i], st.errors[i]);
  note("exact %.15f (library %.15f), order %.3f, %.2f s", exact, st.exact, st.order, secs);
  verdict(6, "fractional ODE within 2% at M=1000, order >= 0.5",
          std::abs(st.exact - exact) < 1e-14 && st.errors[2] <= 0.02 && st.order >= 0.5 && secs < 5.0);
}

SolveConfig mp_config(double p, double alpha) {
  SolveConfig cfg{.kernel = FracParams{alpha, 0.0},
                  .domain = DomainGrid::interval(1.0, 128),
                  .time = TimeGrid(1.0, 256),
                  .nonlinearity = {},
                  .inner = {}};
  cfg.nonlinearity.p = p;
  if (p < 2.0) cfg.nonlinearity.epsilonReg = 1e-8;
  cfg.inner.tol = 1e-10;
  return cfg;
}

void max_principle_check() {
  const std::vector<double> ps = {1.5, 2.0, 3.0}, alphas = {0.3, 0.7};
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  for (int i = 0; i < 10; ++i) {
    const double p = ps[i % 3], alpha = alphas[(i / 3) % 2];
    auto cfg = mp_config(p, alpha);
    std::mt19937_64 rng(1000 + i);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<double> u0(cfg.domain.size());
    for (double& v : u0) v = U(rng);
    cfg.initial = [u0](double, std::size_t, std::size_t c, const std::array<double, 2>&) { return u0[c]; };
    const auto res = solve(cfg);
    double u0max = 0.0;
    for (std::size_t c = 1; c + 1 < u0.size(); ++c) u0max = std::max(u0max, u0[c]);
    const double over = res.u.max() - u0max, under = res.u.min();
    ok = ok && over <= 1e-9 && under >= -1e-9;
    note("run %d p=%.1f alpha=%.1f  max u - max u0 %.3e  min u %.3e", i, p, alpha, over, under);
  }
  const double secs = seconds_since(t0);
  note("total %.2f s", secs);
  verdict(7, "discrete maximum principle over 10 seeded runs", ok && secs < 60.0);
}

void constant_preservation() {
  bool ok = true;
  for (double p : {1.5, 2.0, 3.0})
    for (double alpha : {0.3, 0.7}) {
      auto cfg = mp_config(p, alpha);
      cfg.initial = constant_field(0.5);
      cfg.boundary = constant_field(0.5);
      const auto res = solve(cfg);
      double dev = 0.0;
      for (double v : res.u.values()) dev = std::max(dev, std::abs(v - 0.5));
      ok = ok && dev <= 1e-10;
      note("p=%.1f alpha=%.1f  max |u - 0.5| %.3e", p, alpha, dev);
    }
  verdict(8, "constant data preserved to 1e-10", ok);
}

const char* energyConfig = R"(
[kernel]
alpha = 0.5
[domain]
dim = 1
cells = 64
[time]
horizon = 1
steps = 64
[nonlinearity]
p = 3
[data]
f = powerlaw:40,0.2
[energyEstimate]
gamma = 2
q = 1.5
s = 4.5
delta = 0.1
levels = 10
refine = 2
maxVariation = 0.25
[aprioriBound]
gamma = 2
q = 1.5
s = 4.5
Chat = 1
nMax = 40
amplitudes = 0.25 0.5 1 2
)";

void energy_and_trace() {
  const auto tree = parse_config(energyConfig);
  const Exponent q(1.5), s(4.5);
  const double gamma = 2.0, p = 3.0, delta = 0.1;
  const auto exps = derive_exponents({.N = 1, .p = p, .q = q, .gamma = gamma, .s = s});
  note("r %.4f  s threshold %.4f  s = 4.5 admissible %d", exps.r, exps.sThreshold, exps.sAdmissible);

  double cemp[2] = {0.0, 0.0};
  bool finite = true;
  GridFunction base = solve(parse_solve_config(tree, 0)).u;
  for (int level = 0; level < 2; ++level) {
    const GridFunction u = level == 0 ? base : solve(detail::refined(tree, 0, 2)).u;
    const double tk = data_level(u);
    for (int j = 0; j <= 10; ++j) {
      const double rhs = energy_rhs(u, tk + j * delta, gamma, s);
      const double lhs = truncated_energy(u, tk + j * delta, q, p).total();
      if (!(rhs > 0.0)) finite = false;
      else cemp[level] = std::max(cemp[level], lhs / rhs);
    }
    note("cells %d  tilde kappa %.3g  max u %.6f  C_emp %.6f", level == 0 ? 64 : 128, tk, u.max(), cemp[level]);
  }
  const double variation = std::abs(cemp[1] - cemp[0]) / cemp[0];
  note("variation %.4f", variation);
  verdict(9, "energy-estimate constant finite and stable (< 25%) under refinement",
          finite && exps.sAdmissible && std::isfinite(cemp[0]) && cemp[0] > 0.0 && variation < 0.25);

  const double Chat = tree.get<double>("aprioriBound.Chat");
  const auto tr = run_iteration(base, data_level(base), gamma, exps, Chat, 40);
  std::string ys;
  for (double y : tr.yn) {
    char buf[32];
    std::snprintf(buf, sizeof buf, " %.3e", y);
    ys += buf;
  }
  note("kappa %.6f  2 kappa %.6f  max u %.6f", tr.levels.kappa, 2.0 * tr.levels.kappa, base.max());
  note("Y_n:%s  collapse at n=%d", ys.c_str(), tr.collapsedAt ? static_cast<int>(*tr.collapsedAt) : -1);
  verdict(10, "level-set trace strictly decreasing to collapse, max u <= 2 kappa",
          tr.strictlyDecreasing && tr.collapsedAt.has_value() && tr.maxBelowTwoKappa);
}

void classical_limit_check() {
  const auto st = classical_limit_study({10, 20, 40, 80}, 800, {16, 32, 64, 128}, 4);
  for (std::size_t i = 0; i < st.timeErrors.size(); ++i) note("tau=%.5f error %.4e", st.timeSteps[i], st.timeErrors[i]);
  for (std::size_t i = 0; i < st.spaceErrors.size(); ++i) note("h=%.5f   error %.4e", st.cells[i], st.spaceErrors[i]);
  note("orders: time %.3f, space %.3f", st.timeOrder, st.spaceOrder);
  verdict(11, "classical limit: orders within 20% of (1, 2)",
          std::abs(st.timeOrder - 1.0) <= 0.2 && std::abs(st.spaceOrder - 2.0) <= 0.4);
}

} // namespace

int main() {
  const std::vector<std::pair<std::vector<int>, std::function<void()>>> criteria = {
      {{1}, kernel_pair_identity}, {{2}, resolvent},           {{3}, lemma_suite_check},
      {{4}, exponent_identities},  {{5}, sharpness},           {{6}, fractional_ode_check},
      {{7}, max_principle_check},  {{8}, constant_preservation}, {{9, 10}, energy_and_trace},
      {{11}, classical_limit_check}};
  for (const auto& [ids, run] : criteria) {
    try {
      run();
    } catch (const std::exception& e) {
      for (int id : ids) verdict(id, std::string("threw: ") + e.what(), false);
    }
    std::fflush(stdout);
  }
  std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
