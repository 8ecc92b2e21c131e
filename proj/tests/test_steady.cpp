#include <catch_amalgamated.hpp>

#include <cmath>

#include "oracles.hpp"
#include "tpe/steady.hpp"

using namespace tpe;
using Catch::Approx;

namespace {

oracle::Rates rates_of(const TwoLevelParams& p) {
  return {p.g1, p.g2, p.kappa1, p.kappa2, p.pump, p.gamma};
}

}  // namespace

TEST_CASE("zero pump relaxes to the vacuum", "[steady]") {
  TwoLevelParams p;
  p.pump = 0.0;
  const SpaceSpec s(2, 2, 4);
  const DensityOperator rho = solve_steady_state(build_liouvillian(p, s));
  DenseMatrix vac = DenseMatrix::Zero(s.dim(), s.dim());
  vac(0, 0) = 1.0;
  CHECK((rho.entries() - vac).cwiseAbs().maxCoeff() < 1e-12);
  const SteadyReport r = observables(rho, p, s);
  CHECK(r.eta == 0.0);
  CHECK_FALSE(r.g2zero.has_value());
  CHECK_FALSE(r.mandel_q.has_value());
}

TEST_CASE("steady state agrees with an SVD null vector of a brute-force superoperator", "[steady][oracle]") {
  const TwoLevelParams p;
  const SpaceSpec s(2, 1, 3);
  const auto ops = oracle::two_level_ops(1, 3);
  const oracle::Rates rt = rates_of(p);
  const oracle::Mat l = oracle::liouvillian_by_columns(oracle::hamiltonian(ops, rt), oracle::jumps(ops, rt));
  const oracle::Mat ref = oracle::steady_by_svd(l, s.dim());
  const DensityOperator rho = solve_steady_state(build_liouvillian(p, s));
  CHECK((rho.entries() - ref).cwiseAbs().maxCoeff() < 1e-10);

  const SteadyReport r = observables(rho, p, s);
  const oracle::Mat b2 = ops.b * ops.b;
  CHECK(r.n_b == Approx(oracle::expect(ops.b.adjoint() * ops.b, ref)).epsilon(1e-8));
  CHECK(r.n_a == Approx(oracle::expect(ops.a.adjoint() * ops.a, ref)).epsilon(1e-8));
  CHECK(r.b2b2 == Approx(oracle::expect(b2.adjoint() * b2, ref)).epsilon(1e-8));
  const double gg = oracle::expect(ops.pg, ref);
  CHECK(r.eta == Approx(100.0 * 0.5 * p.kappa2 * oracle::expect(ops.b.adjoint() * ops.b, ref) / (p.pump * gg))
                     .epsilon(1e-8));
}

TEST_CASE("dense and sparse LU paths agree", "[steady]") {
  const TwoLevelParams p;
  for (const SpaceSpec s : {SpaceSpec(2, 1, 2), SpaceSpec(2, 2, 4)}) {
    const Liouvillian l = build_liouvillian(p, s);
    const DensityOperator d = solve_steady_state(l, {.solver = LinearSolver::dense_lu});
    const DensityOperator sp = solve_steady_state(l, {.solver = LinearSolver::sparse_lu});
    CHECK((d.entries() - sp.entries()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("a degenerate kernel is reported as non-unique", "[steady]") {
  // No dissipation at all: every H eigenprojector is stationary.
  TwoLevelParams p;
  p.kappa1 = p.kappa2 = p.pump = p.gamma = 0.0;
  const SpaceSpec s(2, 1, 2);
  for (LinearSolver solver : {LinearSolver::dense_lu, LinearSolver::sparse_lu}) {
    try {
      solve_steady_state(build_liouvillian(p, s), {.solver = solver});
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.error_class() == ErrorClass::non_unique_steady_state);
    }
  }
}

TEST_CASE("steady-state invariants at the default truncation", "[steady][property]") {
  const SpaceSpec s(2, 3, 6);
  for (double pump : {0.001, 0.005, 0.05}) {
    for (double k2 : {0.2, 1.0, 5.0}) {
      TwoLevelParams p;
      p.pump = pump;
      p.kappa2 = k2;
      const SteadyReport r = steady_report(p, s);
      CHECK(r.balance_residual < 1e-8);
      CHECK(r.pop_g + r.pop_e == Approx(1.0).margin(1e-9));
      CHECK(r.eta >= 0.0);
      CHECK(r.eta <= 100.0);
      CHECK(r.tpe_rate >= 0.0);
      CHECK(r.ope_rate >= 0.0);
      CHECK(r.loss_rate >= 0.0);
      CHECK(r.liouvillian_residual < 1e-9);
      CHECK(r.min_eigenvalue >= -1e-8);
      CHECK(r.truncation == s);
    }
  }
}

TEST_CASE("no two-photon coupling means no two-photon emission", "[steady]") {
  TwoLevelParams p;
  p.g2 = 0.0;
  const SteadyReport r = steady_report(p, SpaceSpec(2, 3, 6));
  CHECK(r.tpe_rate < 1e-14);
  CHECK(r.eta < 1e-12);
  CHECK(r.ope_rate > 0.0);
}

TEST_CASE("baseline field statistics", "[steady]") {
  const SteadyReport r = steady_report(TwoLevelParams{}, SpaceSpec(2, 3, 6));
  REQUIRE(r.mandel_q.has_value());
  REQUIRE(r.g2zero.has_value());
  CHECK(*r.mandel_q == Approx(0.5).margin(0.05));
  CHECK(*r.g2zero >= 100.0);
  CHECK(*r.g2zero < 1000.0);
  CHECK(*r.g2zero * 2.0 * r.n_b == Approx(1.0).epsilon(0.1));
}

TEST_CASE("g2(0) scales as 1/P at low pump", "[steady][property]") {
  const SpaceSpec s(2, 3, 6);
  TwoLevelParams lo, hi;
  lo.pump = 0.001;
  hi.pump = 0.01;
  const double g_lo = *steady_report(lo, s).g2zero;
  const double g_hi = *steady_report(hi, s).g2zero;
  const double slope = std::log(g_hi / g_lo) / std::log(hi.pump / lo.pump);
  CHECK(slope == Approx(-1.0).margin(0.1));
}

TEST_CASE("efficiency falls as the one-photon leak grows", "[steady][property]") {
  const SpaceSpec s(2, 3, 6);
  double prev = 101.0;
  for (double k1 : log_grid(0.002, 0.2, 7)) {
    TwoLevelParams p;
    p.kappa1 = k1;
    const double eta = steady_report(p, s).eta;
    CHECK(eta < prev);
    prev = eta;
  }
}

TEST_CASE("two-photon identity on the manifold-truncated space", "[steady]") {
  const SteadyReport r = steady_report(TwoLevelParams{}, SpaceSpec(2, 1, 2));
  CHECK(std::abs(r.b2b2 - 0.5 * r.n_b) < 1e-6);
}

TEST_CASE("truncation ladder", "[steady]") {
  SECTION("baseline converges at or below (3, 6)") {
    const ConvergenceResult res = run_truncation_convergence(TwoLevelParams{}, SpaceSpec(2, 1, 2));
    CHECK(res.converged.na_max() <= 3);
    CHECK(res.converged.nb_max() <= 6);
    CHECK(res.report.truncation == res.converged);
    CHECK(res.evaluated.size() >= 2);
  }
  SECTION("zero pump converges at the minimal space") {
    TwoLevelParams p;
    p.pump = 0.0;
    CHECK(truncation_convergence(p, SpaceSpec(2, 1, 2)) == SpaceSpec(2, 1, 2));
  }
  SECTION("strong pump needs more mode-a quanta") {
    TwoLevelParams p;
    p.pump = 0.5;
    const SteadyReport r3 = steady_report(p, SpaceSpec(2, 3, 6));
    const SteadyReport r4 = steady_report(p, SpaceSpec(2, 4, 6));
    CHECK(r4.n_a > 1.0);
    CHECK(max_relative_change(r3, r4) >= 1e-3);
  }
  SECTION("ceiling raises a convergence error with drift") {
    TwoLevelParams p;
    p.pump = 0.5;
    ConvergenceOptions opt;
    opt.max_na = 4;
    try {
      run_truncation_convergence(p, SpaceSpec(2, 3, 6), opt);
      FAIL("expected a convergence error");
    } catch (const ConvergenceError& e) {
      CHECK(e.error_class() == ErrorClass::convergence_failure);
      CHECK(e.drift().size() == 4);
    }
  }
  SECTION("tolerance must be positive") {
    ConvergenceOptions opt;
    opt.tol = 0.0;
    CHECK_THROWS_AS(run_truncation_convergence(TwoLevelParams{}, SpaceSpec(2, 1, 2), opt), Error);
  }
}

TEST_CASE("sweeps are independent of the thread count", "[steady]") {
  const std::vector<double> grid = log_grid(0.1, 10.0, 6);
  SweepOptions one;
  one.spec = SpaceSpec(2, 2, 4);
  SweepOptions three = one;
  three.threads = 3;
  const auto a = steady_sweep(TwoLevelParams{}, SweepAxis::kappa2, grid, one);
  const auto b = steady_sweep(TwoLevelParams{}, SweepAxis::kappa2, grid, three);
  REQUIRE(a.size() == grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(a[i].eta == b[i].eta);
  CHECK(parse_axis("pump") == SweepAxis::pump);
  CHECK(parse_axis("P") == SweepAxis::pump);
  CHECK_FALSE(parse_axis("omega").has_value());
  CHECK(log_grid(0.1, 10.0, 3)[1] == Approx(1.0));
  CHECK(linear_grid(0.0, 1.0, 5)[3] == Approx(0.75));
}
