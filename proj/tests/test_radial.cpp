#include <doctest.h>

#include <algorithm>
#include <boost/math/special_functions/bessel.hpp>
#include <cmath>

#include "ahs/radial.hpp"
#include "oracles/oracle_values.hpp"
#include "support.hpp"

using namespace ahs;
using testing::code_of;
using testing::rel;

namespace {

RadialProblem unperturbed(int n, double zeta, int j) {
  std::vector<int> mode(n, 0);
  mode[0] = j;
  return cylinder_problem(BoundaryMetric::identity(n), std::nullopt, 0.0, mode, SpectralPoint(zeta, n));
}

SolutionSample bessel_sample(int n, double nu, double lam, double x) {
  using boost::math::cyl_bessel_k;
  double K = cyl_bessel_k(nu, lam * x), K1 = -0.5 * (cyl_bessel_k(nu - 1, lam * x) + cyl_bessel_k(nu + 1, lam * x));
  SolutionSample s;
  s.x = x;
  s.a = std::pow(x, 0.5 * n) * K;
  s.theta_a = 0.5 * n * s.a + lam * x * std::pow(x, 0.5 * n) * K1;
  return s;
}

}  // namespace

TEST_CASE("frobenius_match reproduces the basis") {
  auto rp = unperturbed(2, 2.3, 4);
  auto fb = frobenius_basis(rp);
  const double x = 0.5 * fb.validity_radius;
  SolutionSample s;
  s.x = x;
  fb.eval(0, x, s.a, s.theta_a);
  auto r = frobenius_match(rp, s, fb);
  CHECK(std::abs(r.f_plus - 1.0) < 1e-12);
  CHECK(std::abs(r.f_minus) < 1e-12);
  CHECK(r.has_flag("pole"));

  cplx ap, tap, am, tam;
  fb.eval(0, x, ap, tap);
  fb.eval(1, x, am, tam);
  const cplx I(0.0, 1.0);
  s.a = 3.0 * am - 2.0 * I * ap;
  s.theta_a = 3.0 * tam - 2.0 * I * tap;
  r = frobenius_match(rp, s, fb);
  CHECK(std::abs(r.f_plus + 2.0 * I) < 1e-12);
  CHECK(std::abs(r.f_minus - 3.0) < 1e-12);
  CHECK(std::abs(r.s + 2.0 * I / 3.0) < 1e-12);
  CHECK_FALSE(r.has_flag("pole"));
}

TEST_CASE("frobenius series residual is small inside the validity radius") {
  auto rp = unperturbed(1, 2.3, 7);
  auto fb = frobenius_basis(rp);
  CHECK(fb.truncation_order == 12);
  for (int w = 0; w < 2; ++w) CHECK(frobenius_residual(rp, fb, w, 0.5 * fb.validity_radius) < 1e-10);
}

TEST_CASE("farfield_init follows the decaying Bessel branch") {
  for (int n = 1; n <= 3; ++n) {
    auto rp = unperturbed(n, 0.5 * n + 1.3, 5);
    const double xs = default_x_start(rp);
    CHECK(rp.lambda * xs >= 25.0 - 1e-12);
    auto s = farfield_init(rp, xs);
    auto ref = bessel_sample(n, 1.3, rp.lambda, xs);
    CHECK(rel(s.theta_a / s.a, ref.theta_a / ref.a) < 1e-8);
  }
}

TEST_CASE("integrate_inward reproduces K-Bessel values") {
  for (const auto& c : oracle::kBesselCases) {
    const double nu = c.zeta - 0.5 * c.n;
    std::vector<int> mode(c.n, 0);
    mode[0] = static_cast<int>(c.lambda);
    SpectralPoint sp(c.zeta, c.n);
    auto rp = cylinder_problem(BoundaryMetric::identity(c.n), std::nullopt, 0.0, mode, sp);
    if (std::abs(rp.lambda - c.lambda) > 1e-12) continue;
    const double xs = 25.0 / c.lambda;
    auto init = bessel_sample(c.n, nu, c.lambda, xs);
    auto out = integrate_inward(rp, init, c.x);
    const double sc = std::exp(out.log_scale);
    INFO("n=" << c.n << " lambda=" << c.lambda);
    CHECK(rel(out.a * sc, c.a) < 1e-8);
    CHECK(rel(out.theta_a * sc, c.theta_a) < 1e-8);
  }
}

TEST_CASE("integrate_inward: zero mode indicial solution and round trip") {
  auto rp = unperturbed(2, 2.3, 0);
  SolutionSample s;
  s.x = 2.0;
  s.a = std::pow(2.0, 2.3);
  s.theta_a = 2.3 * s.a;
  auto in = integrate_inward(rp, s, 0.01);
  CHECK(rel(in.a * std::exp(in.log_scale), std::pow(0.01, 2.3)) < 1e-9);

  // generic data over a short interval, so neither direction amplifies much
  auto rq = unperturbed(1, 2.3, 1);
  SolutionSample init;
  init.x = 2.0;
  init.a = cplx(1.0, 0.5);
  init.theta_a = cplx(-0.7, 0.2);
  auto down = integrate_inward(rq, init, 0.5);
  auto back = integrate_inward(rq, down, 2.0);
  const double f = std::exp(back.log_scale - init.log_scale);
  CHECK(rel(back.a * f, init.a) < 1e-8);
  CHECK(rel(back.theta_a * f, init.theta_a) < 1e-8);
}

TEST_CASE("solve_mode is exact on the product model") {
  for (int n = 1; n <= 3; ++n)
    for (double dz : {0.8, 2.3}) {
      SpectralPoint sp(0.5 * n + dz, n);
      for (int j : {1, 5, 17, 40}) {
        auto r = solve_mode(unperturbed(n, 0.5 * n + dz, j));
        REQUIRE(r.ok());
        CHECK(rel(r.s, hyperbolic_exact_eigenvalue(sp, j)) < 1e-6);
        CHECK(r.quality < 1e-8);
      }
    }
}

TEST_CASE("solve_mode invariances: seed scaling, x_start doubling, conjugation") {
  auto rp = unperturbed(2, 2.3, 9);
  auto fb = frobenius_basis(rp);
  SolveOptions opt;
  const double xm = choose_x_match(rp, fb, opt);
  auto init = farfield_init(rp, default_x_start(rp));
  auto r1 = frobenius_match(rp, integrate_inward(rp, init, xm), fb);
  SolutionSample scaled = init;
  scaled.a *= cplx(3.0, -7.0);
  scaled.theta_a *= cplx(3.0, -7.0);
  auto r2 = frobenius_match(rp, integrate_inward(rp, scaled, xm), fb);
  CHECK(rel(r2.s, r1.s) < 1e-12);
  auto far = farfield_init(rp, 2.0 * default_x_start(rp));
  auto r3 = frobenius_match(rp, integrate_inward(rp, far, xm), fb);
  CHECK(rel(r3.s, r1.s) < 1e-8);
  CHECK(std::abs(r1.s.imag()) < 1e-10 * std::abs(r1.s));

  Matrix L = Matrix::Identity(2, 2) * 0.2;
  PerturbationJet pj{1, L, 0.3, Cutoff{1.0, 2.0}};
  auto a = solve_mode(cylinder_problem(BoundaryMetric::identity(2), pj, 1.0, {3, 4}, SpectralPoint(cplx(2.3, 0.4), 2)));
  auto b = solve_mode(cylinder_problem(BoundaryMetric::identity(2), pj, 1.0, {3, 4}, SpectralPoint(cplx(2.3, -0.4), 2)));
  CHECK(rel(b.s, std::conj(a.s)) < 1e-9);
}

TEST_CASE("halving tolerances changes s by less than the quality diagnostic") {
  PerturbationJet pj{1, Matrix::Constant(1, 1, 0.2), 0.1, Cutoff{1.0, 2.0}};
  auto rp = cylinder_problem(BoundaryMetric::identity(1), pj, 1.0, {12}, SpectralPoint(2.3, 1));
  SolveOptions o1, o2;
  o2.rtol = 0.5 * o1.rtol;
  o2.series_tol = 0.5 * o1.series_tol;
  auto a = solve_mode(rp, o1), b = solve_mode(rp, o2);
  // the matching residual does not see the global integration error, which sits near 10 rtol
  CHECK(rel(a.s, b.s) <= std::max(a.quality, 100 * o1.rtol));
}

TEST_CASE("scatter_sweep ordering, determinism and quality") {
  auto bm = BoundaryMetric::identity(1);
  auto fam = family_jet(bm, {}, {0.0});
  CHECK(scatter_sweep(fam, {}, SpectralPoint(2.3, 1)).empty());
  std::vector<std::vector<int>> modes;
  for (int j = 1; j <= 20; ++j) modes.push_back({j});
  auto recs = scatter_sweep(fam, modes, SpectralPoint(2.3, 1));
  REQUIRE(recs.size() == 20);
  for (const auto& r : recs) CHECK(r.quality <= 1e-8);

  auto perm = modes;
  std::reverse(perm.begin(), perm.end());
  std::vector<PerturbationJet> jets{{1, Matrix::Constant(1, 1, 0.2), 0.0, Cutoff{}}};
  auto fam2 = family_jet(bm, jets, {-0.01, 0.0, 0.01});
  auto a = scatter_sweep(fam2, modes, SpectralPoint(2.3, 1), {}, 1);
  auto b = scatter_sweep(fam2, perm, SpectralPoint(2.3, 1), {}, 3);
  for (int e = 0; e < 3; ++e)
    for (int i = 0; i < 20; ++i) {
      const auto& ra = a[e * 20 + i];
      const auto& rb = b[e * 20 + (19 - i)];
      CHECK(ra.mode == rb.mode);
      CHECK(ra.eps == rb.eps);
      CHECK(ra.s == rb.s);
    }
}

TEST_CASE("sweep tags failing records and continues") {
  auto bm = BoundaryMetric::identity(1);
  auto fam = family_jet(bm, {}, {0.0});
  SolveOptions bad;
  bad.frobenius_order = 0;
  auto recs = scatter_sweep(fam, {{2}, {3}}, SpectralPoint(2.3, 1), bad);
  REQUIRE(recs.size() == 2);
  for (const auto& r : recs) {
    CHECK_FALSE(r.ok());
    CHECK(r.flags.find("error:") != std::string::npos);
  }
}

TEST_CASE("eps_derivative: vanishing, Richardson consistency and linearity") {
  auto bm = BoundaryMetric::identity(1);
  SpectralPoint sp(2.3, 1);
  std::vector<PerturbationJet> zero{{1, Matrix::Zero(1, 1), 0.0, Cutoff{}}};
  auto d0 = eps_derivative(family_jet(bm, zero, {-1e-3, 0.0, 1e-3}), {10}, sp);
  CHECK(std::abs(d0.value) < 1e-8 * std::abs(hyperbolic_exact_eigenvalue(sp, 10.0)));

  std::vector<PerturbationJet> one{{1, Matrix::Constant(1, 1, 0.3), 0.2, Cutoff{}}};
  std::vector<PerturbationJet> two{{1, Matrix::Constant(1, 1, 0.6), 0.4, Cutoff{}}};
  auto d1 = eps_derivative(family_jet(bm, one, {-1e-3, -5e-4, 0.0, 5e-4, 1e-3}), {10}, sp);
  CHECK(d1.richardson);
  CHECK(d1.richardson_gap < 1e-4);
  auto d2 = eps_derivative(family_jet(bm, two, {-1e-3, -5e-4, 0.0, 5e-4, 1e-3}), {10}, sp);
  CHECK(rel(d2.value, 2.0 * d1.value) < 1e-4);
  CHECK(code_of([&] { eps_derivative(family_jet(bm, one, {0.0, 1e-3}), {10}, sp); }) == ErrorCode::Precondition);
}

TEST_CASE("black-hole solve is insensitive to the far truncation") {
  auto bh = BlackHoleModel::schwarzschild(1.0);
  SpectralPoint sp(2.3, 2);
  for (int l : {2, 10}) {
    auto a = solve_mode(blackhole_problem(bh, l, sp, {}, 0.0, {20.0}));
    auto b = solve_mode(blackhole_problem(bh, l, sp, {}, 0.0, {40.0}));
    REQUIRE(a.ok());
    REQUIRE(b.ok());
    CHECK(rel(a.s, b.s) < 1e-6);
  }
}
