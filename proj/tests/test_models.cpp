#include <doctest.h>

#include <boost/math/special_functions/bessel.hpp>
#include <cmath>

#include "ahs/models.hpp"
#include "support.hpp"

using namespace ahs;
using testing::code_of;
using testing::rel;

namespace {

cplx ode_apply(const RadialProblem& rp, double x, double a, double da, double d2a) {
  auto p = rp.coeffs(x);
  return p[0] * d2a + p[1] * da + p[2] * a;
}

// Brute-force (x, y) finite-difference Laplace-Beltrami of g = (dx^2 + h(x))/x^2 plus the
// potential, applied to u = f(x) cos(j.y), evaluated at (x0, y0).
double fd_operator(const BoundaryMetric& bm, const std::vector<PerturbationJet>& jets, double eps,
                   const std::vector<int>& j, const SpectralPoint& sp, double x0, double hstep,
                   const std::function<double(double)>& f) {
  const int n = bm.n;
  Vector y0 = Vector::Constant(n, 0.37);
  auto u = [&](double x, const Vector& y) {
    double ph = 0.0;
    for (int q = 0; q < n; ++q) ph += j[q] * y[q];
    return f(x) * std::cos(ph);
  };
  auto sqrtg = [&](double x) { return std::pow(x, -n - 1) * std::sqrt(metric_at(bm, jets, eps, x).determinant()); };
  const double hx = hstep, hy = hstep;
  // x part: -(1/sqrt g) d_x (sqrt g x^2 d_x u)
  auto F = [&](double x) { return sqrtg(x) * x * x; };
  double xp = x0 + 0.5 * hx, xm = x0 - 0.5 * hx;
  double ux = (F(xp) * (u(x0 + hx, y0) - u(x0, y0)) - F(xm) * (u(x0, y0) - u(x0 - hx, y0))) / (hx * hx);
  double lap = -ux / sqrtg(x0);
  // y part: -x^2 h^{ab} d_a d_b u (sqrt g independent of y)
  Matrix hinv = metric_at(bm, jets, eps, x0).inverse();
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      Vector ea = Vector::Zero(n), eb = Vector::Zero(n);
      ea[a] = hy;
      eb[b] = hy;
      double d2 = (u(x0, y0 + ea + eb) - u(x0, y0 + ea - eb) - u(x0, y0 - ea + eb) + u(x0, y0 - ea - eb)) / (4 * hy * hy);
      lap -= x0 * x0 * hinv(a, b) * d2;
    }
  double V = 0.0;
  for (const auto& pj : jets) V += eps * pj.W * std::pow(x0, pj.k) * pj.cutoff.value(x0);
  const double z = sp.zeta.real();
  return lap + (V + z * (z - n)) * u(x0, y0);
}

}  // namespace

TEST_CASE("cutoff is a smooth monotone step") {
  Cutoff c{1.0, 2.0};
  CHECK(c.value(0.5) == 1.0);
  CHECK(c.value(2.5) == 0.0);
  double prev = 1.0;
  for (double x = 1.0; x <= 2.0; x += 0.01) {
    CHECK(c.value(x) <= prev + 1e-15);
    prev = c.value(x);
    double fd = (c.value(x + 1e-6) - c.value(x - 1e-6)) / 2e-6;
    CHECK(std::abs(fd - c.derivative(x)) < 1e-6);
  }
  CHECK(code_of([] { Cutoff{2.0, 1.0}.validate(); }) == ErrorCode::Precondition);
}

TEST_CASE("indicial roots are (zeta, n - zeta) independent of the perturbation") {
  for (int n = 1; n <= 3; ++n) {
    SpectralPoint sp(cplx(0.5 * n + 0.8, 0.2), n);
    auto bm = BoundaryMetric::identity(n);
    Matrix L = Matrix::Identity(n, n) * 0.3;
    L(0, 0) = -0.2;
    for (int k = 1; k <= 3; ++k) {
      PerturbationJet pj{k, L, 0.7, Cutoff{0.5, 1.5}};
      std::vector<int> mode(n, 2);
      auto rp = cylinder_problem(bm, pj, 0.5, mode, sp);
      auto r = rp.indicial_roots();
      bool direct = std::abs(r[0] - sp.zeta) < 1e-10 && std::abs(r[1] - (double(n) - sp.zeta)) < 1e-10;
      bool swapped = std::abs(r[1] - sp.zeta) < 1e-10 && std::abs(r[0] - (double(n) - sp.zeta)) < 1e-10;
      CHECK((direct || swapped));
    }
  }
}

TEST_CASE("unperturbed zero mode: x^zeta solves the ODE exactly") {
  SpectralPoint sp(2.3, 2);
  auto rp = cylinder_problem(BoundaryMetric::identity(2), std::nullopt, 0.0, {0, 0}, sp);
  CHECK(rp.zero_mode());
  const double z = 2.3;
  for (double x : {0.01, 0.3, 2.0}) {
    double a = std::pow(x, z), da = z * std::pow(x, z - 1), d2a = z * (z - 1) * std::pow(x, z - 2);
    CHECK(std::abs(ode_apply(rp, x, a, da, d2a)) < 1e-12 * std::abs(a) * (1 + z * z));
  }
}

TEST_CASE("unperturbed cylinder: x^{n/2} K_nu(lambda x) solves the ODE") {
  using boost::math::cyl_bessel_k;
  for (int n = 1; n <= 3; ++n) {
    SpectralPoint sp(0.5 * n + 1.3, n);
    const double nu = 1.3;
    std::vector<int> mode(n, 0);
    mode[0] = 3;
    auto rp = cylinder_problem(BoundaryMetric::identity(n), std::nullopt, 0.0, mode, sp);
    const double lam = 3.0, h = 0.5 * n;
    for (double x : {0.05, 0.4, 1.7}) {
      double z = lam * x;
      double K = cyl_bessel_k(nu, z);
      double K1 = -0.5 * (cyl_bessel_k(nu - 1, z) + cyl_bessel_k(nu + 1, z));
      double K2 = 0.25 * (cyl_bessel_k(nu - 2, z) + 2 * K + cyl_bessel_k(nu + 2, z));
      double a = std::pow(x, h) * K;
      double da = h * std::pow(x, h - 1) * K + lam * std::pow(x, h) * K1;
      double d2a = h * (h - 1) * std::pow(x, h - 2) * K + 2 * h * lam * std::pow(x, h - 1) * K1 + lam * lam * std::pow(x, h) * K2;
      double scale = x * x * std::abs(d2a) + x * std::abs(da) + std::abs(a) * (1 + lam * lam * x * x);
      CHECK(std::abs(ode_apply(rp, x, a, da, d2a)) < 1e-9 * scale);
    }
  }
}

TEST_CASE("perturbed coefficients agree with a brute-force Laplace-Beltrami discretization") {
  auto f = [](double x) { return x * x * std::exp(-x); };
  auto df = [](double x) { return (2 * x - x * x) * std::exp(-x); };
  auto d2f = [](double x) { return (2 - 4 * x + x * x) * std::exp(-x); };
  struct Case { int n; Matrix L; double W; std::vector<int> j; };
  Matrix L1 = Matrix::Constant(1, 1, 0.4);
  Matrix L2(2, 2);
  L2 << 0.3, 0.1, 0.1, -0.2;
  for (const auto& c : {Case{1, L1, 0.5, {3}}, Case{2, L2, -0.4, {2, 1}}}) {
    SpectralPoint sp(0.5 * c.n + 0.8, c.n);
    auto bm = BoundaryMetric::identity(c.n);
    std::vector<PerturbationJet> jets{{1, c.L, c.W, Cutoff{0.8, 1.6}}};
    auto rp = cylinder_problem(bm, jets, 0.7, c.j, sp);
    const double x0 = 1.1;
    double ode = ode_apply(rp, x0, f(x0), df(x0), d2f(x0)).real();
    double ph = 0.0;
    for (int q = 0; q < c.n; ++q) ph += c.j[q] * 0.37;
    ode *= std::cos(ph);
    double e1 = std::abs(fd_operator(bm, jets, 0.7, c.j, sp, x0, 2e-2, f) - ode);
    double e2 = std::abs(fd_operator(bm, jets, 0.7, c.j, sp, x0, 1e-2, f) - ode);
    INFO("n=" << c.n << " e1=" << e1 << " e2=" << e2);
    CHECK(e2 < 1e-3 * std::abs(ode));
    CHECK(e1 / e2 > 3.0);
    CHECK(e1 / e2 < 5.0);
  }
}

TEST_CASE("positivity failure and zero-mode flagging") {
  auto bm = BoundaryMetric::identity(1);
  PerturbationJet bad{1, Matrix::Constant(1, 1, -2.0), 0.0, Cutoff{1.0, 2.0}};
  CHECK(code_of([&] { cylinder_problem(bm, bad, 1.0, {2}, SpectralPoint(2.3, 1)); }) == ErrorCode::Precondition);
  CHECK(cylinder_problem(bm, std::nullopt, 0.0, {0}, SpectralPoint(2.3, 1)).zero_mode());
}

TEST_CASE("lambda2 reduces to j h0^-1 j at x = 0") {
  Matrix h0(2, 2);
  h0 << 2.0, 0.5, 0.5, 1.0;
  auto bm = BoundaryMetric::torus(h0);
  PerturbationJet pj{1, Matrix::Identity(2, 2) * 0.2, 0.0, Cutoff{1.0, 2.0}};
  auto rp = cylinder_problem(bm, pj, 0.5, {3, -2}, SpectralPoint(2.3, 2));
  Vector j(2);
  j << 3, -2;
  CHECK(std::abs(rp.lambda2(0.0) - j.dot(h0.inverse() * j)) < 1e-12);
  CHECK(std::abs(rp.lambda * rp.lambda - j.dot(h0.inverse() * j)) < 1e-12);
}

TEST_CASE("hyperbolic_exact_eigenvalue examples") {
  SpectralPoint sp(2.3, 2);
  CHECK(rel(hyperbolic_exact_eigenvalue(sp, 1.0), c_scatter(sp)) < 1e-15);
  CHECK(rel(hyperbolic_exact_eigenvalue(sp, 6.0) / hyperbolic_exact_eigenvalue(sp, 3.0), std::pow(2.0, 2.6)) < 1e-13);
  CHECK(rel(hyperbolic_exact_eigenvalue(SpectralPoint::integral_point(1.0, 1), 2.0), -2.0) < 1e-13);
}

TEST_CASE("cutoff locality: cutoffs agreeing on [0, x_a] give identical coefficients there") {
  SpectralPoint sp(2.3, 1);
  auto bm = BoundaryMetric::identity(1);
  PerturbationJet a{1, Matrix::Constant(1, 1, 0.3), 0.2, Cutoff{0.5, 1.0}};
  PerturbationJet b{1, Matrix::Constant(1, 1, 0.3), 0.2, Cutoff{0.5, 3.0}};
  auto ra = cylinder_problem(bm, a, 1.0, {4}, sp), rb = cylinder_problem(bm, b, 1.0, {4}, sp);
  for (double x : {0.01, 0.1, 0.3, 0.5}) {
    auto ca = ra.coeffs(x), cb = rb.coeffs(x);
    for (int i = 0; i < 3; ++i) CHECK(ca[i] == cb[i]);
  }
}

TEST_CASE("family_jet metadata") {
  auto bm = BoundaryMetric::identity(1);
  std::vector<PerturbationJet> jets{{1, Matrix::Constant(1, 1, 0.3), 0.0, Cutoff{}}};
  auto f0 = family_jet(bm, jets, {0.0});
  CHECK(f0.models.size() == 1);
  CHECK(f0.models[0].eps == 0.0);
  auto f3 = family_jet(bm, jets, {-1e-3, 0.0, 1e-3});
  CHECK(f3.symmetric);
  CHECK(std::abs(f3.spacing - 1e-3) < 1e-15);
  auto fa = family_jet(bm, jets, {0.0, 1e-3});
  CHECK_FALSE(fa.symmetric);
}

TEST_CASE("black-hole horizons") {
  auto s = BlackHoleModel::schwarzschild(1.5);
  CHECK(s.r_plus == 3.0);
  auto ds = BlackHoleModel::desitter_schwarzschild(1.0, 0.04);
  auto F = [](double r) { return 1.0 - 2.0 / r - 0.04 * r * r / 3.0; };
  CHECK(std::abs(F(ds.r_plus)) < 1e-12);
  CHECK(std::abs(F(ds.r_plus2)) < 1e-12);
  CHECK(ds.r_plus < ds.r_crit);
  CHECK(ds.r_crit < ds.r_plus2);
  CHECK(code_of([] { BlackHoleModel::desitter_schwarzschild(1.0, 0.2); }) == ErrorCode::Precondition);
}

TEST_CASE("black-hole indicial exponents for real frequency") {
  auto bh = BlackHoleModel::schwarzschild(1.0);
  for (double lam : {0.3, 2.0}) {
    auto sp = blackhole_physical_zeta(bh, lam);
    auto rp = blackhole_problem(bh, 3, sp, {}, 0.0);
    auto r = rp.indicial_roots();
    CHECK(std::abs(r[0] + r[1] - 2.0) < 1e-10);
    CHECK(std::abs(r[0].real() - 1.0) < 1e-10);
    CHECK(std::abs(r[0].imag()) > 0.0);
  }
}

TEST_CASE("black-hole perturbations must be separable") {
  auto bh = BlackHoleModel::schwarzschild(1.0);
  Matrix L(2, 2);
  L << 1.0, 0.0, 0.0, 0.5;
  PerturbationJet pj{1, L, 0.0, Cutoff{0.3, 0.6}};
  CHECK(code_of([&] { blackhole_problem(bh, 2, SpectralPoint(2.3, 2), {pj}, 0.1); }) == ErrorCode::Precondition);
}

TEST_CASE("De Sitter-Schwarzschild coefficients tend to Schwarzschild as Lambda -> 0") {
  SpectralPoint sp(2.3, 2);
  auto s = BlackHoleModel::schwarzschild(1.0);
  auto rs = blackhole_problem(s, 4, sp, {}, 0.0, {12.0});
  double prev = 1e300;
  for (double Lam : {1e-3, 1e-5, 1e-7}) {
    auto ds = BlackHoleModel::desitter_schwarzschild(1.0, Lam);
    auto rd = blackhole_problem(ds, 4, sp, {}, 0.0, {12.0});
    double r = 5.0;   // fixed radius
    double as = std::sqrt(s.F(r)), ad = std::sqrt(ds.F(r));
    auto es = rs.euler(as), ed = rd.euler(ad);
    double d = (std::abs(es.P - ed.P) + std::abs(es.Q - ed.Q)) / (std::abs(es.P) + std::abs(es.Q));
    CHECK(d < prev);
    prev = d;
  }
  CHECK(prev < 1e-5);
}

TEST_CASE("frozen normal operator: angular coefficient kappa0 for Schwarzschild") {
  for (double m : {0.5, 1.0, 2.0}) {
    auto no = frozen_normal_operator(BlackHoleModel::schwarzschild(m), SpectralPoint(2.3, 2));
    CHECK(std::abs(no.kappa0 - 1.0 / (16 * m * m)) < 1e-14);
    CHECK(std::abs(no.c_angular - no.kappa0) < 1e-12 * no.kappa0);
    CHECK(std::abs(no.c_dilation1) < 1e-12 * no.kappa0);
  }
}
