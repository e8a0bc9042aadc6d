#include "ahs/models.hpp"

#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <limits>

#include "ahs/series.hpp"

namespace ahs {

namespace {

double bump(double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; }

bool positive_definite(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() > 0.0;
}

bool is_symmetric(const Matrix& m) {
  return m.rows() == m.cols() && (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-14 * (1.0 + m.cwiseAbs().maxCoeff());
}

Vector mode_vector(const std::vector<int>& mode) {
  Vector j(mode.size());
  for (size_t i = 0; i < mode.size(); ++i) j[i] = mode[i];
  return j;
}

}  // namespace

double Cutoff::value(double x) const {
  if (x <= x_a) return 1.0;
  if (x >= x_b) return 0.0;
  double t = (x - x_a) / (x_b - x_a);
  double A = bump(1.0 - t), B = bump(t);
  return A / (A + B);
}

double Cutoff::derivative(double x) const {
  if (x <= x_a || x >= x_b) return 0.0;
  double t = (x - x_a) / (x_b - x_a);
  double A = bump(1.0 - t), B = bump(t);
  double dA = -A / ((1.0 - t) * (1.0 - t)), dB = B / (t * t);
  return (dA * B - A * dB) / ((A + B) * (A + B)) / (x_b - x_a);
}

void Cutoff::validate() const {
  if (!(x_a > 0.0 && x_b > x_a)) fail(ErrorCode::Precondition, "cutoff needs 0 < x_a < x_b");
}

BoundaryMetric BoundaryMetric::torus(const Matrix& h0) {
  BoundaryMetric bm;
  bm.n = static_cast<int>(h0.rows());
  bm.h0 = h0;
  bm.validate();
  return bm;
}

BoundaryMetric BoundaryMetric::identity(int n) { return torus(Matrix::Identity(n, n)); }

BoundaryMetric BoundaryMetric::sphere() {
  BoundaryMetric bm;
  bm.n = 2;
  bm.h0 = Matrix::Identity(2, 2);
  bm.round_sphere = true;
  return bm;
}

void BoundaryMetric::validate() const {
  if (n < 1 || h0.rows() != n || h0.cols() != n)
    fail(ErrorCode::Precondition, "boundary metric must be n x n");
  if (!is_symmetric(h0)) fail(ErrorCode::Precondition, "boundary metric must be symmetric");
  if (!positive_definite(h0)) fail(ErrorCode::Precondition, "boundary metric must be positive definite");
}

void PerturbationJet::validate(int n) const {
  if (k < 1) fail(ErrorCode::Precondition, "perturbation order k must be >= 1");
  if (L.rows() != n || L.cols() != n) fail(ErrorCode::Precondition, "jet L must be n x n");
  if (!is_symmetric(L)) fail(ErrorCode::Precondition, "jet L must be symmetric");
  if (!std::isfinite(W)) fail(ErrorCode::Precondition, "jet W must be finite");
  cutoff.validate();
}

std::array<cplx, 3> RadialProblem::coeffs(double x) const {
  EulerCoeffs e = euler(x);
  return {cplx(-x * x), (e.P - 1.0) * x, e.Q};
}

std::array<cplx, 2> RadialProblem::indicial_roots() const {
  // sigma^2 - P0 sigma - Q0 = 0
  cplx P0 = taylor_P.at(0), Q0 = taylor_Q.at(0);
  cplx d = std::sqrt(P0 * P0 + 4.0 * Q0);
  cplx r1 = 0.5 * (P0 + d), r2 = 0.5 * (P0 - d);
  // order as (zeta-like, n - zeta-like)
  if (std::abs(r1 - zeta) > std::abs(r2 - zeta)) std::swap(r1, r2);
  return {r1, r2};
}

double lambda2_of(const Matrix& h, const std::vector<int>& mode) {
  Vector j = mode_vector(mode);
  return j.dot(h.ldlt().solve(j));
}

Matrix metric_at(const BoundaryMetric& bm, const std::vector<PerturbationJet>& jets, double eps,
                 double x) {
  Matrix h = bm.h0;
  for (const auto& pj : jets) h += eps * pj.cutoff.value(x) * std::pow(x, pj.k) * pj.L;
  return h;
}

RadialProblem cylinder_problem(const BoundaryMetric& bm, const std::vector<PerturbationJet>& jets,
                               double eps, const std::vector<int>& mode, const SpectralPoint& sp,
                               double x_max) {
  bm.validate();
  if (bm.round_sphere) fail(ErrorCode::Precondition, "cylinder_problem needs a torus boundary");
  if (sp.relaxed) fail(ErrorCode::Precondition, "cylinder_problem: 2*zeta must not be an integer");
  const int n = bm.n;
  if (sp.n != n) fail(ErrorCode::Precondition, "spectral point dimension differs from metric");
  if (static_cast<int>(mode.size()) != n) fail(ErrorCode::Precondition, "mode must have n entries");
  double x_exact = 0.0, x_a_min = std::numeric_limits<double>::infinity();
  for (const auto& pj : jets) {
    pj.validate(n);
    if (eps != 0.0) {
      x_exact = std::max(x_exact, pj.cutoff.x_b);
      x_a_min = std::min(x_a_min, pj.cutoff.x_a);
    }
  }
  // positivity of h(x) wherever the perturbation is active
  if (eps != 0.0) {
    const int samples = 400;
    for (int i = 0; i <= samples; ++i) {
      double x = x_exact * i / samples;
      if (!positive_definite(metric_at(bm, jets, eps, x)))
        fail(ErrorCode::Precondition, "h(x) loses positivity at x=" + std::to_string(x));
    }
  }

  const Vector j = mode_vector(mode);
  const Matrix h0inv = bm.h0.inverse();
  RadialProblem rp;
  rp.kind = "cylinder";
  rp.mode = mode;
  rp.n = n;
  rp.zeta = sp.zeta;
  rp.lambda = std::sqrt(std::max(0.0, j.dot(h0inv * j)));
  const cplx zz = sp.zeta * (sp.zeta - double(n));

  auto active = eps != 0.0 ? jets : std::vector<PerturbationJet>{};
  rp.lambda2 = [bm, active, eps, mode](double x) {
    return lambda2_of(metric_at(bm, active, eps, x), mode);
  };
  rp.euler = [bm, active, eps, j, n, zz](double x) -> EulerCoeffs {
    Matrix h = bm.h0, dh = Matrix::Zero(n, n);
    double V = 0.0;
    for (const auto& pj : active) {
      double chi = pj.cutoff.value(x);
      if (chi == 0.0 && pj.cutoff.derivative(x) == 0.0) continue;
      double xk = std::pow(x, pj.k);
      h += eps * chi * xk * pj.L;
      dh += eps * (pj.cutoff.derivative(x) * xk + chi * pj.k * std::pow(x, pj.k - 1)) * pj.L;
      V += eps * chi * xk * pj.W;
    }
    Eigen::LDLT<Matrix> ldlt(h);
    double lam2 = j.dot(ldlt.solve(j));
    double ell = ldlt.solve(dh).trace();
    return {cplx(n - 0.5 * x * ell), x * x * lam2 + V + zz};
  };

  // Taylor data: h = sum H_m x^m near 0, G = h^-1 by power-series inversion
  const int N = kTaylorOrder;
  std::vector<Matrix> H(N + 2, Matrix::Zero(n, n)), G(N + 1, Matrix::Zero(n, n));
  std::vector<double> Vs(N + 1, 0.0);
  H[0] = bm.h0;
  for (const auto& pj : active) {
    if (pj.k <= N + 1) H[pj.k] += eps * pj.L;
    if (pj.k <= N) Vs[pj.k] += eps * pj.W;
  }
  G[0] = h0inv;
  for (int m = 1; m <= N; ++m) {
    Matrix s = Matrix::Zero(n, n);
    for (int i = 1; i <= m; ++i) s += H[i] * G[m - i];
    G[m] = -h0inv * s;
  }
  rp.taylor_P.assign(N + 1, 0.0);
  rp.taylor_Q.assign(N + 1, 0.0);
  for (int m = 0; m <= N; ++m) {
    // (x ell)_m = ell_{m-1}, ell_q = sum_i tr(G_{q-i} (i+1) H_{i+1})
    double xell = 0.0;
    if (m >= 1) {
      int q = m - 1;
      for (int i = 0; i <= q; ++i) xell += (i + 1) * (G[q - i] * H[i + 1]).trace();
    }
    rp.taylor_P[m] = (m == 0 ? double(n) : 0.0) - 0.5 * xell;
    double q2 = m >= 2 ? j.dot(G[m - 2] * j) : 0.0;
    rp.taylor_Q[m] = q2 + Vs[m] + (m == 0 ? zz : cplx(0.0));
  }
  // Neumann-series radius for h^-1, capped by the cutoff plateau
  double limit = std::numeric_limits<double>::infinity();
  if (!active.empty()) {
    auto bound = [&](double r) {
      double s = 0.0;
      for (const auto& pj : active) s += std::abs(eps) * (h0inv * pj.L).norm() * std::pow(r, pj.k);
      return s;
    };
    double lo = 0.0, hi = 1e3;
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (lo + hi);
      (bound(mid) < 0.5 ? lo : hi) = mid;
    }
    limit = std::min(lo, x_a_min);
  }
  rp.series_limit = limit;
  rp.farfield.kind = FarFieldKind::BesselDecay;
  rp.farfield.lambda_inf = rp.lambda;
  rp.farfield.x_exact = x_exact;
  rp.x_max = x_max > 0.0 ? x_max : std::numeric_limits<double>::infinity();
  return rp;
}

RadialProblem cylinder_problem(const BoundaryMetric& bm, const std::optional<PerturbationJet>& pj,
                               double eps, const std::vector<int>& mode, const SpectralPoint& sp,
                               double x_max) {
  std::vector<PerturbationJet> jets;
  if (pj) jets.push_back(*pj);
  return cylinder_problem(bm, jets, eps, mode, sp, x_max);
}

cplx hyperbolic_exact_eigenvalue(const SpectralPoint& sp, double lambda) {
  if (!(lambda > 0.0)) fail(ErrorCode::Precondition, "hyperbolic_exact_eigenvalue needs lambda > 0");
  return c_scatter(sp) * std::exp((2.0 * sp.zeta - double(sp.n)) * std::log(lambda));
}

ModelFamily family_jet(const BoundaryMetric& bm, const std::vector<PerturbationJet>& jets,
                       const std::vector<double>& eps_list) {
  ModelFamily fam;
  fam.eps = eps_list;
  for (double e : eps_list) {
    // positivity check through a probe construction
    if (e != 0.0 && bm.n >= 1) {
      std::vector<int> probe(bm.n, 0);
      probe[0] = 1;
      cylinder_problem(bm, jets, e, probe, SpectralPoint(0.5 * bm.n + 0.3, bm.n));
    }
    fam.models.push_back({bm, jets, e});
  }
  if (eps_list.size() >= 2) {
    double d = eps_list[1] - eps_list[0];
    bool uniform = true;
    for (size_t i = 2; i < eps_list.size(); ++i)
      uniform = uniform && std::abs(eps_list[i] - eps_list[i - 1] - d) <= 1e-14 * (1.0 + std::abs(d));
    fam.spacing = uniform ? d : 0.0;
  }
  bool sym = !eps_list.empty();
  for (size_t i = 0; i < eps_list.size(); ++i)
    sym = sym && std::abs(eps_list[i] + eps_list[eps_list.size() - 1 - i]) <= 1e-14;
  fam.symmetric = sym;
  return fam;
}

// ---------------------------------------------------------------- black holes

BlackHoleModel BlackHoleModel::schwarzschild(double m) {
  if (!(m > 0.0)) fail(ErrorCode::Precondition, "mass must be positive");
  BlackHoleModel bh;
  bh.kind = BlackHoleKind::Schwarzschild;
  bh.m = m;
  bh.r_plus = 2.0 * m;
  return bh;
}

BlackHoleModel BlackHoleModel::desitter_schwarzschild(double m, double Lambda) {
  if (!(m > 0.0)) fail(ErrorCode::Precondition, "mass must be positive");
  if (!(Lambda > 0.0 && 9.0 * m * m * Lambda < 1.0))
    fail(ErrorCode::Precondition, "De Sitter-Schwarzschild needs 0 < 9 m^2 Lambda < 1");
  BlackHoleModel bh;
  bh.kind = BlackHoleKind::DeSitterSchwarzschild;
  bh.m = m;
  bh.Lambda = Lambda;
  bh.r_crit = std::cbrt(3.0 * m / Lambda);
  auto F = [&](double r) { return bh.F(r); };
  boost::math::tools::eps_tolerance<double> tol(52);
  std::uintmax_t it = 200;
  auto b1 = boost::math::tools::toms748_solve(F, 2.0 * m, bh.r_crit, tol, it);
  it = 200;
  double hi = bh.r_crit;
  while (F(hi) > 0.0) hi *= 2.0;
  auto b2 = boost::math::tools::toms748_solve(F, bh.r_crit, hi, tol, it);
  auto newton = [&](double r) {
    for (int i = 0; i < 3; ++i) r -= bh.F(r) / bh.dF(r);
    return r;
  };
  bh.r_plus = newton(0.5 * (b1.first + b1.second));
  bh.r_plus2 = newton(0.5 * (b2.first + b2.second));
  if (!(std::abs(bh.F(bh.r_plus)) < 1e-12 && std::abs(bh.F(bh.r_plus2)) < 1e-12))
    fail(ErrorCode::Numerical, "horizon root finding failed");
  return bh;
}

double BlackHoleModel::F(double r) const { return 1.0 - 2.0 * m / r - Lambda * r * r / 3.0; }
double BlackHoleModel::dF(double r) const { return 2.0 * m / (r * r) - 2.0 * Lambda * r / 3.0; }
double BlackHoleModel::d2F(double r) const { return -4.0 * m / (r * r * r) - 2.0 * Lambda / 3.0; }
double BlackHoleModel::kappa0() const { return 0.25 * dF(r_plus) * dF(r_plus); }

double BlackHoleModel::default_r_far() const {
  if (kind == BlackHoleKind::Schwarzschild) return 20.0 * m;
  return std::min(20.0 * m, r_plus + 0.8 * (r_crit - r_plus));
}

double BlackHoleModel::r_of_alpha(double alpha) const {
  const double a2 = alpha * alpha;
  if (kind == BlackHoleKind::Schwarzschild) return 2.0 * m / (1.0 - a2);
  if (a2 >= F(r_crit)) fail(ErrorCode::Precondition, "alpha beyond the static region");
  auto g = [&](double r) { return F(r) - a2; };
  boost::math::tools::eps_tolerance<double> tol(50);
  std::uintmax_t it = 200;
  auto br = boost::math::tools::toms748_solve(g, r_plus, r_crit, -a2, F(r_crit) - a2, tol, it);
  double r = 0.5 * (br.first + br.second);
  return r - g(r) / dF(r);
}

SpectralPoint blackhole_physical_zeta(const BlackHoleModel& bh, double lambda) {
  return SpectralPoint(cplx(1.0, lambda / std::sqrt(bh.kappa0())), 2);
}

RadialProblem blackhole_problem(const BlackHoleModel& bh, int l, double lambda,
                                const std::vector<PerturbationJet>& jets, double eps,
                                const BlackHoleOptions& opt) {
  return blackhole_problem(bh, l, blackhole_physical_zeta(bh, lambda), jets, eps, opt);
}

RadialProblem blackhole_problem(const BlackHoleModel& bh, int l, const SpectralPoint& sp,
                                const std::vector<PerturbationJet>& jets, double eps,
                                const BlackHoleOptions& opt) {
  const int n = 2;
  if (l < 0) fail(ErrorCode::Precondition, "l must be >= 0");
  if (sp.n != n) fail(ErrorCode::Precondition, "black-hole models have n = 2");
  if (sp.relaxed) fail(ErrorCode::Precondition, "blackhole_problem: 2*zeta must not be an integer");
  std::vector<double> cs;  // isotropic angular factors
  for (const auto& pj : jets) {
    if (pj.L.rows() == 1 && pj.L.cols() == 1) {
      cs.push_back(pj.L(0, 0));
    } else {
      pj.validate(n);
      if (std::abs(pj.L(0, 1)) > 0.0 || std::abs(pj.L(0, 0) - pj.L(1, 1)) > 0.0)
        fail(ErrorCode::Precondition, "non-separable perturbation: black-hole jets must be isotropic");
      cs.push_back(pj.L(0, 0));
    }
    pj.cutoff.validate();
  }
  const double r_far = opt.r_far > 0.0 ? opt.r_far : bh.default_r_far();
  if (!(r_far > bh.r_plus) || (bh.r_crit > 0.0 && r_far >= bh.r_crit))
    fail(ErrorCode::Precondition, "r_far must lie in the static region beyond r_+");
  const double alpha_far = std::sqrt(bh.F(r_far));
  const double k0 = bh.kappa0();
  const cplx nu = sp.zeta - 1.0;
  const cplx E = -k0 * nu * nu;
  const double ll = double(l) * (l + 1);
  for (const auto& pj : jets)
    if (pj.cutoff.x_b > alpha_far && eps != 0.0)
      fail(ErrorCode::Precondition, "perturbation cutoff extends beyond the far end");

  RadialProblem rp;
  rp.kind = "blackhole";
  rp.mode = {l};
  rp.n = n;
  rp.zeta = sp.zeta;
  rp.scale = k0;
  const double rp2 = bh.r_plus * bh.r_plus;
  rp.lambda = std::sqrt(ll / (rp2 * k0));
  auto act = eps != 0.0 ? jets : std::vector<PerturbationJet>{};
  auto cact = eps != 0.0 ? cs : std::vector<double>{};

  auto psi_of = [act, cact, eps](double a, double& psi, double& dpsi, double& V) {
    psi = 1.0;
    dpsi = 0.0;
    V = 0.0;
    for (size_t i = 0; i < act.size(); ++i) {
      const auto& pj = act[i];
      double chi = pj.cutoff.value(a), dchi = pj.cutoff.derivative(a);
      double ak = std::pow(a, pj.k);
      psi += eps * cact[i] * chi * ak;
      dpsi += eps * cact[i] * (dchi * ak + chi * pj.k * std::pow(a, pj.k - 1));
      V += eps * pj.W * chi * ak;
    }
  };
  rp.lambda2 = [bh, psi_of, ll, k0](double a) {
    if (a == 0.0) return ll / (bh.r_plus * bh.r_plus * k0);
    double r = bh.r_of_alpha(a), psi, dpsi, V;
    psi_of(a, psi, dpsi, V);
    double kap = 0.25 * bh.dF(r) * bh.dF(r);
    return ll / (r * r * psi * kap);
  };
  rp.euler = [bh, psi_of, ll, E](double a) -> EulerCoeffs {
    double r = bh.r_of_alpha(a), psi, dpsi, V;
    psi_of(a, psi, dpsi, V);
    double Fp = bh.dF(r), Fpp = bh.d2F(r);
    double kap = 0.25 * Fp * Fp;
    double drda = 2.0 * a / Fp;
    double ell = a * ((2.0 / r + Fpp / Fp) * drda + dpsi / psi);
    cplx R = (a * a * ll / (r * r * psi) + V - E) / kap;
    return {cplx(2.0 - ell), R + ell - 1.0};
  };

  // Taylor data from the horizon expansion F(r_+ + rho) = sum F_j rho^j
  const int N = kTaylorOrder;
  Series Fs(N);
  for (int jj = 1; jj <= N; ++jj) {
    double v = -(2.0 * bh.m / bh.r_plus) * std::pow(-1.0 / bh.r_plus, jj);
    if (jj == 1) v -= bh.Lambda * 2.0 * bh.r_plus / 3.0;
    if (jj == 2) v -= bh.Lambda / 3.0;
    Fs[jj] = v;
  }
  Series rho_u = Fs.revert();
  Series rho = rho_u.compose(Series::monomial(N, 2));
  Series r = Series::constant(N, bh.r_plus) + rho;
  Series dFs = Fs.derivative();
  Series Fp = dFs.compose(rho);
  Series psi = Series::constant(N, 1.0), Vs(N);
  for (size_t i = 0; i < act.size(); ++i) {
    psi = psi + Series::monomial(N, act[i].k, eps * cact[i]);
    Vs = Vs + Series::monomial(N, act[i].k, eps * act[i].W);
  }
  Series phi = r * r * psi * Fp;
  Series ell = phi.log_theta();
  Series kap = Fp * Fp * 0.25;
  Series ikap = kap.reciprocal();
  Series R = Series::monomial(N, 2, ll) * (r * r * psi * kap).reciprocal() +
             (Vs - Series::constant(N, E)) * ikap;
  Series P = Series::constant(N, 2.0) - ell;
  Series Q = R + ell - Series::constant(N, 1.0);
  rp.taylor_P = P.coeffs();
  rp.taylor_Q = Q.coeffs();
  rp.taylor_P[0] = 2.0;
  rp.taylor_Q[0] = sp.zeta * (sp.zeta - 2.0);  // exact by construction

  double alpha_sing = bh.kind == BlackHoleKind::Schwarzschild ? 1.0 : std::sqrt(bh.F(bh.r_crit));
  double limit = 0.5 * alpha_sing;
  for (const auto& pj : act) limit = std::min(limit, pj.cutoff.x_a);
  rp.series_limit = limit;
  rp.farfield.kind = FarFieldKind::Dirichlet;
  rp.farfield.x_far = alpha_far;
  rp.x_max = alpha_far;
  return rp;
}

NormalOperator frozen_normal_operator(const BlackHoleModel& bh, const SpectralPoint& sp) {
  RadialProblem p0 = blackhole_problem(bh, 0, sp, {}, 0.0);
  RadialProblem p1 = blackhole_problem(bh, 1, sp, {}, 0.0);
  const double k0 = p0.scale;
  NormalOperator no;
  no.kappa0 = k0;
  // physical operator = -kappa * (u-form Euler operator); theta^2 -> (alpha D)^2 flips sign
  no.c_dilation2 = k0;
  no.c_dilation1 = -k0 * (2.0 - p0.taylor_P[0].real());
  double per_ll = (p1.taylor_Q[2] - p0.taylor_Q[2]).real() / 2.0;  // d Q_2 / d l(l+1)
  no.c_angular = k0 * per_ll * (k0 * bh.r_plus * bh.r_plus);
  return no;
}

}  // namespace ahs
