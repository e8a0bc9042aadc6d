#include "ahs/specfun.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ahs/quadrature.hpp"

namespace ahs {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kLanczosG = 7.0;
constexpr std::array<double, 9> kLanczos = {
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};

std::string fmt(cplx z) {
  std::ostringstream os;
  os.precision(12);
  os << "(" << z.real() << (z.imag() < 0 ? "" : "+") << z.imag() << "i)";
  return os.str();
}

bool near_integer(double v, double tol) { return std::abs(v - std::round(v)) <= tol; }

// Lanczos sum for Re z >= 1/2, returns (t, series) with Gamma(z) = sqrt(2pi) t^(z-1/2) e^-t series.
void lanczos(cplx z, cplx& t, cplx& x) {
  z -= 1.0;
  x = kLanczos[0];
  for (int i = 1; i < 9; ++i) x += kLanczos[i] / (z + double(i));
  t = z + kLanczosG + 0.5;
}

cplx gamma_ratio(cplx a, cplx b) {
  // Gamma(a)/Gamma(b), both assumed pole-free
  if (std::abs(a) < 60 && std::abs(b) < 60) return gamma_complex(a) * rgamma_complex(b);
  return std::exp(lgamma_complex(a) - lgamma_complex(b));
}

cplx sphere_area(int dim) {  // |S^dim|
  double d = dim + 1;
  return 2.0 * std::pow(kPi, d / 2) / std::tgamma(d / 2);
}

}  // namespace

SpectralPoint::SpectralPoint(cplx z, int n_) : zeta(z), n(n_) {
  if (n < 1) fail(ErrorCode::Precondition, "boundary dimension n must be >= 1");
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
    fail(ErrorCode::Precondition, "zeta must be finite");
  if (std::abs(z.imag()) < 1e-14 && near_integer(2.0 * z.real(), 1e-12))
    fail(ErrorCode::Precondition, "2*zeta is an integer: " + fmt(z));
  if (std::abs(z - 0.5 * n) < 1e-14) fail(ErrorCode::Pole, "zeta = n/2 is a pole of M(zeta)");
}

SpectralPoint SpectralPoint::integral_point(cplx z, int n_) {
  if (n_ < 1) fail(ErrorCode::Precondition, "boundary dimension n must be >= 1");
  SpectralPoint sp;
  sp.zeta = z;
  sp.n = n_;
  sp.relaxed = true;
  return sp;
}

bool is_nonpositive_integer(cplx z, double tol) {
  return std::abs(z.imag()) <= tol && z.real() <= tol && near_integer(z.real(), tol);
}

cplx gamma_complex(cplx z) {
  if (is_nonpositive_integer(z)) fail(ErrorCode::Pole, "Gamma pole at " + fmt(z));
  if (z.real() < 0.5) {
    cplx s = std::sin(kPi * z);
    return kPi / (s * gamma_complex(1.0 - z));
  }
  if (std::abs(z) > 140.0) return std::exp(lgamma_complex(z));
  cplx t, x;
  lanczos(z, t, x);
  return std::sqrt(2.0 * kPi) * std::pow(t, z - 0.5) * std::exp(-t) * x;
}

cplx lgamma_complex(cplx z) {
  if (is_nonpositive_integer(z)) fail(ErrorCode::Pole, "Gamma pole at " + fmt(z));
  if (z.real() < 0.5) return std::log(kPi) - std::log(std::sin(kPi * z)) - lgamma_complex(1.0 - z);
  cplx t, x;
  lanczos(z, t, x);
  return 0.5 * std::log(2.0 * kPi) + (z - 0.5) * std::log(t) - t + std::log(x);
}

cplx rgamma_complex(cplx z) {
  if (is_nonpositive_integer(z)) return 0.0;
  if (z.real() < 0.5) {
    // 1/Gamma(z) = sin(pi z) Gamma(1-z) / pi
    return std::sin(kPi * z) * gamma_complex(1.0 - z) / kPi;
  }
  return 1.0 / gamma_complex(z);
}

cplx c_scatter(const SpectralPoint& sp) {
  const cplx nu = sp.zeta - 0.5 * sp.n;
  if (is_nonpositive_integer(-nu) || is_nonpositive_integer(nu))
    fail(ErrorCode::Pole, "c_scatter: Gamma pole at zeta=" + fmt(sp.zeta));
  return std::pow(2.0, -2.0 * nu) * gamma_ratio(-nu, nu);
}

cplx c_green_unsquared(const SpectralPoint& sp) {
  const cplx a = sp.zeta, b = sp.zeta - 0.5 * (sp.n - 2);
  if (is_nonpositive_integer(a) || is_nonpositive_integer(b))
    fail(ErrorCode::Pole, "c_green: Gamma pole at zeta=" + fmt(sp.zeta));
  return 0.5 * std::pow(kPi, -0.5 * sp.n) * gamma_ratio(a, b);
}

cplx c_green(const SpectralPoint& sp) {
  cplx c = c_green_unsquared(sp);
  return c * c;
}

cplx m_norm(const SpectralPoint& sp) {
  cplx d = 2.0 * sp.zeta - double(sp.n);
  if (std::abs(d) < 1e-14) fail(ErrorCode::Pole, "M(zeta) pole at zeta = n/2");
  return 1.0 / d;
}

cplx m_norm_quadrature(const SpectralPoint& sp) {
  const cplx e = 2.0 * sp.zeta - double(sp.n) - 1.0;  // sin exponent after r = cot t
  if (std::abs(e + 1.0) < 1e-14) fail(ErrorCode::Pole, "M(zeta) pole at zeta = n/2");
  if (e.real() + 1.0 <= 0.0)
    fail(ErrorCode::OutOfRegion, "M(zeta) defining integral diverges for Re zeta <= n/2");
  // int_0^inf r^(n-1) (1+r^2)^-zeta dr = int_0^{pi/2} cos^(n-1) t sin^e t dt, then t = (pi/2) u^q
  const double q = std::max(1.0, 4.0 / (e.real() + 1.0));
  const int n = sp.n;
  auto f = [&](double u) -> cplx {
    double t = 0.5 * kPi * std::pow(u, q);
    double jac = 0.5 * kPi * q * std::pow(u, q - 1.0);
    return std::pow(std::cos(t), n - 1) * std::exp(e * std::log(std::sin(t))) * jac;
  };
  QuadOptions o;
  o.rel_tol = 1e-13;
  QuadResult r = integrate(f, std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0}, o);
  if (!r.converged) fail(ErrorCode::Numerical, "M(zeta) quadrature did not converge");
  return sphere_area(n - 1) * r.value * c_green_unsquared(sp);
}

bool in_convergence_region(int k, const SpectralPoint& sp) {
  const double lhs = 2.0 * sp.zeta.real();
  const double rhs = std::max(sp.n - k + 1, k + 2);
  return lhs >= rhs - 1e-12;
}

bool t_converges(int l, int k, const SpectralPoint& sp) {
  const double z2 = 2.0 * sp.zeta.real();
  const int n = sp.n;
  const double eps = 1e-12;
  bool tail = z2 > k + 4 - 2 * l + eps;             // R -> infinity
  bool angular = n == 1 || z2 > n - k - 4 + 2 * l + eps;  // cos^p, p > -1
  bool sine = z2 > 2 * l - k - 3 + eps;              // sin^b near phi = 0, pi
  return tail && angular && sine;
}

cplx t_angular_factor(int l, int k, const SpectralPoint& sp) {
  const int n = sp.n;
  if (n == 1) return 1.0;
  const cplx p = 2.0 * sp.zeta + double(k + 3 - 2 * l - n);
  const double h = 0.5 * (n - 1);
  // |S^{n-2}| * (1/2) B((p+1)/2, (n-1)/2)
  return sphere_area(n - 2) * 0.5 * gamma_complex(0.5 * (p + 1.0)) * std::tgamma(h) *
         rgamma_complex(0.5 * (p + 1.0) + h);
}

TIntegralDetail t_integral_detail(int l, int k, const SpectralPoint& sp,
                                  const TIntegralOptions& opt) {
  if (l != 1 && l != 2) fail(ErrorCode::Precondition, "t_integral: l must be 1 or 2");
  if (k < 1) fail(ErrorCode::Precondition, "t_integral: k must be >= 1");
  if (!in_convergence_region(k, sp))
    fail(ErrorCode::OutOfRegion, "t_integral: 2 Re zeta < max(n-k+1, k+2) at zeta=" + fmt(sp.zeta));
  if (!t_converges(l, k, sp))
    fail(ErrorCode::OutOfRegion, "t_integral: T_" + std::to_string(l) +
                                     " diverges at the region edge, zeta=" + fmt(sp.zeta));

  const cplx zeta = sp.zeta;
  const double a = k + 3 - 2 * l;                 // R exponent
  const cplx b = 2.0 * zeta + double(k + 2 - 2 * l);  // sin(phi) exponent
  const double rmax = opt.r_max;

  QuadOptions inner_opt;
  inner_opt.rel_tol = opt.rel_tol * 0.1;
  inner_opt.max_intervals = 2000;
  long evals = 0;
  bool ok = true;

  auto sinpow = [&](double phi) { return std::exp(b * std::log(std::sin(phi))); };

  auto inner = [&](double R) -> cplx {
    const double d = std::abs(R - 1.0);
    std::vector<double> br{0.0};
    for (double p = d; p < kPi && d > 0.0; p *= 4.0) br.push_back(p);
    br.push_back(kPi);
    auto f = [&](double phi) -> cplx {
      double s = std::sin(0.5 * phi);
      double g = (R - 1.0) * (R - 1.0) + 4.0 * R * s * s;
      return sinpow(phi) * std::exp(-zeta * std::log(g));
    };
    QuadResult r = integrate(f, br, inner_opt);
    evals += r.evaluations;
    if (!r.converged && r.error > 1e3 * opt.rel_tol * std::abs(r.value)) ok = false;
    return std::pow(R, a) * r.value;
  };

  QuadOptions outer_opt;
  outer_opt.rel_tol = opt.rel_tol;
  outer_opt.max_intervals = 1000;
  std::vector<double> obr{0.0, 0.5, 0.9, 0.99, 1.0, 1.01, 1.1, 1.5, 2.0, 3.0, rmax};
  QuadResult core = integrate(inner, obr, outer_opt);
  evals += core.evaluations;

  // R > r_max: Gegenbauer expansion of (1 - 2 cos(phi)/R + 1/R^2)^-zeta
  const int M = opt.tail_terms;
  std::vector<cplx> w(M);
  for (int m = 0; m < M; ++m) {
    cplx ex = a + 1.0 - 2.0 * zeta - double(m);
    w[m] = std::exp(ex * std::log(rmax)) / (-ex);
  }
  auto tail_f = [&](double phi) -> cplx {
    const double x = std::cos(phi);
    cplx c0 = 1.0, c1 = 2.0 * zeta * x;
    cplx sum = w[0] * c0 + w[1] * c1;
    for (int m = 2; m < M; ++m) {
      cplx c2 = (2.0 * x * (double(m) + zeta - 1.0) * c1 - (double(m) + 2.0 * zeta - 2.0) * c0) /
                double(m);
      sum += w[m] * c2;
      c0 = c1;
      c1 = c2;
    }
    return sinpow(phi) * sum;
  };
  QuadResult tail = integrate(tail_f, std::vector<double>{0.0, 0.5 * kPi, kPi}, inner_opt);
  evals += tail.evaluations;

  if (!ok || !core.converged || !tail.converged)
    fail(ErrorCode::Numerical, "t_integral: quadrature did not converge at zeta=" + fmt(zeta));

  TIntegralDetail d;
  d.planar = core.value + tail.value;
  d.angular = t_angular_factor(l, k, sp);
  d.value = d.angular * d.planar;
  d.error = std::abs(d.angular) * (core.error + tail.error);
  d.evaluations = evals;
  return d;
}

cplx t_integral(int l, int k, const SpectralPoint& sp, const TIntegralOptions& opt) {
  return t_integral_detail(l, k, sp, opt).value;
}

cplx t1_edge_residue(int k, const SpectralPoint& sp) {
  // Divergent part of T_1 is K * int_0^pi sin^b * R^(k+1-2 zeta) at large R.
  const cplx b = 2.0 * sp.zeta + double(k);
  const cplx sb = std::sqrt(kPi) * gamma_complex(0.5 * (b + 1.0)) * rgamma_complex(0.5 * b + 1.0);
  return -t_angular_factor(1, k, sp) * sb;
}

cplx a1_prefactor(int k, const SpectralPoint& sp) {
  const int n = sp.n;
  const cplx z = sp.zeta;
  const cplx g = 0.5 * (double(k + 2 + n) - 2.0 * z);
  if (is_nonpositive_integer(g, 1e-13))
    fail(ErrorCode::Pole, "A1: Gamma pole in the numerator at zeta=" + fmt(z));
  const cplx e = double(k + 2 + n) - 2.0 * z;
  return -std::pow(kPi, 0.5 * n) * std::pow(2.0, e) * gamma_complex(g) *
         rgamma_complex(-0.5 * (double(k + 2) - 2.0 * z)) * c_green(sp) / m_norm(sp);
}

cplx a2_prefactor(int k, const SpectralPoint& sp) {
  const int n = sp.n;
  const cplx z = sp.zeta;
  const cplx g = 0.5 * (double(k + n) - 2.0 * z);
  if (is_nonpositive_integer(g, 1e-13))
    fail(ErrorCode::Pole, "A2: Gamma pole in the numerator at zeta=" + fmt(z));
  const cplx e = double(k + n) - 2.0 * z;
  return std::pow(kPi, 0.5 * n) * std::pow(2.0, e) * gamma_complex(g) *
         rgamma_complex(-0.5 * (double(k) - 2.0 * z)) * c_green(sp) / m_norm(sp);
}

cplx solvability_determinant_from_t(int k, const SpectralPoint& sp, cplx T1, cplx T2) {
  const int n = sp.n;
  const cplx z2 = 2.0 * sp.zeta;
  return T1 * (double(k + 2) - z2) * (double(k + n) - z2) - 0.25 * n * k * (n - k) * T2;
}

cplx solvability_determinant(int k, const SpectralPoint& sp) {
  const int n = sp.n;
  if (!in_convergence_region(k, sp))
    fail(ErrorCode::OutOfRegion, "solvability_determinant: outside the convergence region");
  const cplx T2 = t_integral(2, k, sp);
  const cplx z2 = 2.0 * sp.zeta;
  if (t_converges(1, k, sp)) return solvability_determinant_from_t(k, sp, t_integral(1, k, sp), T2);
  // 2 zeta = k + 2: (k+2-2 zeta) T_1 has a finite limit
  if (std::abs(z2 - double(k + 2)) < 1e-10)
    return (double(k + n) - z2) * t1_edge_residue(k, sp) - 0.25 * n * k * (n - k) * T2;
  fail(ErrorCode::OutOfRegion, "solvability_determinant: T_1 diverges");
}

PerturbationCoefficients a_coeffs_from_t(int k, const SpectralPoint& sp, cplx T1, cplx T2) {
  PerturbationCoefficients pc;
  pc.k = k;
  pc.T1 = T1;
  pc.T2 = T2;
  pc.A1 = a1_prefactor(k, sp) * T1;
  pc.A2 = a2_prefactor(k, sp) * T2;
  pc.D = solvability_determinant_from_t(k, sp, T1, T2);
  pc.valid_region = in_convergence_region(k, sp) && t_converges(1, k, sp) && t_converges(2, k, sp);
  return pc;
}

PerturbationCoefficients a_coeffs(int k, const SpectralPoint& sp) {
  // prefactors first so pole errors are reported before any quadrature
  a1_prefactor(k, sp);
  a2_prefactor(k, sp);
  const cplx T1 = t_integral(1, k, sp);
  const cplx T2 = t_integral(2, k, sp);
  return a_coeffs_from_t(k, sp, T1, T2);
}

}  // namespace ahs
