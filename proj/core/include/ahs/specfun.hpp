#pragma once

#include <complex>

#include "ahs/error.hpp"

namespace ahs {

using cplx = std::complex<double>;

// Spectral parameter zeta on an (n+1)-dimensional manifold.
struct SpectralPoint {
  cplx zeta;
  int n;
  bool relaxed = false;  // set only by integral_point(); skips the 2*zeta integrality check

  SpectralPoint(cplx zeta, int n);

  // Point for evaluating T_l and D where 2*zeta may be an integer.
  static SpectralPoint integral_point(cplx zeta, int n);

 private:
  SpectralPoint() = default;
};

bool is_nonpositive_integer(cplx z, double tol = 0.0);

cplx gamma_complex(cplx z);
cplx lgamma_complex(cplx z);
// 1/Gamma(z); entire, zero at the poles of Gamma.
cplx rgamma_complex(cplx z);

cplx c_scatter(const SpectralPoint& sp);
cplx c_green(const SpectralPoint& sp);
cplx c_green_unsquared(const SpectralPoint& sp);

cplx m_norm(const SpectralPoint& sp);             // 1/(2 zeta - n), validated closed form
cplx m_norm_quadrature(const SpectralPoint& sp);  // defining integral, Re zeta > n/2

struct TIntegralOptions {
  double rel_tol = 1e-10;
  double r_max = 4.0;
  int tail_terms = 90;
};

struct TIntegralDetail {
  cplx value;
  cplx angular;   // K(zeta)
  cplx planar;    // reduced (R, phi) integral
  double error;   // absolute error estimate of value
  long evaluations;
};

// Convergence region 2 Re zeta >= max(n-k+1, k+2).
bool in_convergence_region(int k, const SpectralPoint& sp);
// Absolute convergence of the specific T_l (strict inequalities).
bool t_converges(int l, int k, const SpectralPoint& sp);

cplx t_angular_factor(int l, int k, const SpectralPoint& sp);
TIntegralDetail t_integral_detail(int l, int k, const SpectralPoint& sp,
                                  const TIntegralOptions& opt = {});
cplx t_integral(int l, int k, const SpectralPoint& sp, const TIntegralOptions& opt = {});

// lim (k + 2 - 2 zeta) T_1 at the edge 2 zeta = k + 2.
cplx t1_edge_residue(int k, const SpectralPoint& sp);

struct PerturbationCoefficients {
  cplx A1{0.0, 0.0};
  cplx A2{0.0, 0.0};
  cplx T1{0.0, 0.0};
  cplx T2{0.0, 0.0};
  cplx D{0.0, 0.0};
  int k = 0;
  bool valid_region = false;
};

// Gamma prefactors P1, P2 with A_l = P_l * T_l.
cplx a1_prefactor(int k, const SpectralPoint& sp);
cplx a2_prefactor(int k, const SpectralPoint& sp);

PerturbationCoefficients a_coeffs(int k, const SpectralPoint& sp);
PerturbationCoefficients a_coeffs_from_t(int k, const SpectralPoint& sp, cplx T1, cplx T2);

cplx solvability_determinant(int k, const SpectralPoint& sp);
cplx solvability_determinant_from_t(int k, const SpectralPoint& sp, cplx T1, cplx T2);

}  // namespace ahs
