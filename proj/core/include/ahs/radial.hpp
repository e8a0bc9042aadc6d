#pragma once

#include <array>
#include <complex>
#include <string>
#include <vector>

#include "ahs/models.hpp"

namespace ahs {

struct SolveOptions {
  int frobenius_order = 12;
  double rtol = 1e-12;
  double start_rule = 25.0;     // lambda * x_start for the Bessel tail
  double match_scale = 0.75;    // target lambda * x_match
  double series_tol = 1e-12;    // bound on the first omitted Frobenius term
  double quality_tol = 1e-6;
};

struct ModeScatteringRecord {
  std::vector<int> mode;
  double eps = 0.0;
  double lambda = 0.0;
  cplx f_minus{0.0, 0.0};
  cplx f_plus{0.0, 0.0};
  cplx s{0.0, 0.0};
  double quality = 0.0;
  double x_match = 0.0;
  std::string flags;   // '|'-separated: zero_mode, pole, low_quality, error:<code>
  std::string error;

  bool ok() const { return error.empty(); }
  bool has_flag(const std::string& f) const;
};

struct FrobeniusBasis {
  std::array<cplx, 2> exponents;                 // (zeta, n - zeta)
  std::array<std::vector<cplx>, 2> series_coeffs;
  int truncation_order = 12;
  double validity_radius = 0.0;

  // a and theta a = x a' of basis function `which` (0: x^zeta, 1: x^(n-zeta))
  void eval(int which, double x, cplx& a, cplx& theta_a) const;
};

FrobeniusBasis frobenius_basis(const RadialProblem& rp, int order = 12, double tol = 1e-12);

// ODE residual of a truncated basis function, relative to its size.
double frobenius_residual(const RadialProblem& rp, const FrobeniusBasis& fb, int which, double x);

struct SolutionSample {
  double x = 0.0;
  cplx a{0.0, 0.0};
  cplx theta_a{0.0, 0.0};   // x a'
  double log_scale = 0.0;   // true solution = e^{log_scale} * (a, theta_a)

  cplx derivative() const { return theta_a / x; }
};

// Decaying (cylinder) or Dirichlet (black hole) seed at x_start.
SolutionSample farfield_init(const RadialProblem& rp, double x_start);
double default_x_start(const RadialProblem& rp, const SolveOptions& opt = {});

// Integrates in t = log x from init.x to each target (in order); returns one sample per target.
std::vector<SolutionSample> integrate_inward(const RadialProblem& rp, const SolutionSample& init,
                                             const std::vector<double>& targets,
                                             const SolveOptions& opt = {});
SolutionSample integrate_inward(const RadialProblem& rp, const SolutionSample& init, double x_match,
                                const SolveOptions& opt = {});

ModeScatteringRecord frobenius_match(const RadialProblem& rp, const SolutionSample& at_match,
                                     const FrobeniusBasis& basis,
                                     const SolutionSample* check = nullptr);

double choose_x_match(const RadialProblem& rp, const FrobeniusBasis& fb, const SolveOptions& opt);

ModeScatteringRecord solve_mode(const RadialProblem& rp, const SolveOptions& opt = {});

std::vector<ModeScatteringRecord> scatter_sweep(const ModelFamily& family,
                                                const std::vector<std::vector<int>>& modes,
                                                const SpectralPoint& sp,
                                                const SolveOptions& opt = {}, int threads = 1);

struct DerivativeResult {
  cplx value{0.0, 0.0};       // Richardson value when available, else central difference
  cplx central{0.0, 0.0};     // (s(h) - s(-h)) / 2h
  cplx central_half{0.0, 0.0};
  double richardson_gap = 0.0;   // |D(h) - D(h/2)| / |D|
  double curvature = 0.0;        // |s(h) - 2 s(0) + s(-h)|
  double noise = 0.0;            // solver noise floor on the derivative
  bool richardson = false;
};

// family eps: {-h, 0, h} or {-h, -h/2, 0, h/2, h}
DerivativeResult eps_derivative(const ModelFamily& family, const std::vector<int>& mode,
                                const SpectralPoint& sp, const SolveOptions& opt = {});
DerivativeResult eps_derivative(const std::vector<double>& eps,
                                const std::vector<ModeScatteringRecord>& records);

}  // namespace ahs
