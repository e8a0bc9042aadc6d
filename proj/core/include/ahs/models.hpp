#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ahs/specfun.hpp"

namespace ahs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Smooth monotone step: 1 on [0, x_a], 0 on [x_b, inf).
struct Cutoff {
  double x_a = 1.0;
  double x_b = 2.0;
  double value(double x) const;
  double derivative(double x) const;
  void validate() const;
};

struct BoundaryMetric {
  int n = 1;
  Matrix h0;
  bool round_sphere = false;

  static BoundaryMetric torus(const Matrix& h0);
  static BoundaryMetric identity(int n);
  static BoundaryMetric sphere();
  void validate() const;
};

struct PerturbationJet {
  int k = 1;
  Matrix L;
  double W = 0.0;
  Cutoff cutoff;
  void validate(int n) const;
};

enum class FarFieldKind { BesselDecay, Dirichlet };

struct FarField {
  FarFieldKind kind = FarFieldKind::BesselDecay;
  double lambda_inf = 0.0;  // frequency of the exact tail (BesselDecay)
  double x_exact = 0.0;     // tail is exactly Bessel for x >= x_exact
  double x_far = 0.0;       // Dirichlet end
};

// Euler form in t = log x: theta^2 a = P(x) theta a + Q(x) a, theta = x d/dx.
struct EulerCoeffs {
  cplx P;
  cplx Q;
};

struct RadialProblem {
  std::string kind;        // "cylinder" | "blackhole"
  std::vector<int> mode;   // torus j, or {l}
  int n = 1;
  cplx zeta;
  double lambda = 0.0;     // (lambda^2(0))^(1/2)
  std::function<double(double)> lambda2;
  std::function<EulerCoeffs(double)> euler;
  std::vector<cplx> taylor_P;  // Taylor data at x = 0
  std::vector<cplx> taylor_Q;
  double series_limit = 0.0;   // Taylor data valid on [0, series_limit)
  double x_max = 0.0;
  FarField farfield;
  double scale = 1.0;          // physical operator = scale * Euler operator

  bool zero_mode() const { return lambda == 0.0; }
  // p2 a'' + p1 a' + p0 a = 0
  std::array<cplx, 3> coeffs(double x) const;
  // roots of sigma^2 - P(0) sigma - Q(0)
  std::array<cplx, 2> indicial_roots() const;
};

constexpr int kTaylorOrder = 60;

double lambda2_of(const Matrix& h, const std::vector<int>& mode);

Matrix metric_at(const BoundaryMetric& bm, const std::vector<PerturbationJet>& jets, double eps,
                 double x);

RadialProblem cylinder_problem(const BoundaryMetric& bm, const std::vector<PerturbationJet>& jets,
                               double eps, const std::vector<int>& mode, const SpectralPoint& sp,
                               double x_max = 0.0);
RadialProblem cylinder_problem(const BoundaryMetric& bm, const std::optional<PerturbationJet>& pj,
                               double eps, const std::vector<int>& mode, const SpectralPoint& sp,
                               double x_max = 0.0);

cplx hyperbolic_exact_eigenvalue(const SpectralPoint& sp, double lambda);

struct CylinderModel {
  BoundaryMetric bm;
  std::vector<PerturbationJet> jets;
  double eps = 0.0;
};

struct ModelFamily {
  std::vector<CylinderModel> models;
  std::vector<double> eps;
  double spacing = 0.0;     // uniform stencil step, 0 if not uniform
  bool symmetric = false;   // eps list symmetric about 0
};

ModelFamily family_jet(const BoundaryMetric& bm, const std::vector<PerturbationJet>& jets,
                       const std::vector<double>& eps_list);

enum class BlackHoleKind { Schwarzschild, DeSitterSchwarzschild };

struct BlackHoleModel {
  BlackHoleKind kind = BlackHoleKind::Schwarzschild;
  double m = 1.0;
  double Lambda = 0.0;
  double r_plus = 2.0;
  double r_plus2 = 0.0;  // cosmological horizon, 0 when absent
  double r_crit = 0.0;   // maximum of F between the horizons, 0 when absent

  static BlackHoleModel schwarzschild(double m);
  static BlackHoleModel desitter_schwarzschild(double m, double Lambda);

  double F(double r) const;    // alpha^2
  double dF(double r) const;
  double d2F(double r) const;
  double r_of_alpha(double alpha) const;
  double kappa0() const;       // F'(r_+)^2 / 4
  double default_r_far() const;
};

struct BlackHoleOptions {
  double r_far = 0.0;   // 0: default_r_far()
};

// zeta-convention: the spectral parameter fixes the indicial roots (zeta, n - zeta).
RadialProblem blackhole_problem(const BlackHoleModel& bh, int l, const SpectralPoint& sp,
                                const std::vector<PerturbationJet>& jets, double eps,
                                const BlackHoleOptions& opt = {});
// Physical real frequency: zeta = 1 + i lambda / sqrt(kappa0).
SpectralPoint blackhole_physical_zeta(const BlackHoleModel& bh, double lambda);
RadialProblem blackhole_problem(const BlackHoleModel& bh, int l, double lambda,
                                const std::vector<PerturbationJet>& jets, double eps,
                                const BlackHoleOptions& opt = {});

// Frozen operator at alpha = 0 in the form
//   c_dilation2 (alpha D_alpha)^2 + c_dilation1 alpha d_alpha + c_angular alpha^2 Delta_p,
// D = -i d, Delta_p the positive Laplacian of the boundary metric kappa0 r_+^2 |d omega|^2.
struct NormalOperator {
  double kappa0;
  double c_dilation2;
  double c_dilation1;
  double c_angular;
};
NormalOperator frozen_normal_operator(const BlackHoleModel& bh, const SpectralPoint& sp);

}  // namespace ahs
