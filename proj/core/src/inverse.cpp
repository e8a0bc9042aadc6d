#include "ahs/inverse.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <map>
#include <numeric>

#include "ahs/symbolcalc.hpp"

namespace ahs {

namespace {

using MatrixC = Eigen::MatrixXcd;
using VectorC = Eigen::VectorXcd;

struct Weighted {
  std::vector<double> lam, w;
  std::vector<cplx> ds;
};

Weighted prepare(const std::vector<DifferenceSample>& samples, const FitOptions& opt,
                 std::vector<std::vector<int>>& used) {
  Weighted d;
  double maxabs = 0.0;
  for (const auto& s : samples) maxabs = std::max(maxabs, std::abs(s.ds));
  if (!(maxabs > 0.0)) fail(ErrorCode::NoSignal, "no signal: all differences vanish");
  for (const auto& s : samples) {
    if (!(s.lambda > 0.0)) continue;  // the lambda = 0 mode never enters a power law
    if (!std::isfinite(s.ds.real()) || !std::isfinite(s.ds.imag()) || std::abs(s.ds) == 0.0) continue;
    d.lam.push_back(s.lambda);
    d.ds.push_back(s.ds);
    d.w.push_back(1.0 / (s.quality + 1.0 / s.lambda));
    used.push_back(s.mode);
  }
  if (static_cast<int>(d.lam.size()) < opt.min_modes)
    fail(ErrorCode::Precondition, "insufficient dynamic range: too few modes for a power-law fit");
  auto [lo, hi] = std::minmax_element(d.lam.begin(), d.lam.end());
  if (*hi / *lo < opt.min_ratio)
    fail(ErrorCode::Precondition, "insufficient dynamic range: frequency ratio below threshold");
  return d;
}

// weighted relative least squares of ds = lam^p sum_i c_i lam^-i
double solve_at(const Weighted& d, double p, int terms, VectorC& coef) {
  const int m = static_cast<int>(d.lam.size());
  MatrixC A(m, terms + 1);
  VectorC b(m);
  for (int j = 0; j < m; ++j) {
    double row = std::sqrt(d.w[j]) / std::abs(d.ds[j]);
    double base = std::pow(d.lam[j], p);
    for (int i = 0; i <= terms; ++i) A(j, i) = row * base * std::pow(d.lam[j], -i);
    b[j] = row * d.ds[j];
  }
  coef = A.completeOrthogonalDecomposition().solve(b);
  return (A * coef - b).squaredNorm();
}

double log_rms(const Weighted& d, double p, const VectorC& coef) {
  double acc = 0.0;
  for (size_t j = 0; j < d.lam.size(); ++j) {
    cplx model = 0.0;
    for (int i = 0; i < coef.size(); ++i) model += coef[i] * std::pow(d.lam[j], -i);
    model *= std::pow(d.lam[j], p);
    acc += std::norm(std::log(model / d.ds[j]));
  }
  return std::sqrt(acc / d.lam.size());
}

std::vector<int> primitive(const std::vector<int>& j) {
  int g = 0;
  for (int v : j) g = std::gcd(g, std::abs(v));
  std::vector<int> r(j);
  if (g == 0) return r;
  for (int& v : r) v /= g;
  for (int v : r) {
    if (v == 0) continue;
    if (v < 0)
      for (int& u : r) u = -u;
    break;
  }
  return r;
}

}  // namespace

const char* to_string(JetAssumption a) {
  switch (a) {
    case JetAssumption::L_zero: return "L_zero";
    case JetAssumption::W_zero: return "W_zero";
    case JetAssumption::joint: return "joint";
  }
  return "?";
}

FitResult fit_power_law(const std::vector<DifferenceSample>& samples, const FitOptions& opt) {
  FitResult fr;
  Weighted d = prepare(samples, opt, fr.modes_used);
  const int m = static_cast<int>(d.lam.size());
  // plain weighted log-log regression as the bracket centre
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int j = 0; j < m; ++j) {
    double x = std::log(d.lam[j]), y = std::log(std::abs(d.ds[j]));
    sw += d.w[j];
    sx += d.w[j] * x;
    sy += d.w[j] * y;
    sxx += d.w[j] * x * x;
    sxy += d.w[j] * x * y;
  }
  const double p0 = (sw * sxy - sx * sy) / (sw * sxx - sx * sx);
  const int terms = std::max(0, opt.correction_terms);
  VectorC coef;
  auto obj = [&](double p) { return solve_at(d, p, terms, coef); };
  auto best = boost::math::tools::brent_find_minima(obj, p0 - 2.0, p0 + 2.0, 50);
  fr.slope = best.first;
  solve_at(d, fr.slope, terms, coef);
  fr.coefficient = coef[0];
  for (int i = 1; i < coef.size(); ++i) fr.corrections.push_back(coef[i]);
  fr.residual = log_rms(d, fr.slope, coef);
  fr.reliable = fr.residual <= opt.unreliable_residual;
  if (opt.expected_order) {
    VectorC c2;
    solve_at(d, *opt.expected_order, terms, c2);
    fr.has_constrained = true;
    fr.constrained_coefficient = c2[0];
    for (int i = 1; i < c2.size(); ++i) fr.constrained_corrections.push_back(c2[i]);
    fr.constrained_residual = log_rms(d, *opt.expected_order, c2);
  }
  return fr;
}

OrderDetection detect_order_from_slope(double slope, const SpectralPoint& sp) {
  OrderDetection od;
  od.slope = slope;
  const double kr = 2.0 * sp.zeta.real() - sp.n - slope;
  od.k = static_cast<int>(std::lround(kr));
  od.gap = std::abs(kr - od.k);
  if (od.gap > 0.25)
    fail(ErrorCode::Numerical, "ambiguous order: integrality gap " + std::to_string(od.gap));
  return od;
}

OrderDetection detect_order(const std::vector<DifferenceSample>& samples, const SpectralPoint& sp,
                            const FitOptions& opt) {
  FitOptions o = opt;
  o.expected_order.reset();
  return detect_order_from_slope(fit_power_law(samples, o).slope, sp);
}

RecoveredJet recover_jet(const std::vector<DirectionalAmplitude>& amps, int k,
                         const SpectralPoint& sp, const Matrix& h0, JetAssumption assumption,
                         const std::optional<PerturbationCoefficients>& coeffs) {
  const int n = sp.n;
  if (h0.rows() != n || h0.cols() != n) fail(ErrorCode::Precondition, "h0 must be n x n");
  const PerturbationCoefficients pc = coeffs ? *coeffs : a_coeffs(k, sp);
  RecoveredJet rj;
  rj.k = k;
  rj.assumption = assumption;
  rj.determinant = pc.D;

  // distinct unit directions up to sign
  std::vector<Vector> dirs;
  std::vector<cplx> vals;
  for (const auto& a : amps) {
    if (a.xi.size() != n || a.xi.squaredNorm() == 0.0)
      fail(ErrorCode::Precondition, "directional amplitude with a bad covector");
    Vector u = a.xi / std::sqrt(covector_length2(h0, a.xi));
    dirs.push_back(u);
    vals.push_back(a.amplitude);
  }
  int distinct = 0;
  for (size_t i = 0; i < dirs.size(); ++i) {
    bool dup = false;
    for (size_t j = 0; j < i; ++j)
      dup = dup || (dirs[i] - dirs[j]).norm() < 1e-12 || (dirs[i] + dirs[j]).norm() < 1e-12;
    distinct += dup ? 0 : 1;
  }

  const int p = n * (n + 1) / 2;
  std::vector<std::pair<int, int>> idx;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) idx.push_back({i, j});
  const double kappa = 0.25 * k * (n - k);

  int need = 1;
  if (assumption == JetAssumption::W_zero) need = p;
  if (assumption == JetAssumption::joint) need = p + 1;
  if (distinct < need)
    fail(ErrorCode::Precondition, "recover_jet needs at least " + std::to_string(need) +
                                      " distinct directions, got " + std::to_string(distinct));

  if (assumption != JetAssumption::L_zero) {
    const cplx z2 = 2.0 * sp.zeta;
    const double dscale = std::abs(pc.T1 * (double(k + 2) - z2) * (double(k + n) - z2)) +
                          std::abs(0.25 * n * k * (n - k) * pc.T2);
    if (pc.D == cplx(0.0) || std::abs(pc.D) <= 1e-12 * dscale)
      fail(ErrorCode::Gate, "solvability gate: D(k, zeta) vanishes, the jet is not recoverable");
  }
  if (assumption == JetAssumption::L_zero && pc.A2 == cplx(0.0))
    fail(ErrorCode::Gate, "A2 vanishes: the potential jet is not observable");

  // complex columns for real unknowns
  std::vector<std::vector<cplx>> cols;
  const int m = static_cast<int>(dirs.size());
  auto quad = [&](const Vector& u, int c) {
    auto [i, j] = idx[c];
    return (i == j ? 1.0 : 2.0) * u[i] * u[j];
  };
  auto trace_w = [&](int c) {
    auto [i, j] = idx[c];
    return i == j ? h0(i, i) : h0(i, j) + h0(j, i);
  };
  if (assumption != JetAssumption::L_zero) {
    for (int c = 0; c < p; ++c) {
      std::vector<cplx> col(m);
      for (int r = 0; r < m; ++r) {
        col[r] = pc.A1 * quad(dirs[r], c);
        if (assumption == JetAssumption::W_zero) col[r] -= kappa * pc.A2 * trace_w(c);
      }
      cols.push_back(col);
    }
  }
  if (assumption != JetAssumption::W_zero) {
    cols.push_back(std::vector<cplx>(m, pc.A2));
    cols.push_back(std::vector<cplx>(m, cplx(0.0, 1.0) * pc.A2));
  }
  const int q = static_cast<int>(cols.size());
  const bool constrain = assumption == JetAssumption::joint;
  Matrix A = Matrix::Zero(2 * m + (constrain ? 1 : 0), q);
  Vector b = Vector::Zero(A.rows());
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < q; ++c) {
      A(2 * r, c) = cols[c][r].real();
      A(2 * r + 1, c) = cols[c][r].imag();
    }
    b[2 * r] = vals[r].real();
    b[2 * r + 1] = vals[r].imag();
  }
  double colscale = A.cwiseAbs().maxCoeff();
  if (constrain) {
    // trace part of H is indistinguishable from the scalar: pin tr(h0 H) = 0
    for (int c = 0; c < p; ++c) A(2 * m, c) = colscale * trace_w(c);
  }
  Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  rj.conditioning = sv.size() ? sv[sv.size() - 1] : 0.0;
  if (!(sv.size() == q) || rj.conditioning <= 1e-10 * sv[0])
    fail(ErrorCode::Numerical, "rank-deficient design matrix in recover_jet");
  Vector x = svd.solve(b);
  const double bn = b.norm();
  rj.consistency_residual = bn > 0.0 ? (A * x - b).norm() / bn : 0.0;

  rj.H_hat = Matrix::Zero(n, n);
  if (assumption != JetAssumption::L_zero)
    for (int c = 0; c < p; ++c) {
      auto [i, j] = idx[c];
      rj.H_hat(i, j) = rj.H_hat(j, i) = x[c];
    }
  rj.L_hat = h0 * rj.H_hat * h0;
  rj.T_hat = (h0 * rj.H_hat).trace();
  switch (assumption) {
    case JetAssumption::W_zero:
      rj.scalar_hat = -kappa * rj.T_hat;
      rj.W_hat = cplx(0.0);
      break;
    case JetAssumption::L_zero:
      rj.scalar_hat = cplx(x[q - 2], x[q - 1]);
      rj.W_hat = rj.scalar_hat;
      break;
    case JetAssumption::joint:
      rj.scalar_hat = cplx(x[q - 2], x[q - 1]);
      break;
  }
  return rj;
}

// ------------------------------------------------------------ layer stripping

std::vector<std::pair<Vector, std::vector<DifferenceSample>>> group_by_direction(
    const std::vector<DifferenceSample>& samples) {
  std::map<std::vector<int>, std::vector<DifferenceSample>> groups;
  std::vector<std::vector<int>> order;
  for (const auto& s : samples) {
    auto key = primitive(s.mode);
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(s);
  }
  std::vector<std::pair<Vector, std::vector<DifferenceSample>>> out;
  for (const auto& key : order) {
    Vector v(key.size());
    for (size_t i = 0; i < key.size(); ++i) v[i] = key[i];
    out.push_back({v, groups[key]});
  }
  return out;
}

std::vector<DifferenceSample> mode_differences(const Matrix& h0,
                                               const std::vector<ModeScatteringRecord>& data,
                                               const std::vector<ModeScatteringRecord>& reference) {
  if (data.size() != reference.size()) fail(ErrorCode::Precondition, "data/reference size mismatch");
  std::vector<DifferenceSample> out;
  for (size_t i = 0; i < data.size(); ++i) {
    if (data[i].mode != reference[i].mode) fail(ErrorCode::Precondition, "data/reference modes differ");
    if (!data[i].ok() || !reference[i].ok())
      fail(ErrorCode::Numerical, "forward solve failed: " + data[i].error + reference[i].error);
    DifferenceSample d;
    d.mode = data[i].mode;
    Vector j(d.mode.size());
    for (size_t q = 0; q < d.mode.size(); ++q) j[q] = d.mode[q];
    d.lambda = std::sqrt(covector_length2(h0, j));
    d.ds = data[i].s - reference[i].s;
    d.quality = std::max(data[i].quality, reference[i].quality);
    out.push_back(d);
  }
  return out;
}

ForwardModel cylinder_forward_model(const BoundaryMetric& bm, const Cutoff& cutoff,
                                    const std::vector<std::vector<int>>& modes,
                                    const SpectralPoint& sp,
                                    const std::vector<PerturbationJet>& truth,
                                    const SolveOptions& opt, int threads) {
  ForwardModel fm;
  fm.bm = bm;
  fm.cutoff = cutoff;
  fm.modes = modes;
  fm.simulate = [bm, modes, sp, opt, threads](const std::vector<PerturbationJet>& jets) {
    ModelFamily fam;
    fam.models.push_back({bm, jets, jets.empty() ? 0.0 : 1.0});
    fam.eps = {fam.models[0].eps};
    return scatter_sweep(fam, modes, sp, opt, threads);
  };
  fm.data = fm.simulate(truth);
  return fm;
}

LayerStripResult layer_strip(const ForwardModel& fm, int K_max, const SpectralPoint& sp,
                             const LayerStripOptions& opt) {
  LayerStripResult res;
  std::vector<PerturbationJet> ref;
  double data_scale = 0.0;
  for (const auto& r : fm.data) data_scale = std::max(data_scale, std::abs(r.s));
  int last_k = -1;
  for (int round = 1; round <= K_max; ++round) {
    auto diffs = mode_differences(fm.bm.h0, fm.data, fm.simulate(ref));
    double mx = 0.0;
    for (const auto& d : diffs) mx = std::max(mx, std::abs(d.ds));
    if (mx <= opt.noise_floor * data_scale) {
      res.termination = "no_signal";
      res.final_max_difference = mx;
      return res;
    }
    StripRound sr;
    sr.round = round;
    sr.max_difference = mx;
    FitOptions free = opt.fit;
    free.expected_order.reset();
    std::vector<double> slopes;
    auto groups = group_by_direction(diffs);
    for (auto& [dir, samples] : groups) {
      if (static_cast<int>(samples.size()) < opt.fit.min_modes) continue;
      DirectionFit df;
      df.direction = dir;
      df.fit = fit_power_law(samples, free);
      slopes.push_back(df.fit.slope);
      sr.fits.push_back(df);
    }
    if (slopes.empty()) fail(ErrorCode::Precondition, "no direction has enough modes to fit");
    std::sort(slopes.begin(), slopes.end());
    double med = slopes.size() % 2 ? slopes[slopes.size() / 2]
                                   : 0.5 * (slopes[slopes.size() / 2 - 1] + slopes[slopes.size() / 2]);
    sr.order = detect_order_from_slope(med, sp);
    if (sr.order.k <= last_k)
      fail(ErrorCode::Numerical, "order stagnation: residual order did not increase (k=" +
                                     std::to_string(sr.order.k) + ")");
    if (sr.order.k < 1) fail(ErrorCode::Numerical, "detected order below 1");
    last_k = sr.order.k;
    const double expected = order_bookkeeping(sr.order.k, sp);
    FitOptions constrained = opt.fit;
    constrained.expected_order = expected;
    std::vector<DirectionalAmplitude> amps;
    for (auto& df : sr.fits) {
      for (auto& [dir, samples] : groups)
        if (dir == df.direction) df.fit = fit_power_law(samples, constrained);
      amps.push_back({df.direction, df.fit.constrained_coefficient / opt.orientation});
    }
    sr.jet = recover_jet(amps, sr.order.k, sp, fm.bm.h0, opt.assumption);
    PerturbationJet pj;
    pj.k = sr.order.k;
    pj.L = sr.jet.L_hat;
    pj.W = sr.jet.W_hat ? sr.jet.W_hat->real() : 0.0;
    pj.cutoff = fm.cutoff;
    ref.push_back(pj);
    res.rounds.push_back(sr);
  }
  auto diffs = mode_differences(fm.bm.h0, fm.data, fm.simulate(ref));
  for (const auto& d : diffs) res.final_max_difference = std::max(res.final_max_difference, std::abs(d.ds));
  res.termination = "k_max";
  return res;
}

}  // namespace ahs
