#include "ahs/radial.hpp"

#include <algorithm>
#include <atomic>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <limits>
#include <thread>

namespace ahs {

namespace {

namespace ode = boost::numeric::odeint;
using State = std::array<double, 4>;

void add_flag(std::string& flags, const std::string& f) {
  if (!flags.empty()) flags += "|";
  flags += f;
}

cplx xpow(double x, cplx e) { return std::exp(e * std::log(x)); }

}  // namespace

bool ModeScatteringRecord::has_flag(const std::string& f) const {
  size_t pos = 0;
  while (pos <= flags.size()) {
    size_t end = flags.find('|', pos);
    if (end == std::string::npos) end = flags.size();
    if (flags.compare(pos, end - pos, f) == 0) return true;
    pos = end + 1;
  }
  return false;
}

// ------------------------------------------------------------- Frobenius

FrobeniusBasis frobenius_basis(const RadialProblem& rp, int order, double tol) {
  const int avail = static_cast<int>(std::min(rp.taylor_P.size(), rp.taylor_Q.size())) - 1;
  if (order < 1 || order > avail)
    fail(ErrorCode::Precondition, "Frobenius order must lie in [1, " + std::to_string(avail) + "]");
  FrobeniusBasis fb;
  fb.truncation_order = order;
  const cplx P0 = rp.taylor_P[0], Q0 = rp.taylor_Q[0];
  auto roots = rp.indicial_roots();
  fb.exponents = roots;
  double radius = rp.series_limit;
  for (int w = 0; w < 2; ++w) {
    const cplx sigma = roots[w];
    std::vector<cplx> c(order + 1, 0.0);
    c[0] = 1.0;
    for (int m = 1; m <= order; ++m) {
      const cplx tau = sigma + double(m);
      const cplx den = tau * tau - P0 * tau - Q0;
      if (std::abs(den) < 1e-10 * (1.0 + std::abs(tau * tau)))
        fail(ErrorCode::Precondition, "Frobenius recurrence denominator vanishes (2 zeta near integer)");
      cplx s = 0.0;
      for (int i = 1; i <= m; ++i) s += (rp.taylor_P[i] * (tau - double(i)) + rp.taylor_Q[i]) * c[m - i];
      c[m] = s / den;
    }
    // the first omitted term is bounded by the trailing computed ones
    for (int m = std::max(1, order - 3); m <= order; ++m) {
      double a = std::abs(c[m]);
      if (a > 0.0) radius = std::min(radius, std::pow(tol / a, 1.0 / m));
    }
    fb.series_coeffs[w] = std::move(c);
  }
  fb.validity_radius = radius;
  return fb;
}

void FrobeniusBasis::eval(int which, double x, cplx& a, cplx& theta_a) const {
  const auto& c = series_coeffs[which];
  const cplx sigma = exponents[which];
  cplx s = 0.0, ts = 0.0;
  for (int m = static_cast<int>(c.size()) - 1; m >= 0; --m) {
    s = s * x + c[m];
    ts = ts * x + c[m] * (sigma + double(m));
  }
  cplx p = xpow(x, sigma);
  a = p * s;
  theta_a = p * ts;
}

double frobenius_residual(const RadialProblem& rp, const FrobeniusBasis& fb, int which, double x) {
  // theta^2 a - P theta a - Q a with theta^2 a from the series
  const auto& c = fb.series_coeffs[which];
  const cplx sigma = fb.exponents[which];
  cplx s = 0.0, ts = 0.0, tts = 0.0;
  for (int m = static_cast<int>(c.size()) - 1; m >= 0; --m) {
    cplx e = sigma + double(m);
    s = s * x + c[m];
    ts = ts * x + c[m] * e;
    tts = tts * x + c[m] * e * e;
  }
  EulerCoeffs e = rp.euler(x);
  cplx r = tts - e.P * ts - e.Q * s;
  return std::abs(r) / std::max({std::abs(s), std::abs(ts), std::abs(tts)});
}

// ------------------------------------------------------------- far field

double default_x_start(const RadialProblem& rp, const SolveOptions& opt) {
  if (rp.farfield.kind == FarFieldKind::Dirichlet) return rp.farfield.x_far;
  double xs = rp.farfield.x_exact;
  if (rp.farfield.lambda_inf > 0.0) xs = std::max(xs, opt.start_rule / rp.farfield.lambda_inf);
  else xs = std::max(2.0 * xs, 1.0);
  if (std::isfinite(rp.x_max) && xs > rp.x_max)
    fail(ErrorCode::Precondition, "x_start exceeds x_max: the asymptotic regime is not reached");
  return xs;
}

SolutionSample farfield_init(const RadialProblem& rp, double x_start) {
  SolutionSample s;
  s.x = x_start;
  if (rp.farfield.kind == FarFieldKind::Dirichlet) {
    if (std::abs(x_start - rp.farfield.x_far) > 1e-14 * rp.farfield.x_far)
      fail(ErrorCode::Precondition, "Dirichlet seed must sit at the far end");
    s.a = 0.0;
    s.theta_a = 1.0;
    return s;
  }
  if (x_start < rp.farfield.x_exact * (1.0 - 1e-14))
    fail(ErrorCode::Precondition, "x_start lies inside the perturbed region");
  const double lam = rp.farfield.lambda_inf;
  const cplx half_n = 0.5 * rp.n;
  if (lam == 0.0) {
    // pure indicial solution, the branch decaying as x grows
    cplx e = rp.zeta.real() > 0.5 * rp.n ? double(rp.n) - rp.zeta : rp.zeta;
    s.a = 1.0;
    s.theta_a = e;
    return s;
  }
  const double z = lam * x_start;
  const cplx nu = rp.zeta - half_n;
  const cplx mu = 4.0 * nu * nu;
  // K_nu(z) ~ sqrt(pi/2z) e^-z sum a_k z^-k
  cplx term = 1.0, S = 1.0, dS = 0.0;  // dS = z S'(z) = sum -k a_k z^-k
  double prev = std::numeric_limits<double>::infinity();
  bool converged = false;
  for (int k = 1; k < 200; ++k) {
    term *= (mu - double((2 * k - 1) * (2 * k - 1))) / (double(k) * 8.0 * z);
    double mag = std::abs(term);
    if (mag > prev) break;
    S += term;
    dS -= double(k) * term;
    prev = mag;
    if (mag < 1e-17 * std::abs(S)) {
      converged = true;
      break;
    }
  }
  if (!converged && prev > 1e-13)
    fail(ErrorCode::Precondition, "x_start too small: asymptotic K-Bessel error above tolerance");
  s.a = 1.0;
  s.theta_a = half_n - 0.5 - z + dS / S;
  return s;
}

// ------------------------------------------------------------- integration

std::vector<SolutionSample> integrate_inward(const RadialProblem& rp, const SolutionSample& init,
                                             const std::vector<double>& targets,
                                             const SolveOptions& opt) {
  auto rhs = [&rp](const State& y, State& dy, double t) {
    const double x = std::exp(t);
    EulerCoeffs e = rp.euler(x);
    const cplx a(y[0], y[1]), ta(y[2], y[3]);
    const cplx dta = e.P * ta + e.Q * a;
    dy[0] = ta.real();
    dy[1] = ta.imag();
    dy[2] = dta.real();
    dy[3] = dta.imag();
  };
  State y{init.a.real(), init.a.imag(), init.theta_a.real(), init.theta_a.imag()};
  double log_scale = init.log_scale;
  auto renorm = [&]() {
    double m = 0.0;
    for (double v : y) m = std::max(m, std::abs(v));
    if (!(m > 0.0) || !std::isfinite(m)) fail(ErrorCode::Numerical, "solution vanished or overflowed");
    for (double& v : y) v /= m;
    log_scale += std::log(m);
  };
  renorm();
  auto stepper = ode::make_controlled<ode::runge_kutta_fehlberg78<State>>(1e-3 * opt.rtol, opt.rtol);
  double t = std::log(init.x);
  std::vector<SolutionSample> out;
  for (double xt : targets) {
    if (!(xt > 0.0)) fail(ErrorCode::Precondition, "integration target must be positive");
    const double t_end = std::log(xt);
    const double dir = t_end < t ? -1.0 : 1.0;
    while (std::abs(t_end - t) > 0.0) {
      double t_next = std::abs(t_end - t) > 0.5 ? t + dir * 0.5 : t_end;
      double dt = dir * std::min(0.05, std::abs(t_next - t));
      size_t steps = ode::integrate_adaptive(stepper, rhs, y, t, t_next, dt);
      if (steps > 2000000) fail(ErrorCode::Numerical, "step-size underflow in radial integration");
      t = t_next;
      renorm();
    }
    SolutionSample s;
    s.x = xt;
    s.a = cplx(y[0], y[1]);
    s.theta_a = cplx(y[2], y[3]);
    s.log_scale = log_scale;
    out.push_back(s);
  }
  return out;
}

SolutionSample integrate_inward(const RadialProblem& rp, const SolutionSample& init, double x_match,
                                const SolveOptions& opt) {
  return integrate_inward(rp, init, std::vector<double>{x_match}, opt).front();
}

// ------------------------------------------------------------- matching

ModeScatteringRecord frobenius_match(const RadialProblem& rp, const SolutionSample& at,
                                     const FrobeniusBasis& fb, const SolutionSample* check) {
  ModeScatteringRecord rec;
  rec.mode = rp.mode;
  rec.lambda = rp.lambda;
  rec.x_match = at.x;
  if (at.x > fb.validity_radius * (1.0 + 1e-12))
    fail(ErrorCode::Precondition, "x_match beyond the Frobenius validity radius");
  cplx ap, tap, am, tam;
  fb.eval(0, at.x, ap, tap);
  fb.eval(1, at.x, am, tam);
  const cplx det = ap * tam - am * tap;
  const double scale = std::abs(ap * tam) + std::abs(am * tap);
  if (std::abs(det) < 1e-10 * scale)
    fail(ErrorCode::Numerical, "ill-conditioned Frobenius matching (near-degenerate exponents)");
  rec.f_plus = (at.a * tam - am * at.theta_a) / det;
  rec.f_minus = (ap * at.theta_a - at.a * tap) / det;
  if (std::abs(rec.f_minus * am) <= 1e-12 * std::abs(at.a) + std::abs(at.theta_a) * 1e-300) {
    add_flag(rec.flags, "pole");
    rec.s = cplx(std::numeric_limits<double>::infinity(), 0.0);
  } else {
    rec.s = rec.f_plus / rec.f_minus;
  }
  if (check) {
    cplx bp, tbp, bm, tbm;
    fb.eval(0, check->x, bp, tbp);
    fb.eval(1, check->x, bm, tbm);
    // bring the check sample onto the normalization of `at`
    const double rel = std::exp(check->log_scale - at.log_scale);
    const cplx a_num = check->a * rel;
    const cplx a_fit = rec.f_plus * bp + rec.f_minus * bm;
    rec.quality = std::abs(a_num - a_fit) / std::abs(a_num);
  }
  return rec;
}

double choose_x_match(const RadialProblem& rp, const FrobeniusBasis& fb, const SolveOptions& opt) {
  double x = fb.validity_radius;
  if (rp.lambda > 0.0) x = std::min(x, opt.match_scale / rp.lambda);
  x = std::min(x, 0.5 * rp.series_limit);
  if (std::isfinite(rp.x_max)) x = std::min(x, 0.5 * rp.x_max);
  return x;
}

ModeScatteringRecord solve_mode(const RadialProblem& rp, const SolveOptions& opt) {
  FrobeniusBasis fb = frobenius_basis(rp, opt.frobenius_order, opt.series_tol);
  const double xm = choose_x_match(rp, fb, opt);
  if (!(xm > 0.0)) fail(ErrorCode::Numerical, "no admissible matching point");
  const double xs = default_x_start(rp, opt);
  if (xs <= xm) fail(ErrorCode::Numerical, "matching point lies beyond the far-field start");
  SolutionSample init = farfield_init(rp, xs);
  auto samples = integrate_inward(rp, init, {xm, 0.5 * xm}, opt);
  ModeScatteringRecord rec = frobenius_match(rp, samples[0], fb, &samples[1]);
  if (rp.zero_mode()) add_flag(rec.flags, "zero_mode");
  if (rec.quality > opt.quality_tol) add_flag(rec.flags, "low_quality");
  return rec;
}

std::vector<ModeScatteringRecord> scatter_sweep(const ModelFamily& family,
                                                const std::vector<std::vector<int>>& modes,
                                                const SpectralPoint& sp, const SolveOptions& opt,
                                                int threads) {
  const size_t nm = modes.size(), total = family.models.size() * nm;
  std::vector<ModeScatteringRecord> out(total);
  auto work = [&](size_t idx) {
    const auto& model = family.models[idx / std::max<size_t>(nm, 1)];
    const auto& mode = modes[idx % nm];
    ModeScatteringRecord rec;
    try {
      RadialProblem rp = cylinder_problem(model.bm, model.jets, model.eps, mode, sp);
      rec = solve_mode(rp, opt);
    } catch (const Error& e) {
      rec.mode = mode;
      rec.error = std::string(to_string(e.code())) + ": " + e.what();
      add_flag(rec.flags, std::string("error:") + to_string(e.code()));
    }
    rec.eps = model.eps;
    out[idx] = std::move(rec);
  };
  threads = std::max(1, threads);
  if (threads == 1 || total < 2) {
    for (size_t i = 0; i < total; ++i) work(i);
    return out;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (size_t i = next++; i < total; i = next++) work(i);
    });
  for (auto& th : pool) th.join();
  return out;
}

DerivativeResult eps_derivative(const std::vector<double>& eps,
                                const std::vector<ModeScatteringRecord>& recs) {
  if (eps.size() != recs.size()) fail(ErrorCode::Precondition, "eps/record size mismatch");
  for (const auto& r : recs)
    if (!r.ok() || r.has_flag("pole")) fail(ErrorCode::Numerical, "stencil record failed: " + r.error);
  DerivativeResult d;
  double noise_s = 0.0;
  for (const auto& r : recs) noise_s = std::max(noise_s, r.quality * std::abs(r.s));
  if (eps.size() == 3) {
    const double h = eps[2];
    if (!(h > 0.0 && eps[0] == -h && eps[1] == 0.0))
      fail(ErrorCode::Precondition, "eps stencil must be {-h, 0, h}");
    d.central = (recs[2].s - recs[0].s) / (2.0 * h);
    d.curvature = std::abs(recs[2].s - 2.0 * recs[1].s + recs[0].s);
    d.noise = noise_s / h;
    d.value = d.central;
  } else if (eps.size() == 5) {
    const double h = eps[4];
    if (!(h > 0.0 && eps[0] == -h && eps[1] == -0.5 * h && eps[2] == 0.0 && eps[3] == 0.5 * h))
      fail(ErrorCode::Precondition, "eps stencil must be {-h, -h/2, 0, h/2, h}");
    d.central = (recs[4].s - recs[0].s) / (2.0 * h);
    d.central_half = (recs[3].s - recs[1].s) / h;
    d.value = (4.0 * d.central_half - d.central) / 3.0;
    d.richardson = true;
    d.richardson_gap = std::abs(d.central - d.central_half) / std::max(std::abs(d.value), 1e-300);
    d.curvature = std::abs(recs[4].s - 2.0 * recs[2].s + recs[0].s);
    d.noise = 2.0 * noise_s / h;
  } else {
    fail(ErrorCode::Precondition, "eps stencil must have 3 or 5 points");
  }
  if (d.noise > 1e-2 * std::abs(d.value) && std::abs(d.value) > 0.0 && d.noise > d.curvature)
    fail(ErrorCode::Numerical, "derivative unstable: solver noise exceeds the signal");
  return d;
}

DerivativeResult eps_derivative(const ModelFamily& family, const std::vector<int>& mode,
                                const SpectralPoint& sp, const SolveOptions& opt) {
  auto recs = scatter_sweep(family, {mode}, sp, opt, 1);
  return eps_derivative(family.eps, recs);
}

}  // namespace ahs
