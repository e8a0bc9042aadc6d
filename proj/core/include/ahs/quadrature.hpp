#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <queue>
#include <vector>

namespace ahs {

using cplx = std::complex<double>;

struct QuadOptions {
  double abs_tol = 0.0;
  double rel_tol = 1e-10;
  int max_intervals = 4000;
};

struct QuadResult {
  cplx value{0.0, 0.0};
  double error = 0.0;
  long evaluations = 0;
  bool converged = false;
};

namespace detail {

// G7/K15 pair, nonnegative half; Gauss nodes sit at even Kronrod indices.
struct GK15 {
  static const std::array<double, 8>& xk();
  static const std::array<double, 8>& wk();
  static const std::array<double, 4>& wg();
};

struct Panel {
  double a, b;
  cplx value;
  double error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel gk15(F& f, double a, double b) {
  const auto& xk = GK15::xk();
  const auto& wk = GK15::wk();
  const auto& wg = GK15::wg();
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  cplx f0 = f(c);
  cplx rk = f0 * wk[0];
  cplx rg = f0 * wg[0];
  for (int i = 1; i < 8; ++i) {
    cplx s = f(c - h * xk[i]) + f(c + h * xk[i]);
    rk += wk[i] * s;
    if (i % 2 == 0) rg += wg[i / 2] * s;
  }
  rk *= h;
  rg *= h;
  return {a, b, rk, std::abs(rk - rg)};
}

}  // namespace detail

// Globally adaptive complex Gauss-Kronrod over [breaks[0], breaks.back()].
template <class F>
QuadResult integrate(F&& f, const std::vector<double>& breaks, const QuadOptions& opt = {}) {
  std::priority_queue<detail::Panel> heap;
  QuadResult r;
  for (size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (!(breaks[i + 1] > breaks[i])) continue;
    heap.push(detail::gk15(f, breaks[i], breaks[i + 1]));
    r.evaluations += 15;
  }
  auto totals = [&](cplx& v, double& e) {
    auto copy = heap;
    v = 0.0;
    e = 0.0;
    while (!copy.empty()) {
      v += copy.top().value;
      e += copy.top().error;
      copy.pop();
    }
  };
  cplx v;
  double e;
  totals(v, e);
  int panels = static_cast<int>(heap.size());
  while (!heap.empty()) {
    double tol = std::max(opt.abs_tol, opt.rel_tol * std::abs(v));
    if (e <= tol) {
      r.converged = true;
      break;
    }
    if (panels >= opt.max_intervals) break;
    detail::Panel p = heap.top();
    heap.pop();
    double m = 0.5 * (p.a + p.b);
    if (!(m > p.a && m < p.b)) {
      // cannot split further; accept the panel as is
      heap.push({p.a, p.b, p.value, 0.0});
      e -= p.error;
      continue;
    }
    detail::Panel l = detail::gk15(f, p.a, m), q = detail::gk15(f, m, p.b);
    r.evaluations += 30;
    v += l.value + q.value - p.value;
    e += l.error + q.error - p.error;
    heap.push(l);
    heap.push(q);
    ++panels;
    if (panels % 64 == 0) totals(v, e);  // curb drift of the running sums
  }
  totals(v, e);
  if (!r.converged) r.converged = e <= std::max(opt.abs_tol, opt.rel_tol * std::abs(v));
  r.value = v;
  r.error = e;
  return r;
}

template <class F>
QuadResult integrate(F&& f, double a, double b, const QuadOptions& opt = {}) {
  return integrate(std::forward<F>(f), std::vector<double>{a, b}, opt);
}

}  // namespace ahs
