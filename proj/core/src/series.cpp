#include "ahs/series.hpp"

#include <algorithm>
#include <stdexcept>

#include "ahs/error.hpp"

namespace ahs {

Series::Series(int order, std::vector<cplx> coeffs) : c_(std::move(coeffs)) {
  c_.resize(order + 1, cplx(0.0));
}

Series Series::constant(int order, cplx v) {
  Series s(order);
  s.c_[0] = v;
  return s;
}

Series Series::monomial(int order, int power, cplx v) {
  Series s(order);
  if (power <= order) s.c_[power] = v;
  return s;
}

Series Series::operator+(const Series& o) const {
  Series r(std::min(order(), o.order()));
  for (int i = 0; i <= r.order(); ++i) r.c_[i] = c_[i] + o.c_[i];
  return r;
}

Series Series::operator-(const Series& o) const { return *this + (-o); }

Series Series::operator-() const {
  Series r(*this);
  for (auto& v : r.c_) v = -v;
  return r;
}

Series& Series::operator+=(const Series& o) {
  *this = *this + o;
  return *this;
}

Series Series::operator*(const Series& o) const {
  Series r(std::min(order(), o.order()));
  const int N = r.order();
  for (int i = 0; i <= N; ++i) {
    if (c_[i] == cplx(0.0)) continue;
    for (int j = 0; i + j <= N; ++j) r.c_[i + j] += c_[i] * o.c_[j];
  }
  return r;
}

Series Series::operator*(cplx s) const {
  Series r(*this);
  for (auto& v : r.c_) v *= s;
  return r;
}

Series Series::reciprocal() const {
  if (c_[0] == cplx(0.0)) fail(ErrorCode::Numerical, "series reciprocal: zero constant term");
  const int N = order();
  Series r(N);
  r.c_[0] = 1.0 / c_[0];
  for (int m = 1; m <= N; ++m) {
    cplx s = 0.0;
    for (int i = 1; i <= m; ++i) s += c_[i] * r.c_[m - i];
    r.c_[m] = -s / c_[0];
  }
  return r;
}

Series Series::operator/(const Series& o) const { return *this * o.reciprocal(); }

Series Series::derivative() const {
  Series r(order());
  for (int i = 1; i <= order(); ++i) r.c_[i - 1] = double(i) * c_[i];
  return r;
}

Series Series::theta() const {
  Series r(*this);
  for (int i = 0; i <= order(); ++i) r.c_[i] *= double(i);
  return r;
}

Series Series::log_theta() const { return theta() / *this; }

Series Series::compose(const Series& g) const {
  if (g[0] != cplx(0.0)) fail(ErrorCode::Numerical, "series compose: inner constant term must vanish");
  const int N = std::min(order(), g.order());
  Series r = constant(N, c_[0]);
  Series p = constant(N, 1.0);
  for (int i = 1; i <= N; ++i) {
    p = p * g;
    r += p * c_[i];
  }
  return r;
}

Series Series::revert() const {
  if (c_[0] != cplx(0.0) || c_[1] == cplx(0.0))
    fail(ErrorCode::Numerical, "series reversion needs f(0)=0, f'(0)!=0");
  const int N = order();
  // Newton-free: solve f(g(x)) = x order by order
  Series g(N);
  g.c_[1] = 1.0 / c_[1];
  for (int m = 2; m <= N; ++m) {
    Series trial(N, g.c_);
    cplx fm = compose(trial)[m];
    g.c_[m] = -fm / c_[1];
  }
  return g;
}

cplx Series::eval(cplx x) const {
  cplx r = 0.0;
  for (int i = order(); i >= 0; --i) r = r * x + c_[i];
  return r;
}

}  // namespace ahs
