#include "ahs/normalform.hpp"

#include "ahs/error.hpp"

namespace ahs {

namespace {

using Poly = std::vector<Rational>;  // truncated series, index = power

Poly mul(const Poly& p, const Poly& q, int N) {
  Poly r(N + 1, Rational(0));
  for (int i = 0; i <= N && i < static_cast<int>(p.size()); ++i) {
    if (p[i] == 0) continue;
    for (int j = 0; i + j <= N && j < static_cast<int>(q.size()); ++j) r[i + j] += p[i] * q[j];
  }
  return r;
}

Poly inverse(const Poly& p, int N) {
  if (p[0] == 0) fail(ErrorCode::Numerical, "series inverse of a non-unit");
  Poly r(N + 1, Rational(0));
  r[0] = Rational(1) / p[0];
  for (int m = 1; m <= N; ++m) {
    Rational s = 0;
    for (int i = 1; i <= m && i < static_cast<int>(p.size()); ++i) s += p[i] * r[m - i];
    r[m] = -s / p[0];
  }
  return r;
}

// f(X) for f = sum f_m x^m and X = xb * U
Poly substitute(const Poly& f, const std::vector<Poly>& Upow, int N) {
  Poly r(N + 1, Rational(0));
  for (int m = 0; m <= N && m < static_cast<int>(f.size()); ++m) {
    if (f[m] == 0) continue;
    for (int i = 0; i + m <= N; ++i) r[i + m] += f[m] * Upow[m][i];
  }
  return r;
}

// exact Gaussian elimination, A x = rhs
RVec solve(RMat A, RVec rhs) {
  const int n = static_cast<int>(A.size());
  for (int col = 0; col < n; ++col) {
    int piv = -1;
    for (int r = col; r < n; ++r)
      if (A[r][col] != 0) {
        piv = r;
        break;
      }
    if (piv < 0) fail(ErrorCode::Numerical, "singular response matrix (c[0] degenerate)");
    std::swap(A[col], A[piv]);
    std::swap(rhs[col], rhs[piv]);
    for (int r = 0; r < n; ++r) {
      if (r == col || A[r][col] == 0) continue;
      Rational f = A[r][col] / A[col][col];
      for (int c = col; c < n; ++c) A[r][c] -= f * A[col][c];
      rhs[r] -= f * rhs[col];
    }
  }
  RVec x(n);
  for (int i = 0; i < n; ++i) x[i] = rhs[i] / A[i][i];
  return x;
}

bool leading_minors_positive(const RMat& m) {
  const int n = static_cast<int>(m.size());
  RMat A = m;
  // LDL^T without pivoting: all pivots positive iff positive definite
  for (int k = 0; k < n; ++k) {
    if (A[k][k] <= 0) return false;
    for (int i = k + 1; i < n; ++i) {
      Rational f = A[i][k] / A[k][k];
      for (int j = k; j < n; ++j) A[i][j] -= f * A[k][j];
    }
  }
  return true;
}

}  // namespace

MetricJet MetricJet::model(const RMat& h0, int N) {
  MetricJet mj;
  mj.n = static_cast<int>(h0.size());
  mj.N = N;
  mj.a.assign(N + 1, Rational(0));
  mj.b.assign(N + 1, RVec(mj.n, Rational(0)));
  mj.c.assign(N + 1, RMat(mj.n, RVec(mj.n, Rational(0))));
  mj.c[0] = h0;
  mj.validate();
  return mj;
}

void MetricJet::validate() const {
  if (n < 1 || N < 0) fail(ErrorCode::Precondition, "metric jet needs n >= 1, N >= 0");
  if (static_cast<int>(a.size()) != N + 1 || static_cast<int>(b.size()) != N + 1 ||
      static_cast<int>(c.size()) != N + 1)
    fail(ErrorCode::Precondition, "metric jet slot sizes must equal N + 1");
  for (int m = 0; m <= N; ++m) {
    if (static_cast<int>(b[m].size()) != n || static_cast<int>(c[m].size()) != n)
      fail(ErrorCode::Precondition, "metric jet slot dimension mismatch");
    for (int i = 0; i < n; ++i) {
      if (static_cast<int>(c[m][i].size()) != n) fail(ErrorCode::Precondition, "c slot must be n x n");
      for (int j = 0; j < i; ++j)
        if (c[m][i][j] != c[m][j][i]) fail(ErrorCode::Precondition, "c slot must be symmetric");
    }
  }
  if (a[0] != 0) fail(ErrorCode::Precondition, "a[0] must vanish");
  for (const auto& v : b[0])
    if (v != 0) fail(ErrorCode::Precondition, "b[0] must vanish");
  if (!leading_minors_positive(c[0])) fail(ErrorCode::Precondition, "c[0] must be positive definite");
}

bool MetricJet::normal_through(int order) const {
  for (int m = 0; m <= std::min(order, N); ++m) {
    if (a[m] != 0) return false;
    for (const auto& v : b[m])
      if (v != 0) return false;
  }
  return true;
}

MetricJet MetricJet::truncated(int order) const {
  if (order > N) fail(ErrorCode::Precondition, "truncation beyond the jet order");
  MetricJet r = *this;
  r.N = order;
  r.a.resize(order + 1);
  r.b.resize(order + 1);
  r.c.resize(order + 1);
  return r;
}

bool MetricJet::operator==(const MetricJet& o) const {
  return n == o.n && N == o.N && a == o.a && b == o.b && c == o.c;
}

CoordChangeJet CoordChangeJet::identity(int n, int N) {
  CoordChangeJet cc;
  cc.n = n;
  cc.N = N;
  cc.gamma.assign(N + 2, Rational(0));
  cc.delta.assign(N + 2, RVec(n, Rational(0)));
  return cc;
}

bool CoordChangeJet::is_identity() const {
  for (const auto& g : gamma)
    if (g != 0) return false;
  for (const auto& d : delta)
    for (const auto& v : d)
      if (v != 0) return false;
  return true;
}

void CoordChangeJet::validate() const {
  if (static_cast<int>(gamma.size()) != N + 2 || static_cast<int>(delta.size()) != N + 2)
    fail(ErrorCode::Precondition, "coordinate change sizes must equal N + 2");
  for (int l = 0; l < 2 && l < N + 2; ++l) {
    if (gamma[l] != 0) fail(ErrorCode::Precondition, "coordinate change must start at order 2");
    for (const auto& v : delta[l])
      if (v != 0) fail(ErrorCode::Precondition, "coordinate change must start at order 2");
  }
}

bool CoordChangeJet::operator==(const CoordChangeJet& o) const {
  return n == o.n && N == o.N && gamma == o.gamma && delta == o.delta;
}

CoordChangeJet CoordChangeJet::then(const CoordChangeJet& next) const {
  if (n != next.n || N != next.N) fail(ErrorCode::Precondition, "composing incompatible changes");
  const int K = N + 1;
  // X2 = xb + sum gamma2 xb^l as a series
  Poly X2(K + 1, Rational(0));
  X2[1] = 1;
  for (int l = 2; l <= K; ++l) X2[l] = next.gamma[l];
  std::vector<Poly> P(K + 1);
  P[0] = Poly(K + 1, Rational(0));
  P[0][0] = 1;
  for (int l = 1; l <= K; ++l) P[l] = mul(P[l - 1], X2, K);
  CoordChangeJet r = identity(n, N);
  // X1(X2) - xb
  Poly X = X2;
  for (int l = 2; l <= K; ++l)
    if (gamma[l] != 0)
      for (int i = 0; i <= K; ++i) X[i] += gamma[l] * P[l][i];
  for (int l = 2; l <= K; ++l) r.gamma[l] = X[l];
  // D2 + D1(X2)
  for (int j = 0; j < n; ++j) {
    Poly D(K + 1, Rational(0));
    for (int l = 2; l <= K; ++l) D[l] = next.delta[l][j];
    for (int l = 2; l <= K; ++l)
      if (delta[l][j] != 0)
        for (int i = 0; i <= K; ++i) D[i] += delta[l][j] * P[l][i];
    for (int l = 2; l <= K; ++l) r.delta[l][j] = D[l];
  }
  return r;
}

MetricJet pullback(const MetricJet& mj, const CoordChangeJet& cc) {
  if (cc.n != mj.n) fail(ErrorCode::Precondition, "pullback: dimension mismatch");
  if (cc.N < mj.N) fail(ErrorCode::Precondition, "pullback: coordinate change truncated below the jet order");
  cc.validate();
  const int N = mj.N, n = mj.n;
  // U = X / xb, X' = dX/dxb, Dp_j = dD_j/dxb
  Poly U(N + 1, Rational(0)), Xp(N + 1, Rational(0));
  U[0] = 1;
  Xp[0] = 1;
  for (int l = 2; l <= N + 1; ++l) {
    U[l - 1] += cc.gamma[l];
    Xp[l - 1] += Rational(l) * cc.gamma[l];
  }
  std::vector<Poly> Dp(n, Poly(N + 1, Rational(0)));
  for (int j = 0; j < n; ++j)
    for (int l = 2; l <= N + 1; ++l) Dp[j][l - 1] = Rational(l) * cc.delta[l][j];
  std::vector<Poly> Upow(N + 1);
  Upow[0] = Poly(N + 1, Rational(0));
  Upow[0][0] = 1;
  for (int m = 1; m <= N; ++m) Upow[m] = mul(Upow[m - 1], U, N);
  const Poly invU2 = inverse(mul(U, U, N), N);

  auto slot = [&](auto get) {
    Poly f(N + 1);
    for (int m = 0; m <= N; ++m) f[m] = get(m);
    return substitute(f, Upow, N);
  };
  Poly aX = slot([&](int m) { return mj.a[m]; });
  aX[0] += 1;
  std::vector<Poly> bX(n);
  std::vector<std::vector<Poly>> cX(n, std::vector<Poly>(n));
  for (int j = 0; j < n; ++j) bX[j] = slot([&](int m) { return mj.b[m][j]; });
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      cX[i][j] = slot([&](int m) { return mj.c[m][i][j]; });
      cX[j][i] = cX[i][j];
    }

  // (1 + a(X)) X'^2 + X' b(X).D' + D'^T c(X) D'
  Poly A = mul(aX, mul(Xp, Xp, N), N);
  Poly bd(N + 1, Rational(0));
  for (int j = 0; j < n; ++j) {
    Poly t = mul(bX[j], Dp[j], N);
    for (int i = 0; i <= N; ++i) bd[i] += t[i];
  }
  bd = mul(bd, Xp, N);
  for (int i = 0; i <= N; ++i) A[i] += bd[i];
  std::vector<Poly> cD(n, Poly(N + 1, Rational(0)));  // (c(X) D')_j
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      Poly t = mul(cX[j][i], Dp[i], N);
      for (int q = 0; q <= N; ++q) cD[j][q] += t[q];
    }
  for (int j = 0; j < n; ++j) {
    Poly t = mul(Dp[j], cD[j], N);
    for (int q = 0; q <= N; ++q) A[q] += t[q];
  }
  A = mul(A, invU2, N);

  MetricJet r = MetricJet::model(mj.c[0], N);
  r.c[0] = mj.c[0];
  for (int q = 0; q <= N; ++q) r.a[q] = A[q];
  r.a[0] -= 1;
  for (int j = 0; j < n; ++j) {
    Poly t = mul(bX[j], Xp, N);
    for (int q = 0; q <= N; ++q) t[q] += 2 * cD[j][q];
    t = mul(t, invU2, N);
    for (int q = 0; q <= N; ++q) r.b[q][j] = t[q];
  }
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      Poly t = mul(cX[i][j], invU2, N);
      for (int q = 0; q <= N; ++q) {
        r.c[q][i][j] = t[q];
        r.c[q][j][i] = t[q];
      }
    }
  return r;
}

namespace {

// gamma at power m + 1 solved from the pullback's own linear response
StepResult gamma_part(const MetricJet& mj, int m) {
  StepResult s;
  s.m = m;
  s.l = m + 1;
  CoordChangeJet probe = CoordChangeJet::identity(mj.n, mj.N);
  probe.gamma[m + 1] = 1;
  s.gamma_response = pullback(mj, probe).a[m] - mj.a[m];
  if (s.gamma_response == 0) fail(ErrorCode::Numerical, "vanishing gamma response");
  s.gamma = -mj.a[m] / s.gamma_response;
  s.delta.assign(mj.n, Rational(0));
  s.change = CoordChangeJet::identity(mj.n, mj.N);
  s.change.gamma[m + 1] = s.gamma;
  s.jet = pullback(mj, s.change);
  return s;
}

StepResult delta_part(const MetricJet& mj, int m) {
  StepResult s;
  s.m = m;
  s.l = m + 1;
  const int n = mj.n;
  s.delta_response.assign(n, RVec(n, Rational(0)));
  for (int i = 0; i < n; ++i) {
    CoordChangeJet probe = CoordChangeJet::identity(n, mj.N);
    probe.delta[m + 1][i] = 1;
    MetricJet p = pullback(mj, probe);
    for (int j = 0; j < n; ++j) s.delta_response[j][i] = p.b[m][j] - mj.b[m][j];
  }
  RVec rhs(n);
  for (int j = 0; j < n; ++j) rhs[j] = -mj.b[m][j];
  s.delta = solve(s.delta_response, rhs);
  s.change = CoordChangeJet::identity(n, mj.N);
  s.change.delta[m + 1] = s.delta;
  s.jet = pullback(mj, s.change);
  return s;
}

}  // namespace

StepResult normalize_step(const MetricJet& mj, int m, StepOrder order) {
  mj.validate();
  if (m < 1 || m > mj.N) fail(ErrorCode::Precondition, "normalize_step order out of range");
  if (!mj.normal_through(m - 1)) fail(ErrorCode::Precondition, "lower orders are not yet normal");
  StepResult r;
  if (order == StepOrder::Joint) {
    StepResult g = gamma_part(mj, m), d = delta_part(mj, m);
    r = g;
    r.delta = d.delta;
    r.delta_response = d.delta_response;
    r.change.delta[m + 1] = d.delta;
    r.jet = pullback(mj, r.change);
  } else if (order == StepOrder::GammaFirst) {
    StepResult g = gamma_part(mj, m);
    StepResult d = delta_part(g.jet, m);
    r = g;
    r.delta = d.delta;
    r.delta_response = d.delta_response;
    r.change = g.change.then(d.change);
    r.jet = d.jet;
  } else {
    StepResult d = delta_part(mj, m);
    StepResult g = gamma_part(d.jet, m);
    r = g;
    r.delta = d.delta;
    r.delta_response = d.delta_response;
    r.change = d.change.then(g.change);
    r.jet = g.jet;
  }
  if (!r.jet.normal_through(m)) fail(ErrorCode::Numerical, "normalize_step left a residual at its order");
  return r;
}

ModelFormResult model_form(const MetricJet& mj, int N, StepOrder order) {
  mj.validate();
  if (N > mj.N) fail(ErrorCode::Precondition, "model_form order exceeds the jet order");
  ModelFormResult res;
  MetricJet cur = mj.truncated(N);
  res.change = CoordChangeJet::identity(mj.n, N);
  for (int m = 1; m <= N; ++m) {
    StepResult s = normalize_step(cur, m, order);
    res.gamma_response.push_back(s.gamma_response);
    res.change = res.change.then(s.change);
    cur = s.jet;
  }
  res.jet = cur;
  return res;
}

MetricJet random_metric_jet(int n, int N, std::mt19937_64& rng, int max_num, int max_den) {
  std::uniform_int_distribution<int> num(-max_num, max_num), den(1, max_den);
  auto rnd = [&]() { return Rational(num(rng), den(rng)); };
  // c[0] = A A^T + I
  RMat A(n, RVec(n));
  for (auto& row : A)
    for (auto& v : row) v = rnd();
  RMat h0(n, RVec(n, Rational(0)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) h0[i][j] += A[i][k] * A[j][k];
      if (i == j) h0[i][j] += 1;
    }
  MetricJet mj = MetricJet::model(h0, N);
  for (int m = 1; m <= N; ++m) {
    mj.a[m] = rnd();
    for (int j = 0; j < n; ++j) mj.b[m][j] = rnd();
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) mj.c[m][i][j] = mj.c[m][j][i] = rnd();
  }
  return mj;
}

}  // namespace ahs
