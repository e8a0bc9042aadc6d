#pragma once

#include <complex>
#include <vector>

namespace ahs {

using cplx = std::complex<double>;

// Truncated power series sum_{i<=N} c_i x^i.
class Series {
 public:
  Series() = default;
  explicit Series(int order) : c_(order + 1, cplx(0.0)) {}
  Series(int order, std::vector<cplx> coeffs);

  static Series constant(int order, cplx v);
  static Series monomial(int order, int power, cplx v = 1.0);

  int order() const { return static_cast<int>(c_.size()) - 1; }
  cplx& operator[](int i) { return c_[i]; }
  cplx operator[](int i) const { return i < static_cast<int>(c_.size()) ? c_[i] : cplx(0.0); }
  const std::vector<cplx>& coeffs() const { return c_; }

  Series operator+(const Series& o) const;
  Series operator-(const Series& o) const;
  Series operator-() const;
  Series operator*(const Series& o) const;
  Series operator*(cplx s) const;
  Series operator/(const Series& o) const;  // o[0] != 0
  Series& operator+=(const Series& o);

  Series derivative() const;           // d/dx, order kept
  Series theta() const;                // x d/dx
  Series reciprocal() const;
  Series log_theta() const;            // x f'/f
  Series compose(const Series& g) const;  // f(g(x)), g[0] == 0
  Series revert() const;               // inverse function, c[0]==0, c[1]!=0

  cplx eval(cplx x) const;

 private:
  std::vector<cplx> c_;
};

}  // namespace ahs
