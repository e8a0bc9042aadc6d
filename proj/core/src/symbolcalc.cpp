#include "ahs/symbolcalc.hpp"

#include <cmath>

namespace ahs {

namespace {

cplx rpow(double base, cplx e) { return std::exp(e * std::log(base)); }

void check_xi(const Matrix& h0, const Vector& xi) {
  if (xi.size() != h0.rows()) fail(ErrorCode::Precondition, "covector dimension differs from h0");
  if (xi.squaredNorm() == 0.0) fail(ErrorCode::Precondition, "covector must be nonzero");
}

}  // namespace

double covector_length2(const Matrix& h0, const Vector& xi) { return xi.dot(h0.ldlt().solve(xi)); }

cplx principal_symbol_S(const SpectralPoint& sp, const Matrix& h0, const Vector& xi) {
  check_xi(h0, xi);
  return c_scatter(sp) * rpow(covector_length2(h0, xi), 0.5 * (2.0 * sp.zeta - double(sp.n)));
}

SymbolValue scattering_symbol(const SpectralPoint& sp, const Matrix& h0) {
  SymbolValue v;
  v.order = 2.0 * sp.zeta - double(sp.n);
  const cplx c = c_scatter(sp);
  v.coefficient_at = [c, sp, h0](const Vector& xi) {
    check_xi(h0, xi);
    return c * rpow(covector_length2(h0, xi), 0.5 * (2.0 * sp.zeta - double(sp.n)));
  };
  v.source = "scattering";
  return v;
}

cplx principal_symbol_diff(const PerturbationCoefficients& pc, const SpectralPoint& sp,
                           const Matrix& h0, const Matrix& L, cplx W, const Vector& xi) {
  check_xi(h0, xi);
  const int n = sp.n, k = pc.k;
  const Matrix h0inv = h0.inverse();
  const Matrix H = h0inv * L * h0inv;
  const double T = (h0inv * L).trace();
  const double len = std::sqrt(covector_length2(h0, xi));
  const cplx ord = 2.0 * sp.zeta - double(n + k);
  return pc.A1 * xi.dot(H * xi) * rpow(len, ord - 2.0) +
         pc.A2 * (W - 0.25 * k * (n - k) * T) * rpow(len, ord);
}

cplx principal_symbol_diff(int k, const SpectralPoint& sp, const Matrix& h0, const Matrix& L,
                           double W, const Vector& xi) {
  return principal_symbol_diff(a_coeffs(k, sp), sp, h0, L, W, xi);
}

SymbolValue difference_symbol(const PerturbationCoefficients& pc, const SpectralPoint& sp,
                              const Matrix& h0, const Matrix& L, cplx W) {
  SymbolValue v;
  v.order = 2.0 * sp.zeta - double(sp.n + pc.k);
  v.coefficient_at = [pc, sp, h0, L, W](const Vector& xi) {
    return principal_symbol_diff(pc, sp, h0, L, W, xi);
  };
  v.source = "difference";
  return v;
}

cplx predicted_mode_difference(const PerturbationCoefficients& pc, const SpectralPoint& sp,
                               const Matrix& h0, const Matrix& L, double W,
                               const std::vector<int>& mode) {
  Vector j(mode.size());
  for (size_t i = 0; i < mode.size(); ++i) j[i] = mode[i];
  if (j.squaredNorm() == 0.0) fail(ErrorCode::Precondition, "predicted_mode_difference needs j != 0");
  return principal_symbol_diff(pc, sp, h0, L, W, j);
}

cplx predicted_mode_difference(int k, const SpectralPoint& sp, const Matrix& h0, const Matrix& L,
                               double W, const std::vector<int>& mode) {
  return predicted_mode_difference(a_coeffs(k, sp), sp, h0, L, W, mode);
}

double order_bookkeeping(int k, cplx zeta, int n) { return 2.0 * zeta.real() - n - k; }
double order_bookkeeping(int k, const SpectralPoint& sp) { return order_bookkeeping(k, sp.zeta, sp.n); }

cplx blackhole_symbol_diff(const PerturbationCoefficients& pc, const SpectralPoint& sp,
                           const Matrix& H, double W, const Vector& xi) {
  if (xi.size() != H.rows() || xi.squaredNorm() == 0.0)
    fail(ErrorCode::Precondition, "blackhole_symbol_diff: bad covector");
  const double len = xi.norm();
  const cplx ord = 2.0 * sp.zeta - double(sp.n + pc.k);
  return pc.A1 * xi.dot(H * xi) * rpow(len, ord - 2.0) + pc.A2 * W * rpow(len, ord);
}

cplx blackhole_symbol_diff(int k, const SpectralPoint& sp, const Matrix& H, double W,
                           const Vector& xi) {
  return blackhole_symbol_diff(a_coeffs(k, sp), sp, H, W, xi);
}

cplx blackhole_symbol_diff(int k, double lambda, const Matrix& H, double W, const Vector& xi) {
  const int n = static_cast<int>(H.rows());
  // Re zeta = n/2 lies outside the region where T_l converge absolutely
  SpectralPoint sp(cplx(0.5 * n, lambda), n);
  return blackhole_symbol_diff(k, sp, H, W, xi);
}

double blackhole_order(int k, double lambda) { return 2.0 * cplx(0.0, lambda).real() - k; }

}  // namespace ahs
