#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ahs/models.hpp"

namespace ahs {

struct SymbolValue {
  cplx order{0.0, 0.0};
  std::function<cplx(const Vector&)> coefficient_at;
  std::string source;   // "scattering" | "difference" | "blackhole_difference"
};

// Sign relating measured mode differences to the difference symbol:
// s_j(h0 + eps x^k L, eps x^k W) - s_j(h0) = kMeasuredOrientation * eps * sigma(j) + ...
constexpr double kMeasuredOrientation = -1.0;

double covector_length2(const Matrix& h0, const Vector& xi);   // xi . h0^-1 xi

cplx principal_symbol_S(const SpectralPoint& sp, const Matrix& h0, const Vector& xi);
SymbolValue scattering_symbol(const SpectralPoint& sp, const Matrix& h0);

cplx principal_symbol_diff(int k, const SpectralPoint& sp, const Matrix& h0, const Matrix& L,
                           double W, const Vector& xi);
cplx principal_symbol_diff(const PerturbationCoefficients& pc, const SpectralPoint& sp,
                           const Matrix& h0, const Matrix& L, cplx W, const Vector& xi);
SymbolValue difference_symbol(const PerturbationCoefficients& pc, const SpectralPoint& sp,
                              const Matrix& h0, const Matrix& L, cplx W);

cplx predicted_mode_difference(int k, const SpectralPoint& sp, const Matrix& h0, const Matrix& L,
                               double W, const std::vector<int>& mode);
cplx predicted_mode_difference(const PerturbationCoefficients& pc, const SpectralPoint& sp,
                               const Matrix& h0, const Matrix& L, double W,
                               const std::vector<int>& mode);

double order_bookkeeping(int k, const SpectralPoint& sp);
double order_bookkeeping(int k, cplx zeta, int n);

// A_1 sum H xi xi |xi|^(2 zeta - n - k - 2) + A_2 W |xi|^(2 zeta - n - k), Euclidean |xi| (round
// sphere, orthonormal frame).  The physical case is zeta = n/2 + i lambda.
cplx blackhole_symbol_diff(int k, double lambda, const Matrix& H, double W, const Vector& xi);
cplx blackhole_symbol_diff(int k, const SpectralPoint& sp, const Matrix& H, double W,
                           const Vector& xi);
cplx blackhole_symbol_diff(const PerturbationCoefficients& pc, const SpectralPoint& sp,
                           const Matrix& H, double W, const Vector& xi);
double blackhole_order(int k, double lambda);

}  // namespace ahs
