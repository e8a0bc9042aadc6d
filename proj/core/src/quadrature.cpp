#include "ahs/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace ahs::detail {

const std::array<double, 8>& GK15::xk() {
  static const std::array<double, 8> x = [] {
    std::array<double, 8> r{};
    auto a = boost::math::quadrature::gauss_kronrod<double, 15>::abscissa();
    std::copy(a.begin(), a.end(), r.begin());
    return r;
  }();
  return x;
}

const std::array<double, 8>& GK15::wk() {
  static const std::array<double, 8> w = [] {
    std::array<double, 8> r{};
    auto a = boost::math::quadrature::gauss_kronrod<double, 15>::weights();
    std::copy(a.begin(), a.end(), r.begin());
    return r;
  }();
  return w;
}

const std::array<double, 4>& GK15::wg() {
  static const std::array<double, 4> w = [] {
    std::array<double, 4> r{};
    auto a = boost::math::quadrature::gauss<double, 7>::weights();
    std::copy(a.begin(), a.end(), r.begin());
    return r;
  }();
  return w;
}

}  // namespace ahs::detail
