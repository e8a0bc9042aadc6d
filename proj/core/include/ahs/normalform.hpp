#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <random>
#include <vector>

namespace ahs {

using Rational = boost::multiprecision::cpp_rational;
using RVec = std::vector<Rational>;
using RMat = std::vector<RVec>;

// g = [(1 + sum a_m x^m) dx^2 + sum_m x^m sum_j b_{m,j} dx dy_j + sum_m x^m c_{m,ij} dy_i dy_j] / x^2
// at a fixed boundary point.
struct MetricJet {
  int n = 1;
  int N = 0;
  std::vector<Rational> a;  // a[0..N]
  std::vector<RVec> b;      // b[m][j]
  std::vector<RMat> c;      // c[m][i][j], symmetric

  static MetricJet model(const RMat& h0, int N);   // a = b = 0, c[0] = h0
  void validate() const;
  bool normal_through(int order) const;           // a[m] = b[m] = 0 for m <= order
  MetricJet truncated(int order) const;
  bool operator==(const MetricJet& o) const;
};

// x = xb + sum_l gamma[l] xb^l, y = yb + sum_l delta[l] xb^l, l = 2..N+1.
struct CoordChangeJet {
  int n = 1;
  int N = 0;
  std::vector<Rational> gamma;  // index l, size N + 2
  std::vector<RVec> delta;

  static CoordChangeJet identity(int n, int N);
  bool is_identity() const;
  void validate() const;
  // apply this change first, then `next`
  CoordChangeJet then(const CoordChangeJet& next) const;
  bool operator==(const CoordChangeJet& o) const;
};

MetricJet pullback(const MetricJet& mj, const CoordChangeJet& cc);

enum class StepOrder { Joint, GammaFirst, DeltaFirst };

struct StepResult {
  int m = 0;                 // slot order cleared
  int l = 0;                 // power of the coordinate change, m + 1
  Rational gamma;
  RVec delta;
  Rational gamma_response;   // d a[m] / d gamma, read off the pullback
  RMat delta_response;       // d b[m] / d delta
  CoordChangeJet change;
  MetricJet jet;
};

StepResult normalize_step(const MetricJet& mj, int m, StepOrder order = StepOrder::Joint);

struct ModelFormResult {
  CoordChangeJet change;
  MetricJet jet;
  std::vector<Rational> gamma_response;   // per slot order m = 1..N
};

ModelFormResult model_form(const MetricJet& mj, int N, StepOrder order = StepOrder::Joint);

MetricJet random_metric_jet(int n, int N, std::mt19937_64& rng, int max_num = 5, int max_den = 4);

}  // namespace ahs
