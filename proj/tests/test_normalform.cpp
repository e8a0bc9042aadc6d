#include <doctest.h>

#include <random>

#include "ahs/error.hpp"
#include "ahs/normalform.hpp"
#include "support.hpp"

using namespace ahs;
using testing::code_of;

namespace {

RMat identity(int n) {
  RMat h(n, RVec(n, Rational(0)));
  for (int i = 0; i < n; ++i) h[i][i] = 1;
  return h;
}

}  // namespace

TEST_CASE("identity pullback leaves the jet unchanged") {
  std::mt19937_64 rng(3);
  for (int n = 1; n <= 3; ++n) {
    MetricJet mj = random_metric_jet(n, 4, rng);
    CHECK(pullback(mj, CoordChangeJet::identity(n, 4)) == mj);
  }
}

TEST_CASE("normalize_step clears a[1] in one dimension") {
  MetricJet mj = MetricJet::model(identity(1), 3);
  mj.a[1] = 1;
  auto s = normalize_step(mj, 1);
  CHECK(s.l == 2);
  CHECK(s.gamma_response == 2);
  CHECK(s.gamma == Rational(-1, 2));
  CHECK(s.jet.a[1] == 0);
  CHECK(s.jet.normal_through(1));
}

TEST_CASE("normalize_step clears b[1]") {
  MetricJet mj = MetricJet::model(identity(2), 3);
  mj.b[1][0] = 1;
  auto s = normalize_step(mj, 1);
  CHECK(s.gamma == 0);
  CHECK(s.delta[0] != 0);
  CHECK(s.delta[1] == 0);
  CHECK(s.jet.normal_through(1));
}

TEST_CASE("normalize_step refuses out-of-order steps") {
  MetricJet mj = MetricJet::model(identity(1), 3);
  mj.a[1] = 1;
  CHECK(code_of([&] { normalize_step(mj, 2); }) == ErrorCode::Precondition);
  CHECK(code_of([&] { normalize_step(mj, 0); }) == ErrorCode::Precondition);
}

TEST_CASE("gamma response is 2m at every order") {
  std::mt19937_64 rng(5);
  for (int n = 1; n <= 3; ++n) {
    auto res = model_form(random_metric_jet(n, 5, rng), 5);
    for (int m = 1; m <= 5; ++m) CHECK(res.gamma_response[m - 1] == 2 * m);
  }
}

TEST_CASE("model_form invariants on random jets") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 12; ++trial) {
    const int n = 1 + trial % 3;
    MetricJet mj = random_metric_jet(n, 6, rng);
    auto res = model_form(mj, 4);
    CHECK(res.jet.normal_through(4));
    CHECK(res.jet.c[0] == mj.c[0]);
    CHECK(pullback(mj.truncated(4), res.change) == res.jet);
    auto again = model_form(res.jet, 4);
    CHECK(again.change.is_identity());
    CHECK(again.jet == res.jet);
    auto longer = model_form(mj, 6);
    CHECK(longer.jet.truncated(4) == res.jet);
  }
}

TEST_CASE("step order does not change the normal form") {
  std::mt19937_64 rng(17);
  for (int n = 1; n <= 3; ++n) {
    MetricJet mj = random_metric_jet(n, 4, rng);
    auto j = model_form(mj, 4, StepOrder::Joint);
    auto g = model_form(mj, 4, StepOrder::GammaFirst);
    auto d = model_form(mj, 4, StepOrder::DeltaFirst);
    CHECK(g.jet == j.jet);
    CHECK(d.jet == j.jet);
  }
}

TEST_CASE("coordinate change composition matches successive pullbacks") {
  std::mt19937_64 rng(23);
  for (int n = 1; n <= 2; ++n) {
    MetricJet mj = random_metric_jet(n, 4, rng);
    auto s1 = normalize_step(mj, 1);
    auto s2 = normalize_step(s1.jet, 2);
    CHECK(pullback(mj, s1.change.then(s2.change)) == s2.jet);
  }
}
