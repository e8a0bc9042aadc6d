#include <Eigen/QR>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "ahs_cli/cli.hpp"

namespace ahs::cli {

namespace {

json cj(cplx z) { return json::array({z.real(), z.imag()}); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

CompareReport report_compare(const SweepTable& sweep, const PredictionTable& pred, int correction_terms) {
  if (sweep.n != pred.n || std::abs(sweep.zeta - pred.zeta) > 1e-14 * (1.0 + std::abs(sweep.zeta)))
    fail(ErrorCode::Precondition, "join error: sweep and prediction tables differ in (zeta, n)");
  std::map<std::vector<int>, cplx> pmap;
  for (size_t i = 0; i < pred.modes.size(); ++i) pmap[pred.modes[i]] = pred.predicted[i];
  CompareReport rep;
  for (size_t i = 0; i < sweep.modes.size(); ++i) {
    auto it = pmap.find(sweep.modes[i]);
    if (it == pmap.end()) continue;
    CompareRow row;
    row.mode = sweep.modes[i];
    row.lambda = sweep.lambda[i];
    row.measured = sweep.measured[i];
    row.predicted = it->second;
    if (row.predicted == cplx(0.0)) continue;
    row.ratio = row.measured / row.predicted;
    rep.rows.push_back(row);
  }
  if (rep.rows.empty()) fail(ErrorCode::Precondition, "join error: no common modes between sweep and prediction");
  std::sort(rep.rows.begin(), rep.rows.end(), [](const CompareRow& a, const CompareRow& b) {
    return a.lambda != b.lambda ? a.lambda < b.lambda : a.mode < b.mode;
  });

  // ratio ~ g + b / lambda (+ ...), b = g c1
  const int m = static_cast<int>(rep.rows.size());
  const int terms = std::clamp(correction_terms, 0, std::max(0, m - 1));
  Eigen::MatrixXcd A(m, terms + 1);
  Eigen::VectorXcd r(m);
  for (int i = 0; i < m; ++i) {
    for (int t = 0; t <= terms; ++t)
      A(i, t) = rep.rows[i].lambda > 0.0 ? std::pow(rep.rows[i].lambda, -t) : (t == 0 ? 1.0 : 0.0);
    r[i] = rep.rows[i].ratio;
  }
  Eigen::VectorXcd x = A.completeOrthogonalDecomposition().solve(r);
  rep.global_factor = x[0];
  rep.c1 = terms >= 1 && x[0] != cplx(0.0) ? x[1] / x[0] : cplx(0.0);
  Eigen::VectorXcd fitted = A * x;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (int i = 0; i < m; ++i) {
    auto& row = rep.rows[i];
    row.deviation = std::abs(row.ratio / rep.global_factor - 1.0);
    row.corrected_deviation = std::abs(row.ratio / fitted[i] - 1.0);
    rep.max_ratio_error = std::max(rep.max_ratio_error, std::abs(row.ratio - 1.0));
    rep.max_deviation = std::max(rep.max_deviation, row.deviation);
    rep.max_corrected_deviation = std::max(rep.max_corrected_deviation, row.corrected_deviation);
    if (row.lambda > 0.0 && row.deviation > 0.0) {
      double lx = std::log(row.lambda), ly = std::log(row.deviation);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
      ++cnt;
    }
  }
  if (cnt >= 2 && cnt * sxx - sx * sx > 0.0) rep.convergence_slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  return rep;
}

json to_json(const CompareReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"mode", row.mode}, {"lambda", row.lambda}, {"measured", cj(row.measured)},
                    {"predicted", cj(row.predicted)}, {"ratio", cj(row.ratio)},
                    {"deviation", row.deviation}, {"corrected_deviation", row.corrected_deviation}});
  return {{"rows", rows},
          {"global_factor", cj(r.global_factor)},
          {"c1", cj(r.c1)},
          {"max_ratio_error", r.max_ratio_error},
          {"max_deviation", r.max_deviation},
          {"max_corrected_deviation", r.max_corrected_deviation},
          {"convergence_slope", r.convergence_slope}};
}

json rational_to_json(const Rational& q) {
  auto num = boost::multiprecision::numerator(q), den = boost::multiprecision::denominator(q);
  const boost::multiprecision::cpp_int lim = std::numeric_limits<std::int64_t>::max();
  if (abs(num) <= lim && den <= lim)
    return json::array({static_cast<std::int64_t>(num), static_cast<std::int64_t>(den)});
  return json::array({num.str(), den.str()});
}

json to_json(const MetricJet& mj) {
  json a = json::array(), b = json::array(), c = json::array();
  for (int m = 0; m <= mj.N; ++m) {
    a.push_back(rational_to_json(mj.a[m]));
    json bm = json::array(), cm = json::array();
    for (const auto& v : mj.b[m]) bm.push_back(rational_to_json(v));
    for (const auto& row : mj.c[m]) {
      json cr = json::array();
      for (const auto& v : row) cr.push_back(rational_to_json(v));
      cm.push_back(cr);
    }
    b.push_back(bm);
    c.push_back(cm);
  }
  return {{"n", mj.n}, {"N", mj.N}, {"a", a}, {"b", b}, {"c", c}};
}

json to_json(const CoordChangeJet& cc) {
  json g = json::array(), d = json::array();
  for (size_t l = 0; l < cc.gamma.size(); ++l) {
    g.push_back(rational_to_json(cc.gamma[l]));
    json dl = json::array();
    for (const auto& v : cc.delta[l]) dl.push_back(rational_to_json(v));
    d.push_back(dl);
  }
  return {{"n", cc.n}, {"N", cc.N}, {"gamma", g}, {"delta", d}};
}

std::string records_csv(const std::vector<ModeScatteringRecord>& recs, int mode_dim) {
  std::ostringstream os;
  os << "eps";
  for (int q = 0; q < mode_dim; ++q) os << ",mode" << q;
  os << ",lambda,re_f_plus,im_f_plus,re_f_minus,im_f_minus,re_s,im_s,quality,flags\n";
  for (const auto& r : recs) {
    os << fmt(r.eps);
    for (int q = 0; q < mode_dim; ++q) os << "," << (q < static_cast<int>(r.mode.size()) ? r.mode[q] : 0);
    os << "," << fmt(r.lambda) << "," << fmt(r.f_plus.real()) << "," << fmt(r.f_plus.imag()) << ","
       << fmt(r.f_minus.real()) << "," << fmt(r.f_minus.imag()) << "," << fmt(r.s.real()) << ","
       << fmt(r.s.imag()) << "," << fmt(r.quality) << "," << r.flags << "\n";
  }
  return os.str();
}

}  // namespace ahs::cli
