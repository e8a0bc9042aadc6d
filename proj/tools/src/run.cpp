#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "ahs/symbolcalc.hpp"
#include "ahs_cli/cli.hpp"

namespace ahs::cli {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Config: return kExitConfig;
    case ErrorCode::Numerical: return kExitNumerical;
    default: return kExitGate;
  }
}

namespace {

json cj(cplx z) { return json::array({z.real(), z.imag()}); }

json mj(const Matrix& m) {
  json r = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    r.push_back(row);
  }
  return r;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string now_utc() {
  std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

struct Writer {
  const ExperimentConfig& cfg;
  std::filesystem::path out;
  RunResult& res;

  std::filesystem::path path(const std::string& ext) const {
    return out / (cfg.prefix + "_" + cfg.experiment + ext);
  }
  void csv(const std::string& body) {
    if (!cfg.write_csv) return;
    auto p = path(".csv");
    std::ofstream f(p);
    f << "# config_hash=" << config_hash(cfg.source) << " versions=" << module_versions().dump() << "\n" << body;
    res.artifacts.push_back(p);
  }
  void report(const json& result) {
    if (!cfg.write_json) return;
    auto p = path(".json");
    json doc = {{"experiment", cfg.experiment},
                {"config_hash", config_hash(cfg.source)},
                {"versions", module_versions()},
                {"seed", cfg.seed},
                {"generated_at", now_utc()},
                {"result", result}};
    std::ofstream f(p);
    f << doc.dump(2) << "\n";
    res.artifacts.push_back(p);
  }
};

template <class F>
void parallel_for(int count, int threads, F&& body) {
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int i = next++; i < count; i = next++) body(i);
  };
  const int nt = std::max(1, std::min(threads, count));
  std::vector<std::thread> pool;
  for (int t = 1; t < nt; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
}

BlackHoleModel make_blackhole(const BlackHoleConfig& b) {
  return b.type == "schwarzschild" ? BlackHoleModel::schwarzschild(b.m)
                                   : BlackHoleModel::desitter_schwarzschild(b.m, b.Lambda);
}

BoundaryMetric make_torus(const ModelConfig& mc) { return BoundaryMetric::torus(mc.h0); }

SpectralPoint spectral(const ModelConfig& mc) { return SpectralPoint(mc.zeta, mc.n); }

// family-major, then configured mode order
std::vector<ModeScatteringRecord> sweep_records(const ExperimentConfig& cfg, const std::vector<double>& eps) {
  const auto& mc = cfg.model;
  const SpectralPoint sp = spectral(mc);
  if (mc.kind == "cylinder")
    return scatter_sweep(family_jet(make_torus(mc), mc.jets, eps), mc.modes, sp, cfg.numeric, cfg.threads);
  const BlackHoleModel bh = make_blackhole(mc.blackhole);
  BlackHoleOptions bo{mc.blackhole.r_far};
  const int nm = static_cast<int>(mc.modes.size());
  std::vector<ModeScatteringRecord> out(eps.size() * nm);
  parallel_for(static_cast<int>(out.size()), cfg.threads, [&](int i) {
    const double e = eps[i / nm];
    const auto& mode = mc.modes[i % nm];
    ModeScatteringRecord rec;
    try {
      rec = solve_mode(blackhole_problem(bh, mode[0], sp, mc.jets, e, bo), cfg.numeric);
    } catch (const Error& err) {
      rec.mode = mode;
      rec.error = std::string(to_string(err.code())) + ": " + err.what();
      rec.flags = std::string("error:") + to_string(err.code());
    }
    rec.eps = e;
    out[i] = rec;
  });
  return out;
}

json record_json(const ModeScatteringRecord& r) {
  json j = {{"eps", r.eps},          {"mode", r.mode},       {"lambda", r.lambda},
            {"f_plus", cj(r.f_plus)}, {"f_minus", cj(r.f_minus)}, {"s", cj(r.s)},
            {"quality", r.quality},  {"x_match", r.x_match}, {"flags", r.flags}};
  if (!r.ok()) j["error"] = r.error;
  return j;
}

void run_constants(const ExperimentConfig& cfg, Writer& w) {
  std::vector<cplx> zs = cfg.constants.zeta;
  if (zs.empty()) zs.push_back(cfg.model.zeta);
  const int n = cfg.model.n;
  std::ostringstream os;
  os << "n,k,re_zeta,im_zeta,re_A1,im_A1,re_A2,im_A2,re_T1,im_T1,re_T2,im_T2,re_D,im_D,valid_region\n";
  json rows = json::array();
  for (int k : cfg.constants.k)
    for (cplx z : zs) {
      auto sp = SpectralPoint::integral_point(z, n);
      auto pc = a_coeffs(k, sp);
      os << n << "," << k << "," << fmt(z.real()) << "," << fmt(z.imag());
      for (cplx v : {pc.A1, pc.A2, pc.T1, pc.T2, pc.D}) os << "," << fmt(v.real()) << "," << fmt(v.imag());
      os << "," << (pc.valid_region ? 1 : 0) << "\n";
      rows.push_back({{"n", n}, {"k", k}, {"zeta", cj(z)}, {"A1", cj(pc.A1)}, {"A2", cj(pc.A2)},
                      {"T1", cj(pc.T1)}, {"T2", cj(pc.T2)}, {"D", cj(pc.D)}, {"valid_region", pc.valid_region}});
    }
  w.csv(os.str());
  w.report({{"rows", rows}});
}

void run_sweep(const ExperimentConfig& cfg, Writer& w) {
  auto recs = sweep_records(cfg, cfg.model.eps);
  const int dim = cfg.model.kind == "blackhole" ? 1 : cfg.model.n;
  w.csv(records_csv(recs, dim));
  json arr = json::array();
  int failed = 0;
  for (const auto& r : recs) {
    arr.push_back(record_json(r));
    failed += r.ok() ? 0 : 1;
  }
  w.report({{"zeta", cj(cfg.model.zeta)}, {"n", cfg.model.n}, {"records", arr}, {"failed", failed}});
}

void run_compare(const ExperimentConfig& cfg, Writer& w) {
  const auto& mc = cfg.model;
  const SpectralPoint sp = spectral(mc);
  bool perturbed = false;
  for (double e : mc.eps) perturbed = perturbed || e != 0.0;
  perturbed = perturbed && !mc.jets.empty();
  SweepTable st;
  PredictionTable pt;
  st.zeta = pt.zeta = mc.zeta;
  st.n = pt.n = mc.n;
  std::string mode_kind;
  if (mc.kind != "cylinder") fail(ErrorCode::Precondition, "compare needs a cylinder model (no closed form for black holes)");
  if (!perturbed) {
    mode_kind = "exact_eigenvalue";
    auto recs = sweep_records(cfg, {0.0});
    for (const auto& r : recs) {
      if (!r.ok()) fail(ErrorCode::Numerical, "mode solve failed: " + r.error);
      if (r.lambda == 0.0) continue;
      st.modes.push_back(r.mode);
      st.lambda.push_back(r.lambda);
      st.measured.push_back(r.s);
      pt.modes.push_back(r.mode);
      pt.predicted.push_back(hyperbolic_exact_eigenvalue(sp, r.lambda));
    }
  } else {
    mode_kind = "difference_symbol";
    if (mc.jets.size() != 1) fail(ErrorCode::Precondition, "perturbed compare takes exactly one jet");
    const auto& pj = mc.jets[0];
    auto recs = sweep_records(cfg, mc.eps);
    const int nm = static_cast<int>(mc.modes.size());
    const auto pc = a_coeffs(pj.k, sp);
    for (int i = 0; i < nm; ++i) {
      std::vector<ModeScatteringRecord> col;
      for (size_t e = 0; e < mc.eps.size(); ++e) col.push_back(recs[e * nm + i]);
      if (col[0].lambda == 0.0) continue;
      auto d = eps_derivative(mc.eps, col);
      st.modes.push_back(mc.modes[i]);
      st.lambda.push_back(col[0].lambda);
      st.measured.push_back(d.value);
      pt.modes.push_back(mc.modes[i]);
      pt.predicted.push_back(kMeasuredOrientation *
                             predicted_mode_difference(pc, sp, mc.h0, pj.L, pj.W, mc.modes[i]));
    }
  }
  auto rep = report_compare(st, pt, cfg.compare.correction_terms);
  std::ostringstream os;
  os << "lambda";
  for (int q = 0; q < mc.n; ++q) os << ",mode" << q;
  os << ",re_measured,im_measured,re_predicted,im_predicted,re_ratio,im_ratio,deviation,corrected_deviation\n";
  for (const auto& r : rep.rows) {
    os << fmt(r.lambda);
    for (int v : r.mode) os << "," << v;
    for (cplx z : {r.measured, r.predicted, r.ratio}) os << "," << fmt(z.real()) << "," << fmt(z.imag());
    os << "," << fmt(r.deviation) << "," << fmt(r.corrected_deviation) << "\n";
  }
  w.csv(os.str());
  json j = to_json(rep);
  j["prediction"] = mode_kind;
  j["orientation"] = kMeasuredOrientation;
  w.report(j);
}

JetAssumption assumption_of(const std::string& s) {
  if (s == "L_zero") return JetAssumption::L_zero;
  if (s == "joint") return JetAssumption::joint;
  return JetAssumption::W_zero;
}

json fit_json(const FitResult& f) {
  json c = json::array(), cc = json::array();
  for (auto z : f.corrections) c.push_back(cj(z));
  for (auto z : f.constrained_corrections) cc.push_back(cj(z));
  json j = {{"slope", f.slope}, {"coefficient", cj(f.coefficient)}, {"corrections", c},
            {"residual", f.residual}, {"reliable", f.reliable}, {"modes_used", f.modes_used.size()}};
  if (f.has_constrained) {
    j["constrained_coefficient"] = cj(f.constrained_coefficient);
    j["constrained_corrections"] = cc;
    j["constrained_residual"] = f.constrained_residual;
  }
  return j;
}

json jet_json(const RecoveredJet& r) {
  json j = {{"k", r.k},
            {"assumption", to_string(r.assumption)},
            {"H_hat", mj(r.H_hat)},
            {"L_hat", mj(r.L_hat)},
            {"scalar_hat", cj(r.scalar_hat)},
            {"T_hat", r.T_hat},
            {"conditioning", r.conditioning},
            {"consistency_residual", r.consistency_residual},
            {"determinant", cj(r.determinant)}};
  j["W_hat"] = r.W_hat ? cj(*r.W_hat) : json(nullptr);
  return j;
}

std::vector<std::vector<int>> seeded_directions(const ExperimentConfig& cfg) {
  const int n = cfg.model.n;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<int> comp(-cfg.invert.max_component, cfg.invert.max_component);
  std::set<std::vector<int>> seen;
  std::vector<std::vector<int>> dirs;
  int attempts = 0;
  while (static_cast<int>(dirs.size()) < cfg.invert.random_directions && attempts++ < 10000) {
    std::vector<int> d(n);
    for (int& v : d) v = comp(rng);
    int g = 0;
    for (int v : d) g = std::gcd(g, std::abs(v));
    if (g == 0) continue;
    for (int& v : d) v /= g;
    for (int v : d)
      if (v != 0) {
        if (v < 0)
          for (int& u : d) u = -u;
        break;
      }
    if (seen.insert(d).second) dirs.push_back(d);
  }
  return dirs;
}

void run_invert(const ExperimentConfig& cfg, Writer& w) {
  const auto& mc = cfg.model;
  if (mc.kind != "cylinder") fail(ErrorCode::Precondition, "invert needs a cylinder model");
  if (mc.jets.empty()) fail(ErrorCode::Precondition, "invert needs truth jets in model.jets");
  const SpectralPoint sp = spectral(mc);
  auto modes = mc.modes;
  for (const auto& d : seeded_directions(cfg)) {
    double len = std::sqrt(lambda2_of(mc.h0, d));
    for (int m = 1; m * len <= cfg.invert.max_length; ++m)
      if (m * len >= cfg.invert.min_length) {
        std::vector<int> mode(d);
        for (int& v : mode) v *= m;
        modes.push_back(mode);
      }
  }
  auto fm = cylinder_forward_model(make_torus(mc), mc.jets[0].cutoff, modes, sp, mc.jets, cfg.numeric, cfg.threads);
  auto diffs = mode_differences(mc.h0, fm.data, fm.simulate({}));
  FitOptions fo;
  fo.correction_terms = cfg.invert.correction_terms;
  auto groups = group_by_direction(diffs);
  std::vector<double> slopes;
  json fits = json::array();
  for (auto& [dir, samples] : groups) {
    if (static_cast<int>(samples.size()) < fo.min_modes) continue;
    slopes.push_back(fit_power_law(samples, fo).slope);
  }
  if (slopes.empty()) fail(ErrorCode::Precondition, "no direction has enough modes to fit");
  std::sort(slopes.begin(), slopes.end());
  const double med = slopes.size() % 2 ? slopes[slopes.size() / 2]
                                       : 0.5 * (slopes[slopes.size() / 2 - 1] + slopes[slopes.size() / 2]);
  json detection = nullptr;
  int k;
  if (cfg.invert.k) {
    k = *cfg.invert.k;
  } else {
    auto od = detect_order_from_slope(med, sp);
    k = od.k;
    detection = {{"k", od.k}, {"slope", od.slope}, {"gap", od.gap}};
  }
  fo.expected_order = order_bookkeeping(k, sp);
  std::vector<DirectionalAmplitude> amps;
  for (auto& [dir, samples] : groups) {
    if (static_cast<int>(samples.size()) < fo.min_modes) continue;
    auto f = fit_power_law(samples, fo);
    amps.push_back({dir, f.constrained_coefficient / kMeasuredOrientation});
    json fj = fit_json(f);
    fj["direction"] = std::vector<double>(dir.data(), dir.data() + dir.size());
    fits.push_back(fj);
  }
  const auto pc = a_coeffs(k, sp);
  auto rj = recover_jet(amps, k, sp, mc.h0, assumption_of(cfg.invert.assumption), pc);
  json out = {{"k", k},
              {"median_slope", med},
              {"detection", detection},
              {"fits", fits},
              {"jet", jet_json(rj)},
              {"gate", {{"A1", cj(pc.A1)}, {"A2", cj(pc.A2)}, {"T1", cj(pc.T1)}, {"T2", cj(pc.T2)}, {"D", cj(pc.D)}}},
              {"modes", modes.size()}};
  std::ostringstream os;
  os << "direction,slope,re_amplitude,im_amplitude,residual\n";
  for (const auto& f : fits) {
    std::ostringstream d;
    for (size_t i = 0; i < f["direction"].size(); ++i) d << (i ? " " : "") << f["direction"][i].get<double>();
    os << d.str() << "," << fmt(f["slope"].get<double>()) << "," << fmt(f["constrained_coefficient"][0].get<double>())
       << "," << fmt(f["constrained_coefficient"][1].get<double>()) << "," << fmt(f["residual"].get<double>()) << "\n";
  }
  w.csv(os.str());
  w.report(out);
}

void run_layerstrip(const ExperimentConfig& cfg, Writer& w) {
  const auto& mc = cfg.model;
  if (mc.kind != "cylinder") fail(ErrorCode::Precondition, "layerstrip needs a cylinder model");
  const SpectralPoint sp = spectral(mc);
  auto fm = cylinder_forward_model(make_torus(mc), cfg.layerstrip.cutoff, mc.modes, sp, mc.jets, cfg.numeric, cfg.threads);
  LayerStripOptions lo;
  lo.assumption = assumption_of(cfg.layerstrip.assumption);
  lo.noise_floor = cfg.layerstrip.noise_floor;
  lo.fit.correction_terms = cfg.layerstrip.correction_terms;
  lo.orientation = kMeasuredOrientation;
  auto res = layer_strip(fm, cfg.layerstrip.K_max, sp, lo);
  json rounds = json::array();
  std::ostringstream os;
  os << "round,k,slope,gap,T_hat,re_scalar_hat,im_scalar_hat,conditioning,consistency_residual,max_difference\n";
  for (const auto& r : res.rounds) {
    json fits = json::array();
    for (const auto& f : r.fits) {
      json fj = fit_json(f.fit);
      fj["direction"] = std::vector<double>(f.direction.data(), f.direction.data() + f.direction.size());
      fits.push_back(fj);
    }
    rounds.push_back({{"round", r.round},
                      {"order", {{"k", r.order.k}, {"slope", r.order.slope}, {"gap", r.order.gap}}},
                      {"fits", fits},
                      {"jet", jet_json(r.jet)},
                      {"max_difference", r.max_difference}});
    os << r.round << "," << r.order.k << "," << fmt(r.order.slope) << "," << fmt(r.order.gap) << ","
       << fmt(r.jet.T_hat) << "," << fmt(r.jet.scalar_hat.real()) << "," << fmt(r.jet.scalar_hat.imag()) << ","
       << fmt(r.jet.conditioning) << "," << fmt(r.jet.consistency_residual) << "," << fmt(r.max_difference) << "\n";
  }
  w.csv(os.str());
  w.report({{"rounds", rounds}, {"termination", res.termination}, {"final_max_difference", res.final_max_difference}});
}

StepOrder step_order_of(const std::string& s) {
  if (s == "gamma_first") return StepOrder::GammaFirst;
  if (s == "delta_first") return StepOrder::DeltaFirst;
  return StepOrder::Joint;
}

void run_normalform(const ExperimentConfig& cfg, Writer& w) {
  const auto& nb = cfg.normalform;
  std::vector<MetricJet> inputs;
  if (nb.jet) {
    inputs.push_back(*nb.jet);
  } else {
    std::mt19937_64 rng(cfg.seed);
    for (int i = 0; i < nb.count; ++i) inputs.push_back(random_metric_jet(cfg.model.n, nb.N, rng));
  }
  const StepOrder order = step_order_of(nb.order);
  json items = json::array();
  std::ostringstream os;
  os << "index,n,N,normal,idempotent,truncation_stable,pullback_consistent\n";
  int idx = 0;
  bool all_ok = true;
  for (const auto& in : inputs) {
    auto mf = model_form(in, nb.N, order);
    const bool normal = mf.jet.normal_through(nb.N);
    const bool idem = model_form(mf.jet, nb.N, order).change.is_identity();
    bool trunc = true;
    if (nb.N >= 1) trunc = model_form(in.truncated(nb.N - 1), nb.N - 1, order).jet == mf.jet.truncated(nb.N - 1);
    const bool consistent = pullback(in.truncated(nb.N), mf.change) == mf.jet;
    all_ok = all_ok && normal && idem && trunc && consistent;
    json gr = json::array();
    for (size_t m = 0; m < mf.gamma_response.size(); ++m)
      gr.push_back({{"m", m + 1}, {"response", rational_to_json(mf.gamma_response[m])}});
    items.push_back({{"input", to_json(in)}, {"change", to_json(mf.change)}, {"model_form", to_json(mf.jet)},
                     {"gamma_response", gr}, {"normal", normal}, {"idempotent", idem},
                     {"truncation_stable", trunc}, {"pullback_consistent", consistent}});
    os << idx++ << "," << in.n << "," << nb.N << "," << normal << "," << idem << "," << trunc << "," << consistent << "\n";
  }
  w.csv(os.str());
  w.report({{"jets", items},
            {"order", nb.order},
            {"gamma_factor",
             "gamma_l at l = m + 1 solved from the exact linear response of a_m; for a model-form "
             "jet the response is 2m, so gamma_(m+1) = -a_m / (2m)"},
            {"all_invariants_hold", all_ok}});
  if (!all_ok) fail(ErrorCode::Numerical, "normal-form invariant violated");
}

}  // namespace

RunResult run(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  RunResult res;
  try {
    std::filesystem::create_directories(out);
    Writer w{cfg, out, res};
    if (cfg.experiment == "constants") run_constants(cfg, w);
    else if (cfg.experiment == "sweep") run_sweep(cfg, w);
    else if (cfg.experiment == "compare") run_compare(cfg, w);
    else if (cfg.experiment == "invert") run_invert(cfg, w);
    else if (cfg.experiment == "layerstrip") run_layerstrip(cfg, w);
    else if (cfg.experiment == "normalform") run_normalform(cfg, w);
    else fail(ErrorCode::Config, "config key 'experiment': unsupported value");
  } catch (const Error& e) {
    res.exit_code = exit_code_for(e.code());
    res.error = {{"error", {{"code", to_string(e.code())}, {"exit_code", res.exit_code}, {"message", e.what()}}},
                 {"experiment", cfg.experiment},
                 {"config_hash", config_hash(cfg.source)},
                 {"versions", module_versions()}};
  } catch (const std::filesystem::filesystem_error& e) {
    res.exit_code = kExitConfig;
    res.error = {{"error", {{"code", "config"}, {"exit_code", kExitConfig}, {"message", e.what()}}}};
  }
  if (!res.error.is_null()) {
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    std::ofstream f(out / "error.json");
    if (f) {
      f << res.error.dump(2) << "\n";
      res.artifacts.push_back(out / "error.json");
    }
  }
  return res;
}

}  // namespace ahs::cli
