#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "ahs_cli/cli.hpp"

namespace ahs::cli {

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  fail(ErrorCode::Config, "config key '" + path + "': " + what);
}

std::string join(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

void check_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
  if (!j.is_object()) bad(path.empty() ? "<root>" : path, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) bad(join(path, it.key()), "unknown key");
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) bad(path, "expected a number");
  double v = j.get<double>();
  if (!std::isfinite(v)) bad(path, "must be finite");
  return v;
}

int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) bad(path, "expected an integer");
  return j.get<int>();
}

cplx complex_value(const json& j, const std::string& path) {
  if (j.is_number()) return {number(j, path), 0.0};
  if (j.is_array() && j.size() == 2) return {number(j[0], path + "[0]"), number(j[1], path + "[1]")};
  bad(path, "expected a number or [re, im]");
}

std::vector<int> int_list(const json& j, const std::string& path) {
  if (!j.is_array()) bad(path, "expected an array of integers");
  std::vector<int> r;
  for (size_t i = 0; i < j.size(); ++i) r.push_back(integer(j[i], path + "[" + std::to_string(i) + "]"));
  return r;
}

Matrix matrix(const json& j, const std::string& path, int n) {
  if (!j.is_array() || static_cast<int>(j.size()) != n) bad(path, "expected an " + std::to_string(n) + "x" + std::to_string(n) + " array");
  Matrix m(n, n);
  for (int r = 0; r < n; ++r) {
    if (!j[r].is_array() || static_cast<int>(j[r].size()) != n) bad(path, "row " + std::to_string(r) + " has the wrong length");
    for (int c = 0; c < n; ++c) m(r, c) = number(j[r][c], path);
  }
  return m;
}

Cutoff cutoff(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) bad(path, "expected [x_a, x_b]");
  Cutoff c{number(j[0], path + "[0]"), number(j[1], path + "[1]")};
  if (!(0.0 < c.x_a && c.x_a < c.x_b)) bad(path, "need 0 < x_a < x_b");
  return c;
}

std::string choice(const json& j, const std::string& path, const std::set<std::string>& options) {
  if (!j.is_string()) bad(path, "expected a string");
  auto s = j.get<std::string>();
  if (!options.count(s)) bad(path, "unsupported value '" + s + "'");
  return s;
}

PerturbationJet parse_jet(const json& j, const std::string& path, const Matrix& h0) {
  check_keys(j, path, {"k", "L", "L_conformal", "W", "cutoff"});
  const int n = static_cast<int>(h0.rows());
  PerturbationJet pj;
  if (!j.contains("k")) bad(join(path, "k"), "required");
  pj.k = integer(j["k"], join(path, "k"));
  if (pj.k < 1) bad(join(path, "k"), "must be >= 1");
  if (j.contains("L") && j.contains("L_conformal")) bad(join(path, "L_conformal"), "conflicts with L");
  pj.L = Matrix::Zero(n, n);
  if (j.contains("L")) pj.L = matrix(j["L"], join(path, "L"), n);
  if (j.contains("L_conformal")) pj.L = number(j["L_conformal"], join(path, "L_conformal")) * h0;
  if (j.contains("W")) pj.W = number(j["W"], join(path, "W"));
  if (j.contains("cutoff")) pj.cutoff = cutoff(j["cutoff"], join(path, "cutoff"));
  if ((pj.L - pj.L.transpose()).cwiseAbs().maxCoeff() > 0.0) bad(join(path, "L"), "must be symmetric");
  return pj;
}

std::vector<std::vector<int>> mode_grid(const json& j, const std::string& path, const Matrix& h0) {
  check_keys(j, path, {"directions", "min_length", "max_length"});
  for (const char* req : {"directions", "min_length", "max_length"})
    if (!j.contains(req)) bad(join(path, req), "required");
  const int n = static_cast<int>(h0.rows());
  double lo = number(j["min_length"], join(path, "min_length"));
  double hi = number(j["max_length"], join(path, "max_length"));
  if (!(0.0 <= lo && lo <= hi)) bad(join(path, "max_length"), "need 0 <= min_length <= max_length");
  const auto& d = j["directions"];
  if (!d.is_array() || d.empty()) bad(join(path, "directions"), "expected a non-empty array");
  std::vector<std::vector<int>> modes;
  for (size_t i = 0; i < d.size(); ++i) {
    auto p = join(path, "directions") + "[" + std::to_string(i) + "]";
    auto dir = int_list(d[i], p);
    if (static_cast<int>(dir.size()) != n) bad(p, "direction has the wrong dimension");
    Vector v(n);
    for (int q = 0; q < n; ++q) v[q] = dir[q];
    double len = std::sqrt(lambda2_of(h0, dir));
    if (!(len > 0.0)) bad(p, "zero direction");
    for (int m = 1; m * len <= hi + 1e-12; ++m) {
      if (m * len < lo - 1e-12) continue;
      std::vector<int> mode(n);
      for (int q = 0; q < n; ++q) mode[q] = m * dir[q];
      modes.push_back(mode);
    }
  }
  return modes;
}

ModelConfig parse_model(const json& j, const std::string& path) {
  check_keys(j, path, {"kind", "n", "h0", "zeta", "jets", "eps", "modes", "mode_grid", "blackhole"});
  ModelConfig mc;
  if (j.contains("kind")) mc.kind = choice(j["kind"], join(path, "kind"), {"cylinder", "blackhole"});
  if (mc.kind == "blackhole") {
    mc.n = 2;
    if (j.contains("n") && integer(j["n"], join(path, "n")) != 2) bad(join(path, "n"), "black-hole models have n = 2");
    if (j.contains("h0")) bad(join(path, "h0"), "not used by black-hole models");
    mc.h0 = Matrix::Identity(1, 1);   // modes are {l}
  } else {
    if (j.contains("n")) mc.n = integer(j["n"], join(path, "n"));
    if (mc.n < 1 || mc.n > 3) bad(join(path, "n"), "must be 1, 2 or 3");
    mc.h0 = j.contains("h0") ? matrix(j["h0"], join(path, "h0"), mc.n) : Matrix::Identity(mc.n, mc.n);
    Eigen::LLT<Matrix> llt(mc.h0);
    if ((mc.h0 - mc.h0.transpose()).cwiseAbs().maxCoeff() > 0.0 || llt.info() != Eigen::Success)
      bad(join(path, "h0"), "must be symmetric positive definite");
  }
  if (j.contains("zeta")) mc.zeta = complex_value(j["zeta"], join(path, "zeta"));
  if (j.contains("jets")) {
    const auto& a = j["jets"];
    if (!a.is_array()) bad(join(path, "jets"), "expected an array");
    Matrix hj = mc.kind == "blackhole" ? Matrix::Identity(2, 2) : mc.h0;
    for (size_t i = 0; i < a.size(); ++i)
      mc.jets.push_back(parse_jet(a[i], join(path, "jets") + "[" + std::to_string(i) + "]", hj));
  }
  if (j.contains("eps")) {
    const auto& e = j["eps"];
    mc.eps.clear();
    if (e.is_number()) {
      mc.eps.push_back(number(e, join(path, "eps")));
    } else if (e.is_array() && !e.empty()) {
      for (size_t i = 0; i < e.size(); ++i) mc.eps.push_back(number(e[i], join(path, "eps")));
    } else {
      bad(join(path, "eps"), "expected a number or a non-empty array");
    }
  }
  if (j.contains("modes") && j.contains("mode_grid")) bad(join(path, "mode_grid"), "conflicts with modes");
  const int mdim = mc.kind == "blackhole" ? 1 : mc.n;
  if (j.contains("modes")) {
    const auto& m = j["modes"];
    if (!m.is_array()) bad(join(path, "modes"), "expected an array");
    for (size_t i = 0; i < m.size(); ++i) {
      auto p = join(path, "modes") + "[" + std::to_string(i) + "]";
      auto v = int_list(m[i], p);
      if (static_cast<int>(v.size()) != mdim) bad(p, "mode has the wrong dimension");
      if (mc.kind == "blackhole" && v[0] < 0) bad(p, "l must be >= 0");
      mc.modes.push_back(v);
    }
  }
  if (j.contains("mode_grid")) mc.modes = mode_grid(j["mode_grid"], join(path, "mode_grid"), mc.h0);
  if (j.contains("blackhole")) {
    if (mc.kind != "blackhole") bad(join(path, "blackhole"), "only valid with kind = blackhole");
    const auto& b = j["blackhole"];
    auto bp = join(path, "blackhole");
    check_keys(b, bp, {"type", "m", "Lambda", "r_far"});
    if (b.contains("type")) mc.blackhole.type = choice(b["type"], join(bp, "type"), {"schwarzschild", "desitter_schwarzschild"});
    if (b.contains("m")) mc.blackhole.m = number(b["m"], join(bp, "m"));
    if (b.contains("Lambda")) mc.blackhole.Lambda = number(b["Lambda"], join(bp, "Lambda"));
    if (b.contains("r_far")) mc.blackhole.r_far = number(b["r_far"], join(bp, "r_far"));
    if (!(mc.blackhole.m > 0.0)) bad(join(bp, "m"), "must be positive");
  }
  return mc;
}

void parse_numeric(const json& j, const std::string& path, SolveOptions& o) {
  check_keys(j, path, {"frobenius_order", "rtol", "start_rule", "match_scale", "series_tol", "quality_tol"});
  if (j.contains("frobenius_order")) o.frobenius_order = integer(j["frobenius_order"], join(path, "frobenius_order"));
  if (j.contains("rtol")) o.rtol = number(j["rtol"], join(path, "rtol"));
  if (j.contains("start_rule")) o.start_rule = number(j["start_rule"], join(path, "start_rule"));
  if (j.contains("match_scale")) o.match_scale = number(j["match_scale"], join(path, "match_scale"));
  if (j.contains("series_tol")) o.series_tol = number(j["series_tol"], join(path, "series_tol"));
  if (j.contains("quality_tol")) o.quality_tol = number(j["quality_tol"], join(path, "quality_tol"));
  if (o.frobenius_order < 2 || o.frobenius_order > 40) bad(join(path, "frobenius_order"), "must be in [2, 40]");
  if (!(o.rtol > 0.0 && o.rtol < 1e-3)) bad(join(path, "rtol"), "must be in (0, 1e-3)");
  if (!(o.start_rule > 0.0)) bad(join(path, "start_rule"), "must be positive");
  if (!(o.match_scale > 0.0)) bad(join(path, "match_scale"), "must be positive");
}

}  // namespace

Rational rational_from_json(const json& j, const std::string& where) {
  try {
    if (j.is_number_integer()) return Rational(j.get<long long>());
    if (j.is_string()) return Rational(j.get<std::string>());
    if (j.is_array() && j.size() == 2) {
      auto part = [&](const json& v) {
        if (v.is_number_integer()) return boost::multiprecision::cpp_int(v.get<long long>());
        if (v.is_string()) return boost::multiprecision::cpp_int(v.get<std::string>());
        bad(where, "rational parts must be integers or integer strings");
      };
      auto den = part(j[1]);
      if (den == 0) bad(where, "zero denominator");
      return Rational(part(j[0]), den);
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    bad(where, "malformed rational");
  }
  bad(where, "expected [num, den], an integer or a \"p/q\" string");
}

namespace {

MetricJet parse_metric_jet(const json& j, const std::string& path) {
  check_keys(j, path, {"n", "N", "a", "b", "c"});
  for (const char* req : {"n", "N", "a", "b", "c"})
    if (!j.contains(req)) bad(join(path, req), "required");
  MetricJet mj;
  mj.n = integer(j["n"], join(path, "n"));
  mj.N = integer(j["N"], join(path, "N"));
  if (mj.n < 1 || mj.N < 0) bad(path, "need n >= 1 and N >= 0");
  auto arr = [&](const json& v, const std::string& p, size_t len) {
    if (!v.is_array() || v.size() != len) bad(p, "expected an array of length " + std::to_string(len));
  };
  arr(j["a"], join(path, "a"), mj.N + 1);
  arr(j["b"], join(path, "b"), mj.N + 1);
  arr(j["c"], join(path, "c"), mj.N + 1);
  for (int m = 0; m <= mj.N; ++m) {
    auto ap = join(path, "a") + "[" + std::to_string(m) + "]";
    mj.a.push_back(rational_from_json(j["a"][m], ap));
    auto bp = join(path, "b") + "[" + std::to_string(m) + "]";
    arr(j["b"][m], bp, mj.n);
    RVec b;
    for (int q = 0; q < mj.n; ++q) b.push_back(rational_from_json(j["b"][m][q], bp));
    mj.b.push_back(b);
    auto cp = join(path, "c") + "[" + std::to_string(m) + "]";
    arr(j["c"][m], cp, mj.n);
    RMat c;
    for (int r = 0; r < mj.n; ++r) {
      arr(j["c"][m][r], cp, mj.n);
      RVec row;
      for (int q = 0; q < mj.n; ++q) row.push_back(rational_from_json(j["c"][m][r][q], cp));
      c.push_back(row);
    }
    mj.c.push_back(c);
  }
  try {
    mj.validate();
  } catch (const Error& e) {
    bad(path, e.what());
  }
  return mj;
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  check_keys(j, "", {"experiment", "seed", "threads", "model", "numeric", "output", "constants",
                     "compare", "invert", "layerstrip", "normalform"});
  ExperimentConfig cfg;
  cfg.source = j;
  if (!j.contains("experiment")) bad("experiment", "required");
  cfg.experiment = choice(j["experiment"], "experiment",
                          {"sweep", "compare", "invert", "layerstrip", "normalform", "constants"});
  if (j.contains("seed")) {
    const auto& sd = j["seed"];
    if (!sd.is_number_unsigned() && !(sd.is_number_integer() && sd.get<std::int64_t>() >= 0))
      bad("seed", "expected a non-negative integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("threads")) {
    cfg.threads = integer(j["threads"], "threads");
    if (cfg.threads < 1) bad("threads", "must be >= 1");
  }
  if (j.contains("model")) cfg.model = parse_model(j["model"], "model");
  if (j.contains("numeric")) parse_numeric(j["numeric"], "numeric", cfg.numeric);
  if (j.contains("output")) {
    const auto& o = j["output"];
    check_keys(o, "output", {"prefix", "formats"});
    if (o.contains("prefix")) {
      if (!o["prefix"].is_string() || o["prefix"].get<std::string>().empty()) bad("output.prefix", "expected a non-empty string");
      cfg.prefix = o["prefix"].get<std::string>();
      if (cfg.prefix.find('/') != std::string::npos) bad("output.prefix", "must not contain '/'");
    }
    if (o.contains("formats")) {
      if (!o["formats"].is_array() || o["formats"].empty()) bad("output.formats", "expected a non-empty array");
      cfg.write_csv = cfg.write_json = false;
      for (const auto& f : o["formats"]) {
        auto s = choice(f, "output.formats", {"csv", "json"});
        (s == "csv" ? cfg.write_csv : cfg.write_json) = true;
      }
    }
  }
  // experiment blocks: only the block matching the experiment may appear
  for (const char* blk : {"constants", "compare", "invert", "layerstrip", "normalform"})
    if (j.contains(blk) && cfg.experiment != blk) bad(blk, "block does not match experiment '" + cfg.experiment + "'");

  if (j.contains("constants")) {
    const auto& b = j["constants"];
    check_keys(b, "constants", {"k", "zeta"});
    if (b.contains("k")) cfg.constants.k = int_list(b["k"], "constants.k");
    if (b.contains("zeta")) {
      if (!b["zeta"].is_array()) bad("constants.zeta", "expected an array");
      for (size_t i = 0; i < b["zeta"].size(); ++i)
        cfg.constants.zeta.push_back(complex_value(b["zeta"][i], "constants.zeta[" + std::to_string(i) + "]"));
    }
    for (int k : cfg.constants.k)
      if (k < 1) bad("constants.k", "orders must be >= 1");
  }
  if (j.contains("compare")) {
    const auto& b = j["compare"];
    check_keys(b, "compare", {"correction_terms"});
    if (b.contains("correction_terms")) cfg.compare.correction_terms = integer(b["correction_terms"], "compare.correction_terms");
  }
  if (j.contains("invert")) {
    const auto& b = j["invert"];
    check_keys(b, "invert", {"assumption", "k", "correction_terms", "random_directions", "max_component", "min_length", "max_length"});
    if (b.contains("assumption")) cfg.invert.assumption = choice(b["assumption"], "invert.assumption", {"L_zero", "W_zero", "joint"});
    if (b.contains("k")) cfg.invert.k = integer(b["k"], "invert.k");
    if (b.contains("correction_terms")) cfg.invert.correction_terms = integer(b["correction_terms"], "invert.correction_terms");
    if (b.contains("random_directions")) cfg.invert.random_directions = integer(b["random_directions"], "invert.random_directions");
    if (b.contains("max_component")) cfg.invert.max_component = integer(b["max_component"], "invert.max_component");
    if (b.contains("min_length")) cfg.invert.min_length = number(b["min_length"], "invert.min_length");
    if (b.contains("max_length")) cfg.invert.max_length = number(b["max_length"], "invert.max_length");
    if (cfg.invert.random_directions < 0) bad("invert.random_directions", "must be >= 0");
    if (cfg.invert.max_component < 1) bad("invert.max_component", "must be >= 1");
  }
  if (j.contains("layerstrip")) {
    const auto& b = j["layerstrip"];
    check_keys(b, "layerstrip", {"K_max", "assumption", "noise_floor", "correction_terms", "cutoff"});
    if (b.contains("K_max")) cfg.layerstrip.K_max = integer(b["K_max"], "layerstrip.K_max");
    if (b.contains("assumption")) cfg.layerstrip.assumption = choice(b["assumption"], "layerstrip.assumption", {"L_zero", "W_zero", "joint"});
    if (b.contains("noise_floor")) cfg.layerstrip.noise_floor = number(b["noise_floor"], "layerstrip.noise_floor");
    if (b.contains("correction_terms")) cfg.layerstrip.correction_terms = integer(b["correction_terms"], "layerstrip.correction_terms");
    if (b.contains("cutoff")) cfg.layerstrip.cutoff = cutoff(b["cutoff"], "layerstrip.cutoff");
    if (cfg.layerstrip.K_max < 1) bad("layerstrip.K_max", "must be >= 1");
  }
  if (j.contains("normalform")) {
    const auto& b = j["normalform"];
    check_keys(b, "normalform", {"N", "order", "count", "jet"});
    if (b.contains("N")) cfg.normalform.N = integer(b["N"], "normalform.N");
    if (b.contains("order")) cfg.normalform.order = choice(b["order"], "normalform.order", {"joint", "gamma_first", "delta_first"});
    if (b.contains("count")) cfg.normalform.count = integer(b["count"], "normalform.count");
    if (b.contains("jet")) cfg.normalform.jet = parse_metric_jet(b["jet"], "normalform.jet");
    if (cfg.normalform.N < 0) bad("normalform.N", "must be >= 0");
    if (cfg.normalform.count < 1) bad("normalform.count", "must be >= 1");
    if (cfg.normalform.jet && cfg.normalform.N > cfg.normalform.jet->N) bad("normalform.N", "exceeds the jet order");
  }

  // physical preconditions, re-validated at load (these keep their own error codes)
  const bool needs_spectral = cfg.experiment != "normalform" && cfg.experiment != "constants";
  if (needs_spectral) {
    if (!j.contains("model")) bad("model", "required for experiment '" + cfg.experiment + "'");
    if (!j["model"].contains("zeta")) bad("model.zeta", "required");
    SpectralPoint sp(cfg.model.zeta, cfg.model.n);
    (void)sp;
    if (cfg.model.modes.empty()) bad("model.modes", "no modes selected");
    for (const auto& pj : cfg.model.jets) pj.cutoff.validate();
  }
  if (cfg.experiment == "constants" && cfg.constants.zeta.empty() && !(j.contains("model") && j["model"].contains("zeta")))
    bad("constants.zeta", "required when model.zeta is absent");
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Config, "cannot open config file '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, false);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::Config, std::string("config parse error: ") + e.what());
  }
  return parse_config(j);
}

std::string config_hash(const json& j) {
  const std::string s = j.dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json module_versions() {
  const std::string v = "0.3.0";
  return json{{"specfun", v}, {"models", v}, {"radial", v}, {"symbolcalc", v},
              {"inverse", v}, {"normalform", v}, {"cli", v}};
}

}  // namespace ahs::cli
