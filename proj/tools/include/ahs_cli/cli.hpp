#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ahs/inverse.hpp"
#include "ahs/models.hpp"
#include "ahs/normalform.hpp"
#include "ahs/radial.hpp"

namespace ahs::cli {

using json = nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitGate = 3;
constexpr int kExitNumerical = 4;

int exit_code_for(ErrorCode code);

struct BlackHoleConfig {
  std::string type = "schwarzschild";   // | "desitter_schwarzschild"
  double m = 1.0;
  double Lambda = 0.0;
  double r_far = 0.0;
};

struct ModelConfig {
  std::string kind = "cylinder";        // | "blackhole"
  int n = 1;
  Matrix h0;
  cplx zeta{0.0, 0.0};
  std::vector<PerturbationJet> jets;
  std::vector<double> eps{0.0};
  std::vector<std::vector<int>> modes;
  BlackHoleConfig blackhole;
};

struct ConstantsBlock {
  std::vector<int> k{1};
  std::vector<cplx> zeta;               // empty: model zeta
};

struct CompareBlock {
  int correction_terms = 1;
};

struct InvertBlock {
  std::string assumption = "W_zero";
  std::optional<int> k;                 // detected when absent
  int correction_terms = 1;
  int random_directions = 0;            // extra seeded directions
  int max_component = 3;
  double min_length = 8.0;
  double max_length = 40.0;
};

struct LayerStripBlock {
  int K_max = 2;
  std::string assumption = "W_zero";
  double noise_floor = 1e-9;
  int correction_terms = 1;
  Cutoff cutoff;
};

struct NormalFormBlock {
  int N = 5;
  std::string order = "joint";
  int count = 1;                        // random jets when `jet` is absent
  std::optional<MetricJet> jet;
};

struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 0;
  int threads = 1;
  ModelConfig model;
  SolveOptions numeric;
  std::string prefix = "ahscat";
  bool write_csv = true;
  bool write_json = true;
  ConstantsBlock constants;
  CompareBlock compare;
  InvertBlock invert;
  LayerStripBlock layerstrip;
  NormalFormBlock normalform;
  json source;
};

// Strict parsing: unknown keys and malformed values raise Error(Config) naming the key path.
ExperimentConfig parse_config(const json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

std::string config_hash(const json& j);   // FNV-1a 64 of the canonical dump, hex
json module_versions();

struct RunResult {
  int exit_code = kExitOk;
  std::vector<std::filesystem::path> artifacts;
  json error;   // null on success
};

RunResult run(const ExperimentConfig& cfg, const std::filesystem::path& out);

// ------------------------------------------------------------ comparison

struct SweepTable {
  cplx zeta{0.0, 0.0};
  int n = 1;
  std::vector<std::vector<int>> modes;
  std::vector<double> lambda;
  std::vector<cplx> measured;
};

struct PredictionTable {
  cplx zeta{0.0, 0.0};
  int n = 1;
  std::vector<std::vector<int>> modes;
  std::vector<cplx> predicted;
};

struct CompareRow {
  std::vector<int> mode;
  double lambda = 0.0;
  cplx measured{0.0, 0.0};
  cplx predicted{0.0, 0.0};
  cplx ratio{0.0, 0.0};
  double deviation = 0.0;           // |ratio / g - 1|
  double corrected_deviation = 0.0; // |ratio / (g (1 + c1/lambda)) - 1|
};

struct CompareReport {
  std::vector<CompareRow> rows;
  cplx global_factor{0.0, 0.0};
  cplx c1{0.0, 0.0};
  double max_ratio_error = 0.0;      // max |ratio - 1|
  double max_deviation = 0.0;
  double max_corrected_deviation = 0.0;
  double convergence_slope = 0.0;    // log-log slope of the deviation against lambda
};

CompareReport report_compare(const SweepTable& sweep, const PredictionTable& pred,
                             int correction_terms = 1);

json to_json(const CompareReport& r);
json to_json(const MetricJet& mj);
json to_json(const CoordChangeJet& cc);
json rational_to_json(const Rational& q);
Rational rational_from_json(const json& j, const std::string& where);

std::string records_csv(const std::vector<ModeScatteringRecord>& recs, int mode_dim);

}  // namespace ahs::cli
