#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ahs/models.hpp"
#include "ahs/radial.hpp"

namespace ahs {

// One per-mode difference ds at boundary frequency lambda = |j|_{h0}.
struct DifferenceSample {
  std::vector<int> mode;
  double lambda = 0.0;
  cplx ds{0.0, 0.0};
  double quality = 0.0;
};

struct FitOptions {
  int correction_terms = 1;             // c_1/lambda, c_2/lambda^2 ...
  std::optional<double> expected_order;
  double unreliable_residual = 0.02;    // RMS log-residual above which the fit is tagged
  int min_modes = 5;
  double min_ratio = 4.0;
};

struct FitResult {
  double slope = 0.0;
  cplx coefficient{0.0, 0.0};
  std::vector<cplx> corrections;
  double residual = 0.0;
  bool reliable = false;
  std::vector<std::vector<int>> modes_used;
  bool has_constrained = false;
  cplx constrained_coefficient{0.0, 0.0};   // amplitude at the expected order
  std::vector<cplx> constrained_corrections;
  double constrained_residual = 0.0;
};

FitResult fit_power_law(const std::vector<DifferenceSample>& samples, const FitOptions& opt = {});

struct OrderDetection {
  int k = 0;
  double slope = 0.0;
  double gap = 0.0;
};

OrderDetection detect_order(const std::vector<DifferenceSample>& samples, const SpectralPoint& sp,
                            const FitOptions& opt = {});
OrderDetection detect_order_from_slope(double slope, const SpectralPoint& sp);

enum class JetAssumption { L_zero, W_zero, joint };
const char* to_string(JetAssumption a);

// amplitude of the difference symbol at the h0-unit covector along xi
struct DirectionalAmplitude {
  Vector xi;
  cplx amplitude{0.0, 0.0};
};

struct RecoveredJet {
  int k = 0;
  JetAssumption assumption = JetAssumption::W_zero;
  Matrix H_hat;
  cplx scalar_hat{0.0, 0.0};
  Matrix L_hat;
  std::optional<cplx> W_hat;
  double T_hat = 0.0;               // trace(h0^-1 L_hat)
  double conditioning = 0.0;        // smallest singular value of the design
  double consistency_residual = 0.0;
  cplx determinant{0.0, 0.0};
};

RecoveredJet recover_jet(const std::vector<DirectionalAmplitude>& amps, int k,
                         const SpectralPoint& sp, const Matrix& h0, JetAssumption assumption,
                         const std::optional<PerturbationCoefficients>& coeffs = std::nullopt);

// ------------------------------------------------------------ layer stripping

struct ForwardModel {
  BoundaryMetric bm;
  Cutoff cutoff;
  std::vector<std::vector<int>> modes;
  // scattering eigenvalues of the reference model with the given jets, one per mode
  std::function<std::vector<ModeScatteringRecord>(const std::vector<PerturbationJet>&)> simulate;
  std::vector<ModeScatteringRecord> data;
};

// Forward model backed by the radial engine; data simulated from `truth` jets.
ForwardModel cylinder_forward_model(const BoundaryMetric& bm, const Cutoff& cutoff,
                                    const std::vector<std::vector<int>>& modes,
                                    const SpectralPoint& sp,
                                    const std::vector<PerturbationJet>& truth,
                                    const SolveOptions& opt = {}, int threads = 1);

struct LayerStripOptions {
  JetAssumption assumption = JetAssumption::W_zero;
  FitOptions fit;
  double noise_floor = 1e-9;   // relative size of differences treated as "no signal"
  double orientation = -1.0;   // measured difference = orientation * symbol
};

struct DirectionFit {
  Vector direction;
  FitResult fit;
};

struct StripRound {
  int round = 0;
  OrderDetection order;
  std::vector<DirectionFit> fits;
  RecoveredJet jet;
  double max_difference = 0.0;
};

struct LayerStripResult {
  std::vector<StripRound> rounds;
  std::string termination;   // "k_max" | "no_signal"
  double final_max_difference = 0.0;
};

LayerStripResult layer_strip(const ForwardModel& fm, int K_max, const SpectralPoint& sp,
                             const LayerStripOptions& opt = {});

// Groups samples by primitive direction of the mode vector.
std::vector<std::pair<Vector, std::vector<DifferenceSample>>> group_by_direction(
    const std::vector<DifferenceSample>& samples);

std::vector<DifferenceSample> mode_differences(const Matrix& h0,
                                               const std::vector<ModeScatteringRecord>& data,
                                               const std::vector<ModeScatteringRecord>& reference);

}  // namespace ahs
