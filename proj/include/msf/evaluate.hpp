#pragma once
// Metrics and reports: tolerance accuracy with published reference columns,
// accuracy-vs-tolerance curves, coefficient of determination, 10-fold
// penalty-weight selection, and the runtime prediction gate that checks a
// configuration analytically before trusting the surrogate.

#include "msf/datagen.hpp"
#include "msf/farfield.hpp"
#include "msf/nn/model_io.hpp"
#include "msf/nn/scg.hpp"

namespace msf {

using nn::Matrix;

// Targets with theta_max below this are excluded from azimuth accuracy: the
// azimuth of a near-broadside beam is ill-conditioned.
inline constexpr double kPhiExclusionThetaDeg = 2.0;

struct ToleranceSpec {
  // Ascending per measure; dB for the ratio measures, degrees for the rest.
  std::vector<double> directivity_db = {0.1, 0.25, 0.5};
  std::vector<double> pslr_db = {0.1, 0.25, 0.5};
  std::vector<double> angle_deg = {1.0, 2.0, 5.0};
  std::vector<double> hpbw_deg = {0.25, 0.5, 1.0};

  void validate() const;
};

struct MeasureAccuracy {
  std::string measure;
  std::string unit;  // "dB" | "deg"
  std::vector<double> tolerances;
  std::vector<double> accuracy;
  std::vector<double> reference;  // published values; NaN where none exist
};

struct AccuracyReport {
  std::string model_desc;
  std::size_t n_samples = 0;
  std::size_t phi_excluded = 0;
  // Set when evaluation was restricted to rows the runtime gate qualifies;
  // the surrogate is then scored only on predictions it would actually make.
  bool gated = false;
  FilterCriteria gate;
  std::size_t gate_rejected = 0;
  // directivity_db, pslr_db, theta_max_deg, phi_max_deg, angle_avg_deg,
  // hpbw_deg; accuracy is non-decreasing along each row's tolerances.
  std::vector<MeasureAccuracy> rows;
};

// Rows are (directivity, pslr, theta, phi, hpbw) in physical units. Azimuth
// errors are circular; rows whose target theta_max is below the exclusion
// limit are dropped from azimuth accuracy (a vacuous azimuth set scores 1).
AccuracyReport tolerance_accuracy(const Matrix& predictions,
                                  const Matrix& targets,
                                  const ToleranceSpec& spec);

// Published accuracy for a model kind at a (measure, tolerance) pair; NaN
// when the study reported none. Measures follow AccuracyReport row names.
double reference_accuracy(const std::string& model_kind,
                          const std::string& measure, double tolerance);
// Fills the reference column of each report row for the given model kind.
void attach_reference(AccuracyReport& report, const std::string& model_kind);

std::string accuracy_report_text(const AccuracyReport& report);
std::string accuracy_report_json(const AccuracyReport& report);

// 1 - SS_res / SS_tot over flattened entries. Constant targets are an error.
double r_squared(const Matrix& predictions, const Matrix& targets);

// Fine accuracy-vs-tolerance sweep, one `measure,model,tolerance,accuracy`
// row per point: dB measures 0.01..1.00 step 0.01, degree measures
// 0.1..10.0 step 0.1.
std::string accuracy_curves_csv(const Matrix& predictions,
                                const Matrix& targets,
                                const std::string& model_name);
void emit_curves(const Matrix& predictions, const Matrix& targets,
                 const std::string& model_name, const std::string& path);

// ---------------------------------------------------------------------------
// Cross-validation for the weight-penalty factor
// ---------------------------------------------------------------------------

struct CvEntry {
  double lambda = 0.0;
  std::vector<double> fold_mse;
  double mean_mse = 0.0;
};

struct CvResult {
  double best_lambda = 0.0;  // argmin of mean_mse; ties take the smaller
  std::vector<CvEntry> table;
  std::size_t n_used = 0;    // rows after optional subsampling
  std::vector<int> fold_of;  // fold id per used row, values 0..9
};

// Deterministic 10-fold split by seeded shuffle (cfg.seed); folds and the
// per-fold initial weights are identical across candidates, so the sweep
// isolates the penalty. subsample > 0 caps the row count by a seeded draw.
CvResult cross_validate_lambda(const Matrix& X, const Matrix& Y,
                               const std::vector<double>& lambdas,
                               const nn::TrainConfig& cfg,
                               const std::vector<int>& layer_sizes,
                               std::size_t subsample = 10000);

std::string cv_table_text(const CvResult& cv);

// ---------------------------------------------------------------------------
// Dataset/model glue
// ---------------------------------------------------------------------------

struct SplitPrediction {
  Matrix pred;    // physical units
  Matrix target;  // physical units
  std::size_t n_dropped = 0;  // rows skipped for non-finite targets
};

// Runs the surrogate over one split of a corpus. Inputs are scaled per the
// model's stored input normalization; predictions are de-standardized.
SplitPrediction predict_split(const nn::ModelFile& model, const Dataset& ds,
                              const std::string& split);

// Training matrices for one split: model-ready inputs and standardized
// targets (dataset statistics). Rows with non-finite targets are dropped.
struct SplitMatrices {
  Matrix X, Y;
  std::size_t n_dropped = 0;
};
SplitMatrices split_matrices(const Dataset& ds, const std::string& split);

// ---------------------------------------------------------------------------
// Prediction gate
// ---------------------------------------------------------------------------

struct GatedPrediction {
  bool accepted = false;
  PatternMeasures analytical;  // always computed (the gate input)
  PatternMeasures predicted;   // meaningful only when accepted
};

// Checks the configuration analytically against the criteria; only passing
// configurations are handed to the surrogate, failures carry the analytical
// measures back as the rejection diagnosis.
GatedPrediction predict_gated(const MsfConfig& config,
                              const nn::ModelFile& model,
                              const FilterCriteria& criteria,
                              const PhysicalParams& params,
                              const AngularGrid& grid);
GatedPrediction predict_gated(const MsfConfig& config,
                              const nn::ModelFile& model,
                              const FilterCriteria& criteria);

}  // namespace msf
