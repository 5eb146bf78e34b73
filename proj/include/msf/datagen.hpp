#pragma once
// Training-corpus machinery: steered base configurations, controlled entropy
// injection, interpretability filtering, deterministic split assignment and
// JSONL persistence. Every record is a pure function of (seed, seed_index),
// so generation is embarrassingly parallel and resumable by index.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "msf/measures.hpp"

namespace msf {

struct FilterCriteria {
  double min_directivity_db = 15.0;
  double min_pslr_db = 3.0;
};

enum class FilterMode { tag_only, reject };

const char* filter_mode_name(FilterMode m);
FilterMode filter_mode_from_name(const std::string& name);

struct SampleRecord {
  MsfConfig config;
  PatternMeasures measures;
  double base_theta_deg = 0.0;  // steering target before entropy injection
  double base_phi_deg = 0.0;
  double entropy_ratio = 0.0;
  std::uint64_t seed_index = 0;
  bool interpretable = true;  // filter flag (always true in reject mode)
  std::string split;          // "train" | "validation" | "test"
};

// Target order used everywhere a 5-vector of measures appears.
inline constexpr std::array<const char*, 5> kMeasureNames = {
    "directivity_db", "pslr_db", "theta_max_deg", "phi_max_deg", "hpbw_deg"};

std::array<double, 5> measures_to_array(const PatternMeasures& m);
PatternMeasures measures_from_array(const std::array<double, 5>& a);

struct TargetNormalization {
  std::array<double, 5> mean{};
  std::array<double, 5> scale{};  // population standard deviation
};

struct Dataset {
  int n_rows = 12, n_cols = 12, n_states = 8;
  PhysicalParams params;
  double theta_step_deg = 1.0, phi_step_deg = 1.0;
  std::uint64_t seed = 0;
  double theta_target_max_deg = 60.0;
  FilterMode filter_mode = FilterMode::tag_only;
  FilterCriteria criteria;
  TargetNormalization normalization;
  std::vector<SampleRecord> records;

  std::size_t count_split(const std::string& split) const;
  AngularGrid grid() const {
    return AngularGrid::uniform(theta_step_deg, phi_step_deg);
  }
};

// Continuous compensation profile that cophases the surface toward
// (theta, phi): negated wave-number * path-difference per cell, row-major.
std::vector<double> continuous_steering_phases(double theta_deg,
                                               double phi_deg, int n_rows,
                                               int n_cols,
                                               const PhysicalParams& params);

// Continuous profile rounded to the nearest of n_states uniform phases.
MsfConfig generate_steering_config(double theta_deg, double phi_deg,
                                   int n_rows, int n_cols, int n_states,
                                   const PhysicalParams& params);

// Redraws exactly ceil(ratio * n_cells) distinct cells uniformly over all
// states (a redraw may repeat the previous value). ratio in [0, 1].
void inject_entropy(MsfConfig& config, double ratio, SeededRng& rng);

// Closed thresholds: a measure exactly at its minimum passes.
bool interpretability_filter(const PatternMeasures& m,
                             const FilterCriteria& criteria);

// Deterministic split label for a sample index. Indices are grouped in
// blocks of 100 holding exactly 68 train / 17 validation / 15 test labels,
// permuted per block by a child stream of seed; any multiple-of-100 prefix
// splits exactly 85/15 then 80/20, and extending the corpus never relabels
// existing indices.
const char* split_for_index(std::uint64_t seed, std::uint64_t index);

using ProgressFn = std::function<void(std::uint64_t done, std::uint64_t total)>;

// Draws per index (child stream "sample"): theta uniform [0, theta_target_max],
// phi uniform [0, 360), entropy ratio uniform [0, 1); reject mode resamples
// within the same stream until the filter passes. Existing records from a
// previous shorter run may be passed to skip recomputation.
Dataset generate_dataset(std::uint64_t count, std::uint64_t seed,
                         const PhysicalParams& params, const AngularGrid& grid,
                         const FilterCriteria& criteria, FilterMode mode,
                         double theta_target_max_deg = 60.0,
                         const std::vector<SampleRecord>* resume_from = nullptr,
                         const ProgressFn& progress = nullptr);

// Line 0 is a header object (format, params, filter, normalization, counts);
// each further line is one record. Byte-identical for identical inputs.
void save_dataset_jsonl(const Dataset& ds, const std::string& path);
Dataset load_dataset_jsonl(const std::string& path);

// Inputs normalized to [0, 1] by the state scale Q - 1, row-major.
std::vector<double> normalize_inputs(const MsfConfig& config);

// Normalization statistics over finite train-split targets; throws
// validation_error naming the measure if a scale vanishes.
TargetNormalization compute_normalization(const std::vector<SampleRecord>& recs);
std::array<double, 5> standardize_targets(const PatternMeasures& m,
                                          const TargetNormalization& n);
PatternMeasures destandardize_targets(const std::array<double, 5>& v,
                                      const TargetNormalization& n);

// Recomputes measures for every stored config and returns the largest
// absolute deviation from the stored values (corpus audit).
double audit_dataset(const Dataset& ds, std::size_t max_records = 0);

// ---------------------------------------------------------------------------
// Tabulated regression tables (externally measured scenarios and the
// synthetic analytical stand-in). CSV header f1..fk,p1..pm.
// ---------------------------------------------------------------------------

struct TabulatedData {
  int n = 0, n_features = 0, n_targets = 0;
  std::vector<double> features;  // row-major n x n_features
  std::vector<double> targets;   // row-major n x n_targets
  std::vector<std::uint8_t> is_test;  // 85/15 block split

  double feature(int row, int col) const {
    return features[std::size_t(row) * n_features + col];
  }
  double target(int row, int col) const {
    return targets[std::size_t(row) * n_targets + col];
  }
};

TabulatedData ingest_tabulated_patterns(const std::string& path,
                                        std::uint64_t split_seed = 0);
void write_tabulated_csv(const TabulatedData& data, const std::string& path);

// Synthetic stand-in for an externally measured sweep: tabulates the
// analytical pattern of one config over the given grid as rows
// (theta_deg, phi_deg) -> power normalized to peak 1.
TabulatedData make_pattern_table(const MsfConfig& config,
                                 const PhysicalParams& params,
                                 const AngularGrid& grid,
                                 std::uint64_t split_seed = 0);

}  // namespace msf
