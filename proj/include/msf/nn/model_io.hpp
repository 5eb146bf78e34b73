#pragma once
// Versioned model persistence: one JSON document holding the architecture
// descriptor, input/target normalization, flat weight arrays in declared
// order and training metadata. Round trips are lossless, so reloaded models
// predict bit-identically.

#include <optional>

#include "msf/core.hpp"
#include "msf/measures.hpp"
#include "msf/nn/cnn.hpp"
#include "msf/nn/rbf.hpp"

namespace msf::nn {

inline constexpr int kModelFormatVersion = 1;

struct TrainMeta {
  std::uint64_t seed = 0;
  std::string optimizer;  // "scg" | "sgd" | "least_squares"
  double final_train_loss = 0.0;
  double best_val_mse = 0.0;
  int steps = 0;
  double l2_lambda = 0.0;
  std::string l2_mode = "sum";
};

struct ModelFile {
  std::string kind;  // "mlp" | "cnn" | "rbf"; exactly one model engaged
  std::optional<MlpModel> mlp;
  std::optional<CnnModel> cnn;
  std::optional<RbfModel> rbf;

  // Input preparation: "state_scale" divides raw unit-cell states by
  // input_divisor; "none" passes features through.
  std::string input_kind = "none";
  double input_divisor = 1.0;
  // Target standardization; empty vectors mean identity.
  std::vector<double> target_mean, target_scale;

  TrainMeta meta;

  int n_inputs() const;
  int n_outputs() const;
  // Raw network output on prepared features.
  Matrix forward(const Matrix& X) const;
  // Full chain for measure surrogates: state scaling, forward pass,
  // de-standardization. Requires 5 outputs and state_scale inputs.
  PatternMeasures predict_measures(const MsfConfig& config) const;

  void validate() const;
};

std::string model_to_json(const ModelFile& m);
ModelFile model_from_json(const std::string& text);
void save_model(const ModelFile& m, const std::string& path);
ModelFile load_model(const std::string& path);

}  // namespace msf::nn
