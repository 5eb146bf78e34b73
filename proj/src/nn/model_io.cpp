#include "msf/nn/model_io.hpp"

#include <cmath>
#include <limits>

#include "json.hpp"
#include "msf/datagen.hpp"

namespace msf::nn {

using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json flat(const std::vector<double>& v) { return ordered_json(v); }
ordered_json flat(const Matrix& m) { return ordered_json(m.d); }

std::vector<double> take_array(const ordered_json& j, const char* key,
                               std::size_t expect) {
  const auto& a = j.at(key);
  if (!a.is_array())
    throw parse_error(std::string("model field ") + key + " is not an array");
  std::vector<double> v = a.get<std::vector<double>>();
  if (expect != std::size_t(-1) && v.size() != expect)
    throw parse_error(std::string("model field ") + key + " has " +
                      std::to_string(v.size()) + " entries, expected " +
                      std::to_string(expect));
  return v;
}

void fill_matrix(const ordered_json& j, const char* key, Matrix& m) {
  m.d = take_array(j, key, m.size());
}

double number_or_nan(const ordered_json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null())
    return std::numeric_limits<double>::quiet_NaN();
  return j.at(key).get<double>();
}

}  // namespace

int ModelFile::n_inputs() const {
  if (mlp) return mlp->n_inputs();
  if (cnn) return cnn->n_inputs();
  if (rbf) return rbf->n_inputs();
  throw validation_error("model file holds no model");
}

int ModelFile::n_outputs() const {
  if (mlp) return mlp->n_outputs();
  if (cnn) return cnn->n_outputs();
  if (rbf) return rbf->n_outputs();
  throw validation_error("model file holds no model");
}

void ModelFile::validate() const {
  const int engaged = int(bool(mlp)) + int(bool(cnn)) + int(bool(rbf));
  if (engaged != 1)
    throw validation_error("model file must hold exactly one model");
  if ((kind == "mlp") != bool(mlp) || (kind == "cnn") != bool(cnn) ||
      (kind == "rbf") != bool(rbf))
    throw validation_error("model kind does not match the stored model");
  if (input_kind != "none" && input_kind != "state_scale")
    throw validation_error("unknown input normalization: " + input_kind);
  if (input_kind == "state_scale" && !(input_divisor > 0))
    throw validation_error("input divisor must be positive");
  if (target_mean.size() != target_scale.size())
    throw validation_error("target normalization length mismatch");
  if (!target_mean.empty() &&
      target_mean.size() != std::size_t(n_outputs()))
    throw validation_error("target normalization width mismatch");
}

Matrix ModelFile::forward(const Matrix& X) const {
  if (mlp) return mlp->forward(X);
  if (cnn) return cnn->forward(X);
  if (rbf) return rbf->forward(X);
  throw validation_error("model file holds no model");
}

PatternMeasures ModelFile::predict_measures(const MsfConfig& config) const {
  validate();
  if (n_outputs() != 5)
    throw validation_error("model does not predict the five measures");
  const int n_cells = config.n_rows * config.n_cols;
  if (n_cells != n_inputs())
    throw validation_error("configuration size " + std::to_string(n_cells) +
                           " does not match model input size " +
                           std::to_string(n_inputs()));
  Matrix X(1, n_cells);
  const double div = input_kind == "state_scale" ? input_divisor : 1.0;
  for (int i = 0; i < n_cells; ++i) X.d[i] = double(config.states[i]) / div;
  const Matrix out = forward(X);
  std::array<double, 5> v{};
  for (int j = 0; j < 5; ++j) {
    v[j] = out.at(0, j);
    if (!target_mean.empty()) v[j] = v[j] * target_scale[j] + target_mean[j];
  }
  return measures_from_array(v);
}

std::string model_to_json(const ModelFile& m) {
  m.validate();
  ordered_json j;
  j["format_version"] = kModelFormatVersion;

  ordered_json arch;
  ordered_json weights;
  if (m.mlp) {
    arch["kind"] = "mlp";
    arch["layer_sizes"] = m.mlp->layer_sizes;
    arch["hidden_activation"] = activation_name(m.mlp->hidden_activation);
    ordered_json layers = ordered_json::array();
    for (const auto& l : m.mlp->layers) {
      ordered_json lj;
      lj["W"] = flat(l.W);
      lj["b"] = flat(l.b);
      layers.push_back(std::move(lj));
    }
    weights["layers"] = std::move(layers);
  } else if (m.cnn) {
    const CnnConfig& c = m.cnn->cfg;
    arch["kind"] = "cnn";
    arch["input_h"] = c.input_h;
    arch["input_w"] = c.input_w;
    arch["input_ch"] = c.input_ch;
    arch["conv_channels"] = c.conv_channels;
    arch["kernel"] = c.kernel;
    arch["pool"] = c.pool;
    arch["fc_units"] = c.fc_units;
    arch["n_outputs"] = c.n_outputs;
    arch["dropout_conv"] = c.dropout_conv;
    arch["dropout_fc"] = c.dropout_fc;
    ordered_json convs = ordered_json::array();
    for (const auto& l : m.cnn->convs) {
      ordered_json lj;
      lj["W"] = flat(l.W);
      lj["b"] = flat(l.b);
      convs.push_back(std::move(lj));
    }
    weights["convs"] = std::move(convs);
    weights["fc1"] = {{"W", flat(m.cnn->fc1.W)}, {"b", flat(m.cnn->fc1.b)}};
    weights["out"] = {{"W", flat(m.cnn->out.W)}, {"b", flat(m.cnn->out.b)}};
  } else {
    arch["kind"] = "rbf";
    arch["n_inputs"] = m.rbf->n_in;
    arch["n_outputs"] = m.rbf->n_out;
    arch["sigma"] = m.rbf->sigma;
    arch["n_centers"] = m.rbf->n_centers();
    weights["centers"] = flat(m.rbf->centers);
    weights["weights"] = flat(m.rbf->weights);
    weights["bias"] = flat(m.rbf->bias);
  }
  j["arch"] = std::move(arch);

  ordered_json norm;
  norm["input"] = {{"kind", m.input_kind}, {"divisor", m.input_divisor}};
  norm["target"] = {{"mean", m.target_mean}, {"scale", m.target_scale}};
  j["normalization"] = std::move(norm);
  j["weights"] = std::move(weights);

  ordered_json meta;
  meta["seed"] = m.meta.seed;
  meta["optimizer"] = m.meta.optimizer;
  meta["final_train_loss"] = m.meta.final_train_loss;
  meta["best_val_mse"] = m.meta.best_val_mse;  // NaN serializes as null
  meta["steps"] = m.meta.steps;
  meta["l2_lambda"] = m.meta.l2_lambda;
  meta["l2_mode"] = m.meta.l2_mode;
  j["train_meta"] = std::move(meta);

  return j.dump() + "\n";
}

ModelFile model_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(std::string("model file is not valid JSON: ") +
                      e.what());
  }
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion)
      throw parse_error("unsupported model format_version " +
                        std::to_string(version) + ", expected " +
                        std::to_string(kModelFormatVersion));

    ModelFile m;
    const ordered_json& arch = j.at("arch");
    const ordered_json& weights = j.at("weights");
    m.kind = arch.at("kind").get<std::string>();
    if (m.kind == "mlp") {
      MlpModel net;
      net.layer_sizes = arch.at("layer_sizes").get<std::vector<int>>();
      if (net.layer_sizes.size() < 2)
        throw parse_error("mlp needs at least two layer sizes");
      net.hidden_activation = activation_from_name(
          arch.at("hidden_activation").get<std::string>());
      const auto& layers = weights.at("layers");
      if (layers.size() != net.layer_sizes.size() - 1)
        throw parse_error("mlp layer count mismatch");
      for (std::size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
        DenseLayer layer;
        layer.W = Matrix(net.layer_sizes[l + 1], net.layer_sizes[l]);
        fill_matrix(layers.at(l), "W", layer.W);
        layer.b = take_array(layers.at(l), "b", net.layer_sizes[l + 1]);
        net.layers.push_back(std::move(layer));
      }
      m.mlp = std::move(net);
    } else if (m.kind == "cnn") {
      CnnConfig c;
      c.input_h = arch.at("input_h").get<int>();
      c.input_w = arch.at("input_w").get<int>();
      c.input_ch = arch.at("input_ch").get<int>();
      c.conv_channels = arch.at("conv_channels").get<std::vector<int>>();
      c.kernel = arch.at("kernel").get<int>();
      c.pool = arch.at("pool").get<int>();
      c.fc_units = arch.at("fc_units").get<int>();
      c.n_outputs = arch.at("n_outputs").get<int>();
      c.dropout_conv = arch.at("dropout_conv").get<double>();
      c.dropout_fc = arch.at("dropout_fc").get<double>();
      SeededRng rng(0);
      CnnModel net = CnnModel::create(c, rng);
      const auto& convs = weights.at("convs");
      if (convs.size() != net.convs.size())
        throw parse_error("cnn conv stage count mismatch");
      for (std::size_t l = 0; l < net.convs.size(); ++l) {
        fill_matrix(convs.at(l), "W", net.convs[l].W);
        net.convs[l].b = take_array(convs.at(l), "b", net.convs[l].b.size());
      }
      fill_matrix(weights.at("fc1"), "W", net.fc1.W);
      net.fc1.b = take_array(weights.at("fc1"), "b", net.fc1.b.size());
      fill_matrix(weights.at("out"), "W", net.out.W);
      net.out.b = take_array(weights.at("out"), "b", net.out.b.size());
      m.cnn = std::move(net);
    } else if (m.kind == "rbf") {
      RbfModel net;
      net.n_in = arch.at("n_inputs").get<int>();
      net.n_out = arch.at("n_outputs").get<int>();
      net.sigma = arch.at("sigma").get<double>();
      const int n_centers = arch.at("n_centers").get<int>();
      if (net.n_in < 1 || net.n_out < 1 || n_centers < 0 ||
          !(net.sigma > 0))
        throw parse_error("rbf architecture fields out of range");
      net.centers = Matrix(n_centers, net.n_in);
      fill_matrix(weights, "centers", net.centers);
      net.weights = Matrix(n_centers, net.n_out);
      fill_matrix(weights, "weights", net.weights);
      net.bias = take_array(weights, "bias", net.n_out);
      m.rbf = std::move(net);
    } else {
      throw parse_error("unknown model kind: " + m.kind);
    }

    const ordered_json& norm = j.at("normalization");
    m.input_kind = norm.at("input").at("kind").get<std::string>();
    m.input_divisor = norm.at("input").at("divisor").get<double>();
    m.target_mean = take_array(norm.at("target"), "mean", std::size_t(-1));
    m.target_scale = take_array(norm.at("target"), "scale", std::size_t(-1));

    const ordered_json& meta = j.at("train_meta");
    m.meta.seed = meta.at("seed").get<std::uint64_t>();
    m.meta.optimizer = meta.at("optimizer").get<std::string>();
    m.meta.final_train_loss = number_or_nan(meta, "final_train_loss");
    m.meta.best_val_mse = number_or_nan(meta, "best_val_mse");
    m.meta.steps = meta.at("steps").get<int>();
    m.meta.l2_lambda = meta.at("l2_lambda").get<double>();
    m.meta.l2_mode = meta.at("l2_mode").get<std::string>();

    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const ModelFile& m, const std::string& path) {
  write_text_file(path, model_to_json(m));
}

ModelFile load_model(const std::string& path) {
  return model_from_json(read_text_file(path));
}

}  // namespace msf::nn
