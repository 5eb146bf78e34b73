#include "msf/datagen.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace msf {

using ordered_json = nlohmann::ordered_json;

const char* filter_mode_name(FilterMode m) {
  return m == FilterMode::tag_only ? "tag_only" : "reject";
}

FilterMode filter_mode_from_name(const std::string& name) {
  if (name == "tag_only") return FilterMode::tag_only;
  if (name == "reject") return FilterMode::reject;
  throw validation_error("unknown filter mode: " + name);
}

std::array<double, 5> measures_to_array(const PatternMeasures& m) {
  return {m.directivity_db, m.pslr_db, m.theta_max_deg, m.phi_max_deg,
          m.hpbw_deg};
}

PatternMeasures measures_from_array(const std::array<double, 5>& a) {
  return {a[0], a[1], a[2], a[3], a[4]};
}

std::size_t Dataset::count_split(const std::string& split) const {
  std::size_t n = 0;
  for (const auto& r : records)
    if (r.split == split) ++n;
  return n;
}

// ---------------------------------------------------------------------------
// Steering and entropy
// ---------------------------------------------------------------------------

std::vector<double> continuous_steering_phases(double theta_deg,
                                               double phi_deg, int n_rows,
                                               int n_cols,
                                               const PhysicalParams& params) {
  params.validate();
  const double k0 = params.wave_number();
  const double th = deg2rad(theta_deg), ph = deg2rad(phi_deg);
  std::vector<double> phases(static_cast<std::size_t>(n_rows) * n_cols);
  for (int r = 0; r < n_rows; ++r)
    for (int c = 0; c < n_cols; ++c)
      phases[std::size_t(r) * n_cols + c] =
          -k0 * relative_phase_shift(c + 1, r + 1, th, ph, params);
  return phases;
}

MsfConfig generate_steering_config(double theta_deg, double phi_deg,
                                   int n_rows, int n_cols, int n_states,
                                   const PhysicalParams& params) {
  const std::vector<double> phases =
      continuous_steering_phases(theta_deg, phi_deg, n_rows, n_cols, params);
  MsfConfig cfg;
  cfg.n_rows = n_rows;
  cfg.n_cols = n_cols;
  cfg.n_states = n_states;
  cfg.states.resize(phases.size());
  for (std::size_t k = 0; k < phases.size(); ++k) {
    const long long q =
        std::llround(phases[k] * n_states / (2.0 * kPi));
    cfg.states[k] =
        static_cast<UnitCellState>(((q % n_states) + n_states) % n_states);
  }
  cfg.validate();
  return cfg;
}

void inject_entropy(MsfConfig& config, double ratio, SeededRng& rng) {
  config.validate();
  if (!(ratio >= 0.0) || ratio > 1.0)
    throw validation_error("entropy ratio must lie in [0, 1]");
  const int cells = config.n_cells();
  int k = static_cast<int>(std::ceil(ratio * cells));
  k = std::min(k, cells);
  if (k == 0) return;
  // Partial Fisher-Yates: first k entries are a uniform draw without
  // replacement.
  std::vector<int> pos(cells);
  for (int i = 0; i < cells; ++i) pos[i] = i;
  for (int i = 0; i < k; ++i) {
    const int j =
        i + static_cast<int>(rng.uniform_int(std::uint64_t(cells - i)));
    std::swap(pos[i], pos[j]);
  }
  for (int i = 0; i < k; ++i)
    config.states[pos[i]] =
        static_cast<UnitCellState>(rng.uniform_int(config.n_states));
}

bool interpretability_filter(const PatternMeasures& m,
                             const FilterCriteria& criteria) {
  return m.directivity_db >= criteria.min_directivity_db &&
         m.pslr_db >= criteria.min_pslr_db;
}

// ---------------------------------------------------------------------------
// Split assignment
// ---------------------------------------------------------------------------

namespace {
constexpr std::uint64_t kSplitBlock = 100;
constexpr std::uint64_t kTrainPerBlock = 68;  // 85% of 100, then 80% of 85
constexpr std::uint64_t kValPerBlock = 17;
}  // namespace

const char* split_for_index(std::uint64_t seed, std::uint64_t index) {
  const std::uint64_t block = index / kSplitBlock;
  const std::uint64_t offset = index % kSplitBlock;
  std::vector<std::uint8_t> labels(kSplitBlock, 2);
  for (std::uint64_t i = 0; i < kTrainPerBlock; ++i) labels[i] = 0;
  for (std::uint64_t i = 0; i < kValPerBlock; ++i)
    labels[kTrainPerBlock + i] = 1;
  SeededRng rng = SeededRng(seed).child("split", block);
  rng.shuffle(labels);
  switch (labels[offset]) {
    case 0: return "train";
    case 1: return "validation";
    default: return "test";
  }
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

static SampleRecord generate_one(std::uint64_t seed, std::uint64_t index,
                                 const PhysicalParams& params,
                                 const AngularGrid& grid,
                                 const FilterCriteria& criteria,
                                 FilterMode mode, double theta_target_max_deg) {
  SeededRng rng = SeededRng(seed).child("sample", index);
  SampleRecord rec;
  rec.seed_index = index;
  constexpr int kMaxAttempts = 10000;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    rec.base_theta_deg = rng.uniform_range(0.0, theta_target_max_deg);
    rec.base_phi_deg = rng.uniform_range(0.0, 360.0);
    rec.entropy_ratio = rng.uniform_double();
    rec.config = generate_steering_config(rec.base_theta_deg, rec.base_phi_deg,
                                          12, 12, 8, params);
    inject_entropy(rec.config, rec.entropy_ratio, rng);
    rec.measures = extract_measures(rec.config, params, grid);
    const bool finite = std::isfinite(rec.measures.directivity_db) &&
                        std::isfinite(rec.measures.theta_max_deg) &&
                        std::isfinite(rec.measures.phi_max_deg) &&
                        std::isfinite(rec.measures.hpbw_deg);
    rec.interpretable =
        finite && interpretability_filter(rec.measures, criteria);
    if (mode == FilterMode::tag_only || rec.interpretable) {
      rec.split = split_for_index(seed, index);
      return rec;
    }
  }
  throw validation_error(
      "reject-mode generation exceeded " + std::to_string(kMaxAttempts) +
      " attempts at seed_index " + std::to_string(index) +
      "; filter criteria are likely unsatisfiable");
}

TargetNormalization compute_normalization(
    const std::vector<SampleRecord>& recs) {
  std::array<double, 5> sum{}, sumsq{};
  std::size_t n = 0;
  for (const auto& r : recs) {
    if (r.split != "train") continue;
    const auto t = measures_to_array(r.measures);
    bool finite = true;
    for (double v : t)
      if (!std::isfinite(v)) finite = false;
    if (!finite) continue;
    for (int k = 0; k < 5; ++k) {
      sum[k] += t[k];
      sumsq[k] += t[k] * t[k];
    }
    ++n;
  }
  if (n == 0)
    throw validation_error(
        "no finite train-split records to derive normalization from");
  TargetNormalization norm;
  for (int k = 0; k < 5; ++k) {
    norm.mean[k] = sum[k] / double(n);
    const double var =
        std::max(0.0, sumsq[k] / double(n) - norm.mean[k] * norm.mean[k]);
    norm.scale[k] = std::sqrt(var);
    if (norm.scale[k] < 1e-12)
      throw validation_error(std::string("target '") + kMeasureNames[k] +
                             "' is constant over the train split; cannot "
                             "standardize");
  }
  return norm;
}

Dataset generate_dataset(std::uint64_t count, std::uint64_t seed,
                         const PhysicalParams& params, const AngularGrid& grid,
                         const FilterCriteria& criteria, FilterMode mode,
                         double theta_target_max_deg,
                         const std::vector<SampleRecord>* resume_from,
                         const ProgressFn& progress) {
  if (count == 0) throw validation_error("sample count must be positive");
  params.validate();
  grid.validate();
  if (!(theta_target_max_deg > 0 && theta_target_max_deg <= 90))
    throw validation_error("steering cap must lie in (0, 90] degrees");

  Dataset ds;
  ds.params = params;
  ds.theta_step_deg = grid.theta_step_deg();
  ds.phi_step_deg = grid.phi_step_deg();
  ds.seed = seed;
  ds.theta_target_max_deg = theta_target_max_deg;
  ds.filter_mode = mode;
  ds.criteria = criteria;
  ds.records.resize(count);

  std::vector<std::uint8_t> have(count, 0);
  if (resume_from) {
    for (const auto& r : *resume_from) {
      if (r.seed_index < count) {
        ds.records[r.seed_index] = r;
        have[r.seed_index] = 1;
      }
    }
  }

  std::atomic<std::uint64_t> done{0};
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < static_cast<long long>(count); ++i) {
    if (!have[i])
      ds.records[i] = generate_one(seed, std::uint64_t(i), params, grid,
                                   criteria, mode, theta_target_max_deg);
    const std::uint64_t d = ++done;
    if (progress && (d % 250 == 0 || d == count)) {
#pragma omp critical(msf_datagen_progress)
      progress(d, count);
    }
  }

  ds.normalization = compute_normalization(ds.records);
  return ds;
}

// ---------------------------------------------------------------------------
// JSONL persistence
// ---------------------------------------------------------------------------

static ordered_json measures_obj(const PatternMeasures& m) {
  ordered_json j;
  j["directivity_db"] = m.directivity_db;
  if (std::isinf(m.pslr_db))
    j["pslr_db"] = "inf";
  else
    j["pslr_db"] = m.pslr_db;
  j["theta_max_deg"] = m.theta_max_deg;
  j["phi_max_deg"] = m.phi_max_deg;
  j["hpbw_deg"] = m.hpbw_deg;
  return j;
}

static PatternMeasures measures_from(const ordered_json& j) {
  PatternMeasures m;
  m.directivity_db = j.at("directivity_db").get<double>();
  if (j.at("pslr_db").is_string())
    m.pslr_db = std::numeric_limits<double>::infinity();
  else
    m.pslr_db = j.at("pslr_db").get<double>();
  m.theta_max_deg = j.at("theta_max_deg").get<double>();
  m.phi_max_deg = j.at("phi_max_deg").get<double>();
  m.hpbw_deg = j.at("hpbw_deg").get<double>();
  return m;
}

void save_dataset_jsonl(const Dataset& ds, const std::string& path) {
  std::ostringstream out;
  ordered_json h;
  h["format"] = "msf-dataset";
  h["format_version"] = 1;
  h["seed"] = ds.seed;
  h["count"] = ds.records.size();
  h["surface"] = {{"n_rows", ds.n_rows},
                  {"n_cols", ds.n_cols},
                  {"n_states", ds.n_states}};
  h["params"] = {{"wavelength", ds.params.wavelength},
                 {"cell_pitch", ds.params.cell_pitch},
                 {"reflection_amplitude", ds.params.reflection_amplitude}};
  h["grid"] = {{"theta_step_deg", ds.theta_step_deg},
               {"phi_step_deg", ds.phi_step_deg}};
  h["target_draw"] = {{"theta_max_deg", ds.theta_target_max_deg}};
  h["filter"] = {{"mode", filter_mode_name(ds.filter_mode)},
                 {"min_directivity_db", ds.criteria.min_directivity_db},
                 {"min_pslr_db", ds.criteria.min_pslr_db}};
  h["normalization"] = {
      {"input_scale", ds.n_states - 1},
      {"target_mean", ds.normalization.mean},
      {"target_scale", ds.normalization.scale}};
  h["counts"] = {{"train", ds.count_split("train")},
                 {"validation", ds.count_split("validation")},
                 {"test", ds.count_split("test")}};
  out << h.dump() << '\n';

  for (const auto& r : ds.records) {
    ordered_json j;
    j["config"] = ordered_json::array();
    for (UnitCellState s : r.config.states) j["config"].push_back(int(s));
    j["measures"] = measures_obj(r.measures);
    j["meta"] = {{"base_target_deg",
                  ordered_json::array({r.base_theta_deg, r.base_phi_deg})},
                 {"entropy_ratio", r.entropy_ratio},
                 {"seed_index", r.seed_index},
                 {"interpretable", r.interpretable}};
    j["split"] = r.split;
    out << j.dump() << '\n';
  }
  write_text_file(path, out.str());
}

Dataset load_dataset_jsonl(const std::string& path) {
  const std::string text = read_text_file(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line))
    throw parse_error("dataset file is empty: " + path);

  Dataset ds;
  try {
    const ordered_json h = ordered_json::parse(line);
    if (h.at("format").get<std::string>() != "msf-dataset")
      throw parse_error("not a dataset file: " + path);
    if (h.at("format_version").get<int>() != 1)
      throw validation_error("unsupported dataset format_version in " + path);
    ds.seed = h.at("seed").get<std::uint64_t>();
    ds.n_rows = h.at("surface").at("n_rows").get<int>();
    ds.n_cols = h.at("surface").at("n_cols").get<int>();
    ds.n_states = h.at("surface").at("n_states").get<int>();
    ds.params.wavelength = h.at("params").at("wavelength").get<double>();
    ds.params.cell_pitch = h.at("params").at("cell_pitch").get<double>();
    ds.params.reflection_amplitude =
        h.at("params").at("reflection_amplitude").get<double>();
    ds.theta_step_deg = h.at("grid").at("theta_step_deg").get<double>();
    ds.phi_step_deg = h.at("grid").at("phi_step_deg").get<double>();
    ds.theta_target_max_deg =
        h.at("target_draw").at("theta_max_deg").get<double>();
    ds.filter_mode =
        filter_mode_from_name(h.at("filter").at("mode").get<std::string>());
    ds.criteria.min_directivity_db =
        h.at("filter").at("min_directivity_db").get<double>();
    ds.criteria.min_pslr_db = h.at("filter").at("min_pslr_db").get<double>();
    const auto& nm = h.at("normalization");
    for (int k = 0; k < 5; ++k) {
      ds.normalization.mean[k] = nm.at("target_mean").at(k).get<double>();
      ds.normalization.scale[k] = nm.at("target_scale").at(k).get<double>();
    }
    const auto count = h.at("count").get<std::uint64_t>();
    ds.records.reserve(count);
  } catch (const validation_error&) {
    throw;
  } catch (const parse_error&) {
    throw;
  } catch (const std::exception& e) {
    throw parse_error(std::string("dataset header invalid: ") + e.what());
  }

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const ordered_json j = ordered_json::parse(line);
      SampleRecord r;
      r.config.n_rows = ds.n_rows;
      r.config.n_cols = ds.n_cols;
      r.config.n_states = ds.n_states;
      for (const auto& v : j.at("config"))
        r.config.states.push_back(
            static_cast<UnitCellState>(v.get<int>()));
      r.config.validate();
      r.measures = measures_from(j.at("measures"));
      const auto& meta = j.at("meta");
      r.base_theta_deg = meta.at("base_target_deg").at(0).get<double>();
      r.base_phi_deg = meta.at("base_target_deg").at(1).get<double>();
      r.entropy_ratio = meta.at("entropy_ratio").get<double>();
      r.seed_index = meta.at("seed_index").get<std::uint64_t>();
      r.interpretable = meta.at("interpretable").get<bool>();
      r.split = j.at("split").get<std::string>();
      if (r.split != "train" && r.split != "validation" && r.split != "test")
        throw validation_error("unknown split label: " + r.split);
      ds.records.push_back(std::move(r));
    } catch (const validation_error&) {
      throw;
    } catch (const std::exception& e) {
      throw parse_error("dataset line " + std::to_string(line_no) +
                        " invalid: " + e.what());
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Normalization helpers
// ---------------------------------------------------------------------------

std::vector<double> normalize_inputs(const MsfConfig& config) {
  config.validate();
  std::vector<double> x(config.states.size());
  const double scale = config.n_states - 1;
  for (std::size_t k = 0; k < x.size(); ++k)
    x[k] = double(config.states[k]) / scale;
  return x;
}

std::array<double, 5> standardize_targets(const PatternMeasures& m,
                                          const TargetNormalization& n) {
  const auto t = measures_to_array(m);
  std::array<double, 5> out{};
  for (int k = 0; k < 5; ++k) out[k] = (t[k] - n.mean[k]) / n.scale[k];
  return out;
}

PatternMeasures destandardize_targets(const std::array<double, 5>& v,
                                      const TargetNormalization& n) {
  std::array<double, 5> out{};
  for (int k = 0; k < 5; ++k) out[k] = v[k] * n.scale[k] + n.mean[k];
  return measures_from_array(out);
}

double audit_dataset(const Dataset& ds, std::size_t max_records) {
  const AngularGrid grid = ds.grid();
  std::size_t n = ds.records.size();
  if (max_records > 0) n = std::min(n, max_records);
  double worst = 0.0;
#pragma omp parallel for schedule(dynamic) reduction(max : worst)
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    const auto& r = ds.records[i];
    const PatternMeasures fresh = extract_measures(r.config, ds.params, grid);
    const auto a = measures_to_array(fresh), b = measures_to_array(r.measures);
    for (int k = 0; k < 5; ++k) {
      double d;
      if (std::isinf(a[k]) && std::isinf(b[k]))
        d = 0.0;
      else
        d = std::abs(a[k] - b[k]);
      worst = std::max(worst, d);
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Tabulated tables
// ---------------------------------------------------------------------------

static std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

static double parse_double(const std::string& s, std::size_t line_no) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw parse_error("line " + std::to_string(line_no) +
                      ": not a number: '" + s + "'");
  return v;
}

static void assign_block_split(TabulatedData& data, std::uint64_t seed) {
  // 85/15 per block of 100, permuted per block; same scheme as the sample
  // corpus but without a validation slice.
  data.is_test.assign(data.n, 0);
  SeededRng root(seed);
  for (int start = 0; start < data.n; start += 100) {
    std::vector<std::uint8_t> labels(100, 0);
    for (int i = 85; i < 100; ++i) labels[i] = 1;
    SeededRng rng = root.child("tsplit", std::uint64_t(start / 100));
    rng.shuffle(labels);
    for (int i = 0; i < 100 && start + i < data.n; ++i)
      data.is_test[start + i] = labels[i];
  }
}

TabulatedData ingest_tabulated_patterns(const std::string& path,
                                        std::uint64_t split_seed) {
  const std::string text = read_text_file(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.empty())
    throw parse_error("tabulated file has no header: " + path);
  const auto head = split_csv_line(line);
  TabulatedData data;
  bool in_targets = false;
  for (const auto& name : head) {
    if (!name.empty() && name[0] == 'f' && !in_targets) {
      ++data.n_features;
    } else if (!name.empty() && name[0] == 'p') {
      in_targets = true;
      ++data.n_targets;
    } else {
      throw parse_error("tabulated header must be f1..fk,p1..pm, got '" +
                        name + "'");
    }
  }
  if (data.n_features == 0 || data.n_targets == 0)
    throw parse_error("tabulated header needs at least one feature and one "
                      "target column");

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (static_cast<int>(cells.size()) != data.n_features + data.n_targets)
      throw parse_error("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(data.n_features + data.n_targets) +
                        " columns, got " + std::to_string(cells.size()));
    for (int k = 0; k < data.n_features; ++k)
      data.features.push_back(parse_double(cells[k], line_no));
    for (int k = 0; k < data.n_targets; ++k)
      data.targets.push_back(
          parse_double(cells[data.n_features + k], line_no));
    ++data.n;
  }
  if (data.n == 0) throw parse_error("tabulated file has no data rows");
  assign_block_split(data, split_seed);
  return data;
}

void write_tabulated_csv(const TabulatedData& data, const std::string& path) {
  std::ostringstream out;
  for (int k = 0; k < data.n_features; ++k)
    out << (k ? "," : "") << 'f' << (k + 1);
  for (int k = 0; k < data.n_targets; ++k) out << ",p" << (k + 1);
  out << '\n';
  for (int r = 0; r < data.n; ++r) {
    for (int k = 0; k < data.n_features; ++k)
      out << (k ? "," : "") << fmt9(data.feature(r, k));
    for (int k = 0; k < data.n_targets; ++k)
      out << ',' << fmt9(data.target(r, k));
    out << '\n';
  }
  write_text_file(path, out.str());
}

TabulatedData make_pattern_table(const MsfConfig& config,
                                 const PhysicalParams& params,
                                 const AngularGrid& grid,
                                 std::uint64_t split_seed) {
  const RadiationPattern pat = compute_pattern_fast(config, params, grid);
  TabulatedData data;
  data.n_features = 2;
  data.n_targets = 1;
  for (int t = 0; t < grid.n_theta(); ++t)
    for (int p = 0; p < grid.n_phi(); ++p) {
      data.features.push_back(grid.theta_deg[t]);
      data.features.push_back(grid.phi_deg[p]);
      data.targets.push_back(pat.power_at(t, p) / pat.peak_power);
      ++data.n;
    }
  assign_block_split(data, split_seed);
  return data;
}

}  // namespace msf
