#include "msf/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"

namespace msf {

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Lobe detection
// ---------------------------------------------------------------------------
//
// Cells are mapped to canonical ids: when the grid contains the pole
// (theta = 0), the whole first row collapses to id 0; remaining cells get
// 1 + (t-1)*P + p. Ids are therefore ordered lexicographically by
// (theta_idx, phi_idx), which fixes every tie-break below.
//
// Flow rule per cell: move to the strictly-greater neighbor of maximal power
// (ties -> smallest id); on a plateau, move to the smallest equal neighbor
// with a smaller id than self; otherwise the cell is a peak. Plateaus thus
// drain to their lexicographically first cell and cycles are impossible.

namespace {

struct CellIndexer {
  int T, P;
  bool has_pole;
  int n_cells;

  explicit CellIndexer(const RadiationPattern& pat)
      : T(pat.grid.n_theta()),
        P(pat.grid.n_phi()),
        has_pole(pat.grid.theta_deg[0] == 0.0),
        n_cells(has_pole ? 1 + (T - 1) * P : T * P) {}

  int id_of(int t, int p) const {
    if (has_pole) return t == 0 ? 0 : 1 + (t - 1) * P + p;
    return t * P + p;
  }
  // Representative lattice coordinate of a canonical id.
  std::pair<int, int> coord_of(int id) const {
    if (has_pole) {
      if (id == 0) return {0, 0};
      return {1 + (id - 1) / P, (id - 1) % P};
    }
    return {id / P, id % P};
  }
};

}  // namespace

LobeMap detect_lobes(const RadiationPattern& pat) {
  const CellIndexer ix(pat);
  const int T = ix.T, P = ix.P;

  LobeMap map;
  map.n_theta = T;
  map.n_phi = P;

  std::vector<double> cp(ix.n_cells);  // power per canonical cell
  for (int id = 0; id < ix.n_cells; ++id) {
    auto [t, p] = ix.coord_of(id);
    cp[id] = pat.power_at(t, p);
  }

  const double pmin = *std::min_element(cp.begin(), cp.end());
  const double pmax = *std::max_element(cp.begin(), cp.end());
  map.degenerate = (pmin == pmax);

  std::vector<int> next(ix.n_cells);
  std::vector<int> nbr;
  nbr.reserve(P);
  for (int id = 0; id < ix.n_cells; ++id) {
    auto [t, p] = ix.coord_of(id);
    nbr.clear();
    if (ix.has_pole && t == 0) {
      if (T > 1)
        for (int q = 0; q < P; ++q) nbr.push_back(ix.id_of(1, q));
    } else {
      for (int dt = -1; dt <= 1; ++dt) {
        const int tt = t + dt;
        if (tt < 0 || tt >= T) continue;
        for (int dp = -1; dp <= 1; ++dp) {
          if (dt == 0 && dp == 0) continue;
          const int pp = (p + dp + P) % P;
          const int nid = ix.id_of(tt, pp);
          if (nid != id) nbr.push_back(nid);
        }
      }
    }
    int best_strict = -1, best_equal = -1;
    for (int nid : nbr) {
      if (cp[nid] > cp[id]) {
        if (best_strict < 0 || cp[nid] > cp[best_strict] ||
            (cp[nid] == cp[best_strict] && nid < best_strict))
          best_strict = nid;
      } else if (cp[nid] == cp[id] && nid < id) {
        if (best_equal < 0 || nid < best_equal) best_equal = nid;
      }
    }
    next[id] = best_strict >= 0 ? best_strict
                                : (best_equal >= 0 ? best_equal : id);
  }

  // Collapse pointer chains with path halving.
  auto find_root = [&next](int c) {
    while (next[c] != c) {
      next[c] = next[next[c]];
      c = next[c];
    }
    return c;
  };

  std::vector<int> label_of(ix.n_cells, -1);
  for (int id = 0; id < ix.n_cells; ++id) {
    if (next[id] == id) {
      auto [t, p] = ix.coord_of(id);
      label_of[id] = static_cast<int>(map.peaks.size());
      map.peaks.push_back({t, p, cp[id]});
    }
  }

  map.labels.resize(static_cast<std::size_t>(T) * P);
  for (int t = 0; t < T; ++t)
    for (int p = 0; p < P; ++p)
      map.labels[std::size_t(t) * P + p] = label_of[find_root(ix.id_of(t, p))];

  map.main_basin =
      map.labels[std::size_t(pat.peak_theta_idx) * P + pat.peak_phi_idx];
  return map;
}

// ---------------------------------------------------------------------------
// Directivity
// ---------------------------------------------------------------------------

double directivity(const RadiationPattern& pat) {
  const int T = pat.grid.n_theta(), P = pat.grid.n_phi();
  if (T < 2)
    throw validation_error("directivity needs at least two theta samples");
  const double dth = deg2rad(pat.grid.theta_step_deg());
  const double dph = deg2rad(pat.grid.phi_step_deg());
  double integral = 0.0;
  for (int t = 0; t < T; ++t) {
    double row = 0.0;
    for (int p = 0; p < P; ++p) row += pat.power_at(t, p);
    const double w = (t == 0 || t == T - 1) ? 0.5 : 1.0;
    integral += w * row * std::sin(pat.grid.theta_rad[t]);
  }
  integral *= dth * dph;
  if (!(integral > 0.0))
    throw numeric_error("radiated power integral is not positive");
  return 10.0 * std::log10(4.0 * kPi * pat.peak_power / integral);
}

// ---------------------------------------------------------------------------
// PSLR
// ---------------------------------------------------------------------------

double pslr(const RadiationPattern& pat, const LobeMap& lobes) {
  double second = -1.0;
  for (std::size_t b = 0; b < lobes.peaks.size(); ++b) {
    if (static_cast<int>(b) == lobes.main_basin) continue;
    second = std::max(second, lobes.peaks[b].power);
  }
  if (second <= 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(pat.peak_power / second);
}

// ---------------------------------------------------------------------------
// Direction of maximum radiation
// ---------------------------------------------------------------------------

// Parabola vertex offset through (-1, ym), (0, y0), (+1, yp) in sample units,
// clamped to half a step; 0 for flat or non-concave stencils.
static double parabolic_offset(double ym, double y0, double yp) {
  const double denom = ym - 2.0 * y0 + yp;
  if (!(denom < 0.0)) return 0.0;
  double d = 0.5 * (ym - yp) / denom;
  return std::clamp(d, -0.5, 0.5);
}

MaxDirection max_direction(const RadiationPattern& pat) {
  const int T = pat.grid.n_theta(), P = pat.grid.n_phi();
  const int t0 = pat.peak_theta_idx, p0 = pat.peak_phi_idx;

  double theta = pat.grid.theta_deg[t0];
  if (t0 > 0 && t0 < T - 1) {
    const double off =
        parabolic_offset(pat.power_at(t0 - 1, p0), pat.power_at(t0, p0),
                         pat.power_at(t0 + 1, p0));
    theta += off * pat.grid.theta_step_deg();
  }

  double phi = pat.grid.phi_deg[p0];
  if (P >= 3) {
    const double off = parabolic_offset(pat.power_at(t0, (p0 - 1 + P) % P),
                                        pat.power_at(t0, p0),
                                        pat.power_at(t0, (p0 + 1) % P));
    phi += off * pat.grid.phi_step_deg();
  }
  phi = std::fmod(phi + 360.0, 360.0);

  // Below one theta step the azimuth of the peak is numerically meaningless.
  if (theta < pat.grid.theta_step_deg()) phi = 0.0;
  return {theta, phi};
}

// ---------------------------------------------------------------------------
// Half-power beam width
// ---------------------------------------------------------------------------

HpbwResult hpbw(const RadiationPattern& pat, const MaxDirection& dir) {
  const int T = pat.grid.n_theta(), P = pat.grid.n_phi();
  if (T < 2)
    throw validation_error("hpbw needs at least two theta samples");
  const double dph = pat.grid.phi_step_deg();
  const int p_cut =
      static_cast<int>(std::lround(dir.phi_deg / dph)) % P;
  const int p_opp = (p_cut + (P + 1) / 2) % P;

  // Elevation cut: s in [-(T-1), T-1]; s >= 0 walks out on the beam column,
  // s < 0 continues across the pole on the opposite column.
  const int n = 2 * T - 1, mid = T - 1;
  std::vector<double> cut(n);
  for (int t = 0; t < T; ++t) {
    cut[mid + t] = pat.power_at(t, p_cut);
    cut[mid - t] = pat.power_at(t, p_opp);
  }

  int s_peak = 0;
  for (int s = 1; s < n; ++s)
    if (cut[s] > cut[s_peak]) s_peak = s;
  const double level = cut[s_peak] / 2.0;

  HpbwResult res;
  double lo = 0.0, hi = 0.0;  // crossing offsets in sample units
  bool found = false;
  for (int s = s_peak - 1; s >= 0; --s) {
    if (cut[s] < level) {
      lo = s + (level - cut[s]) / (cut[s + 1] - cut[s]);
      found = true;
      break;
    }
  }
  if (!found) {
    lo = 0.0;
    res.clamped_low = true;
  }
  found = false;
  for (int s = s_peak + 1; s < n; ++s) {
    if (cut[s] < level) {
      hi = s - (level - cut[s]) / (cut[s - 1] - cut[s]);
      found = true;
      break;
    }
  }
  if (!found) {
    hi = n - 1;
    res.clamped_high = true;
  }
  res.width_deg = (hi - lo) * pat.grid.theta_step_deg();
  return res;
}

// ---------------------------------------------------------------------------
// Aggregate + JSON
// ---------------------------------------------------------------------------

PatternMeasures extract_measures(const RadiationPattern& pat) {
  PatternMeasures m;
  const LobeMap lobes = detect_lobes(pat);
  m.directivity_db = directivity(pat);
  m.pslr_db = pslr(pat, lobes);
  const MaxDirection dir = max_direction(pat);
  m.theta_max_deg = dir.theta_deg;
  m.phi_max_deg = dir.phi_deg;
  m.hpbw_deg = hpbw(pat, dir).width_deg;
  return m;
}

PatternMeasures extract_measures(const MsfConfig& config,
                                 const PhysicalParams& params,
                                 const AngularGrid& grid) {
  return extract_measures(compute_pattern_fast(config, params, grid));
}

static ordered_json measures_json_obj(const PatternMeasures& m) {
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

std::string measures_to_json(const PatternMeasures& m) {
  return measures_json_obj(m).dump() + "\n";
}

static PatternMeasures measures_from_obj(const ordered_json& j) {
  PatternMeasures m;
  try {
    m.directivity_db = j.at("directivity_db").get<double>();
    const auto& ps = j.at("pslr_db");
    if (ps.is_string()) {
      if (ps.get<std::string>() != "inf")
        throw parse_error("pslr_db string must be \"inf\"");
      m.pslr_db = std::numeric_limits<double>::infinity();
    } else {
      m.pslr_db = ps.get<double>();
    }
    m.theta_max_deg = j.at("theta_max_deg").get<double>();
    m.phi_max_deg = j.at("phi_max_deg").get<double>();
    m.hpbw_deg = j.at("hpbw_deg").get<double>();
  } catch (const parse_error&) {
    throw;
  } catch (const std::exception& e) {
    throw parse_error(std::string("measures field missing or mistyped: ") +
                      e.what());
  }
  return m;
}

PatternMeasures measures_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw parse_error(std::string("measures are not valid JSON: ") + e.what());
  }
  return measures_from_obj(j);
}

void save_measures(const PatternMeasures& m, const std::string& path) {
  write_text_file(path, measures_to_json(m));
}

PatternMeasures load_measures(const std::string& path) {
  return measures_from_json(read_text_file(path));
}

}  // namespace msf
