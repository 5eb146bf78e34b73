#include "msf/farfield.hpp"

#include <cmath>
#include <sstream>

namespace msf {

double phase_of_state(UnitCellState s, int n_states) {
  if (n_states < 2)
    throw validation_error("n_states must be at least 2");
  if (s >= n_states)
    throw validation_error("state " + std::to_string(int(s)) +
                           " out of range [0, " + std::to_string(n_states) +
                           ")");
  return double(s) * (2.0 * kPi / n_states);
}

double relative_phase_shift(int i, int j, double theta_rad, double phi_rad,
                            const PhysicalParams& params) {
  return params.cell_pitch * std::sin(theta_rad) *
         ((i - 0.5) * std::cos(phi_rad) + (j - 0.5) * std::sin(phi_rad));
}

std::vector<double> phases_of(const MsfConfig& config) {
  config.validate();
  std::vector<double> ph(config.states.size());
  for (std::size_t k = 0; k < config.states.size(); ++k)
    ph[k] = phase_of_state(config.states[k], config.n_states);
  return ph;
}

static RadiationPattern make_empty(const PhysicalParams& params,
                                   const AngularGrid& grid) {
  params.validate();
  grid.validate();
  RadiationPattern pat;
  pat.grid = grid;
  pat.field.resize(grid.n_points());
  pat.power.resize(grid.n_points());
  pat.power_db.resize(grid.n_points());
  return pat;
}

// Peak search and dB normalization shared by both paths. The scan order fixes
// the tie-break: lowest (theta_idx, phi_idx) wins.
static void finalize(RadiationPattern& pat) {
  const int T = pat.grid.n_theta(), P = pat.grid.n_phi();
  double peak = -1.0;
  for (int t = 0; t < T; ++t)
    for (int p = 0; p < P; ++p) {
      const std::size_t k = pat.idx(t, p);
      pat.power[k] = std::norm(pat.field[k]);
      if (pat.power[k] > peak) {
        peak = pat.power[k];
        pat.peak_theta_idx = t;
        pat.peak_phi_idx = p;
      }
    }
  if (!(peak > 0.0))
    throw numeric_error("pattern peak power is not positive");
  pat.peak_power = peak;
  for (std::size_t k = 0; k < pat.power.size(); ++k)
    pat.power_db[k] = 10.0 * std::log10(pat.power[k] / peak);
}

RadiationPattern compute_pattern(const std::vector<double>& phases, int n_rows,
                                 int n_cols, const PhysicalParams& params,
                                 const AngularGrid& grid) {
  if (phases.size() != static_cast<std::size_t>(n_rows) * n_cols)
    throw validation_error("phase matrix size mismatch");
  RadiationPattern pat = make_empty(params, grid);
  const double k0 = params.wave_number();
  const double K = params.reflection_amplitude;
  const int T = grid.n_theta(), P = grid.n_phi();
  for (int t = 0; t < T; ++t) {
    for (int p = 0; p < P; ++p) {
      double re = 0.0, im = 0.0;
      for (int r = 0; r < n_rows; ++r) {
        for (int c = 0; c < n_cols; ++c) {
          // i counts columns, j rows, both from 1.
          const double zeta = relative_phase_shift(
              c + 1, r + 1, grid.theta_rad[t], grid.phi_rad[p], params);
          const double arg = phases[std::size_t(r) * n_cols + c] + k0 * zeta;
          re += std::cos(arg);
          im += std::sin(arg);
        }
      }
      pat.field[pat.idx(t, p)] = {K * re, K * im};
    }
  }
  finalize(pat);
  return pat;
}

RadiationPattern compute_pattern(const MsfConfig& config,
                                 const PhysicalParams& params,
                                 const AngularGrid& grid) {
  return compute_pattern(phases_of(config), config.n_rows, config.n_cols,
                         params, grid);
}

RadiationPattern compute_pattern_fast(const std::vector<double>& phases,
                                      int n_rows, int n_cols,
                                      const PhysicalParams& params,
                                      const AngularGrid& grid) {
  if (phases.size() != static_cast<std::size_t>(n_rows) * n_cols)
    throw validation_error("phase matrix size mismatch");
  RadiationPattern pat = make_empty(params, grid);
  const double k0 = params.wave_number();
  const double K = params.reflection_amplitude;
  const int T = grid.n_theta(), P = grid.n_phi();

  // Cell phasors exp(j phase), shared across grid points.
  std::vector<double> sre(phases.size()), sim(phases.size());
  for (std::size_t k = 0; k < phases.size(); ++k) {
    sre[k] = std::cos(phases[k]);
    sim[k] = std::sin(phases[k]);
  }

  // E(theta, phi) = sum_j e^{j v (j - 1/2)} sum_i S_ij e^{j u (i - 1/2)} with
  // u = k0 * pitch * sin(theta) cos(phi), v = k0 * pitch * sin(theta) sin(phi).
  // Column/row phasors come from a half-angle seed and a complex-square step,
  // so each grid point costs two sincos calls instead of n_rows * n_cols.
#pragma omp parallel for schedule(static)
  for (int t = 0; t < T; ++t) {
    std::vector<double> are(n_cols), aim(n_cols), bre(n_rows), bim(n_rows);
    const double st = std::sin(grid.theta_rad[t]);
    for (int p = 0; p < P; ++p) {
      const double u = k0 * params.cell_pitch * st * std::cos(grid.phi_rad[p]);
      const double v = k0 * params.cell_pitch * st * std::sin(grid.phi_rad[p]);
      const double cu = std::cos(0.5 * u), su = std::sin(0.5 * u);
      const double cu2 = cu * cu - su * su, su2 = 2.0 * cu * su;
      are[0] = cu;
      aim[0] = su;
      for (int i = 1; i < n_cols; ++i) {
        are[i] = are[i - 1] * cu2 - aim[i - 1] * su2;
        aim[i] = are[i - 1] * su2 + aim[i - 1] * cu2;
      }
      const double cv = std::cos(0.5 * v), sv = std::sin(0.5 * v);
      const double cv2 = cv * cv - sv * sv, sv2 = 2.0 * cv * sv;
      bre[0] = cv;
      bim[0] = sv;
      for (int j = 1; j < n_rows; ++j) {
        bre[j] = bre[j - 1] * cv2 - bim[j - 1] * sv2;
        bim[j] = bre[j - 1] * sv2 + bim[j - 1] * cv2;
      }
      double Ere = 0.0, Eim = 0.0;
      for (int r = 0; r < n_rows; ++r) {
        double tre = 0.0, tim = 0.0;
        const double* rre = &sre[std::size_t(r) * n_cols];
        const double* rim = &sim[std::size_t(r) * n_cols];
        for (int c = 0; c < n_cols; ++c) {
          tre += rre[c] * are[c] - rim[c] * aim[c];
          tim += rre[c] * aim[c] + rim[c] * are[c];
        }
        Ere += tre * bre[r] - tim * bim[r];
        Eim += tre * bim[r] + tim * bre[r];
      }
      pat.field[pat.idx(t, p)] = {K * Ere, K * Eim};
    }
  }
  finalize(pat);
  return pat;
}

RadiationPattern compute_pattern_fast(const MsfConfig& config,
                                      const PhysicalParams& params,
                                      const AngularGrid& grid) {
  return compute_pattern_fast(phases_of(config), config.n_rows, config.n_cols,
                              params, grid);
}

void write_pattern_csv(const RadiationPattern& pat, const std::string& path) {
  std::ostringstream out;
  out << "theta_deg,phi_deg,power,power_db,field_re,field_im\n";
  const int T = pat.grid.n_theta(), P = pat.grid.n_phi();
  for (int t = 0; t < T; ++t)
    for (int p = 0; p < P; ++p) {
      const std::size_t k = pat.idx(t, p);
      out << fmt9(pat.grid.theta_deg[t]) << ',' << fmt9(pat.grid.phi_deg[p])
          << ',' << fmt9(pat.power[k]) << ',' << fmt9(pat.power_db[k]) << ','
          << fmt9(pat.field[k].real()) << ',' << fmt9(pat.field[k].imag())
          << '\n';
    }
  write_text_file(path, out.str());
}

}  // namespace msf
