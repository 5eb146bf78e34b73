#pragma once
// Far-field synthesis for a phase-quantized reflective surface under normal
// incidence. compute_pattern evaluates the double sum cell by cell and stays
// strictly serial: it is the reference every optimization is tested against.
// compute_pattern_fast factorizes the sum into row/column phasor recurrences
// and parallelizes over grid points; each point is owned by one thread, so
// results are identical at any thread count.

#include <complex>
#include <vector>

#include "msf/core.hpp"

namespace msf {

struct RadiationPattern {
  AngularGrid grid;
  // theta-major storage: index t * n_phi + p.
  std::vector<std::complex<double>> field;
  std::vector<double> power;     // |field|^2
  std::vector<double> power_db;  // 10 log10(power / peak), peak cell = 0 dB
  double peak_power = 0.0;
  int peak_theta_idx = 0;
  int peak_phi_idx = 0;

  std::size_t idx(int t, int p) const {
    return static_cast<std::size_t>(t) * grid.n_phi() + p;
  }
  double power_at(int t, int p) const { return power[idx(t, p)]; }
};

// Phase of a quantized state: s * 2*pi / n_states.
double phase_of_state(UnitCellState s, int n_states);

// Geometric path difference of cell (i, j) toward direction (theta, phi), in
// length units; i indexes columns (x), j rows (y), both 1-based. The wave
// number is applied by the pattern computation, not here.
double relative_phase_shift(int i, int j, double theta_rad, double phi_rad,
                            const PhysicalParams& params);

// Row-major phase matrix of a config.
std::vector<double> phases_of(const MsfConfig& config);

// Serial reference: direct evaluation of the cell sum at every grid point.
RadiationPattern compute_pattern(const MsfConfig& config,
                                 const PhysicalParams& params,
                                 const AngularGrid& grid);
// Continuous-phase entry point (row-major phases, radians).
RadiationPattern compute_pattern(const std::vector<double>& phases, int n_rows,
                                 int n_cols, const PhysicalParams& params,
                                 const AngularGrid& grid);

// Factorized + OpenMP path; agrees with compute_pattern to rounding.
RadiationPattern compute_pattern_fast(const MsfConfig& config,
                                      const PhysicalParams& params,
                                      const AngularGrid& grid);
RadiationPattern compute_pattern_fast(const std::vector<double>& phases,
                                      int n_rows, int n_cols,
                                      const PhysicalParams& params,
                                      const AngularGrid& grid);

// CSV export: header theta_deg,phi_deg,power,power_db,field_re,field_im,
// theta-major rows, %.9g formatting.
void write_pattern_csv(const RadiationPattern& pattern,
                       const std::string& path);

}  // namespace msf
