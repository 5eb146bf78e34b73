#pragma once
// Beam measures extracted from a radiation pattern: directivity, peak side
// lobe ratio, direction of maximum radiation and half-power beam width.

#include <string>
#include <vector>

#include "msf/farfield.hpp"

namespace msf {

struct PatternMeasures {
  double directivity_db = 0.0;
  double pslr_db = 0.0;  // +inf when the pattern has a single lobe
  double theta_max_deg = 0.0;
  double phi_max_deg = 0.0;
  double hpbw_deg = 0.0;
};

struct LobePeak {
  int theta_idx = 0;
  int phi_idx = 0;
  double power = 0.0;
};

// Basin decomposition of the power grid under steepest-ascent flow with
// 8-neighborhoods, phi wraparound, and the theta = 0 row aggregated into a
// single pole cell when present. labels is theta-major over the full lattice;
// peaks are ordered by (theta_idx, phi_idx) and labels index into it.
struct LobeMap {
  int n_theta = 0;
  int n_phi = 0;
  std::vector<int> labels;
  std::vector<LobePeak> peaks;
  int main_basin = 0;       // basin owning the global power peak
  bool degenerate = false;  // all powers equal
};

struct MaxDirection {
  double theta_deg = 0.0;
  double phi_deg = 0.0;
};

struct HpbwResult {
  double width_deg = 0.0;
  // Set when the half-power level is never crossed before the cut boundary;
  // the width is clamped there.
  bool clamped_low = false;
  bool clamped_high = false;
};

LobeMap detect_lobes(const RadiationPattern& pattern);

// 4*pi * peak / integral of power over the sampled hemisphere, in dB.
// Trapezoid rule in theta, periodic rectangle rule in phi.
double directivity(const RadiationPattern& pattern);

// Peak power over strongest non-main basin peak, in dB; +inf if single basin.
double pslr(const RadiationPattern& pattern, const LobeMap& lobes);

// Grid argmax refined by independent 1-D parabolic interpolation per axis.
// Below one theta step the azimuth is meaningless and reported as 0.
MaxDirection max_direction(const RadiationPattern& pattern);

// -3 dB width along the elevation great circle through the beam azimuth,
// extended across the pole onto the opposite phi column.
HpbwResult hpbw(const RadiationPattern& pattern, const MaxDirection& dir);

PatternMeasures extract_measures(const RadiationPattern& pattern);
PatternMeasures extract_measures(const MsfConfig& config,
                                 const PhysicalParams& params,
                                 const AngularGrid& grid);

// JSON with fixed key order; +inf PSLR encoded as the string "inf".
std::string measures_to_json(const PatternMeasures& m);
PatternMeasures measures_from_json(const std::string& text);
void save_measures(const PatternMeasures& m, const std::string& path);
PatternMeasures load_measures(const std::string& path);

}  // namespace msf
