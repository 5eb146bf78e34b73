#pragma once
// Domain types shared by every module: surface configuration, physical
// constants, angular sampling and the deterministic RNG.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "msf/errors.hpp"

namespace msf {

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * (kPi / 180.0); }
inline double rad2deg(double r) { return r * (180.0 / kPi); }

// One reconfigurable cell holds a state in [0, n_states); state s maps to the
// uniformly spaced phase s * 2*pi / n_states.
using UnitCellState = std::uint8_t;

struct MsfConfig {
  int n_rows = 12;   // cells along y
  int n_cols = 12;   // cells along x
  int n_states = 8;  // phase quantization levels
  std::vector<UnitCellState> states;  // row-major, n_rows * n_cols entries

  int n_cells() const { return n_rows * n_cols; }
  UnitCellState at(int row, int col) const {
    return states[static_cast<std::size_t>(row) * n_cols + col];
  }
  UnitCellState& at(int row, int col) {
    return states[static_cast<std::size_t>(row) * n_cols + col];
  }

  static MsfConfig uniform(int n_rows, int n_cols, int n_states,
                           UnitCellState s = 0);
  // Throws validation_error naming the offending cell or dimension.
  void validate() const;
};

bool operator==(const MsfConfig& a, const MsfConfig& b);

struct PhysicalParams {
  double wavelength = 1.0;
  double cell_pitch = 0.5;           // element spacing, half wavelength default
  double reflection_amplitude = 1.0; // per-cell reflection magnitude

  double wave_number() const { return 2.0 * kPi / wavelength; }
  void validate() const;
};

// Upper-hemisphere sampling. theta spans [0, 90] degrees with the pole stored
// exactly once; phi spans [0, 360) and wraps. Spacing must be uniform per
// axis; the quadrature and beam-width code rely on it.
struct AngularGrid {
  std::vector<double> theta_deg;
  std::vector<double> phi_deg;
  std::vector<double> theta_rad;  // cached
  std::vector<double> phi_rad;

  int n_theta() const { return static_cast<int>(theta_deg.size()); }
  int n_phi() const { return static_cast<int>(phi_deg.size()); }
  std::size_t n_points() const { return theta_deg.size() * phi_deg.size(); }
  double theta_step_deg() const;
  double phi_step_deg() const;

  // Default toolkit grid: theta 0..90 inclusive, phi 0..360 exclusive.
  static AngularGrid uniform(double theta_step_deg = 1.0,
                             double phi_step_deg = 1.0);
  // Arbitrary uniform ranges, validated. theta_stop inclusive.
  static AngularGrid range(double theta_start_deg, double theta_stop_deg,
                           double theta_step_deg, double phi_start_deg,
                           double phi_stop_deg, double phi_step_deg);
  void validate() const;
};

// splitmix64 stream with a fixed algorithm tag so artifacts reproduce
// bit-for-bit across platforms. std:: distributions are implementation
// defined and must never replace the draw methods here.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed = 0) : seed_(seed), state_(seed) {}

  static constexpr const char* kAlgorithm = "splitmix64";

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64();
  // [0, 1), 53-bit resolution.
  double uniform_double();
  double uniform_range(double lo, double hi);
  // Unbiased draw from [0, bound); bound must be nonzero.
  std::uint64_t uniform_int(std::uint64_t bound);

  // Independent stream addressed by (label, index); pure function of the
  // parent seed, not of draw position.
  SeededRng child(std::string_view label, std::uint64_t index) const;

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

// Canonical JSON serialization; key order n_rows, n_cols, n_states, states.
// Two saves of equal configs are byte-identical.
std::string config_to_json(const MsfConfig& c);
MsfConfig config_from_json(const std::string& text);
void save_config(const MsfConfig& c, const std::string& path);
MsfConfig load_config(const std::string& path);

// Shared file helpers.
std::string read_text_file(const std::string& path);   // io_error if unreadable
void write_text_file(const std::string& path, const std::string& text);

// printf %.9g, the numeric format used by every CSV artifact.
std::string fmt9(double v);

}  // namespace msf
