#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>

#include "msf/datagen.hpp"
#include "msf/farfield.hpp"
#include "test_support.hpp"

using namespace msf;

namespace {

MsfConfig random_config(std::uint64_t seed, int n_rows = 12, int n_cols = 12,
                        int n_states = 8) {
  MsfConfig c = MsfConfig::uniform(n_rows, n_cols, n_states);
  SeededRng rng(seed);
  for (auto& s : c.states)
    s = static_cast<UnitCellState>(rng.uniform_int(n_states));
  return c;
}

// Independent geometric oracle: dot product of the explicit 3-D cell-center
// position with the unit direction vector.
double path_difference_oracle(int i, int j, double theta_rad, double phi_rad,
                              const PhysicalParams& p) {
  const double x = (i - 0.5) * p.cell_pitch;
  const double y = (j - 0.5) * p.cell_pitch;
  const double ux = std::sin(theta_rad) * std::cos(phi_rad);
  const double uy = std::sin(theta_rad) * std::sin(phi_rad);
  return x * ux + y * uy;
}

double max_rel_power_diff(const RadiationPattern& a,
                          const RadiationPattern& b) {
  REQUIRE(a.power.size() == b.power.size());
  const double scale = std::max(a.peak_power, b.peak_power);
  double worst = 0.0;
  for (std::size_t k = 0; k < a.power.size(); ++k)
    worst = std::max(worst, std::abs(a.power[k] - b.power[k]) / scale);
  return worst;
}

}  // namespace

TEST_CASE("state phases are uniform on the circle") {
  CHECK(phase_of_state(0, 8) == 0.0);
  CHECK(phase_of_state(4, 8) == doctest::Approx(kPi).epsilon(1e-15));
  CHECK(phase_of_state(1, 2) == doctest::Approx(kPi).epsilon(1e-15));
  CHECK(phase_of_state(7, 8) == doctest::Approx(7.0 * kPi / 4).epsilon(1e-15));
}

TEST_CASE("path difference matches the 3-d position oracle") {
  const PhysicalParams p;
  SeededRng rng(101);
  for (int trial = 0; trial < 500; ++trial) {
    const int i = 1 + int(rng.uniform_int(12));
    const int j = 1 + int(rng.uniform_int(12));
    const double theta = rng.uniform_range(0.0, kPi / 2);
    const double phi = rng.uniform_range(0.0, 2 * kPi);
    const double expected = path_difference_oracle(i, j, theta, phi, p);
    CHECK(relative_phase_shift(i, j, theta, phi, p) ==
          doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("uniform surface radiates its cell count at broadside") {
  // All phases zero and zero path difference at theta = 0: the 144 unit
  // phasors add coherently.
  const MsfConfig c = MsfConfig::uniform(12, 12, 8, 0);
  const PhysicalParams p;
  const RadiationPattern pat = compute_pattern(c, p, AngularGrid::uniform());
  CHECK(pat.peak_theta_idx == 0);
  const std::complex<double> e0 = pat.field[pat.idx(0, 0)];
  CHECK(std::abs(e0) == doctest::Approx(144.0).epsilon(1e-12));
  CHECK(pat.peak_power == doctest::Approx(144.0 * 144.0).epsilon(1e-12));
  CHECK(pat.power_db[pat.idx(pat.peak_theta_idx, pat.peak_phi_idx)] == 0.0);
}

TEST_CASE("single cell is isotropic in magnitude") {
  const MsfConfig c = MsfConfig::uniform(1, 1, 8, 5);
  const RadiationPattern pat =
      compute_pattern(c, PhysicalParams{}, AngularGrid::uniform(5.0, 15.0));
  for (double v : pat.power) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("factorized path equals the serial cell sum") {
  const PhysicalParams p;
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const MsfConfig c = random_config(seed);
    const AngularGrid g = AngularGrid::uniform();
    const RadiationPattern a = compute_pattern(c, p, g);
    const RadiationPattern b = compute_pattern_fast(c, p, g);
    CHECK(max_rel_power_diff(a, b) < 1e-12);
    CHECK(a.peak_theta_idx == b.peak_theta_idx);
    CHECK(a.peak_phi_idx == b.peak_phi_idx);
  }
}

TEST_CASE("factorized path equals serial on partial grids") {
  const MsfConfig c = random_config(17, 9, 7, 4);  // non-square, 4 states
  const AngularGrid g = AngularGrid::range(20, 40, 0.5, 100, 200, 2.0);
  const RadiationPattern a = compute_pattern(c, PhysicalParams{}, g);
  const RadiationPattern b = compute_pattern_fast(c, PhysicalParams{}, g);
  CHECK(max_rel_power_diff(a, b) < 1e-12);
}

TEST_CASE("global state offset leaves power unchanged") {
  const MsfConfig c = random_config(5);
  MsfConfig shifted = c;
  for (auto& s : shifted.states)
    s = static_cast<UnitCellState>((s + 3) % c.n_states);
  const AngularGrid g = AngularGrid::uniform(3.0, 3.0);
  const RadiationPattern a = compute_pattern_fast(c, PhysicalParams{}, g);
  const RadiationPattern b = compute_pattern_fast(shifted, PhysicalParams{}, g);
  CHECK(max_rel_power_diff(a, b) < 1e-12);
}

TEST_CASE("column mirror reflects the pattern across the y axis") {
  // Reversing column order maps each offset (i - 1/2) to a reflected offset
  // plus a cell-independent shift, so the power at (theta, 180 - phi) must
  // reproduce the original at (theta, phi).
  const MsfConfig c = random_config(8);
  MsfConfig mirrored = c;
  for (int r = 0; r < c.n_rows; ++r)
    for (int col = 0; col < c.n_cols; ++col)
      mirrored.at(r, col) = c.at(r, c.n_cols - 1 - col);

  const AngularGrid g = AngularGrid::uniform();
  const RadiationPattern a = compute_pattern_fast(c, PhysicalParams{}, g);
  const RadiationPattern b =
      compute_pattern_fast(mirrored, PhysicalParams{}, g);
  double worst = 0.0;
  for (int t = 0; t < g.n_theta(); ++t)
    for (int ph = 0; ph < g.n_phi(); ++ph) {
      const int ph_ref = ((180 - int(g.phi_deg[ph])) % 360 + 360) % 360;
      worst = std::max(worst, std::abs(b.power[b.idx(t, ph_ref)] -
                                       a.power[a.idx(t, ph)]));
    }
  CHECK(worst / a.peak_power < 1e-12);
}

TEST_CASE("phase negation rotates the pattern by 180 degrees") {
  // Conjugating every element phase conjugates the field evaluated at the
  // opposite azimuth, so powers swap between phi and phi + 180.
  const MsfConfig c = random_config(9);
  MsfConfig negated = c;
  for (auto& s : negated.states)
    s = static_cast<UnitCellState>((c.n_states - s) % c.n_states);

  const AngularGrid g = AngularGrid::uniform();
  const RadiationPattern a = compute_pattern_fast(c, PhysicalParams{}, g);
  const RadiationPattern b = compute_pattern_fast(negated, PhysicalParams{}, g);
  double worst = 0.0;
  for (int t = 0; t < g.n_theta(); ++t)
    for (int ph = 0; ph < g.n_phi(); ++ph) {
      const int ph_ref = (ph + 180) % 360;
      worst = std::max(worst, std::abs(b.power[b.idx(t, ph_ref)] -
                                       a.power[a.idx(t, ph)]));
    }
  CHECK(worst / a.peak_power < 1e-12);
}

TEST_CASE("continuous steering profile points the beam at its target") {
  const PhysicalParams p;
  for (auto [theta_t, phi_t] : {std::pair{30.0, 45.0}, std::pair{20.0, 200.0},
                                std::pair{50.0, 137.0}}) {
    const std::vector<double> phases =
        continuous_steering_phases(theta_t, phi_t, 12, 12, p);
    const AngularGrid g = AngularGrid::uniform();
    const RadiationPattern pat = compute_pattern_fast(phases, 12, 12, p, g);
    CHECK(std::abs(g.theta_deg[pat.peak_theta_idx] - theta_t) <= 1.0);
    const double dphi =
        std::abs(std::remainder(g.phi_deg[pat.peak_phi_idx] - phi_t, 360.0));
    CHECK(dphi <= 1.0);
  }
}

TEST_CASE("pattern storage invariants") {
  const MsfConfig c = random_config(12);
  const RadiationPattern pat =
      compute_pattern_fast(c, PhysicalParams{}, AngularGrid::uniform(5, 5));
  // power mirrors |field|^2, peak indices locate the max, db is normalized.
  double best = -1.0;
  std::size_t best_k = 0;
  for (std::size_t k = 0; k < pat.power.size(); ++k) {
    CHECK(pat.power[k] ==
          doctest::Approx(std::norm(pat.field[k])).epsilon(1e-12));
    if (pat.power[k] > best) {
      best = pat.power[k];
      best_k = k;
    }
  }
  CHECK(pat.idx(pat.peak_theta_idx, pat.peak_phi_idx) == best_k);
  CHECK(pat.peak_power == best);
  CHECK(pat.power_db[best_k] == 0.0);
  for (double db : pat.power_db) CHECK(db <= 0.0);
}

TEST_CASE("pattern csv export") {
  msftest::TempDir tmp;
  const MsfConfig c = random_config(1, 2, 2, 4);
  const AngularGrid g = AngularGrid::range(0, 2, 1, 0, 3, 1);
  const RadiationPattern pat = compute_pattern_fast(c, PhysicalParams{}, g);
  write_pattern_csv(pat, tmp.file("p.csv"));
  const std::string text = read_text_file(tmp.file("p.csv"));

  std::size_t lines = 0;
  for (char ch : text)
    if (ch == '\n') ++lines;
  CHECK(lines == 1 + g.n_points());
  CHECK(text.substr(0, text.find('\n')) ==
        "theta_deg,phi_deg,power,power_db,field_re,field_im");
  // First data row is theta = 0, phi = 0 with %.9g formatting.
  const std::string row1 = text.substr(text.find('\n') + 1);
  CHECK(row1.substr(0, 4) == "0,0,");
  CHECK(row1.substr(4, fmt9(pat.power[0]).size()) == fmt9(pat.power[0]));
}
