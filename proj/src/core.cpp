#include "msf/core.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace msf {

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// MsfConfig
// ---------------------------------------------------------------------------

MsfConfig MsfConfig::uniform(int n_rows, int n_cols, int n_states,
                             UnitCellState s) {
  MsfConfig c;
  c.n_rows = n_rows;
  c.n_cols = n_cols;
  c.n_states = n_states;
  c.states.assign(static_cast<std::size_t>(n_rows) * n_cols, s);
  c.validate();
  return c;
}

void MsfConfig::validate() const {
  if (n_rows < 1 || n_cols < 1)
    throw validation_error("config dimensions must be positive, got " +
                           std::to_string(n_rows) + "x" +
                           std::to_string(n_cols));
  if (n_states < 2)
    throw validation_error("n_states must be at least 2, got " +
                           std::to_string(n_states));
  if (states.size() != static_cast<std::size_t>(n_rows) * n_cols)
    throw validation_error(
        "states array has " + std::to_string(states.size()) +
        " entries, expected " + std::to_string(n_rows * n_cols));
  for (int r = 0; r < n_rows; ++r)
    for (int c = 0; c < n_cols; ++c)
      if (at(r, c) >= n_states)
        throw validation_error(
            "state " + std::to_string(int(at(r, c))) + " out of range [0, " +
            std::to_string(n_states) + ") at cell (row " + std::to_string(r) +
            ", col " + std::to_string(c) + ")");
}

bool operator==(const MsfConfig& a, const MsfConfig& b) {
  return a.n_rows == b.n_rows && a.n_cols == b.n_cols &&
         a.n_states == b.n_states && a.states == b.states;
}

// ---------------------------------------------------------------------------
// PhysicalParams / AngularGrid
// ---------------------------------------------------------------------------

void PhysicalParams::validate() const {
  if (!(wavelength > 0))
    throw validation_error("wavelength must be positive");
  if (!(cell_pitch > 0))
    throw validation_error("cell_pitch must be positive");
  if (!(reflection_amplitude > 0))
    throw validation_error("reflection_amplitude must be positive");
}

static void check_uniform_spacing(const std::vector<double>& v,
                                  const char* name) {
  if (v.size() < 2) return;
  const double step = v[1] - v[0];
  for (std::size_t i = 1; i < v.size(); ++i) {
    const double d = v[i] - v[i - 1];
    if (!(d > 0))
      throw validation_error(std::string(name) +
                             " samples must be strictly increasing");
    if (std::abs(d - step) > 1e-9)
      throw validation_error(std::string(name) +
                             " samples must be uniformly spaced");
  }
}

double AngularGrid::theta_step_deg() const {
  return theta_deg.size() > 1 ? theta_deg[1] - theta_deg[0] : 1.0;
}

double AngularGrid::phi_step_deg() const {
  return phi_deg.size() > 1 ? phi_deg[1] - phi_deg[0] : 1.0;
}

void AngularGrid::validate() const {
  if (theta_deg.empty() || phi_deg.empty())
    throw validation_error("angular grid must be non-empty");
  check_uniform_spacing(theta_deg, "theta");
  check_uniform_spacing(phi_deg, "phi");
  if (theta_deg.front() < 0 || theta_deg.back() > 90 + 1e-12)
    throw validation_error("theta must lie within [0, 90] degrees");
  if (phi_deg.front() < 0 || phi_deg.back() >= 360)
    throw validation_error("phi must lie within [0, 360) degrees");
  int zeros = 0;
  for (double t : theta_deg)
    if (t == 0.0) ++zeros;
  if (zeros > 1)
    throw validation_error("theta = 0 must appear at most once");
  if (theta_rad.size() != theta_deg.size() || phi_rad.size() != phi_deg.size())
    throw validation_error("radian cache out of sync");
}

static AngularGrid build_grid(std::vector<double> theta,
                              std::vector<double> phi) {
  AngularGrid g;
  g.theta_deg = std::move(theta);
  g.phi_deg = std::move(phi);
  g.theta_rad.reserve(g.theta_deg.size());
  g.phi_rad.reserve(g.phi_deg.size());
  for (double t : g.theta_deg) g.theta_rad.push_back(deg2rad(t));
  for (double p : g.phi_deg) g.phi_rad.push_back(deg2rad(p));
  g.validate();
  return g;
}

AngularGrid AngularGrid::uniform(double theta_step_deg, double phi_step_deg) {
  return range(0.0, 90.0, theta_step_deg, 0.0, 360.0, phi_step_deg);
}

AngularGrid AngularGrid::range(double theta_start_deg, double theta_stop_deg,
                               double theta_step_deg, double phi_start_deg,
                               double phi_stop_deg, double phi_step_deg) {
  if (!(theta_step_deg > 0) || !(phi_step_deg > 0))
    throw validation_error("grid steps must be positive");
  std::vector<double> theta, phi;
  // The stop value is included for theta (hemisphere edge) and excluded for
  // phi (periodic axis).
  const long nt =
      std::lround((theta_stop_deg - theta_start_deg) / theta_step_deg);
  for (long i = 0; i <= nt; ++i) {
    const double t = theta_start_deg + theta_step_deg * i;
    if (t <= theta_stop_deg + 1e-12) theta.push_back(t);
  }
  const long np = std::lround((phi_stop_deg - phi_start_deg) / phi_step_deg);
  for (long i = 0; i < np; ++i) phi.push_back(phi_start_deg + phi_step_deg * i);
  return build_grid(std::move(theta), std::move(phi));
}

// ---------------------------------------------------------------------------
// SeededRng
// ---------------------------------------------------------------------------

static inline std::uint64_t sm64_finalize(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

std::uint64_t SeededRng::next_u64() {
  state_ += 0x9e3779b97f4a7c15ULL;
  return sm64_finalize(state_);
}

double SeededRng::uniform_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::uniform_range(double lo, double hi) {
  return lo + (hi - lo) * uniform_double();
}

std::uint64_t SeededRng::uniform_int(std::uint64_t bound) {
  if (bound == 0) throw validation_error("uniform_int bound must be nonzero");
  // Lemire's multiply-shift rejection; exact uniformity over [0, bound).
  unsigned __int128 m =
      static_cast<unsigned __int128>(next_u64()) * bound;
  auto lo = static_cast<std::uint64_t>(m);
  if (lo < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (lo < threshold) {
      m = static_cast<unsigned __int128>(next_u64()) * bound;
      lo = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

static std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

SeededRng SeededRng::child(std::string_view label, std::uint64_t index) const {
  std::uint64_t h = sm64_finalize(seed_ ^ fnv1a64(label));
  h = sm64_finalize(h ^ (index + 0x9e3779b97f4a7c15ULL));
  return SeededRng(h);
}

// ---------------------------------------------------------------------------
// Config JSON
// ---------------------------------------------------------------------------

std::string config_to_json(const MsfConfig& c) {
  ordered_json j;
  j["n_rows"] = c.n_rows;
  j["n_cols"] = c.n_cols;
  j["n_states"] = c.n_states;
  j["states"] = ordered_json::array();
  for (UnitCellState s : c.states) j["states"].push_back(int(s));
  return j.dump() + "\n";
}

MsfConfig config_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw parse_error(std::string("config is not valid JSON: ") + e.what());
  }
  MsfConfig c;
  try {
    c.n_rows = j.at("n_rows").get<int>();
    c.n_cols = j.at("n_cols").get<int>();
    c.n_states = j.at("n_states").get<int>();
    for (const auto& v : j.at("states")) {
      const long s = v.get<long>();
      if (s < 0 || s > 255)
        throw validation_error("state " + std::to_string(s) +
                               " outside storable range [0, 255]");
      c.states.push_back(static_cast<UnitCellState>(s));
    }
  } catch (const validation_error&) {
    throw;
  } catch (const std::exception& e) {
    throw parse_error(std::string("config field missing or mistyped: ") +
                      e.what());
  }
  c.validate();
  return c;
}

void save_config(const MsfConfig& c, const std::string& path) {
  c.validate();
  write_text_file(path, config_to_json(c));
}

MsfConfig load_config(const std::string& path) {
  return config_from_json(read_text_file(path));
}

// ---------------------------------------------------------------------------
// File helpers
// ---------------------------------------------------------------------------

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw io_error("read failed: " + path);
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open for writing: " + path);
  out << text;
  out.flush();
  if (!out) throw io_error("write failed: " + path);
}

std::string fmt9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace msf
