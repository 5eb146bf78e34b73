#pragma once
// Shared helpers for the test binaries: scratch directories, content hashing,
// a subprocess runner for CLI checks, cached corpus fixtures and a central
// finite-difference gradient checker.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "msf/datagen.hpp"

namespace msftest {

// Scratch directory removed on destruction. Each instance is unique within
// the process and across concurrently running test binaries.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::string& path() const { return path_; }
  std::string file(const std::string& name) const { return path_ + "/" + name; }

 private:
  std::string path_;
};

std::uint64_t fnv1a64(const std::string& bytes);
std::uint64_t hash_file(const std::string& path);

// Runs an executable with arguments, captures stdout/stderr, returns the
// exit code (-1 if the process died on a signal).
struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};
RunResult run_process(const std::string& exe,
                      const std::vector<std::string>& args);

// Corpus fixture cached per (count, seed, mode) within the process, so
// multiple test cases can share one generation run.
const msf::Dataset& test_corpus(std::uint64_t count, std::uint64_t seed,
                                msf::FilterMode mode);

// Central finite differences at `at` against an analytic gradient over
// n_probes seeded random indices. Relative error uses |num| + |ana| as the
// scale with a small floor, so jointly tiny entries never dominate.
struct GradCheck {
  double max_rel = 0.0;
  std::size_t worst_index = 0;
  double worst_numeric = 0.0;
  double worst_analytic = 0.0;
};
GradCheck check_gradient(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& at, const std::vector<double>& analytic,
    int n_probes, double h, msf::SeededRng& rng);

}  // namespace msftest
