#ifndef MIBENCH_GRADSUITE_HPP
#define MIBENCH_GRADSUITE_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace mibench {

struct GradSuiteEntry {
  std::string loss;
  int trials = 0;
  double max_relative_error = 0.0;
  std::size_t coordinates_checked = 0;
  std::size_t coordinates_skipped = 0;
  bool passed = false;
};

// Finite-difference checks of every training loss (cross-entropy, DV, the
// SMILE tau = 1 training surrogate and its clipped objective, InfoNCE)
// through randomly shaped two-hidden-layer networks on random batches of 8
// pairs.
std::vector<GradSuiteEntry> run_gradient_suite(int trials, double tolerance, std::uint64_t seed);

}  // namespace mibench

#endif  // MIBENCH_GRADSUITE_HPP
