#pragma once

#include <vector>

namespace vfn::net {

/// Gaussian distance bank: centers linearly spaced on [lo, hi] Å,
/// shared width equal to the center spacing, so neighboring bumps
/// overlap at ~0.6 and the bank saturates gracefully past hi.
struct RbfBank {
  int n = 16;
  double lo = 0.0;
  double hi = 50.0;

  double center(int m) const { return lo + (hi - lo) * m / (n - 1); }
  double sigma() const { return (hi - lo) / (n - 1); }
};

std::vector<double> rbf_values(const RbfBank& bank, double d);

}  // namespace vfn::net
