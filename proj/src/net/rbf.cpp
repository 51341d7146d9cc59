#include "net/rbf.hpp"

#include <cmath>

namespace vfn::net {

std::vector<double> rbf_values(const RbfBank& bank, double d) {
  std::vector<double> out(static_cast<std::size_t>(bank.n));
  const double s2 = 2.0 * bank.sigma() * bank.sigma();
  for (int m = 0; m < bank.n; ++m) {
    const double z = d - bank.center(m);
    out[static_cast<std::size_t>(m)] = std::exp(-z * z / s2);
  }
  return out;
}

}  // namespace vfn::net
