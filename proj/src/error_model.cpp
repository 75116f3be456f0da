#include "vigil/error_model.hpp"

#include <cmath>

#include "vigil/types.hpp"

namespace vigil {

double error_bound(const std::vector<double>& epsilons) {
  double bound = 1.0;
  for (double e : epsilons) {
    if (!(e >= 0.0) || !std::isfinite(e)) throw Error("error magnitudes must be finite and >= 0");
    bound *= 1.0 + e;
  }
  return bound;
}

}  // namespace vigil
