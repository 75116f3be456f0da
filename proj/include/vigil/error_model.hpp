#pragma once

#include <vector>

namespace vigil {

/// Multiplicative quality-degradation bound for a pipeline whose nodes carry
/// relative error magnitudes `epsilons`: the product of (1 + e). The empty
/// product is 1. Throws vigil::Error on a negative or non-finite magnitude.
double error_bound(const std::vector<double>& epsilons);

}  // namespace vigil
