#pragma once

// Closed catalog of flow functionals exposed to configs and the CLI.
//
//   b1                h(b) = b_1                        psi = lambda
//   tau1_minus_c(c)   f_0 = tau_1 - c                   psi = n lambda - c
//   ext_ricci         h(b) = -2 Ric^ex                  psi = -2 (n-1) lambda^2
//   umbilical_square  f_0 = (tau_1 / n)^2               psi = lambda^2
//   affine(a, b)      f_0 = a tau_1 / n + b             psi = a lambda + b

#include <map>
#include <string>
#include <vector>

#include "egf/sym_curvature.hpp"

namespace egf {

/// Builds a catalog functional. Unknown names, missing parameters and
/// dimensions the functional cannot be written in throw ValidationError.
FlowFunctional make_functional(const std::string& name, int n,
                               const std::map<std::string, double>& params = {});

/// Names accepted by make_functional.
std::vector<std::string> functional_catalog();

}  // namespace egf
