#pragma once

// Built-in ground-truth systems with analytic derivatives.
//
//   circle              n=2, d=1: b = -x/2, sigma = (-x2, x1). b~ = 0; |X| is conserved.
//   sphere-n            n=3 (or sphere-<N>): one rotation generator per coordinate
//                       pair, b = -(n-1)/2 x + u (-x2, x1, 0, ...), U = {-1, 0, 1}.
//   halfspace-tangent   n=2, d=1: b = (-u1, u2), sigma = (0, 1 + sin(x2)/2).
//   halfspace-crossing  n=2, d=1: b = (0, u1), sigma = (1, 0). Not invariant.
//   inward-drift        n=2, d=1: b = -u x, sigma = 0, U = {0.5, 1}.
//
// Sets: disk / ball (g = |x|^2 - 1), halfspace (g = x1).

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "invlab/sde_core.hpp"

namespace invlab::catalog {

struct Entry {
  ControlSystem system;
  std::string default_set;
  // Strong solution X_T as a function of (x0, u, W_T) when one is known.
  std::function<Vec(const Vec& x0, const Vec& u, const Vec& w)> exact_solution;
};

/// Throws InvalidArgument for unknown names.
Entry system(std::string_view name);
ClosedSet set(std::string_view name, int n);

std::vector<std::string> system_names();

struct Pair {
  std::string system;
  std::string set;
};
/// The five (system, default set) pairs.
std::vector<Pair> pairs();

}  // namespace invlab::catalog
