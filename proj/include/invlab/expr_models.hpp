#pragma once

// Systems, sets and test functions defined by expression strings. Derivatives
// come from dual numbers; Hessians from nested duals.

#include <string>
#include <vector>

#include "invlab/exprlang.hpp"
#include "invlab/sde_core.hpp"

namespace invlab {

struct SystemSource {
  std::string name = "expression";
  int n = 0;
  int d = 0;
  int k = 0;
  std::vector<std::string> drift;                  // n entries
  std::vector<std::vector<std::string>> diffusion;  // n rows of d entries
  std::vector<Vec> controls;                       // empty -> single empty control
};

/// Throws expr::ParseError (with the offending entry named by the caller) or
/// InvalidArgument for shape problems and for abs inside the diffusion.
ControlSystem expression_system(const SystemSource& src);

/// K = {g <= 0}. abs is rejected since Dg and D^2g are required.
ClosedSet expression_set(const std::string& name, int n, const std::string& g,
                         double sample_radius = 2.0);

TestFunction expression_test_function(int n, const std::string& source);

/// Plain scalar function of x (abs allowed), e.g. a running cost.
std::function<double(const Vec&)> expression_scalar(int n, const std::string& source);

}  // namespace invlab
