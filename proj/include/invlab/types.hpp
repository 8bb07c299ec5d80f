#pragma once

#include <Eigen/Dense>

namespace invlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

}  // namespace invlab
