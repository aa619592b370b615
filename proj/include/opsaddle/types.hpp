#pragma once

#include <Eigen/Dense>

namespace opsaddle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

}  // namespace opsaddle
