#pragma once

#include <Eigen/Core>

namespace kcrc {

using Index = Eigen::Index;
using Label = int;

}  // namespace kcrc
