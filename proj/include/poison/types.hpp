#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace poison {

using Scalar = double;
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using Index = Eigen::Index;

using TokenId = std::int32_t;
using TokenSeq = std::vector<TokenId>;

// Reserved token ids. PAD is banned from adversarial passages by default.
inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kUnkId = 1;

}  // namespace poison
