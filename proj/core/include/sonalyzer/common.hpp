#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace sonalyzer {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

using Matf = Mat<float>;
using Matd = Mat<double>;
using Vecf = Vec<float>;
using Vecd = Vec<double>;

using Index = Eigen::Index;

/// Thrown when an operation receives input violating its contract.
struct ContractError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Thrown on unreadable, malformed, or unwritable files.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace sonalyzer
