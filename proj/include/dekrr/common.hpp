#pragma once
// Shared aliases and the error type used across the library.

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace dekrr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(msg);
}

}  // namespace dekrr
