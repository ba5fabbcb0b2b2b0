#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace cgpdf {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

// Bad input or configuration. The CLI maps it to exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-finite or runaway state. The CLI maps it to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, Index sample, double t)
      : std::runtime_error(what), sample_(sample), t_(t) {}
  Index sample() const { return sample_; }
  double time() const { return t_; }

 private:
  Index sample_;
  double t_;
};

class BlowUpError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class FilterBlowUpError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace cgpdf
