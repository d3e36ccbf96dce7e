#ifndef MLKF_ERROR_HPP
#define MLKF_ERROR_HPP

#include <stdexcept>
#include <string>

namespace mlkf {

/// Problems with caller-supplied data or configuration. The CLI maps these to exit code 2.
class input_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Internal numeric failures (ill-conditioning, solver breakdown). The CLI maps these to exit code 1.
class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class degenerate_input_error : public input_error {
 public:
  using input_error::input_error;
};

class dimension_error : public input_error {
 public:
  using input_error::input_error;
};

class config_error : public input_error {
 public:
  using input_error::input_error;
};

class domain_error : public input_error {
 public:
  using input_error::input_error;
};

/// Requested computation exceeds the supported cost envelope.
class cost_error : public input_error {
 public:
  using input_error::input_error;
};

class conditioning_error : public numeric_error {
 public:
  using numeric_error::numeric_error;
};

class solver_error : public numeric_error {
 public:
  solver_error(const std::string& what, double lambda) : numeric_error(what), lambda_(lambda) {}
  double lambda() const noexcept { return lambda_; }

 private:
  double lambda_;
};

}  // namespace mlkf

#endif  // MLKF_ERROR_HPP
