#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace fphmc {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// An iterative solver ran out of iterations. The last iterate is attached so
// callers can inspect or restart from it.
class ConvergenceFailure : public Error {
 public:
  ConvergenceFailure(const std::string& what, Eigen::VectorXd last_iterate,
                     int iterations)
      : Error(what), last_iterate_(std::move(last_iterate)),
        iterations_(iterations) {}

  const Eigen::VectorXd& last_iterate() const noexcept { return last_iterate_; }
  int iterations() const noexcept { return iterations_; }

 private:
  Eigen::VectorXd last_iterate_;
  int iterations_;
};

// A risk set carries zero total weight at an event time.
class DegenerateRiskSet : public Error {
 public:
  using Error::Error;
};

class InsufficientReplicates : public Error {
 public:
  using Error::Error;
};

}  // namespace fphmc
