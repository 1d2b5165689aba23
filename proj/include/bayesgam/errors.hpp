#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bayesgam {

/// Base of every error raised by the library. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Posterior precision failed to factorize. `pivot` is the parameter index (in the
/// caller's ordering) at which the factorization broke down.
class SingularPosterior : public Error {
 public:
  SingularPosterior(std::ptrdiff_t pivot, const std::string& detail);
  std::ptrdiff_t pivot() const noexcept { return pivot_; }

 private:
  std::ptrdiff_t pivot_;
};

class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

class IndefiniteCovariance : public Error {
 public:
  explicit IndefiniteCovariance(double min_eigenvalue);
  double min_eigenvalue() const noexcept { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

class OutOfGrid : public Error {
 public:
  OutOfGrid(std::size_t input_index, const std::string& detail);
  std::size_t input_index() const noexcept { return input_index_; }

 private:
  std::size_t input_index_;
};

class OrderTooHigh : public Error {
 public:
  using Error::Error;
};

class NonPositiveStd : public Error {
 public:
  using Error::Error;
};

class NoMirrorPairs : public Error {
 public:
  using Error::Error;
};

class MissingColumn : public Error {
 public:
  explicit MissingColumn(const std::string& column);
  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

class EmptyData : public Error {
 public:
  using Error::Error;
};

class Infeasible : public Error {
 public:
  using Error::Error;
};

/// Evidence requested for a prior whose transform is rank deficient.
class ImproperPrior : public Error {
 public:
  using Error::Error;
};

class UnknownTerm : public Error {
 public:
  explicit UnknownTerm(const std::string& name);
};

/// Malformed model specification or archive.
class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace bayesgam
