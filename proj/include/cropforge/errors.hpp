#ifndef CROPFORGE_ERRORS_HPP
#define CROPFORGE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace cropforge {

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor/layer shape violations (channel mismatch, odd pooling dims, ...).
struct ShapeError : Error {
  explicit ShapeError(const std::string& msg) : Error(msg) {}
};

// Invalid scalar argument (sigma <= 0, zero image dims, ...).
struct ParamError : Error {
  explicit ParamError(const std::string& msg) : Error(msg) {}
};

// Degenerate rectangle geometry (zero-area anchor or aesthetic rect).
struct GeometryError : Error {
  explicit GeometryError(const std::string& msg) : Error(msg) {}
};

// Optimizer preconditions (missing gradient on an unfrozen parameter).
struct TrainingStateError : Error {
  explicit TrainingStateError(const std::string& msg) : Error(msg) {}
};

// Non-finite loss during training; message names the stage and sample.
struct DivergenceError : Error {
  explicit DivergenceError(const std::string& msg) : Error(msg) {}
};

// File I/O and format failures.
struct IoError : Error {
  explicit IoError(const std::string& msg) : Error(msg) {}
};

// Non-finite values inside a numeric procedure (gradient check).
struct NumericError : Error {
  explicit NumericError(const std::string& msg) : Error(msg) {}
};

}  // namespace cropforge

#endif  // CROPFORGE_ERRORS_HPP
