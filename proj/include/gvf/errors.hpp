#pragma once

#include <stdexcept>
#include <string>

namespace gvf {

// Bad numeric input (non-finite argument, value outside the documented range).
struct parameter_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Unknown entry requested from the path catalog.
struct catalog_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Dimension mismatch between vectors/matrices.
struct shape_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A user-supplied structure failed a consistency check (e.g. gradients do
// not match finite differences of the supplied functions).
struct validation_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Normalization requested where the field vanishes.
struct singularity_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The guidance law was evaluated on its excluded set (planar field
// components both zero, or heading exactly antipodal to the field).
struct excluded_set_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Not enough usable points for a statistical fit.
struct insufficient_data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Filesystem write failure.
struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace gvf
