#pragma once

#include <stdexcept>
#include <string>

namespace phasemem {

/// Invalid user-supplied parameters (bad counts, widths, grids, CLI config).
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

/// Numerically infeasible model request (non-PSD covariance, degenerate input).
class model_error : public std::runtime_error {
 public:
  explicit model_error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed or inconsistent data files (parse and validation failures).
class data_error : public std::runtime_error {
 public:
  explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

/// Missing files or unwritable output locations.
class io_error : public std::runtime_error {
 public:
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace phasemem
