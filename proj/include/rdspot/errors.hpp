#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rdspot {

// Invalid user-supplied configuration (bad grid, CFL violation, unknown
// species, malformed config file). Maps to CLI exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operands that do not fit together, e.g. fields on different grids.
class StructuralError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A non-finite value appeared during integration. Maps to CLI exit code 2.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(double t, std::size_t cell, const std::string& species)
      : std::runtime_error("integration diverged at t=" + std::to_string(t) +
                           " in species " + species + " at cell " +
                           std::to_string(cell)),
        t_(t),
        cell_(cell) {}

  double time() const noexcept { return t_; }
  std::size_t cell() const noexcept { return cell_; }

 private:
  double t_;
  std::size_t cell_;
};

}  // namespace rdspot
