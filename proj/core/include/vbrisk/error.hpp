#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vbrisk {

enum class Errc {
  io,                  // unreadable / unwritable paths
  format,              // malformed file content
  validation,          // values outside documented ranges
  config,              // inconsistent or unresolved configuration
  malformed_geometry,  // degenerate rings, bad GeoJSON geometry
  empty_sample,        // aggregation over an empty population
  stiffness,           // integrator could not find an admissible step
  not_converged,       // steady state requested from an unconverged run
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

  // Configuration and input-validation problems map to 2, everything else to 1.
  int exit_code() const noexcept;

 private:
  Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& what);

}  // namespace vbrisk
