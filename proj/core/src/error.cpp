#include "vbrisk/error.hpp"

namespace vbrisk {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::io: return "io-error";
    case Errc::format: return "format-error";
    case Errc::validation: return "validation-error";
    case Errc::config: return "configuration-error";
    case Errc::malformed_geometry: return "malformed-geometry";
    case Errc::empty_sample: return "empty-sample";
    case Errc::stiffness: return "stiffness-error";
    case Errc::not_converged: return "not-converged";
  }
  return "error";
}

int Error::exit_code() const noexcept {
  switch (code_) {
    case Errc::format:
    case Errc::validation:
    case Errc::config:
    case Errc::malformed_geometry:
      return 2;
    default:
      return 1;
  }
}

void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace vbrisk
