#include "upr/error.hpp"

namespace upr {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::domain: return "domain";
    case Errc::empty_scene: return "empty-scene";
    case Errc::numeric: return "numeric";
    case Errc::numeric_domain: return "numeric-domain";
    case Errc::capacity: return "capacity";
    case Errc::generation: return "generation";
    case Errc::config: return "configuration";
    case Errc::io: return "io";
    case Errc::calibration: return "calibration-failure";
    case Errc::unsupported: return "unsupported-instance";
    case Errc::contract: return "contract-violation";
    case Errc::parse: return "parse";
  }
  return "unknown";
}

}  // namespace upr
