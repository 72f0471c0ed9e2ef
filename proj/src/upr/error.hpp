#pragma once

#include <stdexcept>
#include <string>

namespace upr {

enum class Errc {
  invalid_argument = 1,
  domain,
  empty_scene,
  numeric,
  numeric_domain,
  capacity,
  generation,
  config,
  io,
  calibration,
  unsupported,
  contract,
  parse,
};

const char* errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace upr
