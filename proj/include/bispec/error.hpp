#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bispec {

// Failure categories surfaced by the library. The CLI maps them onto
// process exit codes (see exit_code()).
enum class Errc {
  invalid_argument,
  too_short_signal,
  filter_design,
  aliasing,
  grid,
  normalization,
  band,
  stratification,
  degenerate,
  undefined_effect,
  no_signal,
  config,
  shape_mismatch,
  unknown_dtype,
  missing_file,
  label,
  data,
};

std::string_view errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// 2 = configuration error, 3 = data error, 4 = numeric invariant violation.
int exit_code(Errc code);

}  // namespace bispec
