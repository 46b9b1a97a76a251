#include "bispec/error.hpp"

namespace bispec {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::too_short_signal: return "too-short-signal";
    case Errc::filter_design: return "filter-design-error";
    case Errc::aliasing: return "aliasing-error";
    case Errc::grid: return "grid-error";
    case Errc::normalization: return "normalization-bug";
    case Errc::band: return "band-error";
    case Errc::stratification: return "stratification-error";
    case Errc::degenerate: return "degenerate";
    case Errc::undefined_effect: return "undefined-effect";
    case Errc::no_signal: return "no-signal";
    case Errc::config: return "config-error";
    case Errc::shape_mismatch: return "shape-mismatch";
    case Errc::unknown_dtype: return "unknown-dtype";
    case Errc::missing_file: return "missing-file";
    case Errc::label: return "label-error";
    case Errc::data: return "data-error";
  }
  return "unknown";
}

int exit_code(Errc code) {
  switch (code) {
    case Errc::invalid_argument:
    case Errc::config:
    case Errc::band:
    case Errc::grid:
    case Errc::aliasing:
      return 2;
    case Errc::filter_design:
    case Errc::normalization:
      return 4;
    default:
      return 3;
  }
}

}  // namespace bispec
