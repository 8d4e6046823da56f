#pragma once

#include <stdexcept>
#include <string>

namespace hofit {

// Every failure mode in the library maps to one of these codes. Callers that
// care about the reason catch hofit::error and switch on code().
enum class errc {
  non_positive_depth,
  degenerate_baseline,
  near_parallel_rays,
  rank_deficient,
  empty_index,
  open_mesh,
  insufficient_observations,
  degenerate_configuration,
  too_few_views,
  no_consensus,
  no_active_markers,
  too_few_markers,
  high_residual,
  window_too_short,
  shape_mismatch,
  empty_input,
  degenerate_covariance,
  parse_error,
  invariant_violation,
  invalid_spec,
  missing_input,
  schema_error,
  non_finite_loss,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::non_positive_depth: return "non_positive_depth";
    case errc::degenerate_baseline: return "degenerate_baseline";
    case errc::near_parallel_rays: return "near_parallel_rays";
    case errc::rank_deficient: return "rank_deficient";
    case errc::empty_index: return "empty_index";
    case errc::open_mesh: return "open_mesh";
    case errc::insufficient_observations: return "insufficient_observations";
    case errc::degenerate_configuration: return "degenerate_configuration";
    case errc::too_few_views: return "too_few_views";
    case errc::no_consensus: return "no_consensus";
    case errc::no_active_markers: return "no_active_markers";
    case errc::too_few_markers: return "too_few_markers";
    case errc::high_residual: return "high_residual";
    case errc::window_too_short: return "window_too_short";
    case errc::shape_mismatch: return "shape_mismatch";
    case errc::empty_input: return "empty_input";
    case errc::degenerate_covariance: return "degenerate_covariance";
    case errc::parse_error: return "parse_error";
    case errc::invariant_violation: return "invariant_violation";
    case errc::invalid_spec: return "invalid_spec";
    case errc::missing_input: return "missing_input";
    case errc::schema_error: return "schema_error";
    case errc::non_finite_loss: return "non_finite_loss";
  }
  return "unknown";
}

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& message) {
  throw error(code, message);
}

inline void require(bool condition, errc code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace hofit
