#pragma once

#include <stdexcept>
#include <string>

namespace bergkern {

enum class errc {
  not_homogeneous,
  missing_corner,
  decoupled_profile,
  invalid_argument,
  ratio_out_of_range,
  zero_potential,
  grid_mismatch,
  unreachable_target,
  quadrature_nonconvergent,
  tail_not_certified,
  insufficient_decay,
  budget_exceeded,
  no_convergence,
  support_escapes_box,
  non_positive_ratio,
  dimension_too_large,
  singular_inverse,
  no_clean_subcube,
  config_invalid,
  io_failure,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::not_homogeneous: return "NotHomogeneous";
    case errc::missing_corner: return "MissingCorner";
    case errc::decoupled_profile: return "DecoupledProfile";
    case errc::invalid_argument: return "InvalidArgument";
    case errc::ratio_out_of_range: return "RatioOutOfRange";
    case errc::zero_potential: return "ZeroPotential";
    case errc::grid_mismatch: return "GridMismatch";
    case errc::unreachable_target: return "UnreachableTarget";
    case errc::quadrature_nonconvergent: return "QuadratureNonConvergent";
    case errc::tail_not_certified: return "TailNotCertified";
    case errc::insufficient_decay: return "InsufficientDecay";
    case errc::budget_exceeded: return "BudgetExceeded";
    case errc::no_convergence: return "NoConvergence";
    case errc::support_escapes_box: return "SupportEscapesBox";
    case errc::non_positive_ratio: return "NonPositiveRatio";
    case errc::dimension_too_large: return "DimensionTooLarge";
    case errc::singular_inverse: return "SingularInverse";
    case errc::no_clean_subcube: return "NoCleanSubcube";
    case errc::config_invalid: return "ConfigInvalid";
    case errc::io_failure: return "IoFailure";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

}  // namespace bergkern
