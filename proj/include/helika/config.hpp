#pragma once

#include <cmath>

#include "helika/error.hpp"

namespace helika {

/// Physical constants and numerical tolerances shared by every grid-bound computation.
/// Defaults are natural units (hbar = c = eps0 = 1, hence mu0 = 1).
struct Config {
  double hbar = 1.0;
  double c = 1.0;
  double eps0 = 1.0;
  int fd_order = 4;
  double tol_quad = 1e-6;
  double tol_fd = 1e-4;

  double mu0() const { return 1.0 / (eps0 * c * c); }

  void validate() const {
    if (!(hbar > 0.0) || !(c > 0.0) || !(eps0 > 0.0))
      throw Error(ErrorCode::InvalidArgument, "hbar, c and eps0 must be positive");
    if (fd_order != 2 && fd_order != 4)
      throw Error(ErrorCode::InvalidArgument, "fd_order must be 2 or 4");
    if (!(tol_quad > 0.0) || !(tol_fd > 0.0))
      throw Error(ErrorCode::InvalidArgument, "tolerances must be positive");
  }

  bool operator==(const Config&) const = default;
};

}  // namespace helika
