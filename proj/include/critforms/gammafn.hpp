#pragma once

namespace critforms {

/// Gamma function, Lanczos approximation (g=7, 9 coefficients) with the
/// reflection formula for arguments below 1/2. Poles at 0, -1, -2, ...
/// return +infinity.
double gamma_fn(double x);

/// log Gamma for x > 0.
double log_gamma_fn(double x);

}  // namespace critforms
