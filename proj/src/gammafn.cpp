#include "critforms/gammafn.hpp"

#include <cmath>
#include <limits>

namespace critforms {

namespace {

// Lanczos g=7, n=9 coefficient set.
constexpr double kG = 7.0;
constexpr double kCoef[9] = {
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
};

double lanczos_core(double x) {
    // valid for x >= 0.5
    double a = kCoef[0];
    const double t = x + kG - 0.5;
    for (int i = 1; i < 9; ++i) a += kCoef[i] / (x - 1.0 + i);
    return std::sqrt(2.0 * M_PI) * std::pow(t, x - 0.5) * std::exp(-t) * a;
}

}  // namespace

double gamma_fn(double x) {
    if (std::isnan(x)) return x;
    if (x == std::floor(x) && x <= 0.0)
        return std::numeric_limits<double>::infinity();
    if (x < 0.5) {
        // reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        return M_PI / (std::sin(M_PI * x) * lanczos_core(1.0 - x));
    }
    return lanczos_core(x);
}

double log_gamma_fn(double x) {
    if (x <= 0.0) return std::numeric_limits<double>::infinity();
    if (x < 0.5) return std::log(M_PI / std::sin(M_PI * x)) - log_gamma_fn(1.0 - x);
    double a = kCoef[0];
    const double t = x + kG - 0.5;
    for (int i = 1; i < 9; ++i) a += kCoef[i] / (x - 1.0 + i);
    return 0.5 * std::log(2.0 * M_PI) + (x - 0.5) * std::log(t) - t + std::log(a);
}

}  // namespace critforms
