#pragma once

#include <functional>
#include <vector>

namespace critforms {

/// Gauss-Legendre rule on [0,1]: nodes and weights (cached per order).
struct GaussRule {
    std::vector<double> x;  // nodes in (0,1)
    std::vector<double> w;  // weights summing to 1
};

const GaussRule& gauss_legendre(int order);

/// Integrate f over [a,b] with a single Gauss-Legendre panel.
double gl_panel(const std::function<double(double)>& f, double a, double b,
                int order = 48);

/// Integrate f over [a,b] splitting into n geometric (a>0) or linear panels.
double gl_panels(const std::function<double(double)>& f, double a, double b,
                 int n_panels, int order = 48, bool geometric = true);

/// Integrate f over [breaks_0, breaks_last] with one panel between
/// consecutive break points (plus `refine` geometric subpanels in each).
double gl_breaks(const std::function<double(double)>& f,
                 const std::vector<double>& breaks, int refine = 4,
                 int order = 48);

}  // namespace critforms
