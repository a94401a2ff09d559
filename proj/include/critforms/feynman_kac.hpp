#pragma once

#include "critforms/forms.hpp"
#include "critforms/rng.hpp"

#include <functional>
#include <string>
#include <vector>

namespace critforms {

/// Path-batch configuration. Reduction order is fixed (path index), one RNG
/// stream per path, so results are bit-identical for a given seed under any
/// thread count.
struct PathBatch {
    std::uint64_t seed = 1;
    Index n_paths = 10000;
    double dt = 1e-3;
    double horizon = 1.0;
};

struct FkEstimate {
    double estimate = 0.0;
    double stderr_ = 0.0;
    Index n_paths = 0;
    double alive_fraction = 0.0;
    std::string to_json() const;
};

/// One symmetric alpha-stable draw (Chambers-Mallows-Stuck), scale so that
/// the characteristic function is exp(-|scale * xi|^alpha).
double sample_stable_scalar(double alpha, double scale, Rng& rng);

/// d-vector of i.i.d. symmetric alpha-stable components.
Vector sample_stable_increment(double alpha, double scale, int d, Rng& rng);

/// One-sided (positive) a-stable draw with Laplace transform exp(-lambda^a).
double sample_one_sided_stable(double a, Rng& rng);

/// Rotationally symmetric alpha-stable increment over a time step dt
/// (Brownian motion subordinated by a one-sided (alpha/2)-stable draw);
/// characteristic function exp(-dt |xi|^alpha).
Vector sample_isotropic_stable_increment(double alpha, double dt, int d, Rng& rng);

/// Feynman-Kac estimate on a DiscreteModel: Euler-discretized simulation of
/// the model's own jump chain (rate J(x,y)/m(x), killing k(x)/m(x)), weight
/// exp(A_t) with A_t the trapezoid integral of the potential density
/// V = mu/m along the path; estimates E_x[e^{A_t} f(X_t); t < zeta] at each
/// start state.
std::vector<FkEstimate> feynman_kac_estimate(const DiscreteModel& model,
                                             const PotentialMeasure& mu,
                                             const Vector& f, double t,
                                             const PathBatch& batch,
                                             const std::vector<Index>& starts);

/// Continuum Feynman-Kac for the isotropic alpha-stable process on the ball
/// |x| <= box_radius (paths are killed on exit): estimates
/// E_x[e^{int_0^t V(X_s) ds} f(X_t); t < exit] at each start point.
std::vector<FkEstimate> feynman_kac_estimate_stable(
    int d, double alpha, double box_radius,
    const std::function<double(const Vector&)>& V,
    const std::function<double(const Vector&)>& f, double t,
    const PathBatch& batch, const std::vector<Vector>& starts);

struct ExcessivenessProbe {
    double ratio = 0.0;       // estimate of p^mu_t h / h at the probe
    double stderr_ = 0.0;
    double bias_allowance = 0.0;  // Richardson dt-halving estimate
    bool violation = false;       // ratio > 1 + 3 stderr + bias allowance
};

struct ExcessivenessReport {
    std::vector<ExcessivenessProbe> probes;
    bool excessive = true;  // no probe violates
    std::string to_json() const;
};

/// Checks T^mu_t h <= h at probe points for the isotropic stable process with
/// a bounded (truncated) potential.
ExcessivenessReport excessiveness_check(
    int d, double alpha, double box_radius,
    const std::function<double(const Vector&)>& V,
    const std::function<double(const Vector&)>& h, double t,
    const PathBatch& batch, const std::vector<Vector>& probes);

}  // namespace critforms
