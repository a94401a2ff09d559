#pragma once

#include "critforms/forms.hpp"
#include "critforms/potential.hpp"

#include <functional>
#include <string>
#include <vector>

namespace critforms {

// ---------------------------------------------------------------------------
// closed-form constants for the rotationally symmetric alpha-stable family
// ---------------------------------------------------------------------------

/// Normalization A(d,alpha) of the stable Dirichlet form
///   E(u) = (1/2) A(d,alpha) iint (u(x)-u(y))^2 / |x-y|^{d+alpha} dx dy,
/// chosen consistently with the 0-resolvent kernel riesz_green below
/// (A = alpha 2^{alpha-1} Gamma((d+alpha)/2) / (pi^{d/2} Gamma(1-alpha/2))).
double stable_form_constant(int d, double alpha);

/// kappa(delta) = 2^a G((delta+a)/2) G((d-delta)/2) / (G(delta/2) G((d-delta-a)/2));
/// exactly 0 at delta = 0 and delta = d-alpha (Gamma poles).
double kappa(double delta, int d, double alpha);

/// Best Hardy constant kappa* = 2^a G((d+a)/4)^2 / G((d-a)/4)^2 = kappa(delta*).
double kappa_star(int d, double alpha);

/// 0-resolvent density R(x,y) = C(d,a) |x-y|^{alpha-d}; x == y is an error.
double riesz_green(int d, double alpha, const Vector& x, const Vector& y);
double riesz_green_constant(int d, double alpha);

// ---------------------------------------------------------------------------
// alpha-stable grid models
// ---------------------------------------------------------------------------

/// Offset lattice (no node at the origin) covering the ball |x| <= L.
struct StableRecipe {
    int d = 2;
    double alpha = 1.0;
    double delta = 0.0;   // Hardy exponent in [0, d-alpha]
    double h = 0.25;      // grid spacing
    double L = 8.0;       // ball radius
    bool origin_offset = true;

    void validate() const;
    double delta_star() const { return (d - alpha) / 2.0; }
};

struct StableModel {
    DiscreteModel model;
    Matrix points;        // n x d node coordinates
    PotentialMeasure mu;  // mu^delta(x) = kappa(delta) h^d |x|^{-alpha}
    StableRecipe recipe;

    Vector radii() const { return points.rowwise().norm(); }
};

/// J(x,y) = A h^{2d} |x-y|^{-d-alpha}, m = h^d, killing = exterior-jump
/// integral over {|y| > L} (exact radial reduction, Gauss-Legendre in angle).
StableModel build_stable_model(const StableRecipe& recipe);

/// h-transformed family (1.11): J |x|^{-delta}|y|^{-delta}, m = h^d |x|^{-2delta},
/// zero killing.
StableModel build_transformed_model(const StableRecipe& recipe);

/// Nested ball truncations with shared spacing; core = level-0 nodes with
/// |x| <= core_radius.
struct StableExhaustion {
    Exhaustion exhaustion;
    std::vector<Matrix> points;
};
StableExhaustion stable_exhaustion(const StableRecipe& recipe,
                                   const std::vector<double>& level_radii,
                                   double core_radius, bool transformed = false);

/// The potential that makes h exactly harmonic: mu_h(x) = (A_0 h)(x) / h(x).
/// For h = |x|^{-delta} this is the discrete-compatible version of mu^delta.
Vector induced_potential(const DiscreteModel& model, const Vector& h);

// ---------------------------------------------------------------------------
// critical construction on the stable grid
// ---------------------------------------------------------------------------

/// Cell-exact discretization of |x|^{-beta} dx over the lattice cells
/// (polar closed form on cells touching the origin).
Vector stable_cell_measure(const StableModel& sm, double beta);

/// Exterior compensation source: s(x) = A h^d int_{|y|>L} Phi(y)|x-y|^{-d-a} dy
/// with Phi the exterior potential field of mu (grid part via the Riesz
/// kernel, plus the analytic |x|^{-beta} tail beyond the grid). Adding s to
/// the Green right-hand side removes the first-order truncation deficit of
/// Rmu. d in {1,2} supported.
Vector exterior_compensation(const StableModel& sm, const Vector& mu_cells,
                             double beta);

struct StableCriticalPair {
    PotentialMeasure mu;   // cell-exact |x|^{-(d+alpha)/2}
    Vector rmu;            // compensated Green potential
    PotentialMeasure nu;   // mu / rmu
};
StableCriticalPair stable_critical_pair(const StableModel& sm);

// ---------------------------------------------------------------------------
// inversion map Tx = x/|x|^2
// ---------------------------------------------------------------------------

struct InversionReport {
    double max_rel_kernel = 0.0;      // kernel identity error
    double max_rel_pushforward = 0.0; // pushed E^delta kernel vs E^deltahat
    double max_involution = 0.0;      // |T(Tx) - x| / |x|
    double max_sphere_fix = 0.0;      // |Tx - x| on |x| = 1
    double max_rel_measure = 0.0;     // Jacobian measure correspondence
    bool exponent_identity = false;   // 2d - 2delta == 2deltahat + 2alpha
    std::string to_json() const;
};

InversionReport inversion_map_check(const StableRecipe& recipe, int n_pairs,
                                    std::uint64_t seed);

// ---------------------------------------------------------------------------
// Section-6 test functions phi_n at delta*
// ---------------------------------------------------------------------------

struct TestFunctionEnergy {
    double i1 = 0.0, i2 = 0.0, ii1 = 0.0, ii2 = 0.0, total = 0.0;
};

/// Regional integrals of Phi_n (plateau to n, linear taper to 2n, inversion
/// image inside the unit ball) against the delta*-weighted kernel; total =
/// 2(I1+I2) + 4(II1+II2).
TestFunctionEnergy test_function_energy(int d, double alpha, int n);

/// Independent route for the region-decomposition check: 2 x ordered
/// half-quadrant quadrature of the same integrand.
double test_function_total_independent(int d, double alpha, int n);

/// Radial profile of phi_n.
double test_function_profile(double r, int n);

// ---------------------------------------------------------------------------
// 1D diffusion with scale S on (0, infinity)
// ---------------------------------------------------------------------------

/// Geometric grid on [x_lo, x_hi]; scale S(x) = x^p by default or a custom
/// strictly increasing handle with S(0+) = 0.
struct DiffusionRecipe {
    double p = 1.0;
    double x_lo = 1e-3;
    double x_hi = 1e3;
    Index n_nodes = 200;
    std::function<double(double)> scale;  // optional; overrides p

    void validate() const;
    double S(double x) const { return scale ? scale(x) : std::pow(x, p); }
};

struct DiffusionModel {
    DiscreteModel model;
    Vector nodes;       // geometric cell midpoints
    Vector cell_edges;  // n+1 cell boundaries
    DiffusionRecipe recipe;

    /// closed-form Green kernel of the grounded chain: R(x,y) = S(x) ^ S(y)
    double green_kernel(double x, double y) const {
        return std::min(recipe.S(x), recipe.S(y));
    }
};

/// Nearest-neighbor conductances 1/(S_{i+1}-S_i) with the left killing edge
/// 1/S(x_1) to the absorbing origin; the discrete Green kernel is exactly
/// S(x_i) ^ S(x_j).
DiffusionModel build_diffusion_model(const DiffusionRecipe& recipe);

/// Cell-exact discretization of mu = x^{-q} dx. With lump_tails the exterior
/// tails enter the end nodes in scale-weighted form, which makes the discrete
/// potential Rmu match the continuum one on the grid (power-law scale only).
Vector diffusion_measure(const DiffusionModel& dm, double q, bool lump_tails);

/// Prefix exhaustion (nodes 0..counts[i]) of the diffusion chain; core = {0}.
Exhaustion diffusion_exhaustion(const DiffusionModel& dm,
                                const std::vector<Index>& counts);

}  // namespace critforms
