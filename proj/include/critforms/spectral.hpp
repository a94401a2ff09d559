#pragma once

#include "critforms/forms.hpp"

#include <optional>
#include <string>

namespace critforms {

enum class Verdict { Subcritical, Critical, Supercritical, Indeterminate };

const char* to_string(Verdict v);

/// Bottom-of-spectrum report for a Schrodinger pair (model, mu).
struct SpectralReport {
    double lambda = 0.0;                 // inf E(u) over {int u^2 dmu = 1}; +inf if mu == 0
    double gamma = 0.0;                  // bottom of E^mu in L^2(m)
    std::optional<Vector> ground_state;  // normalized ||phi||_m = 1, positive
    double residual = 0.0;               // ||H^mu phi - gamma phi||_m
    Verdict verdict = Verdict::Indeterminate;
    double tol = 0.0;

    std::string to_json() const;
};

struct GroundState {
    Vector phi;       // ||phi||_m = 1, largest-magnitude entry positive
    double gamma;
    double residual;  // ||H^mu phi - gamma phi||_m
};

/// lambda(mu) = inf{E(u) : sum mu u^2 = 1}: smallest eigenvalue of the pencil
/// (A_0, diag(mu)); states off supp(mu) are removed by harmonic Schur
/// complement (dense below 512 states, shift-inverted iteration above).
/// Returns +infinity for mu == 0.
double lambda_mu(const DiscreteModel& model, const PotentialMeasure& mu);

/// gamma(mu): smallest eigenvalue of the pencil (A_mu, diag(m)).
double gamma_mu(const DiscreteModel& model, const PotentialMeasure& mu);

/// Perron ground state of H^mu; refuses supercritical pairs
/// (gamma < -tol) with SupercriticalError.
GroundState ground_state(const DiscreteModel& model, const PotentialMeasure& mu,
                         double tol = 1e-8);

/// Trichotomy by lambda with tolerance band; Critical additionally requires
/// the ground-state residual to pass (H^mu phi ~ 0).
SpectralReport classify(const DiscreteModel& model, const PotentialMeasure& mu,
                        double tol = 1e-8);

}  // namespace critforms
