#pragma once

#include "critforms/forms.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SparseCholesky>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace critforms {

/// Factorization handle for H(0)^{-1} on a transient truncation (killing
/// present, or use on restricted index sets). Sparse Cholesky when the jump
/// matrix is sparse enough, dense LLT otherwise. Immutable and shareable.
class GreenOperator {
  public:
    explicit GreenOperator(const DiscreteModel& model);

    Index n_states() const { return n_; }

    /// x = H(0)^{-1} rhs in form convention: solves A0 x = rhs.
    Vector solve(const Vector& rhs) const;

    /// Dense kernel R(x,y) (materialized on demand; refuses above 4096 states).
    const Matrix& kernel() const;

    double entry(Index x, Index y) const;

  private:
    Index n_ = 0;
    bool dense_ = true;
    Eigen::LLT<Matrix> dense_llt_;
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> sparse_llt_;
    mutable std::optional<Matrix> kernel_;
};

/// Rmu = R . mu (strictly positive by irreducibility). `extra_source`, when
/// given, is added to the right-hand side of the Green solve (used by model
/// builders that compensate exterior truncation).
Vector green_potential(const GreenOperator& g, const PotentialMeasure& mu,
                       const Vector* extra_source = nullptr);

/// nu = mu / Rmu (entrywise on masses). By construction A_nu Rmu = 0.
PotentialMeasure nu_from_mu(const GreenOperator& g, const PotentialMeasure& mu,
                            const Vector* extra_source = nullptr);

/// Equilibrium capacities cap_n(K) = inf{E(u): u=1 on K, u=0 outside G_n},
/// solved in the last (ambient) level for every proper sublevel; returns
/// levels()-1 values, nonincreasing in n. K is given in level-0 indices.
std::vector<double> capacity(const Exhaustion& exh, const std::vector<Index>& K);

enum class Recurrence { Recurrent, Transient, Indeterminate };
const char* to_string(Recurrence r);

struct RecurrenceReport {
    Recurrence verdict = Recurrence::Indeterminate;
    double extrapolated = 0.0;  // Aitken limit of the capacity sequence
    double q_resistance = 0.0;  // last ratio of reciprocal-capacity increments
    std::string to_json() const;
};

/// Verdict from a capacity sequence (>= 3 strictly positive, nonincreasing
/// values). Extrapolation runs on reciprocal capacities (resistances):
/// divergent resistance (increment ratio >= 0.8) means the capacities vanish.
RecurrenceReport recurrence_verdict(const std::vector<double>& caps, double tol);

/// Cross energies c_n = iint_{K_n x K_n^c} R(x,y) dmu dmu over exhaustion
/// levels, all in the ambient Green kernel, plus Rmu level maxima.
struct KHReport {
    std::vector<double> cross_energy;
    double sup = 0.0;
    bool bounded = false;              // last three c_n within 5% relative
    std::vector<double> rmu_level_max;
    bool rmu_locally_bounded = false;
    std::string to_json() const;
};

KHReport kh_test(const Exhaustion& exh, const GreenOperator& g_ambient,
                 const PotentialMeasure& mu_ambient);

/// Criticality certificate for the pair (E^nu, Rmu), nu = mu/Rmu:
///  (a) residual ||A_nu Rmu|| / ||mu||  <= tol
///  (b) per-level lambda(nu_l) >= 1 - tol (Hardy inequality on each level)
///  (c) extrapolated lambda -> 1 (optimality).
struct CriticalityCertificate {
    double residual = 0.0;
    std::vector<double> lambda_levels;
    double lambda_extrapolated = 0.0;
    bool hardy_ok = false;
    bool optimal_ok = false;
    bool residual_ok = false;
    bool passed() const { return hardy_ok && optimal_ok && residual_ok; }
    std::string to_json() const;
};

CriticalityCertificate criticality_certificate(const Exhaustion& exh,
                                               const PotentialMeasure& mu_ambient,
                                               double tol);

/// Aitken Delta^2 on the last three terms; returns the last term when the
/// second difference vanishes.
double aitken(const std::vector<double>& seq);

}  // namespace critforms
