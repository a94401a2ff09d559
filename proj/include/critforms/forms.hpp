#pragma once

#include "critforms/common.hpp"

#include <optional>
#include <string>
#include <vector>

namespace critforms {

/// Nonnegative vertex weights mu({x}) of a Schrodinger potential measure.
struct PotentialMeasure {
    Vector weights;

    PotentialMeasure() = default;
    explicit PotentialMeasure(Vector w);

    Index size() const { return weights.size(); }
    double operator[](Index i) const { return weights[i]; }
    bool is_zero() const { return weights.size() == 0 || weights.maxCoeff() <= 0.0; }

    PotentialMeasure scaled(double c) const;
};

/// Finite truncation of a regular Dirichlet form:
///   E(u) = (1/2) sum_{x,y} J(x,y)(u(x)-u(y))^2 + sum_x k(x) u(x)^2
/// on L^2(m). J symmetric, zero diagonal, nonnegative; the jump graph must
/// be connected (irreducibility); m strictly positive.
class DiscreteModel {
  public:
    DiscreteModel(Vector m, Matrix jump, Vector kill);

    Index n_states() const { return m_.size(); }
    const Vector& m() const { return m_; }
    const Matrix& jump() const { return jump_; }
    const Vector& kill() const { return kill_; }
    bool has_killing() const { return kill_.maxCoeff() > 0.0; }

  private:
    Vector m_;
    Matrix jump_;
    Vector kill_;
};

/// Nested truncations G_n with explicit index maps into the next level.
/// Jump and measure weights must agree on shared states; the core set K
/// lives in level 0.
struct Exhaustion {
    std::vector<DiscreteModel> models;
    // maps[l][i] = index in level l+1 of state i of level l
    std::vector<std::vector<Index>> maps;
    std::vector<Index> core;

    Exhaustion(std::vector<DiscreteModel> models_,
               std::vector<std::vector<Index>> maps_, std::vector<Index> core_);

    std::size_t levels() const { return models.size(); }
    /// Index set of level `l` inside level `target` (l <= target).
    std::vector<Index> indices_in(std::size_t l, std::size_t target) const;
};

// ---------------------------------------------------------------------------
// energies and operators
// ---------------------------------------------------------------------------

/// E(u); summation runs row-major over pairs x<y, then the killing terms,
/// so results are bit-reproducible.
double dirichlet_energy(const DiscreteModel& model, const Vector& u);

/// E^mu(u) = E(u) - sum mu(x) u(x)^2. May be negative.
double schrodinger_energy(const DiscreteModel& model, const PotentialMeasure& mu,
                          const Vector& u);

/// Symmetric form matrix A with u.A u = E^mu(u); the L^2(m) generator is
/// diag(m)^{-1} A (energies are always stated in form convention).
Matrix assemble_operator(const DiscreteModel& model, const PotentialMeasure& mu);

/// Doob transform by a positive h: m' = h^2 m, J'(x,y) = h(x)h(y)J(x,y),
/// k'(x) = h(x) (A_mu h)(x) so that E'(u) = E^mu(hu) exactly. Throws
/// NotExcessiveError when some k' falls below -1e-10 * scale.
DiscreteModel h_transform(const DiscreteModel& model, const PotentialMeasure& mu,
                          const Vector& h);

/// Restriction to a state subset with induced killing (part form):
/// k_F(x) = k(x) + sum_{y not in F} J(x,y).
DiscreteModel part_model(const DiscreteModel& model,
                         const std::vector<Index>& states);

// ---------------------------------------------------------------------------
// serialization: {n, m:[...], edges:[[x,y,w],...], kill:[...]} with weights
// as decimal strings for exact round-trip
// ---------------------------------------------------------------------------

std::string model_to_json(const DiscreteModel& model);
DiscreteModel model_from_json(const std::string& text);

}  // namespace critforms
