#include "critforms/potential.hpp"

#include "critforms/spectral.hpp"

#include <nlohmann/json.hpp>

#include <Eigen/Sparse>

#include <cmath>

namespace critforms {

namespace {

constexpr Index kKernelLimit = 4096;

Matrix form_matrix(const DiscreteModel& model) {
    return assemble_operator(model, PotentialMeasure(Vector::Zero(model.n_states())));
}

}  // namespace

GreenOperator::GreenOperator(const DiscreteModel& model) : n_(model.n_states()) {
    if (!model.has_killing())
        throw NotTransientError("GreenOperator: no killing anywhere, H(0) is "
                                "singular (recurrent truncation)");
    const Matrix A = form_matrix(model);
    Index nnz = 0;
    for (Index i = 0; i < n_; ++i)
        for (Index j = 0; j < n_; ++j)
            if (A(i, j) != 0.0) ++nnz;
    dense_ = (nnz > n_ * n_ / 4) || n_ <= 256;
    if (dense_) {
        dense_llt_.compute(A);
        if (dense_llt_.info() != Eigen::Success)
            throw NotTransientError("GreenOperator: H(0) not positive definite");
    } else {
        Eigen::SparseMatrix<double> S(n_, n_);
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(nnz);
        for (Index i = 0; i < n_; ++i)
            for (Index j = 0; j < n_; ++j)
                if (A(i, j) != 0.0) trip.emplace_back(i, j, A(i, j));
        S.setFromTriplets(trip.begin(), trip.end());
        sparse_llt_.compute(S);
        if (sparse_llt_.info() != Eigen::Success)
            throw NotTransientError("GreenOperator: H(0) not positive definite");
    }
}

Vector GreenOperator::solve(const Vector& rhs) const {
    if (rhs.size() != n_) throw InputError("GreenOperator::solve: dimension mismatch");
    if (dense_) return dense_llt_.solve(rhs);
    return sparse_llt_.solve(rhs);
}

const Matrix& GreenOperator::kernel() const {
    if (!kernel_) {
        if (n_ > kKernelLimit)
            throw InputError("GreenOperator::kernel: refusing dense kernel above 4096 states");
        kernel_ = solve(Matrix::Identity(n_, n_).eval());
        // symmetrize rounding noise
        *kernel_ = 0.5 * (*kernel_ + kernel_->transpose().eval());
    }
    return *kernel_;
}

double GreenOperator::entry(Index x, Index y) const {
    if (x < 0 || y < 0 || x >= n_ || y >= n_)
        throw InputError("GreenOperator::entry: index out of range");
    if (kernel_) return (*kernel_)(x, y);
    Vector e = Vector::Zero(n_);
    e[y] = 1.0;
    return solve(e)[x];
}

Vector green_potential(const GreenOperator& g, const PotentialMeasure& mu,
                       const Vector* extra_source) {
    if (mu.size() != g.n_states())
        throw InputError("green_potential: dimension mismatch");
    Vector rhs = mu.weights;
    if (extra_source) {
        if (extra_source->size() != rhs.size())
            throw InputError("green_potential: extra_source dimension mismatch");
        rhs += *extra_source;
    }
    return g.solve(rhs);
}

PotentialMeasure nu_from_mu(const GreenOperator& g, const PotentialMeasure& mu,
                            const Vector* extra_source) {
    Vector rmu = green_potential(g, mu, extra_source);
    if (rmu.minCoeff() <= 0.0)
        throw InputError("nu_from_mu: Rmu has a nonpositive entry, cannot divide");
    return PotentialMeasure(mu.weights.cwiseQuotient(rmu));
}

std::vector<double> capacity(const Exhaustion& exh, const std::vector<Index>& K) {
    if (K.empty()) throw InputError("capacity: empty core set");
    const std::size_t L = exh.levels();
    const DiscreteModel& ambient = exh.models.back();
    const Matrix A = form_matrix(ambient);
    const Index n = ambient.n_states();

    std::vector<Index> Ka;  // core in ambient coordinates
    {
        auto l0 = exh.indices_in(0, L - 1);
        for (Index i : K) {
            if (i < 0 || i >= exh.models.front().n_states())
                throw InputError("capacity: core index outside level 0");
            Ka.push_back(l0[i]);
        }
    }
    std::vector<char> inK(n, 0);
    for (Index i : Ka) inK[i] = 1;

    std::vector<double> caps;
    for (std::size_t l = 0; l + 1 < L; ++l) {
        auto lev = exh.indices_in(l, L - 1);
        std::vector<char> inL(n, 0);
        for (Index i : lev) inL[i] = 1;
        for (Index i : Ka)
            if (!inL[i]) throw InputError("capacity: core not inside every level");
        std::vector<Index> F;
        for (Index i : lev)
            if (!inK[i]) F.push_back(i);
        Vector u = Vector::Zero(n);
        for (Index i : Ka) u[i] = 1.0;
        if (!F.empty()) {
            const Index f = static_cast<Index>(F.size());
            Matrix Aff(f, f);
            Vector rhs = Vector::Zero(f);
            for (Index a = 0; a < f; ++a) {
                for (Index b = 0; b < f; ++b) Aff(a, b) = A(F[a], F[b]);
                for (Index i : Ka) rhs[a] -= A(F[a], i);
            }
            Eigen::LLT<Matrix> llt(Aff);
            if (llt.info() != Eigen::Success)
                throw NotTransientError("capacity: singular equilibrium system");
            Vector uf = llt.solve(rhs);
            for (Index a = 0; a < f; ++a) u[F[a]] = uf[a];
        }
        caps.push_back(dirichlet_energy(ambient, u));
    }
    return caps;
}

const char* to_string(Recurrence r) {
    switch (r) {
        case Recurrence::Recurrent: return "Recurrent";
        case Recurrence::Transient: return "Transient";
        case Recurrence::Indeterminate: return "Indeterminate";
    }
    return "?";
}

double aitken(const std::vector<double>& seq) {
    const std::size_t n = seq.size();
    if (n < 3) throw InputError("aitken: need at least 3 terms");
    const double x0 = seq[n - 3], x1 = seq[n - 2], x2 = seq[n - 1];
    const double d2 = x2 - 2.0 * x1 + x0;
    const double scale = std::abs(x0) + std::abs(x1) + std::abs(x2);
    if (std::abs(d2) <= 1e-12 * (1.0 + scale)) return x2;
    return x2 - (x2 - x1) * (x2 - x1) / d2;
}

RecurrenceReport recurrence_verdict(const std::vector<double>& caps, double tol) {
    if (caps.size() < 3) throw InputError("recurrence_verdict: need >= 3 levels");
    if (tol <= 0.0) throw InputError("recurrence_verdict: tol must be > 0");
    for (std::size_t i = 0; i < caps.size(); ++i) {
        if (!(caps[i] > 0.0)) throw InputError("recurrence_verdict: capacities must be > 0");
        if (i > 0 && caps[i] > caps[i - 1] * (1.0 + 1e-12))
            throw InputError("recurrence_verdict: non-monotone capacity sequence");
    }
    RecurrenceReport rep;
    const std::size_t n = caps.size();
    // resistances y = 1/cap; divergence of y means cap -> 0
    const double y0 = 1.0 / caps[n - 3], y1 = 1.0 / caps[n - 2], y2 = 1.0 / caps[n - 1];
    const double dy1 = y1 - y0, dy2 = y2 - y1;
    const double q = (dy1 > 0.0) ? dy2 / dy1 : 0.0;
    rep.q_resistance = q;
    if (q >= 0.8) {
        rep.extrapolated = 0.0;
    } else if (q <= 0.0) {
        rep.verdict = Recurrence::Indeterminate;
        rep.extrapolated = caps[n - 1];
        return rep;
    } else {
        rep.extrapolated = 1.0 / (y2 + dy2 * q / (1.0 - q));
    }
    if (rep.extrapolated <= tol) {
        rep.verdict = Recurrence::Recurrent;
        return rep;
    }
    const double dc1 = caps[n - 2] - caps[n - 3];
    const double dc2 = caps[n - 1] - caps[n - 2];
    const double qc = (dc1 < 0.0) ? dc2 / dc1 : 0.0;
    if (caps[n - 1] >= 10.0 * tol && qc > 0.0 && qc <= 0.95 && rep.extrapolated > tol)
        rep.verdict = Recurrence::Transient;
    return rep;
}

KHReport kh_test(const Exhaustion& exh, const GreenOperator& g_ambient,
                 const PotentialMeasure& mu_ambient) {
    const std::size_t L = exh.levels();
    const Index n = exh.models.back().n_states();
    if (g_ambient.n_states() != n || mu_ambient.size() != n)
        throw InputError("kh_test: ambient dimensions disagree");
    KHReport rep;
    const Vector rmu = g_ambient.solve(mu_ambient.weights);
    for (std::size_t l = 0; l < L; ++l) {
        auto lev = exh.indices_in(l, L - 1);
        std::vector<char> inL(n, 0);
        for (Index i : lev) inL[i] = 1;
        Vector muin = Vector::Zero(n), muout = Vector::Zero(n);
        for (Index i = 0; i < n; ++i)
            (inL[i] ? muin[i] : muout[i]) = mu_ambient[i];
        const double c = muin.dot(g_ambient.solve(muout));
        rep.cross_energy.push_back(c);
        double mx = 0.0;
        for (Index i : lev) mx = std::max(mx, rmu[i]);
        rep.rmu_level_max.push_back(mx);
    }
    rep.sup = *std::max_element(rep.cross_energy.begin(), rep.cross_energy.end());
    if (rep.cross_energy.size() >= 3) {
        const double a = rep.cross_energy[L - 3], b = rep.cross_energy[L - 2],
                     c = rep.cross_energy[L - 1];
        const double hi = std::max({a, b, c}), lo = std::min({a, b, c});
        rep.bounded = (hi - lo) <= 0.05 * std::max(hi, 1e-300);
    }
    rep.rmu_locally_bounded = true;
    for (double v : rep.rmu_level_max)
        if (!std::isfinite(v)) rep.rmu_locally_bounded = false;
    return rep;
}

CriticalityCertificate criticality_certificate(const Exhaustion& exh,
                                               const PotentialMeasure& mu_ambient,
                                               double tol) {
    if (tol <= 0.0) throw InputError("criticality_certificate: tol must be > 0");
    const std::size_t L = exh.levels();
    const DiscreteModel& ambient = exh.models.back();
    if (mu_ambient.size() != ambient.n_states())
        throw InputError("criticality_certificate: dimension mismatch");
    CriticalityCertificate cert;

    // (a) residual of the ambient pair
    {
        GreenOperator g(ambient);
        const Vector rmu = green_potential(g, mu_ambient);
        if (rmu.minCoeff() <= 0.0)
            throw InputError("criticality_certificate: Rmu not strictly positive");
        const PotentialMeasure nu(mu_ambient.weights.cwiseQuotient(rmu));
        const Matrix An = assemble_operator(ambient, nu);
        const double num = (An * rmu).norm();
        const double den = mu_ambient.weights.norm();
        cert.residual = num / den;
    }
    cert.residual_ok = cert.residual <= tol;

    // (b)/(c) per-level critical construction
    cert.hardy_ok = true;
    for (std::size_t l = 0; l < L; ++l) {
        auto lev = exh.indices_in(l, L - 1);
        DiscreteModel part = part_model(ambient, lev);
        Vector mul(part.n_states());
        for (Index a = 0; a < part.n_states(); ++a) mul[a] = mu_ambient[lev[a]];
        GreenOperator g(part);
        const PotentialMeasure nul = nu_from_mu(g, PotentialMeasure(mul));
        const double lam = lambda_mu(part, nul);
        cert.lambda_levels.push_back(lam);
        if (!(lam >= 1.0 - tol)) cert.hardy_ok = false;
    }
    cert.lambda_extrapolated =
        cert.lambda_levels.size() >= 3 ? aitken(cert.lambda_levels)
                                       : cert.lambda_levels.back();
    cert.optimal_ok = std::abs(cert.lambda_extrapolated - 1.0) <= 0.02;
    return cert;
}

std::string RecurrenceReport::to_json() const {
    nlohmann::json j;
    j["verdict"] = to_string(verdict);
    j["extrapolated"] = extrapolated;
    j["q_resistance"] = q_resistance;
    return j.dump();
}

std::string KHReport::to_json() const {
    nlohmann::json j;
    j["cross_energy"] = cross_energy;
    j["sup"] = sup;
    j["bounded"] = bounded;
    j["rmu_level_max"] = rmu_level_max;
    j["rmu_locally_bounded"] = rmu_locally_bounded;
    return j.dump();
}

std::string CriticalityCertificate::to_json() const {
    nlohmann::json j;
    j["residual"] = residual;
    j["residual_ok"] = residual_ok;
    j["lambda_levels"] = lambda_levels;
    j["lambda_extrapolated"] = lambda_extrapolated;
    j["hardy_ok"] = hardy_ok;
    j["optimal_ok"] = optimal_ok;
    j["passed"] = passed();
    return j.dump();
}

}  // namespace critforms
