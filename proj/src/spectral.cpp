#include "critforms/spectral.hpp"

#include <nlohmann/json.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace critforms {

namespace {

constexpr Index kDenseLimit = 512;
constexpr double kEigTol = 1e-10;

struct PencilResult {
    double value;
    Vector vec;  // on the full state space
};

// Smallest eigenvalue of (A, diag(b)) with b >= 0, b != 0, A positive
// definite. Dense path: explicit Schur complement onto supp(b). Iterative
// path: power iteration on A^{-1} diag(b) (the Schur elimination happens
// implicitly), Rayleigh quotients in form convention.
PencilResult pencil_smallest(const Matrix& A, const Vector& b) {
    const Index n = A.rows();
    std::vector<Index> supp;
    for (Index i = 0; i < n; ++i)
        if (b[i] > 0.0) supp.push_back(i);
    const Index s = static_cast<Index>(supp.size());

    if (n <= kDenseLimit) {
        Matrix Aeff;
        if (s == n) {
            Aeff = A;
        } else {
            std::vector<Index> comp;
            for (Index i = 0; i < n; ++i)
                if (b[i] <= 0.0) comp.push_back(i);
            const Index c = static_cast<Index>(comp.size());
            Matrix Ass(s, s), Acs(c, s), Acc(c, c);
            for (Index a = 0; a < s; ++a)
                for (Index bb = 0; bb < s; ++bb) Ass(a, bb) = A(supp[a], supp[bb]);
            for (Index a = 0; a < c; ++a) {
                for (Index bb = 0; bb < s; ++bb) Acs(a, bb) = A(comp[a], supp[bb]);
                for (Index bb = 0; bb < c; ++bb) Acc(a, bb) = A(comp[a], comp[bb]);
            }
            Aeff = Ass - Acs.transpose() * Acc.ldlt().solve(Acs);
        }
        Matrix B = Matrix::Zero(s, s);
        for (Index a = 0; a < s; ++a) B(a, a) = b[supp[a]];
        Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(Aeff, B);
        if (es.info() != Eigen::Success)
            throw std::runtime_error("pencil_smallest: eigensolver failed");
        Vector vs = es.eigenvectors().col(0);
        Vector full = Vector::Zero(n);
        for (Index a = 0; a < s; ++a) full[supp[a]] = vs[a];
        if (s < n) {
            // harmonic extension off the support
            std::vector<Index> comp;
            for (Index i = 0; i < n; ++i)
                if (b[i] <= 0.0) comp.push_back(i);
            const Index c = static_cast<Index>(comp.size());
            Matrix Acc(c, c);
            Vector rhs = Vector::Zero(c);
            for (Index a = 0; a < c; ++a) {
                for (Index bb = 0; bb < c; ++bb) Acc(a, bb) = A(comp[a], comp[bb]);
                for (Index q = 0; q < s; ++q) rhs[a] -= A(comp[a], supp[q]) * vs[q];
            }
            Vector uc = Acc.ldlt().solve(rhs);
            for (Index a = 0; a < c; ++a) full[comp[a]] = uc[a];
        }
        return {es.eigenvalues()(0), full};
    }

    // iterative: v <- A^{-1}(b .* v), Rayleigh quotient vAv / v(b)v
    Eigen::LLT<Matrix> llt(A);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("pencil_smallest: A not positive definite");
    Vector v = b;
    v /= v.norm();
    double rho = 0.0;
    const double ascale = A.diagonal().cwiseAbs().maxCoeff();
    for (int it = 0; it < 20000; ++it) {
        Vector w = llt.solve(b.cwiseProduct(v));
        w /= w.norm();
        const Vector Aw = A * w;
        const double num = w.dot(Aw);
        const double den = w.dot(b.cwiseProduct(w));
        rho = num / den;
        const Vector resid = Aw - rho * b.cwiseProduct(w);
        if (resid.norm() <= kEigTol * ascale * w.norm() && it > 2) {
            v = w;
            break;
        }
        v = w;
    }
    if (v.sum() < 0.0) v = -v;
    return {rho, v};
}

}  // namespace

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Subcritical: return "Subcritical";
        case Verdict::Critical: return "Critical";
        case Verdict::Supercritical: return "Supercritical";
        case Verdict::Indeterminate: return "Indeterminate";
    }
    return "?";
}

double lambda_mu(const DiscreteModel& model, const PotentialMeasure& mu) {
    if (mu.size() != model.n_states())
        throw InputError("lambda_mu: dimension mismatch");
    if (mu.is_zero()) return std::numeric_limits<double>::infinity();
    const Matrix A = assemble_operator(model, PotentialMeasure(Vector::Zero(model.n_states())));
    return pencil_smallest(A, mu.weights).value;
}

double gamma_mu(const DiscreteModel& model, const PotentialMeasure& mu) {
    if (mu.size() != model.n_states())
        throw InputError("gamma_mu: dimension mismatch");
    const Index n = model.n_states();
    const Matrix A = assemble_operator(model, mu);
    if (n <= kDenseLimit) {
        Matrix B = Matrix::Zero(n, n);
        for (Index i = 0; i < n; ++i) B(i, i) = model.m()[i];
        Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(A, B);
        if (es.info() != Eigen::Success)
            throw std::runtime_error("gamma_mu: eigensolver failed");
        return es.eigenvalues()(0);
    }
    // Gershgorin shift makes the pencil positive definite, then invert.
    double lo = 0.0;
    for (Index i = 0; i < n; ++i) {
        const double off = A.row(i).cwiseAbs().sum() - std::abs(A(i, i));
        lo = std::min(lo, (A(i, i) - off) / model.m()[i]);
    }
    const double sigma = lo - 0.1 * std::abs(lo) - 1e-12;
    Matrix As = A;
    As.diagonal() -= sigma * model.m();
    const PencilResult r = pencil_smallest(As, model.m());
    return r.value + sigma;
}

GroundState ground_state(const DiscreteModel& model, const PotentialMeasure& mu,
                         double tol) {
    const Index n = model.n_states();
    const double g = gamma_mu(model, mu);
    if (g < -tol)
        throw SupercriticalError("ground_state: supercritical pair (gamma < -tol)", g);
    const Matrix A = assemble_operator(model, mu);
    double lo = 0.0;
    for (Index i = 0; i < n; ++i) {
        const double off = A.row(i).cwiseAbs().sum() - std::abs(A(i, i));
        lo = std::min(lo, (A(i, i) - off) / model.m()[i]);
    }
    const double sigma = lo - 0.1 * std::abs(lo) - 1e-12;
    Matrix As = A;
    As.diagonal() -= sigma * model.m();
    const PencilResult r = pencil_smallest(As, model.m());

    Vector phi = r.vec;
    Index imax = 0;
    phi.cwiseAbs().maxCoeff(&imax);
    if (phi[imax] < 0.0) phi = -phi;
    const double mnorm = std::sqrt(phi.cwiseAbs2().dot(model.m()));
    phi /= mnorm;
    const double gamma = r.value + sigma;
    // residual ||H^mu phi - gamma phi||_m, H = diag(m)^{-1} A
    Vector res = (A * phi).cwiseQuotient(model.m()) - gamma * phi;
    const double rn = std::sqrt(res.cwiseAbs2().dot(model.m()));
    return {std::move(phi), gamma, rn};
}

SpectralReport classify(const DiscreteModel& model, const PotentialMeasure& mu,
                        double tol) {
    if (tol <= 0.0) throw InputError("classify: tol must be > 0");
    SpectralReport rep;
    rep.tol = tol;
    rep.lambda = lambda_mu(model, mu);
    rep.gamma = gamma_mu(model, mu);
    if (rep.lambda > 1.0 + tol) {
        rep.verdict = Verdict::Subcritical;
    } else if (rep.lambda < 1.0 - tol) {
        rep.verdict = Verdict::Supercritical;
    } else {
        // |lambda - 1| <= tol: critical when a near-null ground state exists
        GroundState gs = ground_state(model, mu, std::max(tol, 10 * std::abs(rep.gamma)));
        rep.residual = gs.residual;
        rep.ground_state = std::move(gs.phi);
        rep.verdict = (rep.residual <= tol) ? Verdict::Critical : Verdict::Indeterminate;
    }
    if (rep.verdict != Verdict::Critical && std::isfinite(rep.lambda) &&
        rep.lambda >= 1.0 - tol) {
        // report the ground state (and residual) for near-critical pairs too
        try {
            GroundState gs = ground_state(model, mu, tol);
            rep.residual = gs.residual;
            rep.ground_state = std::move(gs.phi);
        } catch (const SupercriticalError&) {
        }
    }
    return rep;
}

std::string SpectralReport::to_json() const {
    nlohmann::json j;
    j["lambda"] = std::isfinite(lambda) ? nlohmann::json(lambda) : nlohmann::json("inf");
    j["gamma"] = gamma;
    j["residual"] = residual;
    j["verdict"] = to_string(verdict);
    j["tol"] = tol;
    if (ground_state) {
        auto& g = j["ground_state"] = nlohmann::json::array();
        for (Index i = 0; i < ground_state->size(); ++i) g.push_back((*ground_state)[i]);
    }
    return j.dump();
}

}  // namespace critforms
