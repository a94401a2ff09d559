#include "critforms/forms.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <queue>

namespace critforms {

namespace {

void check_finite(const Vector& v, const char* what) {
    if (!v.allFinite()) throw InputError(std::string(what) + ": non-finite entry");
}

bool connected(const Matrix& J) {
    const Index n = J.rows();
    if (n == 0) return false;
    std::vector<char> seen(n, 0);
    std::queue<Index> q;
    q.push(0);
    seen[0] = 1;
    Index count = 1;
    while (!q.empty()) {
        const Index x = q.front();
        q.pop();
        for (Index y = 0; y < n; ++y) {
            if (!seen[y] && J(x, y) > 0.0) {
                seen[y] = 1;
                ++count;
                q.push(y);
            }
        }
    }
    return count == n;
}

std::string double_to_string(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double string_to_double(const std::string& s) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc()) throw InputError("bad decimal string: " + s);
    return v;
}

}  // namespace

PotentialMeasure::PotentialMeasure(Vector w) : weights(std::move(w)) {
    check_finite(weights, "PotentialMeasure");
    if (weights.size() > 0 && weights.minCoeff() < 0.0)
        throw InputError("PotentialMeasure: negative weight");
}

PotentialMeasure PotentialMeasure::scaled(double c) const {
    if (c < 0.0) throw InputError("PotentialMeasure::scaled: negative factor");
    return PotentialMeasure(Vector(c * weights));
}

DiscreteModel::DiscreteModel(Vector m, Matrix jump, Vector kill)
    : m_(std::move(m)), jump_(std::move(jump)), kill_(std::move(kill)) {
    const Index n = m_.size();
    if (n == 0) throw InputError("DiscreteModel: empty state space");
    if (jump_.rows() != n || jump_.cols() != n)
        throw InputError("DiscreteModel: jump matrix shape mismatch");
    if (kill_.size() != n) throw InputError("DiscreteModel: kill size mismatch");
    check_finite(m_, "DiscreteModel.m");
    check_finite(kill_, "DiscreteModel.kill");
    if (!jump_.allFinite()) throw InputError("DiscreteModel.jump: non-finite");
    if (m_.minCoeff() <= 0.0) throw InputError("DiscreteModel: m must be > 0");
    if (kill_.minCoeff() < 0.0) throw InputError("DiscreteModel: kill must be >= 0");
    const double scale = jump_.cwiseAbs().maxCoeff();
    for (Index i = 0; i < n; ++i) {
        if (jump_(i, i) != 0.0) throw InputError("DiscreteModel: nonzero diagonal");
        for (Index j = i + 1; j < n; ++j) {
            if (jump_(i, j) < 0.0) throw InputError("DiscreteModel: negative jump");
            if (std::abs(jump_(i, j) - jump_(j, i)) > 1e-14 * (1.0 + scale))
                throw InputError("DiscreteModel: jump matrix not symmetric");
        }
    }
    if (n > 1 && !connected(jump_))
        throw InputError("DiscreteModel: jump graph is not connected");
}

Exhaustion::Exhaustion(std::vector<DiscreteModel> models_,
                       std::vector<std::vector<Index>> maps_,
                       std::vector<Index> core_)
    : models(std::move(models_)), maps(std::move(maps_)), core(std::move(core_)) {
    if (models.size() < 2) throw InputError("Exhaustion: need at least 2 levels");
    if (maps.size() != models.size() - 1)
        throw InputError("Exhaustion: need one index map per consecutive pair");
    for (std::size_t l = 0; l + 1 < models.size(); ++l) {
        const auto& mp = maps[l];
        const auto& a = models[l];
        const auto& b = models[l + 1];
        if (static_cast<Index>(mp.size()) != a.n_states())
            throw InputError("Exhaustion: map size mismatch");
        std::vector<char> used(b.n_states(), 0);
        for (Index i = 0; i < a.n_states(); ++i) {
            const Index t = mp[i];
            if (t < 0 || t >= b.n_states() || used[t])
                throw InputError("Exhaustion: index map not injective");
            used[t] = 1;
            if (std::abs(a.m()[i] - b.m()[t]) > 1e-12 * (1.0 + std::abs(b.m()[t])))
                throw InputError("Exhaustion: measure weights disagree on shared states");
        }
        const double scale = 1.0 + b.jump().maxCoeff();
        for (Index i = 0; i < a.n_states(); ++i)
            for (Index j = i + 1; j < a.n_states(); ++j)
                if (std::abs(a.jump()(i, j) - b.jump()(mp[i], mp[j])) > 1e-12 * scale)
                    throw InputError("Exhaustion: jump weights disagree on shared states");
    }
    for (Index i : core)
        if (i < 0 || i >= models.front().n_states())
            throw InputError("Exhaustion: core set not contained in level 0");
}

std::vector<Index> Exhaustion::indices_in(std::size_t l, std::size_t target) const {
    if (l > target || target >= models.size())
        throw InputError("Exhaustion::indices_in: bad level pair");
    std::vector<Index> idx(models[l].n_states());
    for (Index i = 0; i < models[l].n_states(); ++i) idx[i] = i;
    for (std::size_t k = l; k < target; ++k)
        for (auto& i : idx) i = maps[k][i];
    return idx;
}

double dirichlet_energy(const DiscreteModel& model, const Vector& u) {
    const Index n = model.n_states();
    if (u.size() != n) throw InputError("dirichlet_energy: dimension mismatch");
    check_finite(u, "dirichlet_energy.u");
    const Matrix& J = model.jump();
    double e = 0.0;
    for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) {
            const double d = u[i] - u[j];
            e += J(i, j) * d * d;
        }
    }
    for (Index i = 0; i < n; ++i) e += model.kill()[i] * u[i] * u[i];
    return e;
}

double schrodinger_energy(const DiscreteModel& model, const PotentialMeasure& mu,
                          const Vector& u) {
    if (mu.size() != model.n_states())
        throw InputError("schrodinger_energy: measure dimension mismatch");
    double e = dirichlet_energy(model, u);
    for (Index i = 0; i < model.n_states(); ++i)
        e -= mu[i] * u[i] * u[i];
    return e;
}

Matrix assemble_operator(const DiscreteModel& model, const PotentialMeasure& mu) {
    const Index n = model.n_states();
    if (mu.size() != n) throw InputError("assemble_operator: dimension mismatch");
    Matrix A = -model.jump();
    for (Index i = 0; i < n; ++i)
        A(i, i) = model.jump().row(i).sum() + model.kill()[i] - mu[i];
    return A;
}

DiscreteModel h_transform(const DiscreteModel& model, const PotentialMeasure& mu,
                          const Vector& h) {
    const Index n = model.n_states();
    if (h.size() != n || mu.size() != n)
        throw InputError("h_transform: dimension mismatch");
    check_finite(h, "h_transform.h");
    if (h.minCoeff() <= 0.0) throw InputError("h_transform: h must be > 0");

    const Matrix& J = model.jump();
    Matrix J2 = J.cwiseProduct(h * h.transpose());
    Vector m2 = model.m().cwiseProduct(h.cwiseAbs2());

    // k'(x) = h(x) (A_mu h)(x), the discrete E^mu(h, 1_x)
    Vector Ah = -(J * h);
    double scale = 0.0;
    for (Index i = 0; i < n; ++i) {
        Ah[i] += (J.row(i).sum() + model.kill()[i] - mu[i]) * h[i];
        const double mag = h[i] * ((J.row(i).cwiseAbs() * h.cwiseAbs())(0) +
                                   (model.kill()[i] + mu[i]) * h[i]);
        scale = std::max(scale, mag);
    }
    Vector k2 = h.cwiseProduct(Ah);
    std::vector<Index> bad;
    for (Index i = 0; i < n; ++i)
        if (k2[i] < -1e-10 * scale) bad.push_back(i);
    if (!bad.empty())
        throw NotExcessiveError("h_transform: h is not E^mu-excessive (negative "
                                "transformed killing)", bad);
    k2 = k2.cwiseMax(0.0);
    return DiscreteModel(std::move(m2), std::move(J2), std::move(k2));
}

DiscreteModel part_model(const DiscreteModel& model,
                         const std::vector<Index>& states) {
    const Index n = model.n_states();
    if (states.empty()) throw InputError("part_model: empty state set");
    for (Index s : states)
        if (s < 0 || s >= n) throw InputError("part_model: index out of range");
    const Index p = static_cast<Index>(states.size());
    Vector m2(p), k2(p);
    Matrix J2(p, p);
    std::vector<char> in(n, 0);
    for (Index s : states) in[s] = 1;
    for (Index a = 0; a < p; ++a) {
        const Index i = states[a];
        m2[a] = model.m()[i];
        double out = model.kill()[i];
        for (Index j = 0; j < n; ++j)
            if (!in[j]) out += model.jump()(i, j);
        k2[a] = out;
        for (Index b = 0; b < p; ++b) J2(a, b) = model.jump()(i, states[b]);
        J2(a, a) = 0.0;
    }
    return DiscreteModel(std::move(m2), std::move(J2), std::move(k2));
}

std::string model_to_json(const DiscreteModel& model) {
    nlohmann::json j;
    const Index n = model.n_states();
    j["n"] = n;
    auto& m = j["m"] = nlohmann::json::array();
    for (Index i = 0; i < n; ++i) m.push_back(double_to_string(model.m()[i]));
    auto& kill = j["kill"] = nlohmann::json::array();
    for (Index i = 0; i < n; ++i) kill.push_back(double_to_string(model.kill()[i]));
    auto& edges = j["edges"] = nlohmann::json::array();
    for (Index x = 0; x < n; ++x)
        for (Index y = x + 1; y < n; ++y)
            if (model.jump()(x, y) != 0.0)
                edges.push_back({x, y, double_to_string(model.jump()(x, y))});
    return j.dump();
}

DiscreteModel model_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(std::string("model_from_json: ") + e.what());
    }
    const Index n = j.at("n").get<Index>();
    if (n <= 0) throw InputError("model_from_json: n must be positive");
    Vector m(n), kill(n);
    const auto& jm = j.at("m");
    const auto& jk = j.at("kill");
    if (static_cast<Index>(jm.size()) != n || static_cast<Index>(jk.size()) != n)
        throw InputError("model_from_json: m/kill length mismatch");
    for (Index i = 0; i < n; ++i) {
        m[i] = string_to_double(jm[i].get<std::string>());
        kill[i] = string_to_double(jk[i].get<std::string>());
    }
    Matrix J = Matrix::Zero(n, n);
    for (const auto& e : j.at("edges")) {
        const Index x = e.at(0).get<Index>();
        const Index y = e.at(1).get<Index>();
        if (x < 0 || y < 0 || x >= n || y >= n || x == y)
            throw InputError("model_from_json: bad edge endpoint");
        const double w = string_to_double(e.at(2).get<std::string>());
        J(x, y) = w;
        J(y, x) = w;
    }
    return DiscreteModel(std::move(m), std::move(J), std::move(kill));
}

}  // namespace critforms
