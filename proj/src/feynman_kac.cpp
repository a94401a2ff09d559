#include "critforms/feynman_kac.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <thread>

namespace critforms {

namespace {

constexpr double kLogOverflowGuard = 690.0;  // exp guard for path weights

int fk_threads() {
    if (const char* env = std::getenv("CRITFORMS_THREADS")) {
        const int t = std::atoi(env);
        if (t >= 1) return t;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

// mean and stderr in fixed path order (Kahan summation)
FkEstimate reduce(const std::vector<double>& w, Index n_alive) {
    FkEstimate e;
    e.n_paths = static_cast<Index>(w.size());
    double sum = 0.0, c = 0.0;
    for (double v : w) {
        const double y = v - c;
        const double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    e.estimate = sum / e.n_paths;
    double ss = 0.0;
    for (double v : w) ss += (v - e.estimate) * (v - e.estimate);
    e.stderr_ = std::sqrt(ss / (e.n_paths - 1)) / std::sqrt(double(e.n_paths));
    e.alive_fraction = double(n_alive) / double(e.n_paths);
    return e;
}

template <typename PathFn>
void run_paths(Index n_paths, const PathFn& fn) {
    const int nt = fk_threads();
    if (nt <= 1 || n_paths < 512) {
        for (Index p = 0; p < n_paths; ++p) fn(p);
        return;
    }
    std::vector<std::thread> pool;
    const Index chunk = (n_paths + nt - 1) / nt;
    for (int t = 0; t < nt; ++t) {
        const Index lo = t * chunk, hi = std::min(n_paths, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi] {
            for (Index p = lo; p < hi; ++p) fn(p);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace

double sample_stable_scalar(double alpha, double scale, Rng& rng) {
    if (alpha <= 0.0 || alpha > 2.0)
        throw InputError("sample_stable_scalar: alpha outside (0, 2]");
    const double u = M_PI * (rng.uniform() - 0.5);      // Uniform(-pi/2, pi/2)
    const double w = -std::log(rng.uniform_pos());      // Exp(1)
    if (alpha == 1.0) return scale * std::tan(u);
    const double t1 = std::sin(alpha * u) / std::pow(std::cos(u), 1.0 / alpha);
    const double t2 = std::pow(std::cos(u - alpha * u) / w, (1.0 - alpha) / alpha);
    return scale * t1 * t2;
}

Vector sample_stable_increment(double alpha, double scale, int d, Rng& rng) {
    if (d < 1) throw InputError("sample_stable_increment: d must be >= 1");
    Vector v(d);
    for (int c = 0; c < d; ++c) v[c] = sample_stable_scalar(alpha, scale, rng);
    return v;
}

double sample_one_sided_stable(double a, Rng& rng) {
    if (a <= 0.0 || a >= 1.0)
        throw InputError("sample_one_sided_stable: index outside (0, 1)");
    // Kanter's representation, Laplace transform exp(-lambda^a)
    const double u = M_PI * rng.uniform_pos();
    const double w = -std::log(rng.uniform_pos());
    const double A = std::pow(std::sin(a * u), a / (1.0 - a)) *
                     std::sin((1.0 - a) * u) /
                     std::pow(std::sin(u), 1.0 / (1.0 - a));
    return std::pow(A / w, (1.0 - a) / a);
}

Vector sample_isotropic_stable_increment(double alpha, double dt, int d, Rng& rng) {
    if (alpha <= 0.0 || alpha >= 2.0)
        throw InputError("sample_isotropic_stable_increment: alpha outside (0, 2)");
    const double a = alpha / 2.0;
    const double T = std::pow(dt, 2.0 / alpha) * sample_one_sided_stable(a, rng);
    Vector v(d);
    for (int c = 0; c < d; c += 2) {
        const double u1 = rng.uniform_pos(), u2 = rng.uniform();
        const double rad = std::sqrt(-2.0 * std::log(u1));
        v[c] = rad * std::cos(2.0 * M_PI * u2);
        if (c + 1 < d) v[c + 1] = rad * std::sin(2.0 * M_PI * u2);
    }
    return std::sqrt(2.0 * T) * v;
}

std::vector<FkEstimate> feynman_kac_estimate(const DiscreteModel& model,
                                             const PotentialMeasure& mu,
                                             const Vector& f, double t,
                                             const PathBatch& batch,
                                             const std::vector<Index>& starts) {
    const Index n = model.n_states();
    if (mu.size() != n || f.size() != n)
        throw InputError("feynman_kac_estimate: dimension mismatch");
    if (t <= 0.0 || t > batch.horizon + 1e-12)
        throw InputError("feynman_kac_estimate: t must be in (0, horizon]");
    const double dt = batch.dt;
    const Index n_steps = static_cast<Index>(std::llround(t / dt));
    if (n_steps < 1) throw InputError("feynman_kac_estimate: dt larger than t");

    // Euler transition rows: cumulative over [jumps..., death]; stay = rest
    const Vector V = mu.weights.cwiseQuotient(model.m());
    Matrix cum(n, n + 1);
    for (Index i = 0; i < n; ++i) {
        double acc = 0.0;
        for (Index j = 0; j < n; ++j) {
            acc += dt * model.jump()(i, j) / model.m()[i];
            cum(i, j) = acc;
        }
        acc += dt * model.kill()[i] / model.m()[i];
        cum(i, n) = acc;
        if (acc > 0.5)
            throw InputError("feynman_kac_estimate: dt too large for the jump rates "
                             "(Euler step probability above 1/2)");
    }

    std::vector<FkEstimate> out;
    for (std::size_t si = 0; si < starts.size(); ++si) {
        const Index x0 = starts[si];
        if (x0 < 0 || x0 >= n) throw InputError("feynman_kac_estimate: bad start state");
        std::vector<double> w(batch.n_paths, 0.0);
        std::vector<char> alive_flag(batch.n_paths, 0);
        bool overflow = false;
        run_paths(batch.n_paths, [&](Index p) {
            Rng rng = Rng::stream(batch.seed + 7919 * si, p);
            Index x = x0;
            double A = 0.0;
            bool alive = true;
            for (Index s = 0; s < n_steps && alive; ++s) {
                const double vb = V[x];
                const double u = rng.uniform();
                if (u < cum(x, n)) {
                    // binary search in the cumulative row
                    Index lo = 0, hi = n;
                    while (lo < hi) {
                        const Index mid = (lo + hi) / 2;
                        if (u < cum(x, mid)) hi = mid; else lo = mid + 1;
                    }
                    if (lo >= n) {
                        alive = false;
                        break;
                    }
                    x = lo;
                }
                A += dt * 0.5 * (vb + V[x]);
                if (A > kLogOverflowGuard) overflow = true;
            }
            if (alive) {
                w[p] = std::exp(A) * f[x];
                alive_flag[p] = 1;
            }
        });
        if (overflow)
            throw InputError("feynman_kac_estimate: exp(A_t) overflow; use smaller t "
                             "or a lower potential truncation");
        Index n_alive = 0;
        for (char a : alive_flag) n_alive += a;
        out.push_back(reduce(w, n_alive));
    }
    return out;
}

std::vector<FkEstimate> feynman_kac_estimate_stable(
    int d, double alpha, double box_radius,
    const std::function<double(const Vector&)>& V,
    const std::function<double(const Vector&)>& f, double t,
    const PathBatch& batch, const std::vector<Vector>& starts) {
    if (d < 1) throw InputError("feynman_kac_estimate_stable: d must be >= 1");
    if (t <= 0.0) throw InputError("feynman_kac_estimate_stable: t must be > 0");
    const double dt = batch.dt;
    const Index n_steps = static_cast<Index>(std::llround(t / dt));
    if (n_steps < 1) throw InputError("feynman_kac_estimate_stable: dt larger than t");

    std::vector<FkEstimate> out;
    for (std::size_t si = 0; si < starts.size(); ++si) {
        if (starts[si].size() != d)
            throw InputError("feynman_kac_estimate_stable: start dimension mismatch");
        std::vector<double> w(batch.n_paths, 0.0);
        std::vector<char> alive_flag(batch.n_paths, 0);
        bool overflow = false;
        run_paths(batch.n_paths, [&](Index p) {
            Rng rng = Rng::stream(batch.seed + 7919 * si, p);
            Vector x = starts[si];
            double A = 0.0;
            double vb = V(x);
            bool alive = true;
            for (Index s = 0; s < n_steps; ++s) {
                x += sample_isotropic_stable_increment(alpha, dt, d, rng);
                if (x.norm() > box_radius) {
                    alive = false;
                    break;
                }
                const double va = V(x);
                A += dt * 0.5 * (vb + va);
                vb = va;
                if (A > kLogOverflowGuard) {
                    overflow = true;
                    break;
                }
            }
            if (alive) {
                w[p] = std::exp(A) * f(x);
                alive_flag[p] = 1;
            }
        });
        if (overflow)
            throw InputError("feynman_kac_estimate_stable: exp(A_t) overflow; use "
                             "smaller t or a lower potential truncation");
        Index n_alive = 0;
        for (char a : alive_flag) n_alive += a;
        out.push_back(reduce(w, n_alive));
    }
    return out;
}

ExcessivenessReport excessiveness_check(
    int d, double alpha, double box_radius,
    const std::function<double(const Vector&)>& V,
    const std::function<double(const Vector&)>& h, double t,
    const PathBatch& batch, const std::vector<Vector>& probes) {
    ExcessivenessReport rep;
    auto run = [&](double dt) {
        PathBatch b = batch;
        b.dt = dt;
        return feynman_kac_estimate_stable(d, alpha, box_radius, V, h, t, b, probes);
    };
    const auto full = run(batch.dt);
    const auto half = run(batch.dt / 2.0);
    for (std::size_t i = 0; i < probes.size(); ++i) {
        ExcessivenessProbe pr;
        const double hx = h(probes[i]);
        pr.ratio = full[i].estimate / hx;
        pr.stderr_ = full[i].stderr_ / hx;
        pr.bias_allowance =
            2.0 * std::abs(half[i].estimate - full[i].estimate) / hx;
        pr.violation = pr.ratio > 1.0 + 3.0 * pr.stderr_ + pr.bias_allowance;
        if (pr.violation) rep.excessive = false;
        rep.probes.push_back(pr);
    }
    return rep;
}

std::string FkEstimate::to_json() const {
    nlohmann::json j;
    j["estimate"] = estimate;
    j["stderr"] = stderr_;
    j["n_paths"] = n_paths;
    j["alive_fraction"] = alive_fraction;
    return j.dump();
}

std::string ExcessivenessReport::to_json() const {
    nlohmann::json j;
    j["excessive"] = excessive;
    auto& arr = j["probes"] = nlohmann::json::array();
    for (const auto& p : probes) {
        nlohmann::json q;
        q["ratio"] = p.ratio;
        q["stderr"] = p.stderr_;
        q["bias_allowance"] = p.bias_allowance;
        q["violation"] = p.violation;
        arr.push_back(q);
    }
    return j.dump();
}

}  // namespace critforms
