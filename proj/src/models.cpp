#include "critforms/models.hpp"

#include "critforms/gammafn.hpp"
#include "critforms/quadrature.hpp"
#include "critforms/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <thread>

namespace critforms {

namespace {

double sphere_area(int d) {
    // |S^{d-1}|
    return 2.0 * std::pow(M_PI, d / 2.0) / gamma_fn(d / 2.0);
}

int thread_count() {
    if (const char* env = std::getenv("CRITFORMS_THREADS")) {
        const int t = std::atoi(env);
        if (t >= 1) return t;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

void parallel_rows(Index n, const std::function<void(Index, Index)>& body) {
    const int nt = std::min<int>(thread_count(), 8);
    if (nt <= 1 || n < 256) {
        body(0, n);
        return;
    }
    std::vector<std::thread> pool;
    const Index chunk = (n + nt - 1) / nt;
    for (int t = 0; t < nt; ++t) {
        const Index lo = t * chunk, hi = std::min<Index>(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back(body, lo, hi);
    }
    for (auto& th : pool) th.join();
}

// directions and weights for the unit sphere, d in {1,2,3}
struct SphereRule {
    Matrix dirs;   // q x d
    Vector w;      // sums to |S^{d-1}|
};

SphereRule sphere_rule(int d, int n_res) {
    SphereRule r;
    if (d == 1) {
        r.dirs = Matrix(2, 1);
        r.dirs << 1.0, -1.0;
        r.w = Vector::Constant(2, 1.0);
    } else if (d == 2) {
        r.dirs = Matrix(n_res, 2);
        r.w = Vector::Constant(n_res, 2.0 * M_PI / n_res);
        for (int i = 0; i < n_res; ++i) {
            const double th = 2.0 * M_PI * (i + 0.5) / n_res;
            r.dirs(i, 0) = std::cos(th);
            r.dirs(i, 1) = std::sin(th);
        }
    } else if (d == 3) {
        const GaussRule& gl = gauss_legendre(n_res / 2);
        const int nphi = n_res;
        r.dirs = Matrix(gl.x.size() * nphi, 3);
        r.w = Vector(gl.x.size() * nphi);
        Index q = 0;
        for (std::size_t iu = 0; iu < gl.x.size(); ++iu) {
            const double u = 2.0 * gl.x[iu] - 1.0;  // cos(theta)
            const double su = std::sqrt(std::max(0.0, 1.0 - u * u));
            for (int ip = 0; ip < nphi; ++ip) {
                const double ph = 2.0 * M_PI * (ip + 0.5) / nphi;
                r.dirs(q, 0) = su * std::cos(ph);
                r.dirs(q, 1) = su * std::sin(ph);
                r.dirs(q, 2) = u;
                r.w[q] = gl.w[iu] * 2.0 * (2.0 * M_PI / nphi);
                ++q;
            }
        }
    } else {
        throw InputError("sphere_rule: d must be 1, 2 or 3");
    }
    return r;
}

Matrix lattice_points(int d, double h, double L) {
    const Index M = static_cast<Index>(std::llround(L / h));
    std::vector<double> coords;
    const double rmax = L - h / 2.0 + 1e-12 * L;
    auto inside = [&](double r2) { return std::sqrt(r2) <= rmax; };
    if (d == 1) {
        for (Index i = -M; i < M; ++i) {
            const double x = (i + 0.5) * h;
            if (inside(x * x)) coords.push_back(x);
        }
    } else if (d == 2) {
        for (Index i = -M; i < M; ++i)
            for (Index j = -M; j < M; ++j) {
                const double x = (i + 0.5) * h, y = (j + 0.5) * h;
                if (inside(x * x + y * y)) {
                    coords.push_back(x);
                    coords.push_back(y);
                }
            }
    } else {
        for (Index i = -M; i < M; ++i)
            for (Index j = -M; j < M; ++j)
                for (Index k = -M; k < M; ++k) {
                    const double x = (i + 0.5) * h, y = (j + 0.5) * h, z = (k + 0.5) * h;
                    if (inside(x * x + y * y + z * z)) {
                        coords.push_back(x);
                        coords.push_back(y);
                        coords.push_back(z);
                    }
                }
    }
    const Index n = static_cast<Index>(coords.size()) / d;
    Matrix pts(n, d);
    for (Index i = 0; i < n; ++i)
        for (int c = 0; c < d; ++c) pts(i, c) = coords[i * d + c];
    return pts;
}

// exterior-jump intensity: (1/alpha) int_{S^{d-1}} rho(theta,x)^{-alpha} dtheta
// with rho the distance from x to the sphere |y| = L in direction theta
double exterior_angular(const Vector& x, double L, double alpha, int d) {
    const double r2 = x.squaredNorm();
    if (d == 1) {
        const double r = std::abs(x[0]);
        return (std::pow(L - r, -alpha) + std::pow(L + r, -alpha)) / alpha;
    }
    const double r = std::sqrt(r2);
    auto rho = [&](double c) {  // c = cos(angle between theta and x)
        return -r * c + std::sqrt(L * L - r2 + r2 * c * c);
    };
    if (d == 2) {
        auto f = [&](double th) { return std::pow(rho(std::cos(th)), -alpha); };
        return 2.0 * gl_panels(f, 0.0, M_PI, 4, 64, false) / alpha;
    }
    auto f = [&](double u) { return std::pow(rho(u), -alpha); };
    return 2.0 * M_PI * gl_panels(f, -1.0, 1.0, 4, 64, false) / alpha;
}

StableModel assemble_stable(const StableRecipe& recipe, bool transformed) {
    recipe.validate();
    const int d = recipe.d;
    const double a = recipe.alpha, h = recipe.h, L = recipe.L;
    const double A = stable_form_constant(d, a);
    Matrix pts = lattice_points(d, h, L);
    const Index n = pts.rows();
    if (n < 2) throw InputError("build_stable_model: grid has fewer than 2 nodes");

    Vector r(n);
    for (Index i = 0; i < n; ++i) r[i] = pts.row(i).norm();

    const double jscale = A * std::pow(h, 2 * d);
    const double p = (d + a) / 2.0;
    Matrix J(n, n);
    parallel_rows(n, [&](Index lo, Index hi) {
        for (Index i = lo; i < hi; ++i) {
            J(i, i) = 0.0;
            for (Index j = 0; j < n; ++j) {
                if (j == i) continue;
                const double r2 = (pts.row(i) - pts.row(j)).squaredNorm();
                J(i, j) = jscale * std::pow(r2, -p);
            }
        }
    });
    if (!J.allFinite())
        throw InputError("build_stable_model: jump weight overflow at this spacing");

    Vector kill(n), m(n), mu(n);
    const double kap = kappa(recipe.delta, d, a);
    if (transformed) {
        const Vector w = r.array().pow(-recipe.delta).matrix();
        J = J.cwiseProduct(w * w.transpose()).eval();
        for (Index i = 0; i < n; ++i) {
            m[i] = std::pow(h, d) * std::pow(r[i], -2.0 * recipe.delta);
            kill[i] = 0.0;
            mu[i] = 0.0;
        }
    } else {
        std::map<double, double> memo;  // lattice radii repeat exactly
        for (Index i = 0; i < n; ++i) {
            m[i] = std::pow(h, d);
            auto it = memo.find(r[i]);
            if (it == memo.end())
                it = memo.emplace(r[i], exterior_angular(pts.row(i).transpose(), L, a, d)).first;
            kill[i] = A * std::pow(h, d) * it->second;
            mu[i] = kap * std::pow(h, d) * std::pow(r[i], -a);
        }
    }
    return StableModel{DiscreteModel(std::move(m), std::move(J), std::move(kill)),
                       std::move(pts), PotentialMeasure(std::move(mu)), recipe};
}

}  // namespace

double stable_form_constant(int d, double alpha) {
    if (d < 1 || alpha <= 0.0 || alpha >= 2.0)
        throw InputError("stable_form_constant: need d >= 1, alpha in (0,2)");
    return alpha * std::pow(2.0, alpha - 1.0) * gamma_fn((d + alpha) / 2.0) /
           (std::pow(M_PI, d / 2.0) * gamma_fn(1.0 - alpha / 2.0));
}

double kappa(double delta, int d, double alpha) {
    if (alpha <= 0.0 || alpha >= 2.0 || alpha >= d)
        throw InputError("kappa: need 0 < alpha < min(2, d)");
    if (delta < 0.0 || delta > d - alpha)
        throw InputError("kappa: delta outside [0, d-alpha]");
    if (delta == 0.0 || delta == d - alpha) return 0.0;  // Gamma pole below
    return std::pow(2.0, alpha) * gamma_fn((delta + alpha) / 2.0) *
           gamma_fn((d - delta) / 2.0) /
           (gamma_fn(delta / 2.0) * gamma_fn((d - delta - alpha) / 2.0));
}

double kappa_star(int d, double alpha) {
    if (alpha <= 0.0 || alpha >= 2.0 || alpha >= d)
        throw InputError("kappa_star: need 0 < alpha < min(2, d)");
    const double g1 = gamma_fn((d + alpha) / 4.0);
    const double g2 = gamma_fn((d - alpha) / 4.0);
    return std::pow(2.0, alpha) * g1 * g1 / (g2 * g2);
}

double riesz_green_constant(int d, double alpha) {
    if (alpha <= 0.0 || alpha >= 2.0 || alpha >= d)
        throw InputError("riesz_green_constant: need 0 < alpha < min(2, d)");
    return gamma_fn((d - alpha) / 2.0) /
           (std::pow(2.0, alpha) * std::pow(M_PI, d / 2.0) * gamma_fn(alpha / 2.0));
}

double riesz_green(int d, double alpha, const Vector& x, const Vector& y) {
    if (x.size() != d || y.size() != d)
        throw InputError("riesz_green: point dimension mismatch");
    const double dist = (x - y).norm();
    if (dist == 0.0) throw InputError("riesz_green: kernel singularity at x == y");
    return riesz_green_constant(d, alpha) * std::pow(dist, alpha - d);
}

void StableRecipe::validate() const {
    if (d < 1 || d > 3) throw InputError("StableRecipe: d must be 1, 2 or 3");
    if (!(alpha > 0.0 && alpha < 2.0 && alpha < d))
        throw InputError("StableRecipe: need 0 < alpha < min(2, d)");
    if (delta < 0.0 || delta > d - alpha)
        throw InputError("StableRecipe: delta outside [0, d-alpha]");
    if (h <= 0.0 || L <= 0.0) throw InputError("StableRecipe: h, L must be > 0");
    if (L / h < 4.0) throw InputError("StableRecipe: L/h must be >= 4");
    if (!origin_offset)
        throw InputError("StableRecipe: grid must be origin-offset (Cap({0}) = 0)");
}

StableModel build_stable_model(const StableRecipe& recipe) {
    return assemble_stable(recipe, false);
}

StableModel build_transformed_model(const StableRecipe& recipe) {
    return assemble_stable(recipe, true);
}

StableExhaustion stable_exhaustion(const StableRecipe& recipe,
                                   const std::vector<double>& level_radii,
                                   double core_radius, bool transformed) {
    if (level_radii.size() < 2)
        throw InputError("stable_exhaustion: need at least 2 levels");
    for (std::size_t i = 0; i + 1 < level_radii.size(); ++i)
        if (level_radii[i] >= level_radii[i + 1])
            throw InputError("stable_exhaustion: radii must increase");
    std::vector<DiscreteModel> models;
    std::vector<Matrix> points;
    for (double L : level_radii) {
        StableRecipe r = recipe;
        r.L = L;
        StableModel sm = transformed ? build_transformed_model(r) : build_stable_model(r);
        models.push_back(std::move(sm.model));
        points.push_back(std::move(sm.points));
    }
    // index maps by lattice coordinates
    auto key = [&](const Matrix& pts, Index i) {
        std::vector<long long> k(recipe.d);
        for (int c = 0; c < recipe.d; ++c)
            k[c] = std::llround(pts(i, c) / recipe.h - 0.5);
        return k;
    };
    std::vector<std::vector<Index>> maps;
    for (std::size_t l = 0; l + 1 < models.size(); ++l) {
        std::map<std::vector<long long>, Index> lookup;
        for (Index i = 0; i < points[l + 1].rows(); ++i)
            lookup[key(points[l + 1], i)] = i;
        std::vector<Index> mp(points[l].rows());
        for (Index i = 0; i < points[l].rows(); ++i) {
            auto it = lookup.find(key(points[l], i));
            if (it == lookup.end())
                throw InputError("stable_exhaustion: level not nested in the next");
            mp[i] = it->second;
        }
        maps.push_back(std::move(mp));
    }
    std::vector<Index> core;
    for (Index i = 0; i < points[0].rows(); ++i)
        if (points[0].row(i).norm() <= core_radius) core.push_back(i);
    if (core.empty())
        throw InputError("stable_exhaustion: empty core (core_radius too small)");
    return {Exhaustion(std::move(models), std::move(maps), std::move(core)),
            std::move(points)};
}

Vector induced_potential(const DiscreteModel& model, const Vector& h) {
    if (h.size() != model.n_states())
        throw InputError("induced_potential: dimension mismatch");
    if (h.minCoeff() <= 0.0) throw InputError("induced_potential: h must be > 0");
    const Matrix A = assemble_operator(model, PotentialMeasure(Vector::Zero(h.size())));
    return (A * h).cwiseQuotient(h);
}

// ---------------------------------------------------------------------------
// cell-exact measures and exterior compensation
// ---------------------------------------------------------------------------

namespace {

// integral of |y|^{-beta} over the square/cube cell centered at `c` with side
// h; cells touching the origin at a corner are handled in polar form (d<=2)
// or by corner-refined subdivision (d=3).
double cell_integral(const Vector& c, double h, double beta, int depth = 0) {
    const int d = static_cast<int>(c.size());
    const double hh = h / 2.0;
    bool corner = true;
    for (int i = 0; i < d; ++i)
        if (std::abs(std::abs(c[i]) - hh) > 1e-12 * h) corner = false;
    if (corner && d == 1) {
        // cell (0, h)
        return (std::pow(h, 1.0 - beta)) / (1.0 - beta);
    }
    if (corner && d == 2) {
        // cell [0,h]^2 in polar: int_0^{pi/4} x2 of rho(t)^{2-beta}/(2-beta)
        auto f = [&](double t) {
            const double rho = h / std::cos(t);
            return std::pow(rho, 2.0 - beta) / (2.0 - beta);
        };
        return 2.0 * gl_panels(f, 0.0, M_PI / 4.0, 2, 48, false);
    }
    if (corner && d == 3) {
        if (depth >= 8) return std::pow(c.norm(), -beta) * std::pow(h, 3);
        // split into 8 subcells, recurse on the origin-corner one
        double total = 0.0;
        for (int s = 0; s < 8; ++s) {
            Vector cc(3);
            for (int i = 0; i < 3; ++i) {
                const double lo = (c[i] > 0 ? c[i] - hh : c[i] + hh);
                const double off = ((s >> i) & 1) ? 0.75 : 0.25;
                cc[i] = lo + (c[i] > 0 ? off : -off) * h;
            }
            total += cell_integral(cc, h / 2.0, beta, depth + 1);
        }
        return total;
    }
    // regular cell: tensor Gauss-Legendre
    const GaussRule& gl = gauss_legendre(8);
    const int q = static_cast<int>(gl.x.size());
    double total = 0.0;
    if (d == 1) {
        for (int i = 0; i < q; ++i)
            total += gl.w[i] * std::pow(std::abs(c[0] - hh + h * gl.x[i]), -beta);
        return total * h;
    }
    if (d == 2) {
        for (int i = 0; i < q; ++i)
            for (int j = 0; j < q; ++j) {
                const double x = c[0] - hh + h * gl.x[i];
                const double y = c[1] - hh + h * gl.x[j];
                total += gl.w[i] * gl.w[j] * std::pow(x * x + y * y, -beta / 2.0);
            }
        return total * h * h;
    }
    for (int i = 0; i < q; ++i)
        for (int j = 0; j < q; ++j)
            for (int k = 0; k < q; ++k) {
                const double x = c[0] - hh + h * gl.x[i];
                const double y = c[1] - hh + h * gl.x[j];
                const double z = c[2] - hh + h * gl.x[k];
                total += gl.w[i] * gl.w[j] * gl.w[k] *
                         std::pow(x * x + y * y + z * z, -beta / 2.0);
            }
    return total * h * h * h;
}

}  // namespace

Vector stable_cell_measure(const StableModel& sm, double beta) {
    const Index n = sm.points.rows();
    if (beta >= sm.recipe.d)
        throw InputError("stable_cell_measure: beta must be < d for local integrability");
    Vector mu(n);
    for (Index i = 0; i < n; ++i)
        mu[i] = cell_integral(sm.points.row(i).transpose(), sm.recipe.h, beta);
    return mu;
}

Vector exterior_compensation(const StableModel& sm, const Vector& mu_cells,
                             double beta) {
    const int d = sm.recipe.d;
    if (d > 2)
        throw InputError("exterior_compensation: implemented for d in {1,2}");
    const double a = sm.recipe.alpha, h = sm.recipe.h, L = sm.recipe.L;
    const double A = stable_form_constant(d, a);
    const double C = riesz_green_constant(d, a);
    const Index n = sm.points.rows();
    if (mu_cells.size() != n)
        throw InputError("exterior_compensation: measure size mismatch");

    // exterior quadrature points (radial log grid x sphere rule)
    const SphereRule sph = sphere_rule(d, 96);
    const int nr = 40;
    const double Rout = 60.0 * L;
    std::vector<double> redge(nr + 1);
    for (int i = 0; i <= nr; ++i)
        redge[i] = L * std::pow(Rout / L, static_cast<double>(i) / nr);
    const Index nq = sph.dirs.rows() * nr;
    Matrix ypts(nq, d);
    Vector yw(nq), yr(nq);
    {
        Index q = 0;
        for (int i = 0; i < nr; ++i) {
            const double rm = std::sqrt(redge[i] * redge[i + 1]);
            const double dr = redge[i + 1] - redge[i];
            for (Index s = 0; s < sph.dirs.rows(); ++s, ++q) {
                ypts.row(q) = rm * sph.dirs.row(s);
                yw[q] = sph.w[s] * std::pow(rm, d - 1) * dr;
                yr[q] = rm;
            }
        }
    }

    // field Phi(y) = grid part + analytic |z|^{-beta} tail beyond the grid
    const int tail_nr = 160;
    const double tail_out = 400.0 * L;
    const SphereRule tail_sph = sphere_rule(d, 64);
    Vector phi(nq);
    parallel_rows(nq, [&](Index lo, Index hi) {
        for (Index q = lo; q < hi; ++q) {
            double v = 0.0;
            for (Index i = 0; i < n; ++i) {
                const double dist = (ypts.row(q) - sm.points.row(i)).norm();
                v += C * std::pow(dist, a - d) * mu_cells[i];
            }
            // mu tail over L < |z| < tail_out
            for (int t = 0; t < tail_nr; ++t) {
                const double e0 = L * std::pow(tail_out / L, static_cast<double>(t) / tail_nr);
                const double e1 = L * std::pow(tail_out / L, static_cast<double>(t + 1) / tail_nr);
                const double rm = std::sqrt(e0 * e1);
                double ang = 0.0;
                for (Index s = 0; s < tail_sph.dirs.rows(); ++s) {
                    double dist2 = 0.0;
                    for (int cdim = 0; cdim < d; ++cdim) {
                        const double dd = rm * tail_sph.dirs(s, cdim) - ypts(q, cdim);
                        dist2 += dd * dd;
                    }
                    ang += tail_sph.w[s] * std::pow(dist2, (a - d) / 2.0);
                }
                v += C * ang * std::pow(rm, d - 1 - beta) * (e1 - e0);
            }
            // asymptotic remainder beyond tail_out: |y-z| ~ |z|
            v += C * sphere_area(d) * std::pow(tail_out, d - beta - (d - a)) /
                 (beta + (d - a) - d);
            phi[q] = v;
        }
    });

    // s(x) = A h^d sum_q Phi(y_q) |x - y_q|^{-d-a} w_q
    Vector s(n);
    const double pw = (d + a) / 2.0;
    parallel_rows(n, [&](Index lo, Index hi) {
        for (Index i = lo; i < hi; ++i) {
            double v = 0.0;
            for (Index q = 0; q < nq; ++q) {
                const double dist2 = (sm.points.row(i) - ypts.row(q)).squaredNorm();
                v += phi[q] * yw[q] * std::pow(dist2, -pw);
            }
            s[i] = A * std::pow(h, d) * v;
        }
    });
    return s;
}

StableCriticalPair stable_critical_pair(const StableModel& sm) {
    const double beta = (sm.recipe.d + sm.recipe.alpha) / 2.0;
    Vector mu = stable_cell_measure(sm, beta);
    Vector s = exterior_compensation(sm, mu, beta);
    GreenOperator g(sm.model);
    PotentialMeasure pmu{mu};
    Vector rmu = green_potential(g, pmu, &s);
    if (rmu.minCoeff() <= 0.0)
        throw InputError("stable_critical_pair: Rmu not strictly positive");
    PotentialMeasure nu{Vector(mu.cwiseQuotient(rmu))};
    return {std::move(pmu), std::move(rmu), std::move(nu)};
}

// ---------------------------------------------------------------------------
// inversion map
// ---------------------------------------------------------------------------

InversionReport inversion_map_check(const StableRecipe& recipe, int n_pairs,
                                    std::uint64_t seed) {
    recipe.validate();
    const int d = recipe.d;
    const double a = recipe.alpha, delta = recipe.delta;
    const double dhat = d - a - delta;
    InversionReport rep;
    rep.exponent_identity =
        std::abs((2.0 * d - 2.0 * delta) - (2.0 * dhat + 2.0 * a)) < 1e-12;
    Rng rng(seed);
    auto sample_point = [&](double rlo, double rhi) {
        Vector x(d);
        double norm2 = 0.0;
        for (int c = 0; c < d; ++c) {
            // Box-Muller direction
            const double u1 = rng.uniform_pos(), u2 = rng.uniform();
            x[c] = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
            norm2 += x[c] * x[c];
        }
        const double r = rlo * std::pow(rhi / rlo, rng.uniform());
        return Vector((r / std::sqrt(norm2)) * x);
    };
    auto T = [](const Vector& x) { return Vector(x / x.squaredNorm()); };
    auto kernel = [&](const Vector& x, const Vector& y, double dl) {
        return std::pow((x - y).norm(), -(d + a)) * std::pow(x.norm(), -dl) *
               std::pow(y.norm(), -dl);
    };
    for (int i = 0; i < n_pairs; ++i) {
        Vector x = sample_point(0.05, 20.0), y = sample_point(0.05, 20.0);
        if ((x - y).norm() < 1e-6) continue;
        const Vector tx = T(x), ty = T(y);
        // involution
        rep.max_involution =
            std::max(rep.max_involution, (T(tx) - x).norm() / x.norm());
        // |Tx-Ty|^{d+a}|Tx|^delta|Ty|^delta = |x-y|^{d+a}|x|^{-d-a-delta}|y|^{-d-a-delta}
        const double lhs = std::pow((tx - ty).norm(), d + a) *
                           std::pow(tx.norm(), delta) * std::pow(ty.norm(), delta);
        const double rhs = std::pow((x - y).norm(), d + a) *
                           std::pow(x.norm(), -(d + a + delta)) *
                           std::pow(y.norm(), -(d + a + delta));
        rep.max_rel_kernel =
            std::max(rep.max_rel_kernel, std::abs(lhs / rhs - 1.0));
        // pushed E^delta kernel equals the E^deltahat kernel
        const double push = kernel(tx, ty, delta) *
                            std::pow(x.norm(), -2.0 * d) *
                            std::pow(y.norm(), -2.0 * d);
        rep.max_rel_pushforward = std::max(
            rep.max_rel_pushforward, std::abs(push / kernel(x, y, dhat) - 1.0));
        // measure pushforward: |Tx|^{-2delta} Jac = |x|^{-2 deltahat - 2 alpha}
        const double mpush = std::pow(tx.norm(), -2.0 * delta) *
                             std::pow(x.norm(), -2.0 * d);
        const double mref = std::pow(x.norm(), -2.0 * dhat - 2.0 * a);
        rep.max_rel_measure =
            std::max(rep.max_rel_measure, std::abs(mpush / mref - 1.0));
        // fixed sphere
        Vector xs = x / x.norm();
        rep.max_sphere_fix = std::max(rep.max_sphere_fix, (T(xs) - xs).norm());
    }
    return rep;
}

std::string InversionReport::to_json() const {
    nlohmann::json j;
    j["max_rel_kernel"] = max_rel_kernel;
    j["max_rel_pushforward"] = max_rel_pushforward;
    j["max_involution"] = max_involution;
    j["max_sphere_fix"] = max_sphere_fix;
    j["max_rel_measure"] = max_rel_measure;
    j["exponent_identity"] = exponent_identity;
    return j.dump();
}

// ---------------------------------------------------------------------------
// Section-6 test-function energies
// ---------------------------------------------------------------------------

namespace {

struct TfKernel {
    int d;
    double alpha, dstar, p;

    // pair weight: full angular reduction of the measure-weighted kernel;
    // multiply by (F(r)-F(s))^2 and integrate dr ds over (0,inf)^2
    double operator()(double r, double s) const {
        if (d == 1) {
            return 2.0 * std::pow(r * s, -dstar) *
                   (std::pow(std::abs(r - s), -(1.0 + alpha)) +
                    std::pow(r + s, -(1.0 + alpha)));
        }
        const double A = r * r + s * s, B = 2.0 * r * s;
        if (d == 3) {
            const double lo = std::pow((r - s) * (r - s), 1.0 - p);
            const double hi = std::pow((r + s) * (r + s), 1.0 - p);
            const double ang = (lo - hi) / (B * (p - 1.0));
            return 8.0 * M_PI * M_PI * std::pow(r * s, 2.0 - dstar) * ang;
        }
        // d == 2: theta-integral with the peak near 0 resolved by the
        // substitution theta = c tan(phi), c = |r-s|/sqrt(rs)
        const double eps = std::abs(r - s);
        const double c = std::max(eps / std::sqrt(r * s), 1e-14);
        auto f = [&](double ph) {
            const double t = std::tan(ph);
            const double th = c * t;
            if (th >= M_PI) return 0.0;
            const double sec2 = 1.0 + t * t;
            return std::pow(A - B * std::cos(th), -p) * c * sec2;
        };
        const double ph_max = std::atan(M_PI / c);
        const double ang = 2.0 * gl_panels(f, 0.0, ph_max, 6, 48, false);
        return 2.0 * M_PI * 2.0 * std::pow(r * s, 1.0 - dstar) * ang;
    }
};

std::vector<double> tf_breaks(int n, double lo, double hi) {
    std::vector<double> b = {lo};
    for (double x : {0.5 / n, 1.0 / n, 1.0, double(n), 2.0 * n, 3.0 * n})
        if (x > lo && x < hi) b.push_back(x);
    b.push_back(hi);
    std::sort(b.begin(), b.end());
    return b;
}

// integral over s in [slo, shi] of (F(r)-F(s))^2 K(r,s), splitting at the
// diagonal s = r with the substitution s = r +- v^2
double tf_inner(const TfKernel& K, int n, double r, double slo, double shi,
                int refine, int order) {
    if (shi <= slo) return 0.0;
    const double Fr = test_function_profile(r, n);
    auto g = [&](double s) {
        const double dF = Fr - test_function_profile(s, n);
        return dF * dF * K(r, s);
    };
    double total = 0.0;
    auto plain = [&](double lo, double hi) {
        if (hi <= lo) return;
        std::vector<double> br = tf_breaks(n, lo, hi);
        total += gl_breaks(g, br, refine, order);
    };
    if (r <= slo || r >= shi) {
        plain(slo, shi);
        return total;
    }
    // diagonal inside: integrate both sides with v^2 substitution up to the
    // nearest break, plain beyond
    std::vector<double> br = tf_breaks(n, slo, shi);
    double lo_n = slo, hi_n = shi;
    for (double b : br) {
        if (b < r) lo_n = std::max(lo_n, b);
        if (b > r && hi_n == shi) hi_n = std::min(hi_n, b);
    }
    auto wedge = [&](double sgn, double span) {
        if (span <= 0.0) return;
        auto fv = [&](double v) {
            const double s = r + sgn * v * v;
            return g(s) * 2.0 * v;
        };
        total += gl_panels(fv, 0.0, std::sqrt(span), refine, order, false);
    };
    wedge(-1.0, r - lo_n);
    wedge(+1.0, hi_n - r);
    plain(slo, lo_n);
    plain(hi_n, shi);
    return total;
}

double tf_region(const TfKernel& K, int n, double rlo, double rhi, double slo,
                 double shi, bool ordered, int refine = 4, int order = 48) {
    auto fr = [&](double r) {
        const double lo = ordered ? std::max(slo, r) : slo;
        return tf_inner(K, n, r, lo, shi, refine, order);
    };
    std::vector<double> br = tf_breaks(n, rlo, rhi);
    return gl_breaks(fr, br, refine, order);
}

}  // namespace

double test_function_profile(double r, int n) {
    if (r <= 0.0) return 0.0;
    const double t = (r >= 1.0) ? r : 1.0 / r;
    if (t <= n) return 1.0;
    if (t >= 2.0 * n) return 0.0;
    return (2.0 * n - t) / n;
}

TestFunctionEnergy test_function_energy(int d, double alpha, int n) {
    if (n < 1) throw InputError("test_function_energy: n must be >= 1");
    if (d < 1 || d > 3 || alpha <= 0.0 || alpha >= 2.0 || alpha >= d)
        throw InputError("test_function_energy: bad (d, alpha)");
    const double dstar = (d - alpha) / 2.0;
    const TfKernel K{d, alpha, dstar, (d + alpha) / 2.0};
    const double SUP = 100.0 * n;
    const double rmin = 1e-9 / n;
    TestFunctionEnergy e;
    e.i1 = tf_region(K, n, rmin, 1.0 / n, 1.0, SUP, false);
    e.i2 = tf_region(K, n, 1.0 / n, 1.0, double(n), SUP, false);
    e.ii1 = tf_region(K, n, 1.0, 3.0 * n, 3.0 * n, SUP, false);
    e.ii2 = tf_region(K, n, 1.0, 3.0 * n, 1.0, 3.0 * n, true);
    e.total = 2.0 * (e.i1 + e.i2) + 4.0 * (e.ii1 + e.ii2);
    return e;
}

double test_function_total_independent(int d, double alpha, int n) {
    const double dstar = (d - alpha) / 2.0;
    const TfKernel K{d, alpha, dstar, (d + alpha) / 2.0};
    const double SUP = 100.0 * n;
    const double rmin = 1e-9 / n;
    // 2 x ordered half-quadrant
    return 2.0 * tf_region(K, n, rmin, SUP, rmin, SUP, true, 5, 48);
}

// ---------------------------------------------------------------------------
// 1D diffusion
// ---------------------------------------------------------------------------

void DiffusionRecipe::validate() const {
    if (!(x_lo > 0.0 && x_hi > x_lo)) throw InputError("DiffusionRecipe: bad span");
    if (n_nodes < 3) throw InputError("DiffusionRecipe: need >= 3 nodes");
    if (!scale && p <= 0.0) throw InputError("DiffusionRecipe: p must be > 0");
}

DiffusionModel build_diffusion_model(const DiffusionRecipe& recipe) {
    recipe.validate();
    const Index n = recipe.n_nodes;
    Vector edges(n + 1), nodes(n);
    const double q = std::pow(recipe.x_hi / recipe.x_lo, 1.0 / n);
    for (Index i = 0; i <= n; ++i) edges[i] = recipe.x_lo * std::pow(q, double(i));
    for (Index i = 0; i < n; ++i) nodes[i] = std::sqrt(edges[i] * edges[i + 1]);

    Vector S(n);
    for (Index i = 0; i < n; ++i) {
        S[i] = recipe.S(nodes[i]);
        if (i > 0 && S[i] <= S[i - 1])
            throw InputError("build_diffusion_model: scale not strictly increasing on grid");
    }
    if (S[0] <= 0.0)
        throw InputError("build_diffusion_model: S must be positive at the first node");

    Matrix J = Matrix::Zero(n, n);
    for (Index i = 0; i + 1 < n; ++i) {
        const double c = 1.0 / (S[i + 1] - S[i]);
        J(i, i + 1) = c;
        J(i + 1, i) = c;
    }
    Vector kill = Vector::Zero(n);
    kill[0] = 1.0 / S[0];  // edge to the absorbing origin, resistance S(x_1)
    Vector m(n);
    for (Index i = 0; i < n; ++i) m[i] = edges[i + 1] - edges[i];
    return DiffusionModel{DiscreteModel(std::move(m), std::move(J), std::move(kill)),
                          std::move(nodes), std::move(edges), recipe};
}

Vector diffusion_measure(const DiffusionModel& dm, double q, bool lump_tails) {
    if (q <= 1.0)
        throw InputError("diffusion_measure: exponent must be > 1 for a finite right tail");
    const Index n = dm.nodes.size();
    Vector mu(n);
    for (Index i = 0; i < n; ++i)
        mu[i] = (std::pow(dm.cell_edges[i], 1.0 - q) -
                 std::pow(dm.cell_edges[i + 1], 1.0 - q)) / (q - 1.0);
    if (lump_tails) {
        if (dm.recipe.scale)
            throw InputError("diffusion_measure: tail lumping needs the power-law scale");
        const double p = dm.recipe.p;
        if (p - q + 1.0 <= 0.0)
            throw InputError("diffusion_measure: left tail of S dmu not integrable");
        const double c0 = dm.cell_edges[0], cN = dm.cell_edges[n];
        mu[0] += std::pow(c0, p - q + 1.0) / (p - q + 1.0) / dm.recipe.S(dm.nodes[0]);
        mu[n - 1] += std::pow(cN, 1.0 - q) / (q - 1.0);
    }
    return mu;
}

Exhaustion diffusion_exhaustion(const DiffusionModel& dm,
                                const std::vector<Index>& counts) {
    if (counts.size() < 2) throw InputError("diffusion_exhaustion: need >= 2 levels");
    std::vector<DiscreteModel> models;
    std::vector<std::vector<Index>> maps;
    for (std::size_t l = 0; l < counts.size(); ++l) {
        const Index c = counts[l];
        if (c < 2 || c > dm.nodes.size())
            throw InputError("diffusion_exhaustion: bad level size");
        if (l > 0 && c <= counts[l - 1])
            throw InputError("diffusion_exhaustion: levels must grow");
        std::vector<Index> idx(c);
        for (Index i = 0; i < c; ++i) idx[i] = i;
        models.push_back(part_model(dm.model, idx));
        if (l > 0) {
            std::vector<Index> mp(counts[l - 1]);
            for (Index i = 0; i < counts[l - 1]; ++i) mp[i] = i;
            maps.push_back(std::move(mp));
        }
    }
    return Exhaustion(std::move(models), std::move(maps), {0});
}

}  // namespace critforms
