#include "critforms/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace critforms {

namespace {

GaussRule compute_rule(int n) {
    // Newton iteration on Legendre polynomials; nodes mapped to [0,1].
    GaussRule r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < n; ++i) {
        double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double p0 = 0.0, p1 = 0.0, dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            p0 = 1.0;
            p1 = t;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (t * p1 - p0) / (t * t - 1.0);
            const double dt = p1 / dp;
            t -= dt;
            if (std::abs(dt) < 1e-15) break;
        }
        r.x[n - 1 - i] = 0.5 * (1.0 + t);
        r.w[n - 1 - i] = 1.0 / ((1.0 - t * t) * dp * dp);
    }
    return r;
}

}  // namespace

const GaussRule& gauss_legendre(int order) {
    static std::map<int, GaussRule> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(order);
    if (it == cache.end()) it = cache.emplace(order, compute_rule(order)).first;
    return it->second;
}

double gl_panel(const std::function<double(double)>& f, double a, double b,
                int order) {
    if (b <= a) return 0.0;
    const GaussRule& r = gauss_legendre(order);
    double s = 0.0;
    for (int i = 0; i < order; ++i) s += r.w[i] * f(a + (b - a) * r.x[i]);
    return s * (b - a);
}

double gl_panels(const std::function<double(double)>& f, double a, double b,
                 int n_panels, int order, bool geometric) {
    if (b <= a) return 0.0;
    if (n_panels < 1) throw std::invalid_argument("gl_panels: n_panels < 1");
    double s = 0.0;
    if (geometric && a > 0.0) {
        const double q = std::pow(b / a, 1.0 / n_panels);
        double lo = a;
        for (int p = 0; p < n_panels; ++p) {
            const double hi = (p + 1 == n_panels) ? b : lo * q;
            s += gl_panel(f, lo, hi, order);
            lo = hi;
        }
    } else {
        const double step = (b - a) / n_panels;
        for (int p = 0; p < n_panels; ++p)
            s += gl_panel(f, a + p * step, a + (p + 1) * step, order);
    }
    return s;
}

double gl_breaks(const std::function<double(double)>& f,
                 const std::vector<double>& breaks, int refine, int order) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
        s += gl_panels(f, breaks[i], breaks[i + 1], refine, order,
                       breaks[i] > 0.0);
    return s;
}

}  // namespace critforms
