#include "critforms/cli.hpp"

#include "critforms/feynman_kac.hpp"
#include "critforms/models.hpp"
#include "critforms/report.hpp"
#include "critforms/spectral.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace critforms {

namespace {

using nlohmann::json;

StableRecipe stable_recipe(const RunConfig& c) {
    StableRecipe r;
    r.d = c.d;
    r.alpha = c.alpha;
    r.delta = c.delta;
    r.h = c.grid_h;
    r.L = c.box_radius;
    return r;
}

DiffusionRecipe diffusion_recipe(const RunConfig& c) {
    DiffusionRecipe r;
    r.p = c.p;
    r.x_lo = c.x_lo;
    r.x_hi = c.x_hi;
    r.n_nodes = c.n_nodes;
    return r;
}

std::vector<double> stable_levels(const RunConfig& c) {
    if (!c.levels.empty()) return c.levels;
    return {c.box_radius / 8.0, c.box_radius / 4.0, c.box_radius / 2.0, c.box_radius};
}

struct ModelBundle {
    DiscreteModel model;
    PotentialMeasure mu;
};

ModelBundle make_model(const RunConfig& c) {
    if (c.kind == "stable") {
        StableModel sm = c.transformed ? build_transformed_model(stable_recipe(c))
                                       : build_stable_model(stable_recipe(c));
        return {std::move(sm.model), std::move(sm.mu)};
    }
    DiffusionModel dm = build_diffusion_model(diffusion_recipe(c));
    Vector mu = diffusion_measure(dm, c.mu_exponent, true);
    return {std::move(dm.model), PotentialMeasure(std::move(mu))};
}

std::string csv_line(std::initializer_list<double> vals) {
    std::ostringstream o;
    o.precision(17);
    bool first = true;
    for (double v : vals) {
        if (!first) o << ",";
        o << v;
        first = false;
    }
    o << "\n";
    return o.str();
}

}  // namespace

RunResult run_task(const RunConfig& config, std::ostream& log) {
    config.validate();
    RunResult res;
    json report;
    report["config"] = json::parse(config.canonical_json());
    report["config_hash"] = sha1_hex(config.canonical_json());
    json& out = report["results"];
    std::ostringstream csv;
    csv.precision(17);

    const std::string task = config.task;
    if (task == "build") {
        ModelBundle mb = make_model(config);
        const std::string model_json = model_to_json(mb.model);
        out["n_states"] = mb.model.n_states();
        out["model_hash"] = sha1_hex(model_json);
        if (!config.out.empty()) {
            write_text_file(config.out + ".model.json", model_json);
            out["model_path"] = config.out + ".model.json";
        }
    } else if (task == "spectrum" || task == "classify") {
        ModelBundle mb = make_model(config);
        SpectralReport sr = classify(mb.model, mb.mu, config.tol);
        out = json::parse(sr.to_json());
        out.erase("ground_state");  // keep reports small; vector on request
        log << "lambda = " << (std::isfinite(sr.lambda) ? std::to_string(sr.lambda) : "inf")
            << "  gamma = " << sr.gamma << "  verdict = " << to_string(sr.verdict)
            << "  residual = " << sr.residual << "\n";
        if (sr.verdict == Verdict::Indeterminate) res.exit_code = 2;
    } else if (task == "capacity") {
        if (config.kind != "stable")
            throw InputError("capacity task: stable recipes only");
        StableExhaustion se = stable_exhaustion(stable_recipe(config),
                                                stable_levels(config),
                                                config.core_radius, config.transformed);
        std::vector<Index> core(se.exhaustion.core.begin(), se.exhaustion.core.end());
        const std::vector<double> caps = capacity(se.exhaustion, core);
        const double vtol = config.tol;
        RecurrenceReport rr = recurrence_verdict(caps, vtol);
        csv << "level,radius,capacity\n";
        for (std::size_t i = 0; i < caps.size(); ++i)
            csv << i << "," << stable_levels(config)[i] << "," << caps[i] << "\n";
        out["capacities"] = caps;
        out["verdict"] = json::parse(rr.to_json());
        log << "capacity verdict: " << to_string(rr.verdict) << "\n";
        if (rr.verdict == Recurrence::Indeterminate) res.exit_code = 2;
    } else if (task == "khtest") {
        if (config.kind != "stable") throw InputError("khtest task: stable recipes only");
        StableExhaustion se = stable_exhaustion(stable_recipe(config),
                                                stable_levels(config),
                                                config.core_radius, false);
        const DiscreteModel& ambient = se.exhaustion.models.back();
        GreenOperator g(ambient);
        // the K_H example measure |x|^{-(d+alpha)/2} on the ambient grid
        Vector r = se.points.back().rowwise().norm();
        Vector mu(r.size());
        const double beta = (config.d + config.alpha) / 2.0;
        for (Index i = 0; i < r.size(); ++i)
            mu[i] = std::pow(config.grid_h, config.d) * std::pow(r[i], -beta);
        KHReport kr = kh_test(se.exhaustion, g, PotentialMeasure(mu));
        out = json::parse(kr.to_json());
        csv << "level,radius,cross_energy,rmu_max\n";
        for (std::size_t i = 0; i < kr.cross_energy.size(); ++i)
            csv << i << "," << stable_levels(config)[i] << "," << kr.cross_energy[i]
                << "," << kr.rmu_level_max[i] << "\n";
        log << "KH bounded: " << (kr.bounded ? "yes" : "no") << "\n";
    } else if (task == "critical-cert" || task == "hardy") {
        if (config.kind != "diffusion")
            throw InputError(task + " task: diffusion recipes only here; use khtest/"
                             "capacity for stable grids");
        DiffusionModel dm = build_diffusion_model(diffusion_recipe(config));
        Vector mu = diffusion_measure(dm, config.mu_exponent, true);
        std::vector<Index> counts;
        if (!config.level_counts.empty()) {
            for (double v : config.level_counts) counts.push_back(static_cast<Index>(v));
        } else {
            const Index n = dm.nodes.size();
            counts = {2 * n / 5, 3 * n / 5, 4 * n / 5, n};
        }
        Exhaustion exh = diffusion_exhaustion(dm, counts);
        CriticalityCertificate cert = criticality_certificate(exh, PotentialMeasure(mu), config.tol);
        out["certificate"] = json::parse(cert.to_json());
        if (task == "hardy") {
            GreenOperator g(dm.model);
            PotentialMeasure nu = nu_from_mu(g, PotentialMeasure(mu));
            Vector w(dm.nodes.size());
            csv << "x,nu_density_x_scaled\n";
            std::vector<double> vals;
            for (Index i = 1; i + 1 < dm.nodes.size(); ++i) {
                const double width = dm.cell_edges[i + 1] - dm.cell_edges[i];
                const double c = nu[i] / width * std::pow(dm.nodes[i], config.p + 1.0);
                vals.push_back(c);
                csv << dm.nodes[i] << "," << c << "\n";
            }
            std::nth_element(vals.begin(), vals.begin() + vals.size() / 2, vals.end());
            out["hardy_constant"] = vals[vals.size() / 2];
            log << "hardy constant ~= " << vals[vals.size() / 2] << "\n";
        }
        if (!cert.passed()) res.exit_code = 2;
    } else if (task == "simulate") {
        if (config.kind != "stable") throw InputError("simulate task: stable recipes only");
        const double kap = kappa(config.delta, config.d, config.alpha);
        const double cap = config.potential_cap;
        const double alpha = config.alpha;
        auto V = [kap, cap, alpha](const Vector& x) {
            return std::min(kap * std::pow(x.norm(), -alpha), cap);
        };
        auto f = [](const Vector&) { return 1.0; };
        PathBatch batch;
        batch.seed = config.seed;
        batch.n_paths = config.n_paths;
        batch.horizon = config.time_horizon;
        batch.dt = config.dt > 0.0 ? config.dt : 1e-3 * config.time_horizon;
        std::vector<Vector> starts;
        Vector x0 = Vector::Zero(config.d);
        x0[0] = 1.0;
        starts.push_back(x0);
        auto est = feynman_kac_estimate_stable(config.d, alpha, config.box_radius,
                                               V, f, config.time_horizon, batch, starts);
        out = json::parse(est[0].to_json());
        out["dt"] = batch.dt;
        out["seed"] = static_cast<std::int64_t>(config.seed);
        log << "estimate = " << est[0].estimate << " +- " << est[0].stderr_ << "\n";
    } else if (task == "sweep") {
        if (config.kind != "stable") throw InputError("sweep task: stable recipes only");
        StableRecipe r = stable_recipe(config);
        r.delta = 0.0;
        StableModel sm = build_stable_model(r);
        const double dmax = config.delta_max > 0.0 ? config.delta_max
                                                   : config.d - config.alpha;
        const double dmin = config.delta_min;
        const Index nsw = std::max<Index>(2, config.delta_count);
        Vector radii = sm.radii();
        csv << "delta,kappa,lambda\n";
        json rows = json::array();
        double best_lambda = std::numeric_limits<double>::infinity();
        double best_delta = 0.0;
        for (Index i = 0; i < nsw; ++i) {
            const double dl = dmin + (dmax - dmin) * i / double(nsw - 1);
            const double kap = kappa(dl, config.d, config.alpha);
            Vector mu(radii.size());
            for (Index q = 0; q < radii.size(); ++q)
                mu[q] = kap * std::pow(config.grid_h, config.d) *
                        std::pow(radii[q], -config.alpha);
            const double lam = lambda_mu(sm.model, PotentialMeasure(mu));
            csv << dl << "," << kap << "," << lam << "\n";
            rows.push_back({{"delta", dl}, {"kappa", kap}, {"lambda", lam}});
            if (lam < best_lambda) {
                best_lambda = lam;
                best_delta = dl;
            }
        }
        out["rows"] = rows;
        out["lambda_min"] = best_lambda;
        out["delta_at_min"] = best_delta;
        out["delta_star"] = (config.d - config.alpha) / 2.0;
        log << "lambda minimum " << best_lambda << " at delta = " << best_delta << "\n";
    }

    report["timestamp"] = std::chrono::duration_cast<std::chrono::seconds>(
                              std::chrono::system_clock::now().time_since_epoch())
                              .count();
    res.report_json = report.dump(2);
    res.csv = csv.str();
    if (!config.out.empty()) {
        write_text_file(config.out + ".json", res.report_json);
        if (!res.csv.empty()) write_text_file(config.out + ".csv", res.csv);
    }
    return res;
}

}  // namespace critforms
