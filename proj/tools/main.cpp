#include "critforms/cli.hpp"
#include "critforms/common.hpp"
#include "critforms/report.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"critforms: criticality of Schrodinger forms and recurrence of "
                 "Dirichlet forms on finite truncations"};
    app.require_subcommand(1);

    std::string config_path, out;
    double tol = 0.0;
    std::vector<double> levels;
    long long seed = -1;
    int threads = 0;
    bool render = false;

    const std::vector<std::string> tasks = {"build",    "spectrum", "classify",
                                            "capacity", "khtest",   "critical-cert",
                                            "hardy",    "simulate", "sweep"};
    for (const auto& t : tasks) {
        CLI::App* sub = app.add_subcommand(t);
        sub->add_option("--config", config_path, "TOML or JSON run configuration");
        sub->add_option("--out", out, "output path prefix (.json/.csv)");
        sub->add_option("--tol", tol, "tolerance override");
        sub->add_option("--levels", levels, "exhaustion level radii override");
        sub->add_option("--seed", seed, "RNG seed (mandatory for simulate)");
        sub->add_option("--threads", threads,
                        "worker thread override (also CRITFORMS_THREADS)");
        sub->add_flag("--render", render, "print the human-readable report");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        critforms::RunConfig cfg;
        if (!config_path.empty()) cfg = critforms::RunConfig::from_file(config_path);
        cfg.task = app.get_subcommands().front()->get_name();
        if (!out.empty()) cfg.out = out;
        if (tol > 0.0) cfg.tol = tol;
        if (!levels.empty()) cfg.levels = levels;
        if (seed >= 0) {
            cfg.seed = static_cast<std::uint64_t>(seed);
            cfg.seed_set = true;
        }
        if (threads > 0) cfg.threads = threads;
        if (cfg.threads > 0)
            setenv("CRITFORMS_THREADS", std::to_string(cfg.threads).c_str(), 1);

        critforms::RunResult res = critforms::run_task(cfg, std::cout);
        if (render) std::cout << critforms::report_render(res.report_json);
        return res.exit_code;
    } catch (const critforms::InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
