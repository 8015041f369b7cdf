// Command-line front end: forward | invert | tables | verify.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mimfd/config.hpp"
#include "mimfd/errors.hpp"
#include "mimfd/experiments.hpp"
#include "mimfd/solver.hpp"

namespace fs = std::filesystem;
using namespace mimfd;

namespace {

enum Exit { ok = 0, config_error = 1, solver_error = 2, io_error = 3, line_search_error = 4, check_failed = 5 };

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    int jobs = 1;
};

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

RunConfig resolve(const Options& opt) {
    if (opt.config.empty()) throw ConfigError("--config is required");
    RunConfig c = load_config(opt.config);
    if (!opt.out.empty()) c.out = opt.out;
    if (opt.seed) c.seed = *opt.seed;
    return c;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    return out;
}

int cmd_forward(const Options& opt) {
    const RunConfig c = resolve(opt);
    const Scenario scenario = to_scenario(c);
    const Discretization disc = discretize(scenario, 1);
    const ModelProblem model = disc.model(scenario, project_function(disc.mesh, field_preset(c.g_true)));
    const SpaceTimeField u = solve_forward(model);
    ensure_dir(c.out);
    write_space_time_field(c.out, disc.mesh, u, c.alpha, c.q);
    save_config(c.out / "run.cfg", c);
    std::printf("wrote %d frames to %s\n", c.steps + 1, c.out.string().c_str());
    return ok;
}

void write_history(const fs::path& path, const InversionState& state) {
    auto out = open_out(path);
    out << "iteration,cost,grad_norm,step\n";
    for (const auto& h : state.history)
        out << h.iteration << ',' << g17(h.cost) << ',' << g17(h.grad_norm) << ',' << g17(h.step) << '\n';
    if (!out.flush()) throw IoError("write failed: " + path.string());
}

int cmd_invert(const Options& opt) {
    const RunConfig c = resolve(opt);
    ensure_dir(c.out);
    save_config(c.out / "run.cfg", c);
    const InversionOutcome o = run_inversion(c, c.seed);
    const Mesh& mesh = o.discretization.mesh;
    write_field_csv(c.out / "g_rec.csv", mesh, o.reconstruction.g);
    write_field_csv(c.out / "g_true.csv", mesh, o.g_true);
    write_history(c.out / "history.csv", o.reconstruction.state);
    {
        const auto path = c.out / "summary.csv";
        auto out = open_out(path);
        out << "Error,Loss,beta,iterations,converged,seed\n"
            << g17(o.error) << ',' << g17(o.loss) << ',' << g17(o.beta) << ','
            << o.reconstruction.state.history.size() - 1 << ',' << (o.reconstruction.state.converged ? 1 : 0) << ','
            << c.seed << '\n';
        if (!out.flush()) throw IoError("write failed: " + path.string());
    }
    if (o.sweep) {
        const auto path = c.out / "sweep.csv";
        auto out = open_out(path);
        out << "beta,misfit,cost,error,discrepancy_pick,quasi_optimal_pick\n";
        for (std::size_t k = 0; k < o.sweep->entries.size(); ++k) {
            const auto& e = o.sweep->entries[k];
            out << g17(e.beta) << ',' << g17(e.misfit) << ',' << g17(e.cost) << ','
                << g17(relative_error(e.reconstruction.g, o.g_true, o.discretization.system->mass)) << ','
                << (k == o.sweep->discrepancy_pick ? 1 : 0) << ',' << (k == o.sweep->quasi_optimal_pick ? 1 : 0)
                << '\n';
        }
        if (!out.flush()) throw IoError("write failed: " + path.string());
    }
    std::printf("Error %.4e  Loss %.4e  beta %.1e  iterations %zu\n", o.error, o.loss, o.beta,
                o.reconstruction.state.history.size() - 1);
    return ok;
}

int cmd_tables(const Options& opt, int which, int seeds) {
    if (seeds < 1) throw ConfigError("--seeds must be >= 1");
    const fs::path dir = opt.out.empty() ? fs::path("out") : fs::path(opt.out);
    ensure_dir(dir);
    const auto rows = run_table(which, seeds, opt.seed.value_or(0), opt.jobs);
    const std::string stem = "table" + std::to_string(which);
    write_table_csv(dir / (stem + ".csv"), rows);
    write_table_runs_csv(dir / (stem + "_runs.csv"), rows);
    for (const auto& r : rows)
        std::printf("%-48s Error %.3e +- %.1e  Loss %.3e +- %.1e\n", r.label.c_str(), r.error_mean, r.error_spread,
                    r.loss_mean, r.loss_spread);
    return ok;
}

int cmd_verify(const Options& opt, const std::string& suite) {
    const SuiteResult r = run_suite(suite, opt.seed.value_or(0), opt.out.empty() ? fs::path() : fs::path(opt.out));
    for (const auto& c : r.checks)
        std::printf("%s  %s%s%s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.detail.empty() ? "" : ": ",
                    c.detail.c_str());
    return r.passed() ? ok : check_failed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Inverse source reconstruction for mobile-immobile time-fractional diffusion"};
    app.require_subcommand(1);
    Options opt;
    app.add_option("--config", opt.config, "run configuration file");
    app.add_option("--out", opt.out, "output directory");
    app.add_option("--seed", opt.seed, "64-bit noise seed");
    app.add_option("--jobs", opt.jobs, "worker threads for table sweeps")->check(CLI::PositiveNumber);

    auto* forward = app.add_subcommand("forward", "solve the forward problem and write all frames");
    auto* invert = app.add_subcommand("invert", "reconstruct g from synthetic noisy data");
    auto* tables = app.add_subcommand("tables", "reproduce reconstruction tables 1-3");
    int which = 1;
    int seeds = 5;
    tables->add_option("which", which, "table number")->required();
    tables->add_option("--seeds", seeds, "noise seeds per row");
    auto* verify = app.add_subcommand("verify", "run a verification suite");
    std::string suite;
    verify->add_option("suite", suite, "duhamel | convergence | gradient")->required();
    for (auto* sub : {forward, invert, tables, verify}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return config_error;
    }

    try {
        if (*forward) return cmd_forward(opt);
        if (*invert) return cmd_invert(opt);
        if (*tables) return cmd_tables(opt, which, seeds);
        return cmd_verify(opt, suite);
    } catch (const LineSearchError& e) {
        std::cerr << "line search failed: " << e.what() << '\n';
        return line_search_error;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const ParseError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return io_error;
    } catch (const Error& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return solver_error;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return io_error;
    }
}
