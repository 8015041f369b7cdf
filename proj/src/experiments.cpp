#include "mimfd/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <numbers>
#include <thread>

#include "mimfd/duhamel.hpp"
#include "mimfd/errors.hpp"
#include "mimfd/solver.hpp"

namespace mimfd {

double expected_noise_energy(const ObservationData& noisy, const AssembledSystem& system, double epsilon) {
    const TimeGrid& grid = noisy.u_d.grid;
    double energy = 0.0;
    for (int n = 0; n <= grid.steps(); ++n) {
        const auto& u = noisy.u_d[static_cast<std::size_t>(n)];
        energy += 0.5 * grid.trapezoid_weight(n) * u.dot(system.mass_omega * u);
    }
    // E[r^2] = 1/3 for r ~ U[-1, 1].
    const double amp = epsilon / 100.0;
    return amp * amp / 3.0 * energy;
}

BetaSweep beta_sweep(const ModelProblem& model, const ObservationData& data, const InverseConfig& base,
                     std::vector<double> betas, AdjointScheme scheme) {
    if (betas.empty()) throw DomainError("beta_sweep: no beta values");
    std::sort(betas.begin(), betas.end());
    BetaSweep sweep{{}, expected_noise_energy(data, *model.system, data.noise_percent), 0, 0};
    for (double beta : betas) {
        InverseConfig cfg = base;
        cfg.beta = beta;
        const InverseProblem problem(model, data, beta, scheme);
        Reconstruction rec = reconstruct(cfg, problem);
        const double misfit = problem.misfit(problem.state(rec.g));
        const double cost = rec.state.history.back().cost;
        sweep.entries.push_back({beta, std::move(rec), misfit, cost});
    }

    sweep.discrepancy_pick = 0;
    for (std::size_t k = 0; k < sweep.entries.size(); ++k)
        if (sweep.entries[k].misfit <= sweep.noise_energy) sweep.discrepancy_pick = k;

    sweep.quasi_optimal_pick = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < sweep.entries.size(); ++k) {
        const double d = l2_norm(sweep.entries[k].reconstruction.g - sweep.entries[k + 1].reconstruction.g,
                                 model.system->mass);
        if (d < best) {
            best = d;
            sweep.quasi_optimal_pick = k;
        }
    }
    return sweep;
}

InversionOutcome run_inversion(const RunConfig& config, std::uint64_t seed) {
    config.validate();
    const Scenario scenario = to_scenario(config);
    const ScalarFunction truth = field_preset(config.g_true);
    ObservationData data = generate_data(truth, scenario, config.refine);
    Discretization disc = discretize(scenario, 1);
    data.u_d = add_noise(data.u_d, data.mask, disc.mesh, config.noise, seed);
    data.noise_percent = config.noise;

    const ModelProblem model = disc.model(scenario);
    const InverseConfig base = to_inverse_config(config);
    Field g_true = project_function(disc.mesh, truth);

    if (config.beta_sweep) {
        BetaSweep sweep = beta_sweep(model, data, base, config.sweep_values, config.adjoint);
        const SweepEntry& pick = sweep.entries[sweep.quasi_optimal_pick];
        const double error = relative_error(pick.reconstruction.g, g_true, disc.system->mass);
        InversionOutcome out{std::move(disc), std::move(g_true), pick.reconstruction, pick.beta, error, pick.cost,
                             std::nullopt};
        out.sweep = std::move(sweep);
        return out;
    }
    const InverseProblem problem(model, data, config.beta, config.adjoint);
    Reconstruction rec = reconstruct(base, problem);
    const double error = relative_error(rec.g, g_true, disc.system->mass);
    const double loss = rec.state.history.back().cost;
    return InversionOutcome{std::move(disc), std::move(g_true), std::move(rec), config.beta, error, loss,
                            std::nullopt};
}

std::vector<TableRowSpec> table_rows(int which) {
    std::vector<TableRowSpec> rows;
    auto row = [&](double eps, double lo, double alpha, const std::string& g) {
        RunConfig c = example1_config();
        c.noise = eps;
        c.frame = std::make_pair(lo, 1.0 - lo);
        c.alpha = alpha;
        c.g_true = g;
        char label[96];
        std::snprintf(label, sizeof label, "eps=%g omega=[%g,%g] alpha=%g g=%s", eps, lo, 1.0 - lo, alpha, g.c_str());
        rows.push_back({label, c});
    };
    switch (which) {
        case 1:
            for (double eps : {1.0, 3.0, 5.0}) row(eps, 0.1, 0.5, "example1");
            for (double lo : {0.2, 0.1, 0.05}) row(1.0, lo, 0.5, "example1");
            break;
        case 2:
            for (double alpha : {0.3, 0.6, 0.9}) row(2.0, 0.05, alpha, "example1");
            break;
        case 3:
            for (const char* g : {"ex2a", "ex2b", "ex2c"}) row(1.0, 0.05, 0.5, g);
            break;
        default:
            throw ConfigError("unknown table " + std::to_string(which) + " (expected 1, 2 or 3)");
    }
    return rows;
}

namespace {

std::pair<double, double> mean_spread(const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double spread = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    return {mean, spread};
}

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

std::vector<TableRowResult> run_table(int which, int seeds, std::uint64_t base_seed, int jobs) {
    if (seeds < 1) throw ConfigError("seeds must be >= 1");
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
    const auto specs = table_rows(which);

    std::vector<TableRowResult> rows(specs.size());
    for (std::size_t r = 0; r < specs.size(); ++r) {
        rows[r].label = specs[r].label;
        rows[r].config = specs[r].config;
        rows[r].errors.assign(static_cast<std::size_t>(seeds), 0.0);
        rows[r].losses.assign(static_cast<std::size_t>(seeds), 0.0);
        rows[r].betas.assign(static_cast<std::size_t>(seeds), 0.0);
        // The same noise seeds in every row.
        for (int s = 0; s < seeds; ++s) rows[r].seeds.push_back(split_seed(base_seed, static_cast<std::uint64_t>(s)));
    }

    const std::size_t total = specs.size() * static_cast<std::size_t>(seeds);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t job = next++; job < total; job = next++) {
            const std::size_t r = job / static_cast<std::size_t>(seeds);
            const std::size_t s = job % static_cast<std::size_t>(seeds);
            try {
                const InversionOutcome o = run_inversion(rows[r].config, rows[r].seeds[s]);
                rows[r].errors[s] = o.error;
                rows[r].losses[s] = o.loss;
                rows[r].betas[s] = o.beta;
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const int threads = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(jobs), total));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    for (auto& row : rows) {
        std::tie(row.error_mean, row.error_spread) = mean_spread(row.errors);
        std::tie(row.loss_mean, row.loss_spread) = mean_spread(row.losses);
    }
    return rows;
}

void write_table_csv(const std::filesystem::path& path, const std::vector<TableRowResult>& rows) {
    auto out = open_out(path);
    out << "row,label,epsilon,omega,alpha,g_true,seeds,error_mean,error_spread,loss_mean,loss_spread\n";
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const auto& c = row.config;
        const std::string omega =
            c.frame ? "Omega\\[" + g17(c.frame->first) + ";" + g17(c.frame->second) + "]^2" : std::string("Omega");
        out << r << ",\"" << row.label << "\"," << g17(c.noise) << ',' << omega << ',' << g17(c.alpha) << ','
            << c.g_true << ',' << row.errors.size() << ',' << g17(row.error_mean) << ',' << g17(row.error_spread)
            << ',' << g17(row.loss_mean) << ',' << g17(row.loss_spread) << '\n';
    }
    finish(out, path);
}

void write_table_runs_csv(const std::filesystem::path& path, const std::vector<TableRowResult>& rows) {
    auto out = open_out(path);
    out << "row,seed,beta,error,loss\n";
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t s = 0; s < rows[r].errors.size(); ++s)
            out << r << ',' << rows[r].seeds[s] << ',' << g17(rows[r].betas[s]) << ',' << g17(rows[r].errors[s])
                << ',' << g17(rows[r].losses[s]) << '\n';
    finish(out, path);
}

double GradientCheck::max_gap() const {
    double m = 0.0;
    for (double g : gaps) m = std::max(m, g);
    return m;
}

GradientCheck gradient_fd_check(int n, AdjointScheme scheme, std::uint64_t seed, int directions) {
    RunConfig c = example1_config();
    c.nx = c.ny = c.steps = n;
    const Scenario scenario = to_scenario(c);
    ObservationData data = generate_data(field_preset(c.g_true), scenario, 1);
    const Discretization disc = discretize(scenario, 1);
    data.u_d = add_noise(data.u_d, data.mask, disc.mesh, c.noise, seed);
    const InverseProblem problem(disc.model(scenario), data, c.beta, scheme);

    const Field g = project_function(disc.mesh, field_preset("ex2c"));
    const Field grad = problem.gradient(g);
    GradientCheck check{n, scheme, {}};
    const double h = 1e-2;
    for (int d = 0; d < directions; ++d) {
        Field dg(g.size());
        for (Eigen::Index i = 0; i < g.size(); ++i)
            dg[i] = counter_uniform(seed, 7919, static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(i));
        const double fd = (problem.cost(g + h * dg) - problem.cost(g - h * dg)) / (2.0 * h);
        const double ad = l2_inner(grad, dg, disc.system->mass);
        check.gaps.push_back(std::abs(fd - ad) / std::abs(fd));
    }
    return check;
}

bool SuiteResult::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckLine& c) { return c.passed; });
}

namespace {

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

}  // namespace

SuiteResult verify_duhamel_suite(const std::filesystem::path& out_dir) {
    using std::numbers::pi;
    const RunConfig c = example1_config();
    const DuhamelStudy study = residual_refinement_study({{10, 40}, {20, 80}, {40, 160}}, field_preset(c.g_true),
                                                         rho_preset(c.rho), c.q, c.alpha, c.final_time);
    SuiteResult r{"duhamel", {}};
    for (const auto& row : study.rows)
        r.checks.push_back({"level " + std::to_string(row.nx) + "^2 x " + std::to_string(row.steps), true,
                            "residual " + sci(row.residual) + " (trapezoid " + sci(row.trapezoid_residual) + ")"});
    const double finest = study.rows.back().residual;
    r.checks.push_back({"finest residual <= 5e-2", finest <= 5e-2, sci(finest)});
    r.checks.push_back({"strictly decreasing under refinement", study.monotone, ""});

    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        write_duhamel_study_csv(out_dir / "duhamel_residuals.csv", study);
        const Mesh mesh = build_mesh(40, 40);
        const TimeGrid grid(c.final_time, 160);
        write_time_series_csv(out_dir / "duhamel_mu.csv",
                              solve_volterra_mu(TimeSeries::sample(grid, rho_preset(c.rho)), c.q, c.alpha));
    }
    return r;
}

SuiteResult verify_convergence_suite() {
    const ManufacturedSolution mms{0.5, 1.0};
    const auto rows = convergence_study(mms, {{10, 10}, {20, 20}, {40, 40}});
    SuiteResult r{"convergence", {}};
    bool monotone = true;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::string detail = "error " + sci(rows[i].error);
        if (rows[i].order) detail += " order " + sci(*rows[i].order);
        r.checks.push_back({"level " + std::to_string(rows[i].nx) + "^2 x " + std::to_string(rows[i].steps), true,
                            detail});
        if (i > 0 && !(rows[i].error < rows[i - 1].error)) monotone = false;
    }
    r.checks.push_back({"errors strictly decreasing", monotone, ""});
    const double order = rows.back().order.value_or(0.0);
    r.checks.push_back({"observed order >= 0.9", order >= 0.9, sci(order)});
    return r;
}

SuiteResult verify_gradient_suite(std::uint64_t seed) {
    SuiteResult r{"gradient", {}};
    const GradientCheck d20 = gradient_fd_check(20, AdjointScheme::discrete, seed);
    const GradientCheck d40 = gradient_fd_check(40, AdjointScheme::discrete, seed);
    const GradientCheck c20 = gradient_fd_check(20, AdjointScheme::continuous, seed);
    const GradientCheck c40 = gradient_fd_check(40, AdjointScheme::continuous, seed);
    r.checks.push_back({"discrete adjoint FD gap <= 1e-2 at 20^2 x 20", d20.max_gap() <= 1e-2, sci(d20.max_gap())});
    r.checks.push_back({"discrete adjoint FD gap <= 1e-2 at 40^2 x 40", d40.max_gap() <= 1e-2, sci(d40.max_gap())});
    r.checks.push_back({"continuous adjoint FD gap at 20^2 x 20", true, sci(c20.max_gap())});
    r.checks.push_back({"continuous adjoint FD gap shrinks at 40^2 x 40", c40.max_gap() < c20.max_gap(),
                        sci(c40.max_gap())});
    return r;
}

SuiteResult run_suite(const std::string& name, std::uint64_t seed, const std::filesystem::path& out_dir) {
    if (name == "duhamel") return verify_duhamel_suite(out_dir);
    if (name == "convergence") return verify_convergence_suite();
    if (name == "gradient") return verify_gradient_suite(seed);
    throw ConfigError("unknown suite '" + name + "' (expected duhamel, convergence or gradient)");
}

}  // namespace mimfd
