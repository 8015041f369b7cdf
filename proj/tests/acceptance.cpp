// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.
// Usage: acceptance [output_dir]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/LU>

#include "mimfd/config.hpp"
#include "mimfd/duhamel.hpp"
#include "mimfd/experiments.hpp"
#include "mimfd/fem.hpp"
#include "mimfd/fractime.hpp"
#include "mimfd/inversion.hpp"
#include "mimfd/solver.hpp"

using namespace mimfd;
using std::numbers::pi;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool passed;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

int failures = 0;

void criterion(int id, const std::string& name, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.passed) ++failures;
    std::printf("[%s] %2d %s: %s (%.2f s)\n", o.passed ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<TableRowResult> table2;

}  // namespace

int main(int argc, char** argv) {
    const fs::path out = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_out");
    fs::create_directories(out);

    criterion(1, "L1 telescoping sums", [] {
        std::mt19937_64 rng(20261019);
        std::uniform_real_distribution<double> a(0.01, 0.99), t(0.1, 5.0);
        std::uniform_int_distribution<int> steps(1, 200);
        double worst = 0.0;
        const auto start = std::chrono::steady_clock::now();
        for (int trial = 0; trial < 100; ++trial) {
            const double alpha = a(rng);
            const TimeGrid grid(t(rng), steps(rng));
            const L1Weights w(alpha, grid);
            for (int n = 1; n <= grid.steps(); ++n) {
                double sum = 0.0;
                for (double c : w.row(n)) sum += c;
                const double exact = std::pow(grid.node(n), 1.0 - alpha) / std::tgamma(2.0 - alpha);
                worst = std::max(worst, std::abs(sum - exact) / exact);
            }
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return Outcome{worst <= 1e-12 && secs < 1.0, fmt("max rel dev %.3e, %.3f s", worst, secs)};
    });

    criterion(2, "Volterra closed form", [] {
        const TimeGrid grid(1.0, 1000);
        const auto start = std::chrono::steady_clock::now();
        const TimeSeries mu = solve_volterra_mu(TimeSeries::constant(grid, 1.0), 1.0, 0.5);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const double exact = std::exp(1.0) * std::erfc(1.0);
        const double rel = std::abs(mu[1000] - exact) / exact;
        return Outcome{rel <= 1e-4 && secs < 1.0,
                       fmt("mu(1) = %.8f vs %.8f, rel %.3e, %.3f s", mu[1000], exact, rel, secs)};
    });

    criterion(3, "manufactured solution convergence", [] {
        const auto rows = convergence_study(ManufacturedSolution{0.5, 1.0}, {{10, 10}, {20, 20}, {40, 40}});
        bool ok = true;
        std::string detail;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            detail += fmt("(%d,%d) %.3e", rows[i].nx, rows[i].steps, rows[i].error);
            if (rows[i].order) detail += fmt(" p=%.2f", *rows[i].order);
            if (i + 1 < rows.size()) detail += "; ";
            if (i > 0) ok = ok && rows[i].error < rows[i - 1].error && rows[i].order && *rows[i].order >= 0.9;
        }
        return Outcome{ok, detail};
    });

    criterion(4, "heat limit against backward Euler", [] {
        const Mesh mesh = build_mesh(16, 16);
        auto sys = std::make_shared<const AssembledSystem>(
            assemble(mesh, Coefficients::laplacian(), ObservationMask::everywhere(mesh)));
        const TimeGrid grid(0.5, 40);
        const ModelProblem p{grid,
                             sys,
                             0.5,
                             0.0,
                             TimeSeries::sample(grid, [](double t) { return 2.0 + 4.0 * pi * pi * t * t; }),
                             project_function(mesh, [](double x, double y) { return 1.0 + x * y; }),
                             project_function(mesh, [](double x, double y) {
                                 return std::sin(pi * x) * std::sin(pi * y);
                             })};
        const auto u = solve_forward(p);
        const Eigen::MatrixXd mrows = Eigen::MatrixXd(restrict_rows(sys->mass, *sys));
        const Eigen::MatrixXd lhs = Eigen::MatrixXd(restrict_to_free(sys->mass, *sys)) / grid.tau() +
                                    Eigen::MatrixXd(restrict_to_free(sys->stiffness, *sys));
        const Eigen::PartialPivLU<Eigen::MatrixXd> lu(lhs);
        Eigen::VectorXd prev = p.a;
        double worst = 0.0;
        for (int n = 1; n <= grid.steps(); ++n) {
            const Eigen::VectorXd next = scatter_free(lu.solve(mrows * (prev / grid.tau() + p.rho[n] * p.g)), *sys);
            worst = std::max(worst, (u[n] - next).lpNorm<Eigen::Infinity>() /
                                        std::max(1.0, next.lpNorm<Eigen::Infinity>()));
            prev = next;
        }
        return Outcome{worst <= 1e-12, fmt("max per-frame deviation %.3e", worst)};
    });

    criterion(5, "Duhamel residual", [&] {
        const SuiteResult r = verify_duhamel_suite(out / "duhamel");
        std::string detail;
        for (const auto& c : r.checks) detail += (detail.empty() ? "" : "; ") + c.name + " " + c.detail;
        return Outcome{r.passed(), detail};
    });

    criterion(6, "adjoint gradient against finite differences", [] {
        const auto d20 = gradient_fd_check(20, AdjointScheme::discrete, 11);
        const auto d40 = gradient_fd_check(40, AdjointScheme::discrete, 11);
        const auto c20 = gradient_fd_check(20, AdjointScheme::continuous, 11);
        const auto c40 = gradient_fd_check(40, AdjointScheme::continuous, 11);
        const bool ok = d20.max_gap() <= 1e-2 && d40.max_gap() <= 1e-2 && c40.max_gap() < c20.max_gap();
        return Outcome{ok, fmt("discrete %.2e @20, %.2e @40; continuous %.2e @20, %.2e @40", d20.max_gap(),
                               d40.max_gap(), c20.max_gap(), c40.max_gap())};
    });

    criterion(7, "noise-free inversion", [] {
        RunConfig cfg = example1_config();
        cfg.noise = 0.0;
        cfg.beta_sweep = false;
        cfg.beta = 1e-8;
        cfg.max_iters = 100;
        const auto r = run_inversion(cfg, 0);
        const int iters = static_cast<int>(r.reconstruction.state.history.size()) - 1;
        return Outcome{r.error <= 1e-2 && iters <= 100, fmt("error %.3e after %d iterations", r.error, iters)};
    });

    criterion(8, "Table 1 reproduction", [] {
        const auto rows = run_table(1, 5, 0);
        const double e1 = rows[0].error_mean, e3 = rows[1].error_mean, e5 = rows[2].error_mean;
        const bool ok = e1 >= 1e-2 && e1 <= 6e-2 && e1 < e3 && e3 < e5;
        return Outcome{ok, fmt("eps 1/3/5: %.3e / %.3e / %.3e", e1, e3, e5)};
    });

    criterion(9, "Table 2 alpha robustness", [] {
        table2 = run_table(2, 5, 0);
        double lo = 1e300, hi = 0.0;
        std::string detail;
        for (const auto& row : table2) {
            lo = std::min(lo, row.error_mean);
            hi = std::max(hi, row.error_mean);
            detail += fmt("%salpha %.1f: %.3e", detail.empty() ? "" : "; ", row.config.alpha, row.error_mean);
        }
        return Outcome{lo >= 2e-2 && hi <= 1e-1 && hi <= 2.0 * lo, detail};
    });

    criterion(10, "Example 1 final cost", [] {
        const auto r = run_inversion(example1_config(), 0);
        return Outcome{r.loss <= 5e-4, fmt("loss %.3e (beta %.0e, error %.3e)", r.loss, r.beta, r.error)};
    });

    criterion(11, "table determinism", [&] {
        if (table2.empty()) table2 = run_table(2, 5, 0);
        const auto again = run_table(2, 5, 0);
        write_table_csv(out / "table2_a.csv", table2);
        write_table_runs_csv(out / "table2_runs_a.csv", table2);
        write_table_csv(out / "table2_b.csv", again);
        write_table_runs_csv(out / "table2_runs_b.csv", again);
        const bool same = slurp(out / "table2_a.csv") == slurp(out / "table2_b.csv") &&
                          slurp(out / "table2_runs_a.csv") == slurp(out / "table2_runs_b.csv");
        return Outcome{same, same ? "CSV outputs byte-identical" : "CSV outputs differ"};
    });

    std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
