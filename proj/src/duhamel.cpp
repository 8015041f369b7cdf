#include "mimfd/duhamel.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "mimfd/errors.hpp"
#include "mimfd/solver.hpp"

namespace mimfd {

DuhamelReport verify_duhamel(const Field& g, const TimeSeries& rho, double q, double alpha,
                             std::shared_ptr<const AssembledSystem> system, const TimeGrid& grid) {
    if (!system) throw DimensionError("verify_duhamel: no assembled system");
    if (!(rho.grid == grid)) throw DimensionError("verify_duhamel: rho sampled on a different grid");
    const Eigen::Index nodes = system->node_count();
    if (g.size() != nodes) throw DimensionError("verify_duhamel: g length mismatch");

    const ForwardSolver solver(system, grid, alpha, q);
    const Field zero = Field::Zero(nodes);

    std::vector<Eigen::VectorXd> loads(grid.size(), Eigen::VectorXd::Zero(nodes));
    const Eigen::VectorXd mg = system->mass * g;
    for (std::size_t n = 1; n < loads.size(); ++n) loads[n] = rho[n] * mg;
    const SpaceTimeField u = solver.march(zero, loads);

    const std::vector<Eigen::VectorXd> no_load(grid.size(), Eigen::VectorXd::Zero(nodes));
    const SpaceTimeField v = solver.march(g, no_load);

    DuhamelReport report{solve_volterra_mu(rho, q, alpha), 0.0, {}, 0.0, false};
    const SpaceTimeField conv = convolve_implicit(report.mu, v);
    const SpaceTimeField trap = convolve(report.mu, v);

    double worst = 0.0;
    double worst_trap = 0.0;
    double scale = 0.0;
    report.per_frame.reserve(grid.size());
    for (std::size_t n = 0; n < grid.size(); ++n) {
        const double r = l2_norm(u[n] - conv[n], system->mass);
        report.per_frame.push_back(r);
        worst = std::max(worst, r);
        worst_trap = std::max(worst_trap, l2_norm(u[n] - trap[n], system->mass));
        scale = std::max(scale, l2_norm(u[n], system->mass));
    }
    if (scale == 0.0) {
        report.degenerate = true;
    } else {
        report.relative_residual = worst / scale;
        report.trapezoid_residual = worst_trap / scale;
    }
    return report;
}

DuhamelStudy residual_refinement_study(const std::vector<DuhamelLevel>& levels, const ScalarFunction& g,
                                       const std::function<double(double)>& rho, double q, double alpha,
                                       double final_time) {
    DuhamelStudy study{{}, true};
    double previous = -1.0;
    for (const auto& level : levels) {
        const Mesh mesh = build_mesh(level.nx, level.nx);
        auto system = std::make_shared<const AssembledSystem>(
            assemble(mesh, Coefficients::laplacian(), ObservationMask::everywhere(mesh)));
        const TimeGrid grid(final_time, level.steps);
        const DuhamelReport report =
            verify_duhamel(project_function(mesh, g), TimeSeries::sample(grid, rho), q, alpha, system, grid);
        study.rows.push_back(
            {level.nx, level.steps, report.relative_residual, report.trapezoid_residual, report.degenerate});
        if (report.degenerate) continue;
        if (previous >= 0.0 && !(report.relative_residual < previous)) study.monotone = false;
        previous = report.relative_residual;
    }
    return study;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    return out;
}

void check_written(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

void write_duhamel_study_csv(const std::filesystem::path& path, const DuhamelStudy& study) {
    auto out = open_csv(path);
    out << "level,nx,steps,residual,trapezoid_residual,degenerate\n";
    char buf[64];
    for (std::size_t i = 0; i < study.rows.size(); ++i) {
        const auto& r = study.rows[i];
        std::snprintf(buf, sizeof buf, "%.17g,%.17g", r.residual, r.trapezoid_residual);
        out << i << ',' << r.nx << ',' << r.steps << ',' << buf << ',' << (r.degenerate ? 1 : 0) << '\n';
    }
    check_written(out, path);
}

void write_time_series_csv(const std::filesystem::path& path, const TimeSeries& series) {
    auto out = open_csv(path);
    out << "t,mu\n";
    char buf[80];
    for (int n = 0; n <= series.grid.steps(); ++n) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g", series.grid.node(n), series[static_cast<std::size_t>(n)]);
        out << buf << '\n';
    }
    check_written(out, path);
}

}  // namespace mimfd
