#include "mimfd/solver.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <string>

#include "mimfd/errors.hpp"

namespace mimfd {

void ModelProblem::validate() const {
    if (!system) throw DimensionError("ModelProblem: no assembled system");
    check_order(alpha);
    if (!(q >= 0.0) || !std::isfinite(q)) throw DomainError("ModelProblem: q must be nonnegative");
    if (!(rho.grid == grid)) throw DimensionError("ModelProblem: rho is sampled on a different time grid");
    const Eigen::Index n = system->node_count();
    if (g.size() != n || a.size() != n)
        throw DimensionError("ModelProblem: g/a have " + std::to_string(g.size()) + "/" + std::to_string(a.size()) +
                             " values for " + std::to_string(n) + " nodes");
    const double scale = std::max(1.0, a.lpNorm<Eigen::Infinity>());
    for (Eigen::Index i = 0; i < n; ++i)
        if (system->interior_index[static_cast<std::size_t>(i)] < 0 && std::abs(a[i]) > 1e-12 * scale)
            throw DomainError("ModelProblem: initial value does not vanish at boundary node " + std::to_string(i));
}

ForwardSolver::ForwardSolver(std::shared_ptr<const AssembledSystem> system, const TimeGrid& grid, double alpha,
                             double q)
    : system_(std::move(system)), grid_(grid), weights_(alpha, grid), q_(q) {
    if (!system_) throw DimensionError("ForwardSolver: no assembled system");
    if (!(q >= 0.0) || !std::isfinite(q)) throw DomainError("ForwardSolver: q must be nonnegative");
    mass_rows_ = restrict_rows(system_->mass, *system_);
    const double diag = (1.0 + q_ * weights_(1, 1)) / grid_.tau();
    const SparseMatrix lhs =
        restrict_to_free(system_->mass, *system_) * diag + restrict_to_free(system_->stiffness, *system_);
    step_ = std::make_unique<SpdSolver>(lhs);
}

SpaceTimeField ForwardSolver::march(const Field& initial, std::span<const Eigen::VectorXd> loads) const {
    const int big_n = grid_.steps();
    const Eigen::Index nodes = system_->node_count();
    if (initial.size() != nodes) throw DimensionError("march: initial value length mismatch");
    if (loads.size() != grid_.size()) throw DimensionError("march: need one load per time level");

    const double tau = grid_.tau();
    const double c_nn = weights_(1, 1);

    std::vector<Eigen::VectorXd> frames(grid_.size());
    frames[0] = initial;
    // Column k-1 holds u_k - u_{k-1}.
    Eigen::MatrixXd increments(nodes, big_n);
    Eigen::VectorXd history(nodes);

    for (int n = 1; n <= big_n; ++n) {
        if (loads[n].size() != nodes) throw DimensionError("march: load length mismatch at level " + std::to_string(n));
        Eigen::VectorXd carry = ((1.0 + q_ * c_nn) / tau) * frames[n - 1];
        if (q_ != 0.0 && n > 1) {
            const auto c = weights_.row(n);
            const Eigen::Map<const Eigen::VectorXd> coeff(c.data(), n - 1);
            history.noalias() = increments.leftCols(n - 1) * coeff;
            carry -= (q_ / tau) * history;
        }
        Eigen::VectorXd rhs = mass_rows_ * carry + gather_free(loads[n], *system_);
        frames[n] = scatter_free(step_->solve(rhs), *system_);
        increments.col(n - 1) = frames[n] - frames[n - 1];
    }
    return SpaceTimeField(grid_, std::move(frames));
}

SpaceTimeField solve_forward_general(const ForwardSolver& solver, const Field& initial,
                                     const std::vector<Field>& sources) {
    if (sources.size() != solver.grid().size()) throw DimensionError("solve_forward_general: need N+1 source frames");
    std::vector<Eigen::VectorXd> loads(sources.size());
    loads[0] = Eigen::VectorXd::Zero(solver.system().node_count());
    for (std::size_t n = 1; n < sources.size(); ++n) {
        if (sources[n].size() != solver.system().node_count())
            throw DimensionError("solve_forward_general: source length mismatch");
        loads[n] = solver.system().mass * sources[n];
    }
    return solver.march(initial, loads);
}

SpaceTimeField solve_forward_general(const ModelProblem& problem, const std::vector<Field>& sources) {
    problem.validate();
    const ForwardSolver solver(problem.system, problem.grid, problem.alpha, problem.q);
    return solve_forward_general(solver, problem.a, sources);
}

namespace {

std::vector<Field> separable_sources(const ModelProblem& problem) {
    std::vector<Field> sources(problem.grid.size());
    sources[0] = Field::Zero(problem.g.size());
    for (std::size_t n = 1; n < sources.size(); ++n) sources[n] = problem.rho[n] * problem.g;
    return sources;
}

}  // namespace

SpaceTimeField solve_forward(const ForwardSolver& solver, const ModelProblem& problem) {
    problem.validate();
    if (!(solver.grid() == problem.grid) || solver.system().node_count() != problem.system->node_count())
        throw DimensionError("solve_forward: solver and problem disagree on grid or mesh");
    return solve_forward_general(solver, problem.a, separable_sources(problem));
}

SpaceTimeField solve_forward(const ModelProblem& problem) {
    problem.validate();
    const ForwardSolver solver(problem.system, problem.grid, problem.alpha, problem.q);
    return solve_forward_general(solver, problem.a, separable_sources(problem));
}

std::vector<Eigen::VectorXd> reversed_adjoint_loads(const ForwardSolver& solver, const SpaceTimeField& residual,
                                                    AdjointScheme scheme) {
    if (!(residual.grid == solver.grid())) throw DimensionError("solve_adjoint: residual on a different time grid");
    if (residual.nodes() != solver.system().node_count())
        throw DimensionError("solve_adjoint: residual length mismatch");
    const TimeGrid& grid = solver.grid();
    const int big_n = grid.steps();
    std::vector<Eigen::VectorXd> loads(grid.size());
    loads[0] = Eigen::VectorXd::Zero(residual.nodes());
    for (int m = 1; m <= big_n; ++m) {
        if (scheme == AdjointScheme::continuous) {
            loads[m] = solver.system().mass_omega * residual[big_n - m];
        } else {
            const int n = big_n - m + 1;
            loads[m] = (grid.trapezoid_weight(n) / grid.tau()) * (solver.system().mass_omega * residual[n]);
        }
    }
    return loads;
}

Field integrate_adjoint(const SpaceTimeField& v, const TimeSeries& rho, AdjointScheme scheme) {
    if (!(v.grid == rho.grid)) throw DimensionError("integrate_adjoint: grid mismatch");
    const TimeGrid& grid = v.grid;
    Field out = Field::Zero(v.nodes());
    for (int n = 0; n <= grid.steps(); ++n) {
        if (scheme == AdjointScheme::continuous)
            out.noalias() += (grid.trapezoid_weight(n) * rho[n]) * v[n];
        else if (n >= 1)
            out.noalias() += (grid.tau() * rho[n]) * v[n - 1];
    }
    return out;
}

SpaceTimeField reverse_frames(const SpaceTimeField& field) {
    std::vector<Eigen::VectorXd> frames(field.frames.rbegin(), field.frames.rend());
    return SpaceTimeField(field.grid, std::move(frames));
}

SpaceTimeField solve_adjoint(const ForwardSolver& solver, const SpaceTimeField& residual, AdjointScheme scheme) {
    const auto loads = reversed_adjoint_loads(solver, residual, scheme);
    const SpaceTimeField w = solver.march(Field::Zero(solver.system().node_count()), loads);
    return reverse_frames(w);
}

double ManufacturedSolution::exact(double x, double y, double t) const {
    using std::numbers::pi;
    return t * t * std::sin(pi * x) * std::sin(pi * y);
}

double ManufacturedSolution::source(double x, double y, double t) const {
    using std::numbers::pi;
    const double caputo = 2.0 * std::pow(t, 2.0 - alpha) / std::tgamma(3.0 - alpha);
    return (2.0 * t + q * caputo + 2.0 * pi * pi * t * t) * std::sin(pi * x) * std::sin(pi * y);
}

std::vector<ConvergenceRow> convergence_study(const ManufacturedSolution& mms,
                                              const std::vector<std::pair<int, int>>& levels, double final_time) {
    std::vector<ConvergenceRow> rows;
    for (const auto& [nx, steps] : levels) {
        const Mesh mesh = build_mesh(nx, nx);
        auto system = std::make_shared<const AssembledSystem>(
            assemble(mesh, Coefficients::laplacian(), ObservationMask::everywhere(mesh)));
        const TimeGrid grid(final_time, steps);
        const ForwardSolver solver(system, grid, mms.alpha, mms.q);

        std::vector<Field> sources(grid.size());
        for (int n = 0; n <= steps; ++n) {
            const double t = grid.node(n);
            sources[n] = project_function(mesh, [&](double x, double y) { return mms.source(x, y, t); });
        }
        const Field initial = Field::Zero(mesh.node_count());
        const SpaceTimeField u = solve_forward_general(solver, initial, sources);

        double worst = 0.0;
        for (int n = 0; n <= steps; ++n) {
            const double t = grid.node(n);
            const Field exact = project_function(mesh, [&](double x, double y) { return mms.exact(x, y, t); });
            worst = std::max(worst, l2_norm(u[n] - exact, system->mass));
        }
        ConvergenceRow row{nx, steps, worst, std::nullopt};
        if (!rows.empty() && worst > 0.0) row.order = std::log2(rows.back().error / worst);
        rows.push_back(row);
    }
    return rows;
}

namespace {

std::filesystem::path frame_path(const std::filesystem::path& dir, int n) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04d.csv", n);
    return dir / name;
}

}  // namespace

void write_space_time_field(const std::filesystem::path& dir, const Mesh& mesh, const SpaceTimeField& field,
                            double alpha, double q) {
    if (field.nodes() != mesh.node_count()) throw DimensionError("write_space_time_field: mesh mismatch");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
    for (int n = 0; n <= field.grid.steps(); ++n) write_field_csv(frame_path(dir, n), mesh, field[n]);

    const auto path = dir / "manifest.txt";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    char buf[256];
    std::snprintf(buf, sizeof buf, "T = %.17g\nN = %d\nnx = %d\nny = %d\nalpha = %.17g\nq = %.17g\n",
                  field.grid.final_time(), field.grid.steps(), mesh.nx(), mesh.ny(), alpha, q);
    out << buf;
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
}

FieldManifest read_field_manifest(const std::filesystem::path& dir) {
    const auto path = dir / "manifest.txt";
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) throw ParseError("manifest: expected 'key = value'", lineno);
        kv[line.substr(0, eq)] = line.substr(eq + 3);
    }
    auto number = [&](const char* key) {
        const auto it = kv.find(key);
        if (it == kv.end()) throw ParseError(std::string("manifest: missing ") + key, lineno);
        double v = 0.0;
        const auto& s = it->second;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError(std::string("manifest: bad ") + key, lineno);
        return v;
    };
    return FieldManifest{number("T"),
                         static_cast<int>(number("N")),
                         static_cast<int>(number("nx")),
                         static_cast<int>(number("ny")),
                         number("alpha"),
                         number("q")};
}

SpaceTimeField read_space_time_field(const std::filesystem::path& dir, const Mesh& mesh) {
    const FieldManifest m = read_field_manifest(dir);
    if (m.nx != mesh.nx() || m.ny != mesh.ny()) throw DimensionError("read_space_time_field: mesh mismatch");
    const TimeGrid grid(m.final_time, m.steps);
    std::vector<Eigen::VectorXd> frames(grid.size());
    for (int n = 0; n <= m.steps; ++n) frames[n] = read_field_csv(frame_path(dir, n), mesh);
    return SpaceTimeField(grid, std::move(frames));
}

}  // namespace mimfd
