#include "mimfd/inversion.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <string>

namespace mimfd {

void InverseConfig::validate() const {
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw DomainError("InverseConfig: beta must be >= 0");
    if (g_max && !(*g_max > 0.0)) throw DomainError("InverseConfig: g_max must be positive");
    if (max_iters < 0) throw DomainError("InverseConfig: max_iters must be >= 0");
    if (!(grad_tol >= 0.0)) throw DomainError("InverseConfig: grad_tol must be >= 0");
    if (!(armijo.c1 > 0.0 && armijo.c1 < 1.0)) throw DomainError("InverseConfig: Armijo c1 must lie in (0,1)");
    if (!(armijo.backtrack > 0.0 && armijo.backtrack < 1.0))
        throw DomainError("InverseConfig: backtrack ratio must lie in (0,1)");
    if (!(armijo.initial_step > 0.0) || !std::isfinite(armijo.initial_step))
        throw DomainError("InverseConfig: initial step must be positive");
    if (armijo.max_backtracks < 0) throw DomainError("InverseConfig: max_backtracks must be >= 0");
    if (!(smoothing >= 0.0) || !std::isfinite(smoothing)) throw DomainError("InverseConfig: smoothing must be >= 0");
}

InverseProblem::InverseProblem(ModelProblem model, ObservationData data, double beta, AdjointScheme scheme)
    : model_(std::move(model)),
      data_(std::move(data)),
      beta_(beta),
      scheme_(scheme),
      solver_(model_.system, model_.grid, model_.alpha, model_.q) {
    if (model_.g.size() == 0) model_.g = Field::Zero(model_.system->node_count());
    model_.validate();
    if (!(beta >= 0.0)) throw DomainError("InverseProblem: beta must be >= 0");
    if (!(data_.u_d.grid == model_.grid) || data_.u_d.nodes() != model_.system->node_count())
        throw DimensionError("InverseProblem: observation data does not match the model discretization");
}

SpaceTimeField InverseProblem::state(const Field& g) const {
    if (g.size() != model_.system->node_count()) throw DimensionError("InverseProblem: source length mismatch");
    std::vector<Field> sources(model_.grid.size());
    sources[0] = Field::Zero(g.size());
    for (std::size_t n = 1; n < sources.size(); ++n) sources[n] = model_.rho[n] * g;
    return solve_forward_general(solver_, model_.a, sources);
}

double InverseProblem::misfit(const SpaceTimeField& u) const {
    double acc = 0.0;
    for (int n = 0; n <= model_.grid.steps(); ++n) {
        const Field r = u[n] - data_.u_d[n];
        acc += model_.grid.trapezoid_weight(n) * l2_inner(r, r, model_.system->mass_omega);
    }
    return 0.5 * acc;
}

double InverseProblem::regularization(const Field& g) const {
    return 0.5 * beta_ * l2_inner(g, g, model_.system->mass);
}

double InverseProblem::cost(const Field& g) const { return misfit(state(g)) + regularization(g); }

SpaceTimeField InverseProblem::adjoint(const Field& g) const {
    const SpaceTimeField u = state(g);
    std::vector<Eigen::VectorXd> residual(u.frames.size());
    for (std::size_t n = 0; n < residual.size(); ++n) residual[n] = u[n] - data_.u_d[n];
    return solve_adjoint(solver_, SpaceTimeField(model_.grid, std::move(residual)), scheme_);
}

std::pair<double, Field> InverseProblem::cost_and_gradient(const Field& g) const {
    const SpaceTimeField u = state(g);
    std::vector<Eigen::VectorXd> residual(u.frames.size());
    for (std::size_t n = 0; n < residual.size(); ++n) residual[n] = u[n] - data_.u_d[n];
    const SpaceTimeField r(model_.grid, std::move(residual));
    const SpaceTimeField v = solve_adjoint(solver_, r, scheme_);
    Field grad = integrate_adjoint(v, model_.rho, scheme_) + beta_ * g;
    return {misfit(u) + regularization(g), std::move(grad)};
}

Field InverseProblem::gradient(const Field& g) const { return cost_and_gradient(g).second; }

SpaceTimeField InverseProblem::sensitivity(const Field& delta_g) const {
    if (delta_g.size() != model_.system->node_count())
        throw DimensionError("sensitivity: perturbation length mismatch");
    std::vector<Field> sources(model_.grid.size());
    sources[0] = Field::Zero(delta_g.size());
    for (std::size_t n = 1; n < sources.size(); ++n) sources[n] = model_.rho[n] * delta_g;
    return solve_forward_general(solver_, Field::Zero(delta_g.size()), sources);
}

double cost(const Field& g, const InverseProblem& problem) { return problem.cost(g); }
Field gradient(const Field& g, const InverseProblem& problem) { return problem.gradient(g); }
SpaceTimeField sensitivity_solve(const Field& delta_g, const InverseProblem& problem) {
    return problem.sensitivity(delta_g);
}

namespace {

Field project(Field g, const std::optional<double>& g_max) {
    if (g_max) g = g.cwiseMax(-*g_max).cwiseMin(*g_max);
    return g;
}

}  // namespace

Reconstruction reconstruct(const InverseConfig& config, const InverseProblem& problem) {
    config.validate();
    const SparseMatrix& mass = problem.system().mass;
    const Eigen::Index nodes = problem.system().node_count();

    std::unique_ptr<SpdSolver> metric;
    if (config.smoothing > 0.0)
        metric = std::make_unique<SpdSolver>(SparseMatrix(mass + config.smoothing * problem.system().stiffness));
    // Riesz representative of the derivative in the descent metric.
    auto precondition = [&](const Field& grad) -> Field {
        return metric ? Field(metric->solve(mass * grad)) : grad;
    };

    InversionState st;
    if (config.initial_guess.size() == 0) {
        st.iterate = Field::Zero(nodes);
    } else {
        if (config.initial_guess.size() != nodes) throw DimensionError("reconstruct: initial guess length mismatch");
        st.iterate = project(config.initial_guess, config.g_max);
    }

    auto [cost_now, grad] = problem.cost_and_gradient(st.iterate);
    st.gradient = std::move(grad);
    Field descent = precondition(st.gradient);
    st.direction = -descent;
    double grad_norm = l2_norm(st.gradient, mass);
    double metric_sq = l2_inner(st.gradient, descent, mass);
    st.history.push_back({0, cost_now, grad_norm, 0.0});

    const auto& ls = config.armijo;
    for (int k = 1; k <= config.max_iters; ++k) {
        if (grad_norm <= config.grad_tol) break;

        if (k > 1) {
            st.direction = -descent;
        }
        const double slope = l2_inner(st.gradient, st.direction, mass);

        double step = ls.initial_step;
        if (ls.rule == StepRule::quadratic) {
            const double unit_cost = problem.cost(project(st.iterate + st.direction, config.g_max));
            const double curvature = 2.0 * (unit_cost - cost_now - slope);
            if (curvature > 0.0 && std::isfinite(curvature)) step = -slope / curvature;
        }

        bool accepted = false;
        Field trial;
        double trial_cost = 0.0;
        for (int b = 0; b <= ls.max_backtracks; ++b) {
            trial = project(st.iterate + step * st.direction, config.g_max);
            trial_cost = problem.cost(trial);
            if (trial_cost <= cost_now + ls.c1 * step * slope && trial_cost < cost_now) {
                accepted = true;
                break;
            }
            step *= ls.backtrack;
        }
        if (!accepted)
            throw LineSearchError("reconstruct: Armijo backtracking exhausted at iteration " + std::to_string(k), st);

        st.iterate = std::move(trial);
        std::tie(cost_now, st.gradient) = problem.cost_and_gradient(st.iterate);
        descent = precondition(st.gradient);
        grad_norm = l2_norm(st.gradient, mass);
        const double prev_metric_sq = metric_sq;
        metric_sq = l2_inner(st.gradient, descent, mass);
        st.history.push_back({k, cost_now, grad_norm, step});

        if (config.direction == DirectionMode::fletcher_reeves && prev_metric_sq > 0.0) {
            Field candidate = -descent + (metric_sq / prev_metric_sq) * st.direction;
            // Restart when the update is not a descent direction.
            if (l2_inner(st.gradient, candidate, mass) < 0.0) descent = -candidate;
        }
    }
    st.direction = -descent;
    st.converged = grad_norm <= config.grad_tol;
    Reconstruction out{st.iterate, std::move(st)};
    return out;
}

std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

double counter_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    const std::uint64_t bits = split_seed(split_seed(split_seed(seed, a), b), c);
    // 53 random mantissa bits -> [0,1) -> [-1,1)
    const double unit = static_cast<double>(bits >> 11) * 0x1.0p-53;
    return 2.0 * unit - 1.0;
}

SpaceTimeField add_noise(const SpaceTimeField& u_d, const ObservationMask& mask, const Mesh& mesh, double epsilon,
                         std::uint64_t seed) {
    if (!(epsilon >= 0.0)) throw DomainError("add_noise: noise level must be >= 0");
    if (u_d.nodes() != mesh.node_count()) throw DimensionError("add_noise: data does not match the mesh");
    SpaceTimeField out = u_d;
    if (epsilon == 0.0) return out;
    const auto observed = mask.node_flags(mesh);
    const double amp = epsilon / 100.0;
    for (std::size_t n = 0; n < out.frames.size(); ++n)
        for (Eigen::Index i = 0; i < out.nodes(); ++i)
            if (observed[static_cast<std::size_t>(i)])
                out.frames[n][i] *= 1.0 + amp * counter_uniform(seed, n, static_cast<std::uint64_t>(i), 0);
    return out;
}

double relative_error(const Field& g_rec, const Field& g_true, const SparseMatrix& mass) {
    const double denom = l2_norm(g_true, mass);
    if (!(denom > 0.0)) throw DomainError("relative_error: reference field has zero norm");
    return l2_norm(g_true - g_rec, mass) / denom;
}

ModelProblem Discretization::model(const Scenario& scenario, Field g) const {
    if (g.size() == 0) g = Field::Zero(mesh.node_count());
    return ModelProblem{grid,
                        system,
                        scenario.alpha,
                        scenario.q,
                        TimeSeries::sample(grid, scenario.rho),
                        std::move(g),
                        project_function(mesh, scenario.initial)};
}

Discretization discretize(const Scenario& scenario, int refine) {
    if (refine < 1) throw DomainError("discretize: refinement factor must be >= 1");
    Mesh mesh = build_mesh(scenario.nx * refine, scenario.ny * refine, scenario.domain);
    const TimeGrid grid(scenario.final_time, scenario.steps * refine);
    ObservationMask mask = scenario.frame ? mask_from_frame(mesh, scenario.frame->first, scenario.frame->second)
                                          : ObservationMask::everywhere(mesh);
    auto system = std::make_shared<const AssembledSystem>(assemble(mesh, scenario.coefficients, mask));
    return Discretization{std::move(mesh), grid, std::move(mask), std::move(system)};
}

ObservationData generate_data(const ScalarFunction& g_true, const Scenario& scenario, int refine) {
    const Discretization coarse = discretize(scenario, 1);
    const Discretization fine = refine == 1 ? coarse : discretize(scenario, refine);
    const ModelProblem model = fine.model(scenario, project_function(fine.mesh, g_true));
    const SpaceTimeField u = solve_forward(model);

    std::vector<Eigen::VectorXd> frames(coarse.grid.size());
    for (int n = 0; n <= coarse.grid.steps(); ++n) {
        Eigen::VectorXd f(coarse.mesh.node_count());
        for (int j = 0; j <= coarse.mesh.ny(); ++j)
            for (int i = 0; i <= coarse.mesh.nx(); ++i)
                f[coarse.mesh.node_index(i, j)] = u[static_cast<std::size_t>(n * refine)][fine.mesh.node_index(i * refine, j * refine)];
        frames[n] = std::move(f);
    }
    return ObservationData{SpaceTimeField(coarse.grid, std::move(frames)), coarse.mask, 0.0};
}

}  // namespace mimfd
