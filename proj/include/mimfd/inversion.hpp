#pragma once

// Source reconstruction: Tikhonov cost, adjoint gradient, projected descent
// with Armijo backtracking, synthetic data and noise.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "mimfd/errors.hpp"
#include "mimfd/fem.hpp"
#include "mimfd/fractime.hpp"
#include "mimfd/solver.hpp"

namespace mimfd {

enum class DirectionMode { steepest_descent, fletcher_reeves };

// First trial step of the backtracking search: the configured constant, or the
// minimizer of the quadratic through J(g), its slope and J(g + d).
enum class StepRule { fixed, quadratic };

struct ArmijoOptions {
    double c1 = 1e-4;
    double backtrack = 0.5;
    double initial_step = 1.0;
    int max_backtracks = 40;
    StepRule rule = StepRule::fixed;
};

struct InverseConfig {
    double beta = 1e-5;
    std::optional<double> g_max;
    int max_iters = 100;
    double grad_tol = 1e-8;
    ArmijoOptions armijo;
    DirectionMode direction = DirectionMode::steepest_descent;
    // Descent directions are taken in the inner product of M + smoothing * K
    // (0 gives the plain L2 gradient). Boundary nodal values of g reach the
    // data only through mass coupling; a positive weight fills them in smoothly.
    double smoothing = 0.0;
    // Empty means g0 = 0.
    Field initial_guess;

    void validate() const;
};

struct IterationRecord {
    int iteration;
    double cost;
    double grad_norm;
    double step;  // step accepted to reach this iterate; 0 for the initial guess
};

struct InversionState {
    Field iterate;
    Field gradient;
    Field direction;
    std::vector<IterationRecord> history;
    bool converged = false;
};

class LineSearchError : public Error {
public:
    LineSearchError(const std::string& what, InversionState state) : Error(what), state_(std::move(state)) {}
    const InversionState& state() const noexcept { return state_; }

private:
    InversionState state_;
};

struct ObservationData {
    SpaceTimeField u_d;
    ObservationMask mask;
    double noise_percent = 0.0;
};

// Problem data resolved at one resolution. The model's g is ignored by the
// inversion; its a, rho, q and alpha are the known parts of the forward model.
class InverseProblem {
public:
    InverseProblem(ModelProblem model, ObservationData data, double beta,
                   AdjointScheme scheme = AdjointScheme::discrete);

    const ModelProblem& model() const noexcept { return model_; }
    const ObservationData& data() const noexcept { return data_; }
    const ForwardSolver& solver() const noexcept { return solver_; }
    const AssembledSystem& system() const noexcept { return *model_.system; }
    double beta() const noexcept { return beta_; }
    AdjointScheme scheme() const noexcept { return scheme_; }

    SpaceTimeField state(const Field& g) const;
    // 1/2 sum_n w_n |u_n - u_d,n|^2_{M_omega}
    double misfit(const SpaceTimeField& u) const;
    double regularization(const Field& g) const;
    double cost(const Field& g) const;

    // M-Riesz representative int rho v dt + beta g of the derivative.
    Field gradient(const Field& g) const;
    // Cost and gradient from one forward and one adjoint solve.
    std::pair<double, Field> cost_and_gradient(const Field& g) const;

    // Adjoint state for iterate g.
    SpaceTimeField adjoint(const Field& g) const;

    // Linearized state du for a perturbation dg: zero initial value, source rho dg.
    SpaceTimeField sensitivity(const Field& delta_g) const;

private:
    ModelProblem model_;
    ObservationData data_;
    double beta_;
    AdjointScheme scheme_;
    ForwardSolver solver_;
};

double cost(const Field& g, const InverseProblem& problem);
Field gradient(const Field& g, const InverseProblem& problem);
SpaceTimeField sensitivity_solve(const Field& delta_g, const InverseProblem& problem);

struct Reconstruction {
    Field g;
    InversionState state;
};

// Descent g <- P(g + lambda d) until ||J'(g)||_M <= grad_tol or max_iters.
// Throws LineSearchError (carrying the state so far) when backtracking fails.
Reconstruction reconstruct(const InverseConfig& config, const InverseProblem& problem);

// Multiplicative noise u_d (1 + eps/100 r) with r ~ U[-1,1] drawn per observed
// node and frame from a counter-based stream keyed by `seed`.
SpaceTimeField add_noise(const SpaceTimeField& u_d, const ObservationMask& mask, const Mesh& mesh, double epsilon,
                         std::uint64_t seed);

// ||g_true - g_rec||_M / ||g_true||_M
double relative_error(const Field& g_rec, const Field& g_true, const SparseMatrix& mass);

// Continuous description of a problem, resolvable at any mesh/time resolution.
struct Scenario {
    Rectangle domain{};
    int nx = 20;
    int ny = 20;
    double final_time = 1.5;
    int steps = 20;
    double alpha = 0.5;
    double q = 1.0;
    Coefficients coefficients = Coefficients::laplacian();
    std::function<double(double)> rho = [](double) { return 1.0; };
    ScalarFunction initial = [](double, double) { return 0.0; };
    // Observation region Omega \ [lo, hi]^2; empty means the whole domain.
    std::optional<std::pair<double, double>> frame;
};

struct Discretization {
    Mesh mesh;
    TimeGrid grid;
    ObservationMask mask;
    std::shared_ptr<const AssembledSystem> system;

    // Model with the given spatial source (zero by default).
    ModelProblem model(const Scenario& scenario, Field g = {}) const;
};

// Mesh and time grid refined by `refine` in every direction.
Discretization discretize(const Scenario& scenario, int refine = 1);

// Solves the forward problem for g_true on the grid refined by `refine` and
// samples it at the inversion nodes and time levels (refine = 1 reproduces
// the inversion discretization exactly).
ObservationData generate_data(const ScalarFunction& g_true, const Scenario& scenario, int refine = 1);

// Splitmix64-based counter hash; stream(seed, a, b, c) is a uniform double in [-1, 1].
double counter_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c);
std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace mimfd
