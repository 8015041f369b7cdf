#pragma once

// Implicit L1 / backward-Euler time stepping for
//   u_t + q D_t^alpha u + A u = F,   u(0) = a,   u = 0 on the boundary,
// and the adjoint problem by time reversal.

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "mimfd/fem.hpp"
#include "mimfd/fractime.hpp"

namespace mimfd {

struct ModelProblem {
    TimeGrid grid;
    std::shared_ptr<const AssembledSystem> system;
    double alpha;
    double q;
    TimeSeries rho;  // temporal source factor
    Field g;         // spatial source factor
    Field a;         // initial value, zero on the boundary

    // Throws DimensionError/DomainError on inconsistent shapes, q < 0, alpha
    // outside (0,1) or an initial value that does not vanish on the boundary.
    void validate() const;
};

// Owns the factorization of the (constant) step matrix
//   (1 + q c_{n,n}) / tau * M + K
// on the free nodes and marches any load sequence through it.
class ForwardSolver {
public:
    ForwardSolver(std::shared_ptr<const AssembledSystem> system, const TimeGrid& grid, double alpha, double q);

    const AssembledSystem& system() const noexcept { return *system_; }
    std::shared_ptr<const AssembledSystem> system_ptr() const noexcept { return system_; }
    const TimeGrid& grid() const noexcept { return grid_; }
    double alpha() const noexcept { return weights_.alpha(); }
    double q() const noexcept { return q_; }
    const L1Weights& weights() const noexcept { return weights_; }

    // loads[n] is the assembled right-hand side (integral of F phi_i) at t_n
    // for every node; only free rows are used and loads[0] is ignored.
    // The initial frame is taken as given, boundary values included.
    SpaceTimeField march(const Field& initial, std::span<const Eigen::VectorXd> loads) const;

private:
    std::shared_ptr<const AssembledSystem> system_;
    TimeGrid grid_;
    L1Weights weights_;
    double q_;
    SparseMatrix mass_rows_;  // M, free rows only
    std::unique_ptr<SpdSolver> step_;
};

// Frame n of `sources` is the nodal field F(., t_n); sources[0] is unused.
SpaceTimeField solve_forward_general(const ForwardSolver& solver, const Field& initial,
                                     const std::vector<Field>& sources);
SpaceTimeField solve_forward_general(const ModelProblem& problem, const std::vector<Field>& sources);

// Source rho(t_n) g.
SpaceTimeField solve_forward(const ForwardSolver& solver, const ModelProblem& problem);
SpaceTimeField solve_forward(const ModelProblem& problem);

// How the backward problem is discretized.
//  - discrete: the exact transpose of the forward scheme. Level m of the
//    reversed march carries the trapezoid-weighted residual of t_{N-m+1},
//    and the gradient pairs rho(t_n) with v_{n-1}. Gradients match finite
//    differences of the discrete cost to rounding.
//  - continuous: the backward equation discretized on its own, load
//    r(T - s_m) at level m and trapezoid pairing of rho(t_n) with v_n.
//    Consistent only to O(tau).
enum class AdjointScheme { discrete, continuous };

// Adjoint state v with v(T) = 0 for the misfit residual r_n = u_n - u_d,n
// (weighted by M_omega, so only the observation region contributes).
// Under s = T - t the backward Riemann-Liouville derivative of v becomes the
// Caputo derivative of w(s) = v(T - s), w(0) = 0; w is marched forward with
// the same step matrix and the frames are reversed.
SpaceTimeField solve_adjoint(const ForwardSolver& solver, const SpaceTimeField& residual,
                             AdjointScheme scheme = AdjointScheme::discrete);

// Loads of the reversed march; entry m drives level m of w. Entry 0 is unused.
std::vector<Eigen::VectorXd> reversed_adjoint_loads(const ForwardSolver& solver, const SpaceTimeField& residual,
                                                    AdjointScheme scheme = AdjointScheme::discrete);

// Time quadrature of int_0^T rho(t) v(., t) dt matching the scheme.
Field integrate_adjoint(const SpaceTimeField& v, const TimeSeries& rho, AdjointScheme scheme);

SpaceTimeField reverse_frames(const SpaceTimeField& field);

// Manufactured solution u*(x,t) = t^2 sin(pi x) sin(pi y) on the unit square
// with A = I, c = 0; the matching source is returned by source().
struct ManufacturedSolution {
    double alpha;
    double q;

    double exact(double x, double y, double t) const;
    double source(double x, double y, double t) const;
};

struct ConvergenceRow {
    int nx;
    int steps;
    double error;                  // max over frames of the M-norm error
    std::optional<double> order;   // log2(previous error / error)
};

// Runs the manufactured solution on each (nx, N) level over [0, final_time].
std::vector<ConvergenceRow> convergence_study(const ManufacturedSolution& mms,
                                              const std::vector<std::pair<int, int>>& levels,
                                              double final_time = 1.0);

// Directory of frame_0000.csv .. frame_NNNN.csv in the field CSV format plus
// "manifest.txt" with lines T, N, nx, ny, alpha, q as "key = value".
struct FieldManifest {
    double final_time;
    int steps;
    int nx;
    int ny;
    double alpha;
    double q;
};

void write_space_time_field(const std::filesystem::path& dir, const Mesh& mesh, const SpaceTimeField& field,
                            double alpha, double q);
FieldManifest read_field_manifest(const std::filesystem::path& dir);
SpaceTimeField read_space_time_field(const std::filesystem::path& dir, const Mesh& mesh);

}  // namespace mimfd
