#pragma once

// Fractional time calculus on uniform grids: L1 weights for the Caputo
// derivative, product-integration quadrature for the Riemann-Liouville
// integral, and the second-kind Volterra solve for the Duhamel kernel.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace mimfd {

// Uniform partition t_n = n * tau of [0, T].
class TimeGrid {
public:
    TimeGrid(double final_time, int steps);

    double final_time() const noexcept { return final_time_; }
    int steps() const noexcept { return steps_; }
    double tau() const noexcept { return tau_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(steps_) + 1; }

    // t_n; t_N is exactly T.
    double node(int n) const;
    std::vector<double> nodes() const;

    // Composite trapezoid weight of node n (tau/2 at both ends, tau elsewhere).
    double trapezoid_weight(int n) const;

    bool operator==(const TimeGrid& other) const noexcept {
        return steps_ == other.steps_ && final_time_ == other.final_time_;
    }

private:
    double final_time_;
    int steps_;
    double tau_;
};

// Caputo L1 weights c_{n,k}, 1 <= k <= n <= N, stored as a full lower
// triangle. Row n sums to t_n^{1-alpha} / Gamma(2-alpha).
class L1Weights {
public:
    L1Weights(double alpha, const TimeGrid& grid);

    double alpha() const noexcept { return alpha_; }
    const TimeGrid& grid() const noexcept { return grid_; }

    double operator()(int n, int k) const;

    // Row n as a span over k = 1..n (element 0 is c_{n,1}).
    std::span<const double> row(int n) const;

private:
    double alpha_;
    TimeGrid grid_;
    std::vector<double> table_;
};

// Scalar samples of a function at the nodes of a TimeGrid.
struct TimeSeries {
    TimeGrid grid;
    std::vector<double> values;

    TimeSeries(TimeGrid g, std::vector<double> v);
    static TimeSeries constant(const TimeGrid& g, double value);
    template <typename F>
    static TimeSeries sample(const TimeGrid& g, F&& f) {
        std::vector<double> v(g.size());
        for (int n = 0; n <= g.steps(); ++n) v[n] = f(g.node(n));
        return TimeSeries(g, std::move(v));
    }

    double operator[](std::size_t n) const { return values[n]; }
    std::size_t size() const noexcept { return values.size(); }
};

// Nodal fields at every time level t_0..t_N (solution u, adjoint v, data u_d).
struct SpaceTimeField {
    TimeGrid grid;
    std::vector<Eigen::VectorXd> frames;

    SpaceTimeField(TimeGrid g, std::vector<Eigen::VectorXd> f);
    static SpaceTimeField zeros(const TimeGrid& g, Eigen::Index nodes);

    Eigen::Index nodes() const { return frames.empty() ? 0 : frames.front().size(); }
    const Eigen::VectorXd& operator[](std::size_t n) const { return frames[n]; }
    Eigen::VectorXd& operator[](std::size_t n) { return frames[n]; }
};

void check_order(double alpha);

L1Weights l1_weights(double alpha, const TimeGrid& grid);

// sum_{k=1}^{n} c_{n,k} (u_k - u_{k-1}) / tau
double caputo_l1(std::span<const double> history, const L1Weights& weights, int n);

// Product-integration weights for J^{1-alpha} at node n: row n has n+1
// entries, J f(t_n) ~= sum_j w_{n,j} f_j, exact for piecewise-linear f.
class RlQuadrature {
public:
    RlQuadrature(double alpha, const TimeGrid& grid);

    double alpha() const noexcept { return alpha_; }
    std::span<const double> row(int n) const;

private:
    double alpha_;
    TimeGrid grid_;
    std::vector<double> table_;
};

// J^{1-alpha} f sampled at every node.
TimeSeries rl_integral(const TimeSeries& f, double alpha);

// Solves mu + q J^{1-alpha} mu = rho by forward substitution on the
// product-integration system.
TimeSeries solve_volterra_mu(const TimeSeries& rho, double q, double alpha);

// Max-norm residual of mu + q J^{1-alpha} mu - rho under the same quadrature.
double volterra_residual(const TimeSeries& mu, const TimeSeries& rho, double q, double alpha);

// (mu * v)(t_n) by the composite trapezoid rule, nodewise in space.
SpaceTimeField convolve(const TimeSeries& mu, const SpaceTimeField& v);
TimeSeries convolve(const TimeSeries& mu, const TimeSeries& v);

// tau sum_{k=1}^{n} mu(t_n - t_{k-1}) v(t_k): the pairing an implicit step
// produces. For backward Euler (q = 0) the Duhamel sum of the discrete
// solutions is reproduced exactly by this rule.
SpaceTimeField convolve_implicit(const TimeSeries& mu, const SpaceTimeField& v);

}  // namespace mimfd
