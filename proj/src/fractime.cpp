#include "mimfd/fractime.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mimfd/errors.hpp"

namespace mimfd {

TimeGrid::TimeGrid(double final_time, int steps)
    : final_time_(final_time), steps_(steps), tau_(0.0) {
    if (!(final_time > 0.0) || !std::isfinite(final_time))
        throw DomainError("TimeGrid: final time must be positive, got " + std::to_string(final_time));
    if (steps < 1)
        throw DomainError("TimeGrid: step count must be >= 1, got " + std::to_string(steps));
    tau_ = final_time_ / steps_;
}

double TimeGrid::node(int n) const {
    if (n < 0 || n > steps_)
        throw IndexError("TimeGrid: node index " + std::to_string(n) + " outside [0," +
                         std::to_string(steps_) + "]");
    if (n == steps_) return final_time_;
    return n * tau_;
}

std::vector<double> TimeGrid::nodes() const {
    std::vector<double> t(size());
    for (int n = 0; n <= steps_; ++n) t[n] = node(n);
    return t;
}

double TimeGrid::trapezoid_weight(int n) const {
    if (n < 0 || n > steps_) throw IndexError("TimeGrid: trapezoid index out of range");
    return (n == 0 || n == steps_) ? 0.5 * tau_ : tau_;
}

void check_order(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw DomainError("fractional order must lie in (0,1), got " + std::to_string(alpha));
}

namespace {

inline std::size_t tri_offset(int n) {
    // rows 1..n-1 hold 1+2+...+(n-1) entries
    return static_cast<std::size_t>(n - 1) * n / 2;
}

}  // namespace

L1Weights::L1Weights(double alpha, const TimeGrid& grid) : alpha_(alpha), grid_(grid) {
    check_order(alpha);
    const int big_n = grid.steps();
    const double beta = 1.0 - alpha;
    const double scale = std::pow(grid.tau(), beta) / std::tgamma(2.0 - alpha);

    // c_{n,k} depends only on n-k on a uniform grid.
    std::vector<double> lag(big_n);
    for (int j = 0; j < big_n; ++j)
        lag[j] = scale * (std::pow(j + 1.0, beta) - std::pow(static_cast<double>(j), beta));

    table_.resize(tri_offset(big_n + 1));
    for (int n = 1; n <= big_n; ++n) {
        double* r = table_.data() + tri_offset(n);
        for (int k = 1; k <= n; ++k) r[k - 1] = lag[n - k];
    }
}

double L1Weights::operator()(int n, int k) const {
    if (n < 1 || n > grid_.steps() || k < 1 || k > n)
        throw IndexError("L1Weights: (n,k) = (" + std::to_string(n) + "," + std::to_string(k) +
                         ") outside 1 <= k <= n <= N");
    return table_[tri_offset(n) + (k - 1)];
}

std::span<const double> L1Weights::row(int n) const {
    if (n < 1 || n > grid_.steps()) throw IndexError("L1Weights: row out of range");
    return {table_.data() + tri_offset(n), static_cast<std::size_t>(n)};
}

TimeSeries::TimeSeries(TimeGrid g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.size())
        throw DimensionError("TimeSeries: expected " + std::to_string(grid.size()) + " samples, got " +
                             std::to_string(values.size()));
}

TimeSeries TimeSeries::constant(const TimeGrid& g, double value) {
    return TimeSeries(g, std::vector<double>(g.size(), value));
}

SpaceTimeField::SpaceTimeField(TimeGrid g, std::vector<Eigen::VectorXd> f)
    : grid(g), frames(std::move(f)) {
    if (frames.size() != grid.size())
        throw DimensionError("SpaceTimeField: expected " + std::to_string(grid.size()) +
                             " frames, got " + std::to_string(frames.size()));
    for (const auto& fr : frames)
        if (fr.size() != frames.front().size())
            throw DimensionError("SpaceTimeField: frames differ in length");
}

SpaceTimeField SpaceTimeField::zeros(const TimeGrid& g, Eigen::Index nodes) {
    return SpaceTimeField(g, std::vector<Eigen::VectorXd>(g.size(), Eigen::VectorXd::Zero(nodes)));
}

L1Weights l1_weights(double alpha, const TimeGrid& grid) { return L1Weights(alpha, grid); }

double caputo_l1(std::span<const double> history, const L1Weights& weights, int n) {
    if (n < 1 || n > weights.grid().steps())
        throw IndexError("caputo_l1: time index " + std::to_string(n) + " out of range");
    if (history.size() < static_cast<std::size_t>(n) + 1)
        throw IndexError("caputo_l1: history shorter than n+1");
    const auto c = weights.row(n);
    double acc = 0.0;
    for (int k = 1; k <= n; ++k) acc += c[k - 1] * (history[k] - history[k - 1]);
    return acc / weights.grid().tau();
}

RlQuadrature::RlQuadrature(double alpha, const TimeGrid& grid) : alpha_(alpha), grid_(grid) {
    check_order(alpha);
    const int big_n = grid.steps();
    const double beta = 1.0 - alpha;
    const double scale = std::pow(grid.tau(), beta) / std::tgamma(beta + 2.0);
    auto p = [beta](double m) { return std::pow(m, beta + 1.0); };

    // Interior lag weights: second differences of m^{beta+1}.
    std::vector<double> inner(big_n + 1, 0.0);
    for (int m = 1; m < big_n; ++m) inner[m] = p(m + 1.0) - 2.0 * p(m) + p(m - 1.0);

    // Row n (n >= 0) has n+1 entries; row 0 is the single zero J f(0) = 0.
    table_.resize(static_cast<std::size_t>(big_n + 1) * (big_n + 2) / 2, 0.0);
    for (int n = 1; n <= big_n; ++n) {
        double* r = table_.data() + static_cast<std::size_t>(n) * (n + 1) / 2;
        r[0] = scale * (p(n - 1.0) - (n - 1.0 - beta) * std::pow(static_cast<double>(n), beta));
        for (int j = 1; j < n; ++j) r[j] = scale * inner[n - j];
        r[n] = scale;
    }
}

std::span<const double> RlQuadrature::row(int n) const {
    if (n < 0 || n > grid_.steps()) throw IndexError("RlQuadrature: row out of range");
    return {table_.data() + static_cast<std::size_t>(n) * (n + 1) / 2, static_cast<std::size_t>(n) + 1};
}

TimeSeries rl_integral(const TimeSeries& f, double alpha) {
    const RlQuadrature quad(alpha, f.grid);
    std::vector<double> out(f.size(), 0.0);
    for (int n = 1; n <= f.grid.steps(); ++n) {
        const auto w = quad.row(n);
        double acc = 0.0;
        for (int j = 0; j <= n; ++j) acc += w[j] * f.values[j];
        out[n] = acc;
    }
    return TimeSeries(f.grid, std::move(out));
}

TimeSeries solve_volterra_mu(const TimeSeries& rho, double q, double alpha) {
    if (!(q >= 0.0)) throw DomainError("solve_volterra_mu: q must be nonnegative");
    const RlQuadrature quad(alpha, rho.grid);
    std::vector<double> mu(rho.size(), 0.0);
    mu[0] = rho.values[0];
    for (int n = 1; n <= rho.grid.steps(); ++n) {
        const auto w = quad.row(n);
        double hist = 0.0;
        for (int j = 0; j < n; ++j) hist += w[j] * mu[j];
        mu[n] = (rho.values[n] - q * hist) / (1.0 + q * w[n]);
    }
    return TimeSeries(rho.grid, std::move(mu));
}

double volterra_residual(const TimeSeries& mu, const TimeSeries& rho, double q, double alpha) {
    if (!(mu.grid == rho.grid)) throw DimensionError("volterra_residual: grid mismatch");
    const TimeSeries j_mu = rl_integral(mu, alpha);
    double worst = 0.0;
    for (std::size_t n = 0; n < mu.size(); ++n)
        worst = std::max(worst, std::abs(mu.values[n] + q * j_mu.values[n] - rho.values[n]));
    return worst;
}

SpaceTimeField convolve(const TimeSeries& mu, const SpaceTimeField& v) {
    if (!(mu.grid == v.grid)) throw DimensionError("convolve: time grids differ");
    const int big_n = v.grid.steps();
    const double tau = v.grid.tau();
    SpaceTimeField out = SpaceTimeField::zeros(v.grid, v.nodes());
    for (int n = 1; n <= big_n; ++n) {
        Eigen::VectorXd& acc = out.frames[n];
        for (int j = 0; j <= n; ++j) {
            const double w = (j == 0 || j == n) ? 0.5 * tau : tau;
            acc.noalias() += (w * mu.values[n - j]) * v.frames[j];
        }
    }
    return out;
}

TimeSeries convolve(const TimeSeries& mu, const TimeSeries& v) {
    if (!(mu.grid == v.grid)) throw DimensionError("convolve: time grids differ");
    const double tau = v.grid.tau();
    std::vector<double> out(v.size(), 0.0);
    for (int n = 1; n <= v.grid.steps(); ++n) {
        double acc = 0.0;
        for (int j = 0; j <= n; ++j) acc += ((j == 0 || j == n) ? 0.5 * tau : tau) * mu.values[n - j] * v.values[j];
        out[n] = acc;
    }
    return TimeSeries(v.grid, std::move(out));
}

SpaceTimeField convolve_implicit(const TimeSeries& mu, const SpaceTimeField& v) {
    if (!(mu.grid == v.grid)) throw DimensionError("convolve_implicit: time grids differ");
    const double tau = v.grid.tau();
    SpaceTimeField out = SpaceTimeField::zeros(v.grid, v.nodes());
    for (int n = 1; n <= v.grid.steps(); ++n)
        for (int k = 1; k <= n; ++k) out.frames[n].noalias() += (tau * mu.values[n - k + 1]) * v.frames[k];
    return out;
}

}  // namespace mimfd
