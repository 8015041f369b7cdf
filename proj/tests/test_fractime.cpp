#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "mimfd/errors.hpp"
#include "mimfd/fractime.hpp"

using namespace mimfd;

namespace {

// Reference Gamma values to 16 digits.
constexpr double kGamma1_5 = 0.88622692545275801;  // sqrt(pi)/2
constexpr double kGamma2_5 = 1.3293403881791370;   // 3 sqrt(pi)/4

}  // namespace

TEST(TimeGrid, NodesAndEndpoint) {
    const TimeGrid grid(1.5, 20);
    EXPECT_DOUBLE_EQ(grid.tau(), 0.075);
    EXPECT_EQ(grid.node(0), 0.0);
    EXPECT_EQ(grid.node(20), 1.5);
    const auto t = grid.nodes();
    ASSERT_EQ(t.size(), 21u);
    for (std::size_t n = 1; n < t.size(); ++n) EXPECT_GT(t[n], t[n - 1]);
    EXPECT_NEAR(grid.tau() * grid.steps(), grid.final_time(), 1e-15);
}

TEST(TimeGrid, RejectsBadInput) {
    EXPECT_THROW(TimeGrid(0.0, 10), DomainError);
    EXPECT_THROW(TimeGrid(1.0, 0), DomainError);
    const TimeGrid grid(1.0, 4);
    EXPECT_THROW(grid.node(5), IndexError);
}

TEST(TimeGrid, TrapezoidWeights) {
    const TimeGrid grid(2.0, 8);
    double total = 0.0;
    for (int n = 0; n <= 8; ++n) total += grid.trapezoid_weight(n);
    EXPECT_NEAR(total, 2.0, 1e-15);
    EXPECT_DOUBLE_EQ(grid.trapezoid_weight(0), 0.125);
    EXPECT_DOUBLE_EQ(grid.trapezoid_weight(3), 0.25);
}

TEST(L1Weights, FirstWeightAgainstGammaOracle) {
    const L1Weights w(0.5, TimeGrid(1.5, 20));
    EXPECT_NEAR(w(1, 1), std::sqrt(0.075) / kGamma1_5, 1e-14);
    EXPECT_NEAR(w(1, 1), 0.309019, 1e-6);
}

TEST(L1Weights, UnitStepClosedForm) {
    const L1Weights w(0.5, TimeGrid(2.0, 2));
    EXPECT_NEAR(w(2, 1), (std::sqrt(2.0) - 1.0) / kGamma1_5, 1e-14);
    EXPECT_NEAR(w(2, 2), 1.0 / kGamma1_5, 1e-14);
    EXPECT_NEAR(w(2, 1), 0.467390, 1e-6);
    EXPECT_NEAR(w(2, 2), 1.128379, 5e-7);
}

TEST(L1Weights, NearOneDegeneratesToBackwardDifference) {
    const L1Weights w(1.0 - 1e-9, TimeGrid(1.0, 10));
    for (int n = 1; n <= 10; ++n) {
        EXPECT_NEAR(w(n, n), 1.0, 1e-6);
        for (int k = 1; k < n; ++k) EXPECT_NEAR(w(n, k), 0.0, 1e-6);
    }
}

TEST(L1Weights, RejectsOrderOutsideUnitInterval) {
    const TimeGrid grid(1.0, 4);
    EXPECT_THROW(L1Weights(0.0, grid), DomainError);
    EXPECT_THROW(L1Weights(1.0, grid), DomainError);
    EXPECT_THROW(l1_weights(-0.2, grid), DomainError);
}

TEST(L1Weights, PropertyPositiveIncreasingTelescoping) {
    std::mt19937_64 rng(20241);
    std::uniform_real_distribution<double> a(0.01, 0.99);
    std::uniform_int_distribution<int> steps(1, 200);
    std::uniform_real_distribution<double> horizon(0.1, 5.0);
    for (int trial = 0; trial < 30; ++trial) {
        const double alpha = a(rng);
        const TimeGrid grid(horizon(rng), steps(rng));
        const L1Weights w(alpha, grid);
        const double g2 = std::tgamma(2.0 - alpha);
        for (int n = 1; n <= grid.steps(); ++n) {
            double sum = 0.0;
            for (int k = 1; k <= n; ++k) {
                ASSERT_GT(w(n, k), 0.0);
                if (k > 1) ASSERT_GT(w(n, k), w(n, k - 1));
                sum += w(n, k);
            }
            const double exact = std::pow(grid.node(n), 1.0 - alpha) / g2;
            ASSERT_NEAR(sum, exact, 1e-12 * exact);
            ASSERT_NEAR(w(n, n), std::pow(grid.tau(), 1.0 - alpha) / g2, 1e-13);
        }
    }
}

TEST(CaputoL1, ConstantHistoryGivesZero) {
    const TimeGrid grid(1.0, 10);
    const L1Weights w(0.4, grid);
    const std::vector<double> u(11, 7.0);
    for (int n = 1; n <= 10; ++n) EXPECT_EQ(caputo_l1(u, w, n), 0.0);
}

TEST(CaputoL1, ExactOnLinearHistory) {
    const TimeGrid grid(1.0, 16);
    const L1Weights w(0.5, grid);
    const auto u = grid.nodes();
    for (int n = 1; n <= 16; ++n)
        EXPECT_NEAR(caputo_l1(u, w, n), std::sqrt(grid.node(n)) / kGamma1_5, 1e-13);
}

TEST(CaputoL1, QuadraticHistoryConverges) {
    auto err = [](int steps) {
        const TimeGrid grid(1.0, steps);
        const L1Weights w(0.5, grid);
        std::vector<double> u;
        for (double t : grid.nodes()) u.push_back(t * t);
        return std::abs(caputo_l1(u, w, steps) - 2.0 / kGamma2_5);
    };
    EXPECT_NEAR(2.0 / kGamma2_5, 1.504506, 5e-7);
    const double e10 = err(10);
    EXPECT_LT(e10, 5e-2);
    // O(tau^{1.5}): halving tau gains about 2^{1.5}.
    EXPECT_GT(e10 / err(20), 2.5);
}

TEST(CaputoL1, IndexErrors) {
    const TimeGrid grid(1.0, 4);
    const L1Weights w(0.5, grid);
    const std::vector<double> u(5, 0.0);
    EXPECT_THROW(caputo_l1(u, w, 0), IndexError);
    EXPECT_THROW(caputo_l1(u, w, 5), IndexError);
    EXPECT_THROW(caputo_l1(std::vector<double>(3, 0.0), w, 4), IndexError);
}

TEST(RlIntegral, ExactOnConstantsAndLinears) {
    const TimeGrid grid(2.0, 13);
    const auto one = rl_integral(TimeSeries::constant(grid, 1.0), 0.5);
    const auto lin = rl_integral(TimeSeries::sample(grid, [](double t) { return t; }), 0.5);
    const auto zero = rl_integral(TimeSeries::constant(grid, 0.0), 0.5);
    for (int n = 0; n <= 13; ++n) {
        const double t = grid.node(n);
        EXPECT_NEAR(one[n], std::sqrt(t) / kGamma1_5, 1e-13);
        EXPECT_NEAR(lin[n], std::pow(t, 1.5) / kGamma2_5, 1e-13);
        EXPECT_EQ(zero[n], 0.0);
    }
}

TEST(Volterra, ZeroCouplingReturnsRho) {
    const TimeGrid grid(1.0, 10);
    const auto rho = TimeSeries::sample(grid, [](double t) { return std::cos(t); });
    const auto mu = solve_volterra_mu(rho, 0.0, 0.3);
    for (int n = 0; n <= 10; ++n) EXPECT_EQ(mu[n], rho[n]);
}

TEST(Volterra, ConstructedConstantSolution) {
    const TimeGrid grid(1.5, 30);
    const double q = 2.0, alpha = 0.35;
    const auto rho = TimeSeries::sample(
        grid, [&](double t) { return 1.0 + q * std::pow(t, 1.0 - alpha) / std::tgamma(2.0 - alpha); });
    const auto mu = solve_volterra_mu(rho, q, alpha);
    for (int n = 0; n <= 30; ++n) EXPECT_NEAR(mu[n], 1.0, 1e-12);
}

TEST(Volterra, ErfcClosedForm) {
    const TimeGrid grid(1.0, 1000);
    const auto mu = solve_volterra_mu(TimeSeries::constant(grid, 1.0), 1.0, 0.5);
    const double exact = std::exp(1.0) * std::erfc(1.0);
    EXPECT_NEAR(exact, 0.427584, 5e-7);
    EXPECT_NEAR(mu[1000], exact, 1e-4 * exact);
    // Interior nodes against e^t erfc(sqrt t).
    for (int n : {100, 250, 500})
        EXPECT_NEAR(mu[n], std::exp(grid.node(n)) * std::erfc(std::sqrt(grid.node(n))), 1e-3);
}

TEST(Volterra, DiscreteResidualIsRoundoff) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double alpha : {0.1, 0.5, 0.9}) {
        const TimeGrid grid(2.0, 150);
        std::vector<double> v(grid.size());
        for (auto& x : v) x = u(rng);
        const TimeSeries rho(grid, v);
        const auto mu = solve_volterra_mu(rho, 3.0, alpha);
        EXPECT_LE(volterra_residual(mu, rho, 3.0, alpha), 1e-10);
    }
}

TEST(Convolve, ZeroKernelAndConstants) {
    const TimeGrid grid(1.0, 8);
    Eigen::VectorXd w(3);
    w << 1.0, -2.0, 0.5;
    const SpaceTimeField v(grid, std::vector<Eigen::VectorXd>(grid.size(), w));
    const auto zero = convolve(TimeSeries::constant(grid, 0.0), v);
    const auto ones = convolve(TimeSeries::constant(grid, 1.0), v);
    for (int n = 0; n <= 8; ++n) {
        EXPECT_EQ(zero[n].norm(), 0.0);
        EXPECT_NEAR((ones[n] - grid.node(n) * w).norm(), 0.0, 1e-14);
    }
}

TEST(Convolve, ScalarLinearIsSecondOrder) {
    auto err = [](int steps) {
        const TimeGrid grid(1.0, steps);
        const auto r = convolve(TimeSeries::constant(grid, 1.0), TimeSeries::sample(grid, [](double t) { return t; }));
        double e = 0.0;
        for (int n = 0; n <= steps; ++n) e = std::max(e, std::abs(r[n] - 0.5 * grid.node(n) * grid.node(n)));
        return e;
    };
    EXPECT_LT(err(10), 1e-12);  // trapezoid is exact on linears
    const TimeGrid grid(1.0, 20);
    const auto r = convolve(TimeSeries::sample(grid, [](double t) { return std::exp(-t); }),
                            TimeSeries::sample(grid, [](double t) { return t; }));
    // int_0^1 e^{-(1-s)} s ds = e^{-1}
    EXPECT_NEAR(r[20], std::exp(-1.0), 5e-4);
}

TEST(Convolve, GridMismatchThrows) {
    const TimeGrid a(1.0, 4), b(1.0, 5);
    EXPECT_THROW(convolve(TimeSeries::constant(a, 1.0), TimeSeries::constant(b, 1.0)), DimensionError);
    EXPECT_THROW(convolve_implicit(TimeSeries::constant(a, 1.0), SpaceTimeField::zeros(b, 2)), DimensionError);
}

TEST(Convolve, ImplicitRuleOnConstants) {
    const TimeGrid grid(1.0, 8);
    Eigen::VectorXd w = Eigen::VectorXd::Constant(2, 3.0);
    const SpaceTimeField v(grid, std::vector<Eigen::VectorXd>(grid.size(), w));
    const auto r = convolve_implicit(TimeSeries::constant(grid, 1.0), v);
    for (int n = 0; n <= 8; ++n) EXPECT_NEAR((r[n] - grid.node(n) * w).norm(), 0.0, 1e-14);
}

TEST(Calculus, CaputoMatchesRlOfDerivative) {
    // D^alpha u = J^{1-alpha} u' for u = t^2: L1 versus product integration
    // of the sampled derivative 2t agree to O(tau^{2-alpha}).
    const double alpha = 0.4;
    for (int steps : {20, 40}) {
        const TimeGrid grid(1.0, steps);
        const L1Weights w(alpha, grid);
        std::vector<double> u;
        for (double t : grid.nodes()) u.push_back(t * t);
        const auto j = rl_integral(TimeSeries::sample(grid, [](double t) { return 2.0 * t; }), alpha);
        EXPECT_NEAR(caputo_l1(u, w, steps), j[static_cast<std::size_t>(steps)], 2.0 * std::pow(grid.tau(), 2.0 - alpha));
    }
}
