#pragma once

// Orchestration of the numerical experiments: single inversion runs, the
// regularization sweep, the reconstruction tables and the verification suites.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mimfd/config.hpp"
#include "mimfd/inversion.hpp"

namespace mimfd {

struct SweepEntry {
    double beta;
    Reconstruction reconstruction;
    double misfit;
    double cost;
};

// Reconstructions over an ascending list of beta values.
//  - discrepancy pick: largest beta whose misfit stays below the expected
//    noise energy (smallest beta when none does).
//  - quasi-optimal pick: beta_k minimizing ||g_k - g_{k+1}||_M. Needs no
//    noise level; this is the pick the tables use.
struct BetaSweep {
    std::vector<SweepEntry> entries;
    double noise_energy;
    std::size_t discrepancy_pick;
    std::size_t quasi_optimal_pick;
};

// Expected 1/2 sum_n w_n |noise_n|^2_{M_omega} for multiplicative uniform
// noise of `epsilon` percent, estimated from the noisy data itself.
double expected_noise_energy(const ObservationData& noisy, const AssembledSystem& system, double epsilon);

BetaSweep beta_sweep(const ModelProblem& model, const ObservationData& data, const InverseConfig& base,
                     std::vector<double> betas, AdjointScheme scheme = AdjointScheme::discrete);

struct InversionOutcome {
    Discretization discretization;
    Field g_true;
    Reconstruction reconstruction;
    double beta;
    double error;  // relative M-norm error against the interpolated g_true
    double loss;   // final value of the full cost, regularization included
    std::optional<BetaSweep> sweep;
};

// Synthesizes data from config.g_true, perturbs it with the noise stream of
// `seed`, and reconstructs (with the quasi-optimal beta when beta_sweep is on).
InversionOutcome run_inversion(const RunConfig& config, std::uint64_t seed);

struct TableRowSpec {
    std::string label;
    RunConfig config;
};

// Rows of the reconstruction tables 1, 2 and 3. Throws ConfigError otherwise.
std::vector<TableRowSpec> table_rows(int which);

struct TableRowResult {
    std::string label;
    RunConfig config;
    std::vector<std::uint64_t> seeds;
    std::vector<double> errors;
    std::vector<double> losses;
    std::vector<double> betas;
    double error_mean = 0.0;
    double error_spread = 0.0;  // sample standard deviation
    double loss_mean = 0.0;
    double loss_spread = 0.0;
};

// Runs every row over `seeds` noise seeds split from `base_seed`; row x seed
// jobs are spread over `jobs` threads. Results do not depend on `jobs`.
std::vector<TableRowResult> run_table(int which, int seeds, std::uint64_t base_seed, int jobs = 1);

// "row,label,epsilon,omega,alpha,g_true,seeds,error_mean,error_spread,loss_mean,loss_spread"
void write_table_csv(const std::filesystem::path& path, const std::vector<TableRowResult>& rows);
// "row,seed,beta,error,loss"
void write_table_runs_csv(const std::filesystem::path& path, const std::vector<TableRowResult>& rows);

// Relative gap |fd - <J'(g), dg>_M| / |fd| of central differences of the
// discrete cost along random directions, on the Example 1 setup at nx = ny = N = n.
struct GradientCheck {
    int n;
    AdjointScheme scheme;
    std::vector<double> gaps;
    double max_gap() const;
};
GradientCheck gradient_fd_check(int n, AdjointScheme scheme, std::uint64_t seed, int directions = 3);

struct CheckLine {
    std::string name;
    bool passed;
    std::string detail;
};

struct SuiteResult {
    std::string suite;
    std::vector<CheckLine> checks;
    bool passed() const;
};

SuiteResult verify_duhamel_suite(const std::filesystem::path& out_dir = {});
SuiteResult verify_convergence_suite();
SuiteResult verify_gradient_suite(std::uint64_t seed = 0);
// duhamel | convergence | gradient; throws ConfigError for other names.
SuiteResult run_suite(const std::string& name, std::uint64_t seed = 0, const std::filesystem::path& out_dir = {});

}  // namespace mimfd
