#pragma once

// Numerical check of the fractional Duhamel representation u = mu * v, where
// u solves the problem with zero initial value and source rho(t) g, v solves
// the source-free problem started from g, and mu + q J^{1-alpha} mu = rho.

#include <filesystem>
#include <memory>
#include <vector>

#include "mimfd/fem.hpp"
#include "mimfd/fractime.hpp"

namespace mimfd {

struct DuhamelReport {
    TimeSeries mu;
    // max_n ||u_n - (mu*v)_n||_M / max_n ||u_n||_M with the step-matched
    // convolution; 0 when degenerate.
    double relative_residual = 0.0;
    std::vector<double> per_frame;  // ||u_n - (mu*v)_n||_M
    // Same ratio with the trapezoid convolution. Its error is O(tau * |A|)
    // on the discrete v, so it is reported but not checked.
    double trapezoid_residual = 0.0;
    // u vanishes identically, so the relative residual is undefined.
    bool degenerate = false;
};

// g may carry nonzero boundary values: v then starts from g and satisfies the
// Dirichlet condition from t_1 on, exactly as the inhomogeneous solve sees g.
DuhamelReport verify_duhamel(const Field& g, const TimeSeries& rho, double q, double alpha,
                             std::shared_ptr<const AssembledSystem> system, const TimeGrid& grid);

struct DuhamelLevel {
    int nx;
    int steps;
};

struct DuhamelRow {
    int nx;
    int steps;
    double residual;
    double trapezoid_residual;
    bool degenerate;
};

struct DuhamelStudy {
    std::vector<DuhamelRow> rows;
    bool monotone;  // strictly decreasing over the non-degenerate rows
};

// Unit-square Laplacian runs of verify_duhamel for g and rho given as functions.
DuhamelStudy residual_refinement_study(const std::vector<DuhamelLevel>& levels, const ScalarFunction& g,
                                       const std::function<double(double)>& rho, double q, double alpha,
                                       double final_time);

// CSV "level,nx,steps,residual,trapezoid_residual,degenerate".
void write_duhamel_study_csv(const std::filesystem::path& path, const DuhamelStudy& study);
// CSV "t,mu".
void write_time_series_csv(const std::filesystem::path& path, const TimeSeries& series);

}  // namespace mimfd
