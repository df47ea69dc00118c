#pragma once

#include <span>
#include <vector>

#include "selfnorm/lrv.hpp"
#include "selfnorm/processes.hpp"

namespace selfnorm {

/// gamma(h) = sum_i c_i c_{i+h} for X = sum_i c_i eps_{k-i}, unit-variance
/// innovations (scale folded into the coefficients).
double gamma_linear(std::span<const double> coeffs, int h);

/// Long-run variance sigma^2 = (sum_i c_i)^2.
double sigma_sq(std::span<const double> coeffs);

/// Smoothed target sigma_b^2 = gamma(0) + 2 sum_{h=1}^b gamma(h).
double sigma_b_sq(std::span<const double> coeffs, int b);

/// Oversmoothing bias sigma^2 - sigma_b^2 = 2 sum_{h>b} gamma(h).
double bias(std::span<const double> coeffs, int b);

struct BiasRow {
    long n = 0;
    int b = 0;
    double bias = 0.0;
    double sqrt_n_bias = 0.0;
};

/// Exact bias along an n-grid with per-n bandwidths from the rule.
std::vector<BiasRow> bias_rate_table(const ProcessSpec& spec, std::span<const long> n_grid,
                                     const BandwidthRule& rule);

/// Closed-form physical dependence measures in L^p for linear-representable
/// classes. theta: single innovation replaced; lambda: whole tail replaced.
double theta_closed(const ProcessSpec& spec, int lag, double p);
double lambda_closed(const ProcessSpec& spec, int lag, double p);

struct DependenceProfile {
    std::vector<int> lags;
    std::vector<double> theta;
    std::vector<double> lambda;
};

DependenceProfile dependence_profile(const ProcessSpec& spec, std::span<const int> lags, double p);

}  // namespace selfnorm
