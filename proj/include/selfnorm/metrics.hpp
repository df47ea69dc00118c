#pragma once

#include <span>
#include <vector>

namespace selfnorm {

/// Reference law N(0, scale_ratio^{-2}) expressed through its CDF Phi(scale_ratio * x).
struct GaussianRef {
    double scale_ratio = 1.0;
};

/// Empirical sample with point masses at +-infinity (degenerate studentized
/// replications). finite must be sorted ascending.
struct EcdfSample {
    std::span<const double> finite;
    long neg_inf = 0;
    long pos_inf = 0;
};

/// sup_x |F_n(x) - Phi(s x)|.
double ks_distance(EcdfSample sample, GaussianRef ref);

/// Weighted variant for bootstrap resampling: weights[i] is the multiplicity
/// of finite[i]; total = sum(weights) + neg_inf + pos_inf.
double ks_distance_weighted(std::span<const double> finite, std::span<const double> weights,
                            double neg_inf, double pos_inf, GaussianRef ref);

/// Exact integral int |F_n - Phi(s .)| dx via Gaussian antiderivatives.
/// Throws std::invalid_argument when the sample has mass at +-infinity.
double w1_distance(EcdfSample sample, GaussianRef ref);

double w1_distance_weighted(std::span<const double> finite, std::span<const double> weights,
                            GaussianRef ref);

/// int |F_n - Phi(s .)|^q dx by adaptive Simpson (tolerance 1e-10), with
/// segment splits at every jump of F_n and at sign crossings. q >= 1.
double lq_distance(EcdfSample sample, GaussianRef ref, double q);

double lq_distance_weighted(std::span<const double> finite, std::span<const double> weights,
                            GaussianRef ref, double q);

}  // namespace selfnorm
