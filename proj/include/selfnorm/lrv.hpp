#pragma once

#include <optional>
#include <span>
#include <vector>

namespace selfnorm {

/// gamma_hat(h) = n^{-1} sum_{k=h+1}^n (X_k - Xbar)(X_{k-h} - Xbar).
std::vector<double> empirical_autocov(std::span<const double> x, int max_lag);

enum class BandwidthKind { fixed, oversmooth_power, oversmooth_quarter, mse_optimal };

struct BandwidthRule {
    BandwidthKind kind = BandwidthKind::fixed;
    int fixed_b = 1;
    double a_frak = 3.0;   // oversmooth_power: b = ceil(scale * n^{1/(2(a-1))})
    double beta = 1.0;     // mse_optimal: b = ceil(n^{1/(2 beta + 1)})
    double scale = 1.0;    // multiplier for oversmooth_power
    bool cap_enabled = false;  // clamp to floor((n / log^3 n)^{1/4})
};

int bandwidth(const BandwidthRule& rule, long n);

struct LrvEstimate {
    double sigma_sq = 0.0;  // lag-window estimate (rectangular weights)
    int b = 0;
    long n = 0;
};

/// sigma_hat^2 = gamma_hat(0) + 2 sum_{h=1}^b gamma_hat(h).
LrvEstimate lrv_estimate(std::span<const double> x, int b);

/// Uncentered variant sigma_tilde^2 = n^{-1} sum_k (X_k^2 + 2 sum_{h=1}^b X_k X_{k-h}),
/// with X_{k-h} = 0 for k-h <= 0.
double lrv_tilde(std::span<const double> x, int b);

/// T = S_n / sqrt(n sigma_hat^2); empty when sigma_hat^2 <= 0.
std::optional<double> studentize(std::span<const double> x, int b);

struct TruncationRule {
    double c_tau = 2.0;  // tau_n = c_tau * sqrt(log n)
};

/// T = S_n / (sqrt(n) max(sigma_hat, 1/tau_n)); always finite.
double studentize_truncated(std::span<const double> x, int b, const TruncationRule& rule);

/// Both sides of the exact linearization identity at threshold x:
/// left  = 1{S_n / sqrt(n sigma_hat^2) <= x}
/// right = 1{S_n / sqrt(n sigma^2) - x (sigma_hat^2 - sigma^2)/(2 sigma^2)
///           <= x - x (sigma_hat^2 - sigma^2)^2 / (2 sigma^2 (sigma_hat + sigma)^2)}
struct LinearizationCheck {
    bool left = false;
    bool right = false;
};
LinearizationCheck linearization_check(double s_n, long n, double sigma_hat_sq, double sigma_sq,
                                       double x);

/// Y_k(x) = X_k (1 - x X_k / (2 sqrt(n) sigma) - x B_kb / (sqrt(n) sigma)),
/// B_kb = sum_{h=1}^b X_{k-h} (zero-padded).
std::vector<double> y_linearized(std::span<const double> x, int b, double sigma, double threshold);

}  // namespace selfnorm
