#include "selfnorm/lrv.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace selfnorm {

std::vector<double> empirical_autocov(std::span<const double> x, int max_lag) {
    const long n = static_cast<long>(x.size());
    if (n < 1) throw std::invalid_argument("empirical_autocov: empty sample");
    if (max_lag < 0 || max_lag >= n)
        throw std::invalid_argument("empirical_autocov: need 0 <= max_lag < n");
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    std::vector<double> g(max_lag + 1, 0.0);
    for (int h = 0; h <= max_lag; ++h) {
        double acc = 0.0;
        for (long k = h; k < n; ++k) acc += (x[k] - mean) * (x[k - h] - mean);
        g[h] = acc / n;
    }
    return g;
}

int bandwidth(const BandwidthRule& rule, long n) {
    if (n < 2) throw std::invalid_argument("bandwidth: n must be >= 2");
    int b = 1;
    switch (rule.kind) {
        case BandwidthKind::fixed:
            b = rule.fixed_b;
            break;
        case BandwidthKind::oversmooth_power: {
            if (!(rule.a_frak > 1.0))
                throw std::invalid_argument("bandwidth: oversmooth_power needs a_frak > 1");
            const double e = 1.0 / (2.0 * (rule.a_frak - 1.0));
            b = static_cast<int>(std::ceil(rule.scale * std::pow(static_cast<double>(n), e)));
            break;
        }
        case BandwidthKind::oversmooth_quarter:
            b = static_cast<int>(
                std::ceil(std::pow(static_cast<double>(n), 0.25) / std::log(static_cast<double>(n))));
            break;
        case BandwidthKind::mse_optimal: {
            if (!(rule.beta > 0.0))
                throw std::invalid_argument("bandwidth: mse_optimal needs beta > 0");
            b = static_cast<int>(
                std::ceil(std::pow(static_cast<double>(n), 1.0 / (2.0 * rule.beta + 1.0))));
            break;
        }
    }
    if (rule.cap_enabled) {
        const double ln = std::log(static_cast<double>(n));
        const int cap =
            static_cast<int>(std::floor(std::pow(n / (ln * ln * ln), 0.25)));
        b = std::min(b, cap);
    }
    // fixed(b=0) is legal (pure gamma_hat(0) studentization); the derived
    // rules never go below 1
    b = std::max(b, rule.kind == BandwidthKind::fixed ? 0 : 1);
    if (b >= n) b = static_cast<int>(n - 1);
    return b;
}

LrvEstimate lrv_estimate(std::span<const double> x, int b) {
    const long n = static_cast<long>(x.size());
    if (b < 0 || b >= n) throw std::invalid_argument("lrv_estimate: need 0 <= b < n");
    const auto g = empirical_autocov(x, b);
    double s = g[0];
    for (int h = 1; h <= b; ++h) s += 2.0 * g[h];
    return LrvEstimate{s, b, n};
}

double lrv_tilde(std::span<const double> x, int b) {
    const long n = static_cast<long>(x.size());
    if (b < 0 || b >= n) throw std::invalid_argument("lrv_tilde: need 0 <= b < n");
    double acc = 0.0;
    for (long k = 0; k < n; ++k) {
        double cross = 0.0;
        for (int h = 1; h <= b && k - h >= 0; ++h) cross += x[k - h];
        acc += x[k] * (x[k] + 2.0 * cross);
    }
    return acc / n;
}

std::optional<double> studentize(std::span<const double> x, int b) {
    const long n = static_cast<long>(x.size());
    const double s2 = lrv_estimate(x, b).sigma_sq;
    if (!(s2 > 0.0)) return std::nullopt;
    const double sn = std::accumulate(x.begin(), x.end(), 0.0);
    return sn / std::sqrt(n * s2);
}

double studentize_truncated(std::span<const double> x, int b, const TruncationRule& rule) {
    const long n = static_cast<long>(x.size());
    const double s2 = lrv_estimate(x, b).sigma_sq;
    const double tau = rule.c_tau * std::sqrt(std::log(static_cast<double>(n)));
    const double sigma = std::max(s2 > 0.0 ? std::sqrt(s2) : 0.0, 1.0 / tau);
    const double sn = std::accumulate(x.begin(), x.end(), 0.0);
    return sn / (std::sqrt(static_cast<double>(n)) * sigma);
}

LinearizationCheck linearization_check(double s_n, long n, double sigma_hat_sq, double sigma_sq,
                                       double x) {
    LinearizationCheck out;
    const double sigma_hat = std::sqrt(sigma_hat_sq);
    const double sigma = std::sqrt(sigma_sq);
    out.left = s_n / std::sqrt(n * sigma_hat_sq) <= x;
    const double d = sigma_hat_sq - sigma_sq;
    const double lhs = s_n / std::sqrt(n * sigma_sq) - x * d / (2.0 * sigma_sq);
    const double sum = sigma_hat + sigma;
    const double rhs = x - x * d * d / (2.0 * sigma_sq * sum * sum);
    out.right = lhs <= rhs;
    return out;
}

std::vector<double> y_linearized(std::span<const double> x, int b, double sigma,
                                 double threshold) {
    const long n = static_cast<long>(x.size());
    if (!(sigma > 0.0)) throw std::invalid_argument("y_linearized: sigma must be positive");
    std::vector<double> y(n);
    const double root_n_sigma = std::sqrt(static_cast<double>(n)) * sigma;
    double bkb = 0.0;  // running sum of the previous b values
    for (long k = 0; k < n; ++k) {
        y[k] = x[k] * (1.0 - threshold * x[k] / (2.0 * root_n_sigma) - threshold * bkb / root_n_sigma);
        bkb += x[k];
        if (k - b >= 0) bkb -= x[k - b];
    }
    return y;
}

}  // namespace selfnorm
