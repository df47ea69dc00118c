#include "selfnorm/analytic.hpp"

#include <cmath>
#include <stdexcept>

namespace selfnorm {

double gamma_linear(std::span<const double> coeffs, int h) {
    if (h < 0) throw std::invalid_argument("gamma_linear: h >= 0");
    const long m = static_cast<long>(coeffs.size());
    double g = 0.0;
    for (long i = 0; i + h < m; ++i) g += coeffs[i] * coeffs[i + h];
    return g;
}

double sigma_sq(std::span<const double> coeffs) {
    double s = 0.0;
    for (double c : coeffs) s += c;
    return s * s;
}

double sigma_b_sq(std::span<const double> coeffs, int b) {
    // gamma(0) + 2 sum_{h=1}^b gamma(h) = sum_{i,j: |i-j| <= b} c_i c_j,
    // computed via prefix sums in O(m).
    const long m = static_cast<long>(coeffs.size());
    std::vector<double> pre(m + 1, 0.0);
    for (long i = 0; i < m; ++i) pre[i + 1] = pre[i] + coeffs[i];
    double s = 0.0;
    for (long i = 0; i < m; ++i) {
        const long lo = std::max<long>(0, i - b);
        const long hi = std::min(m, i + b + 1);
        s += coeffs[i] * (pre[hi] - pre[lo]);
    }
    return s;
}

double bias(std::span<const double> coeffs, int b) {
    return sigma_sq(coeffs) - sigma_b_sq(coeffs, b);
}

std::vector<BiasRow> bias_rate_table(const ProcessSpec& spec, std::span<const long> n_grid,
                                     const BandwidthRule& rule) {
    const auto c = ma_coefficients(spec);
    std::vector<BiasRow> rows;
    rows.reserve(n_grid.size());
    for (long n : n_grid) {
        BiasRow r;
        r.n = n;
        r.b = bandwidth(rule, n);
        r.bias = bias(c, r.b);
        r.sqrt_n_bias = std::sqrt(static_cast<double>(n)) * r.bias;
        rows.push_back(r);
    }
    return rows;
}

namespace {

// ||Z||_p for Z standard normal, real p >= 1.
double gaussian_p_norm(double p) {
    const double sqrt_pi = 1.7724538509055160273;
    const double mom = std::pow(2.0, p / 2.0) * std::tgamma((p + 1.0) / 2.0) / sqrt_pi;
    return std::pow(mom, 1.0 / p);
}

void require_closed_form(const ProcessSpec& spec) {
    if (spec.functional.kind != FunctionalKind::identity)
        throw std::invalid_argument("closed-form dependence measures need the identity functional");
    if (spec.law != InnovationLaw::gaussian)
        throw std::invalid_argument("closed-form dependence measures need gaussian innovations");
}

}  // namespace

double theta_closed(const ProcessSpec& spec, int lag, double p) {
    require_closed_form(spec);
    if (lag < 0 || p < 1.0) throw std::invalid_argument("theta_closed: lag >= 0 and p >= 1");
    const auto c = ma_coefficients(spec);
    if (lag >= static_cast<int>(c.size())) return 0.0;
    // X - X' = c_l (eps - eps'), eps - eps' ~ N(0, 2)
    return std::fabs(c[lag]) * std::sqrt(2.0) * gaussian_p_norm(p);
}

double lambda_closed(const ProcessSpec& spec, int lag, double p) {
    require_closed_form(spec);
    if (lag < 0 || p < 1.0) throw std::invalid_argument("lambda_closed: lag >= 0 and p >= 1");
    const auto c = ma_coefficients(spec);
    // X - X' = sum_{i >= l} c_i (eps_i - eps_i'), exactly Gaussian with variance 2 sum c_i^2
    double tail = 0.0;
    for (std::size_t i = lag; i < c.size(); ++i) tail += c[i] * c[i];
    return std::sqrt(2.0 * tail) * gaussian_p_norm(p);
}

DependenceProfile dependence_profile(const ProcessSpec& spec, std::span<const int> lags, double p) {
    DependenceProfile prof;
    prof.lags.assign(lags.begin(), lags.end());
    prof.theta.reserve(lags.size());
    prof.lambda.reserve(lags.size());
    for (int l : lags) {
        prof.theta.push_back(theta_closed(spec, l, p));
        prof.lambda.push_back(lambda_closed(spec, l, p));
    }
    return prof;
}

}  // namespace selfnorm
