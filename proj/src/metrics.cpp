#include "selfnorm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "selfnorm/gaussian.hpp"

namespace selfnorm {

namespace {

// All distances are computed in the standardized variable z = s * x, with a
// final 1/s scaling for the integral metrics (dx = dz / s).

struct Steps {
    std::vector<double> z;     // jump locations, ascending, duplicates merged
    std::vector<double> cum;   // F value just after z[i]
    double base = 0.0;         // F value before the first jump (mass at -inf)
    double top = 1.0;          // F value after the last jump (1 - mass at +inf)
};

Steps make_steps(std::span<const double> finite, const double* weights, double neg_inf,
                 double pos_inf, double s) {
    Steps st;
    double total = neg_inf + pos_inf;
    if (weights) {
        for (std::size_t i = 0; i < finite.size(); ++i) total += weights[i];
    } else {
        total += static_cast<double>(finite.size());
    }
    if (!(total > 0.0)) throw std::invalid_argument("distance: empty sample");
    st.base = neg_inf / total;
    st.top = 1.0 - pos_inf / total;
    st.z.reserve(finite.size());
    st.cum.reserve(finite.size());
    double acc = neg_inf;
    for (std::size_t i = 0; i < finite.size(); ++i) {
        if (i > 0 && !(finite[i] >= finite[i - 1]))
            throw std::invalid_argument("distance: sample must be sorted ascending");
        if (!std::isfinite(finite[i]))
            throw std::invalid_argument("distance: non-finite value in finite sample");
        acc += weights ? weights[i] : 1.0;
        const double zi = s * finite[i];
        if (!st.z.empty() && zi == st.z.back()) {
            st.cum.back() = acc / total;
        } else {
            st.z.push_back(zi);
            st.cum.push_back(acc / total);
        }
    }
    return st;
}

double ks_core(const Steps& st) {
    double sup = std::max(st.base, 1.0 - st.top);  // limits at -inf / +inf
    double prev = st.base;
    for (std::size_t i = 0; i < st.z.size(); ++i) {
        const double ref = normal_cdf(st.z[i]);
        sup = std::max(sup, std::fabs(prev - ref));
        sup = std::max(sup, std::fabs(st.cum[i] - ref));
        prev = st.cum[i];
    }
    return sup;
}

// Antiderivatives: I(z) = int_{-inf}^z Phi = z Phi(z) + phi(z);
// Q(z) = int_z^{inf} (1 - Phi) = phi(z) - z (1 - Phi(z)).
double fn_i(double z) { return z * normal_cdf(z) + normal_pdf(z); }
double fn_q(double z) { return normal_pdf(z) - z * (1.0 - normal_cdf(z)); }

// int_a^b |Phi(z) - c| dz for constant c in [0,1], exact.
double abs_segment(double c, double a, double b) {
    if (b <= a) return 0.0;
    if (c <= 0.0) return fn_i(b) - fn_i(a);
    if (c >= 1.0) return fn_q(a) - fn_q(b);
    const double zc = normal_quantile(c);
    auto below = [&](double lo, double hi) {  // Phi <= c here
        return c * (hi - lo) - (fn_i(hi) - fn_i(lo));
    };
    auto above = [&](double lo, double hi) {  // Phi >= c here
        return (fn_i(hi) - fn_i(lo)) - c * (hi - lo);
    };
    if (b <= zc) return below(a, b);
    if (a >= zc) return above(a, b);
    return below(a, zc) + above(zc, b);
}

double w1_core(const Steps& st, double s) {
    if (st.base > 0.0 || st.top < 1.0)
        throw std::invalid_argument("w1_distance: sample has mass at +-infinity");
    if (st.z.empty()) throw std::invalid_argument("w1_distance: empty sample");
    double total = fn_i(st.z.front());          // (-inf, z_0], c = 0
    total += fn_q(st.z.back());                 // [z_last, inf), c = 1
    for (std::size_t i = 0; i + 1 < st.z.size(); ++i)
        total += abs_segment(st.cum[i], st.z[i], st.z[i + 1]);
    return total / s;
}

double simpson(double (*f)(double, double, double), double c, double q, double a, double b,
               double fa, double fm, double fb, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm, c, q), frm = f(rm, c, q);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson(f, c, q, a, m, fa, flm, fm, 0.5 * tol, depth - 1) +
           simpson(f, c, q, m, b, fm, frm, fb, 0.5 * tol, depth - 1);
}

double lq_integrand(double z, double c, double q) {
    return std::pow(std::fabs(normal_cdf(z) - c), q);
}

double lq_segment(double c, double a, double b, double q, double tol) {
    if (b <= a) return 0.0;
    auto run = [&](double lo, double hi) {
        if (hi <= lo) return 0.0;
        const double flo = lq_integrand(lo, c, q);
        const double fhi = lq_integrand(hi, c, q);
        const double fm = lq_integrand(0.5 * (lo + hi), c, q);
        return simpson(lq_integrand, c, q, lo, hi, flo, fm, fhi, tol, 30);
    };
    if (c > 0.0 && c < 1.0) {
        const double zc = normal_quantile(c);
        if (zc > a && zc < b) return run(a, zc) + run(zc, b);
    }
    return run(a, b);
}

double lq_core(const Steps& st, double s, double q) {
    if (st.base > 0.0 || st.top < 1.0)
        throw std::invalid_argument("lq_distance: sample has mass at +-infinity");
    if (st.z.empty()) throw std::invalid_argument("lq_distance: empty sample");
    // Tail cutoffs where the integrand falls below 1e-14.
    const double p_cut = std::pow(1e-15, 1.0 / q);
    const double z_cut = -normal_quantile(std::max(p_cut, 1e-300));
    const double lo = std::min(st.z.front(), -z_cut);
    const double hi = std::max(st.z.back(), z_cut);
    const double span = hi - lo;
    auto tol_for = [&](double a, double b) {
        return std::max(1e-10 * (b - a) / span, 1e-16);
    };
    double total = lq_segment(0.0, lo, st.z.front(), q, tol_for(lo, st.z.front()));
    total += lq_segment(1.0, st.z.back(), hi, q, tol_for(st.z.back(), hi));
    for (std::size_t i = 0; i + 1 < st.z.size(); ++i)
        total += lq_segment(st.cum[i], st.z[i], st.z[i + 1], q, tol_for(st.z[i], st.z[i + 1]));
    return total / s;
}

void check_ref(GaussianRef ref) {
    if (!(ref.scale_ratio > 0.0))
        throw std::invalid_argument("distance: reference scale_ratio must be positive");
}

}  // namespace

double ks_distance(EcdfSample sample, GaussianRef ref) {
    check_ref(ref);
    return ks_core(make_steps(sample.finite, nullptr, static_cast<double>(sample.neg_inf),
                              static_cast<double>(sample.pos_inf), ref.scale_ratio));
}

double ks_distance_weighted(std::span<const double> finite, std::span<const double> weights,
                            double neg_inf, double pos_inf, GaussianRef ref) {
    check_ref(ref);
    if (finite.size() != weights.size())
        throw std::invalid_argument("ks_distance_weighted: size mismatch");
    return ks_core(make_steps(finite, weights.data(), neg_inf, pos_inf, ref.scale_ratio));
}

double w1_distance(EcdfSample sample, GaussianRef ref) {
    check_ref(ref);
    return w1_core(make_steps(sample.finite, nullptr, static_cast<double>(sample.neg_inf),
                              static_cast<double>(sample.pos_inf), ref.scale_ratio),
                   ref.scale_ratio);
}

double w1_distance_weighted(std::span<const double> finite, std::span<const double> weights,
                            GaussianRef ref) {
    check_ref(ref);
    if (finite.size() != weights.size())
        throw std::invalid_argument("w1_distance_weighted: size mismatch");
    return w1_core(make_steps(finite, weights.data(), 0.0, 0.0, ref.scale_ratio),
                   ref.scale_ratio);
}

double lq_distance(EcdfSample sample, GaussianRef ref, double q) {
    check_ref(ref);
    if (!(q >= 1.0)) throw std::invalid_argument("lq_distance: q >= 1");
    return lq_core(make_steps(sample.finite, nullptr, static_cast<double>(sample.neg_inf),
                              static_cast<double>(sample.pos_inf), ref.scale_ratio),
                   ref.scale_ratio, q);
}

double lq_distance_weighted(std::span<const double> finite, std::span<const double> weights,
                            GaussianRef ref, double q) {
    check_ref(ref);
    if (!(q >= 1.0)) throw std::invalid_argument("lq_distance_weighted: q >= 1");
    if (finite.size() != weights.size())
        throw std::invalid_argument("lq_distance_weighted: size mismatch");
    return lq_core(make_steps(finite, weights.data(), 0.0, 0.0, ref.scale_ratio),
                   ref.scale_ratio, q);
}

}  // namespace selfnorm
