#include "selfnorm/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "selfnorm/analytic.hpp"
#include "selfnorm/depmeasure.hpp"
#include "selfnorm/gaussian.hpp"
#include "selfnorm/lrv.hpp"
#include "selfnorm/metrics.hpp"
#include "selfnorm/montecarlo.hpp"
#include "selfnorm/processes.hpp"
#include "selfnorm/rng.hpp"

namespace selfnorm {

namespace {

struct Harness {
    std::ostream& os;
    int failures = 0;
    void check(const char* name, bool ok) {
        os << (ok ? "ok   - " : "FAIL - ") << name << "\n";
        if (!ok) ++failures;
    }
    void close(const char* name, double got, double want, double tol) {
        const bool ok = std::fabs(got - want) <= tol;
        if (!ok) os << "       got " << got << ", want " << want << " +- " << tol << "\n";
        check(name, ok);
    }
};

Stream aux_stream(std::uint64_t seed) {
    StreamKey k;
    k.master_seed = seed;
    k.role = StreamRole::auxiliary;
    return derive_stream(k);
}

ProcessSpec ar1_spec(double phi) {
    ProcessSpec p;
    p.cls = ProcessClass::ar1;
    p.phi = phi;
    return p;
}

}  // namespace

int run_selftest(std::ostream& os) {
    Harness h{os};

    // --- gaussian layer ---
    h.close("normal_cdf accuracy", normal_cdf(1.0), 0.8413447460685429, 1e-9);
    h.close("normal_cdf at 0", normal_cdf(0.0), 0.5, 1e-15);
    h.close("normal_quantile reference", normal_quantile(0.975), 1.959963984540054, 1e-9);
    {
        bool ok = true;
        for (int i = 1; i < 40; ++i) {
            const double u = i / 40.0;
            ok = ok && std::fabs(normal_cdf(normal_quantile(u)) - u) < 1e-9;
        }
        h.check("normal_cdf/quantile round trip", ok);
    }

    // --- rng ---
    {
        StreamKey k;
        k.master_seed = 7;
        Stream a = derive_stream(k), b = derive_stream(k);
        bool same = true;
        for (int i = 0; i < 100; ++i) same = same && a.next_u64() == b.next_u64();
        h.check("stream determinism (same key)", same);
        Stream c = derive_stream(k.with_replication(1));
        Stream d = derive_stream(k);
        bool differ = false;
        for (int i = 0; i < 10; ++i) differ = differ || c.next_u64() != d.next_u64();
        h.check("stream decorrelation (different replication)", differ);
        Stream e = aux_stream(3);
        double mean = 0;
        bool in_range = true;
        for (int i = 0; i < 100000; ++i) {
            const double u = e.uniform53();
            in_range = in_range && u > 0.0 && u < 1.0;
            mean += u;
        }
        mean /= 100000;
        h.check("uniform53 range and mean", in_range && std::fabs(mean - 0.5) < 0.005);
    }

    // --- linearization identity ---
    {
        Stream st = aux_stream(11);
        bool all = true;
        for (int i = 0; i < 10000; ++i) {
            const double sigma_sq_v = 0.1 + 5.0 * st.uniform53();
            const double sigma_hat_sq = 0.05 + 5.0 * st.uniform53();
            const long n = 10 + static_cast<long>(st.uniform53() * 5000);
            const double s_n = 20.0 * (st.uniform53() - 0.5) * std::sqrt(static_cast<double>(n));
            const double x = 6.0 * (st.uniform53() - 0.5);
            const auto lc = linearization_check(s_n, n, sigma_hat_sq, sigma_sq_v, x);
            all = all && lc.left == lc.right;
        }
        h.check("linearization identity (10^4 tuples)", all);
    }

    // --- lrv ---
    {
        Stream st = aux_stream(12);
        std::vector<double> x(200);
        for (auto& v : x) v = st.normal();
        h.close("lag-window telescoping at b=n-1", lrv_estimate(x, 199).sigma_sq, 0.0, 1e-10);

        const auto g = empirical_autocov(x, 3);
        const double mean = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
        double direct = 0;
        for (std::size_t k = 2; k < x.size(); ++k) direct += (x[k] - mean) * (x[k - 2] - mean);
        h.close("empirical autocov definition (h=2)", g[2], direct / x.size(), 1e-12);

        double tilde = 0;
        for (long k = 0; k < 200; ++k) {
            double t = x[k] * x[k];
            for (int hh = 1; hh <= 3; ++hh)
                if (k - hh >= 0) t += 2.0 * x[k] * x[k - hh];
            tilde += t;
        }
        h.close("uncentered lag-window definition", lrv_tilde(x, 3), tilde / 200, 1e-12);

        BandwidthRule mse;
        mse.kind = BandwidthKind::mse_optimal;
        mse.beta = 1.0;
        BandwidthRule osq;
        osq.kind = BandwidthKind::oversmooth_quarter;
        BandwidthRule osp;
        osp.kind = BandwidthKind::oversmooth_power;
        osp.a_frak = 3.0;
        h.check("bandwidth rules (spot values)",
                bandwidth(mse, 1024) == 11 && bandwidth(osq, 4096) == 1 && bandwidth(osp, 256) == 4);

        // sum_k Y_k(x) = S_n - x sqrt(n) sigma_tilde^2 / (2 sigma)
        const double sigma = 1.3, thr = 0.7;
        const auto y = y_linearized(x, 3, sigma, thr);
        const double lhs = std::accumulate(y.begin(), y.end(), 0.0);
        const double sn = std::accumulate(x.begin(), x.end(), 0.0);
        const double rhs = sn - thr * std::sqrt(200.0) * lrv_tilde(x, 3) / (2.0 * sigma);
        h.close("linearized-summand identity", lhs, rhs, 1e-9);
    }

    // --- analytic closed forms ---
    {
        const auto spec = ar1_spec(0.5);
        const auto c = ma_coefficients(spec);
        // gamma(h) = phi^h / (1 - phi^2)
        h.close("ar1 autocovariance closed form", gamma_linear(c, 3),
                std::pow(0.5, 3) / (1.0 - 0.25), 1e-12);
        h.close("ar1 long-run variance", sigma_sq(c), 1.0 / ((1 - 0.5) * (1 - 0.5)), 1e-10);
        double direct = gamma_linear(c, 0);
        for (int hh = 1; hh <= 5; ++hh) direct += 2.0 * gamma_linear(c, hh);
        h.close("sigma_b^2 prefix-sum vs direct", sigma_b_sq(c, 5), direct, 1e-12);
        // truncating the MA coefficients at rho^m < 1e-12 leaves ~7e-12 slack
        h.close("ar1 oversmoothing bias (b=20)", bias(c, 20), 2.5431315104166665e-06, 1e-10);
        h.close("theta closed form (l=3, p=2)", theta_closed(spec, 3, 2.0),
                std::sqrt(2.0) * 0.125, 1e-12);
        h.close("lambda closed form (l=3, p=2)", lambda_closed(spec, 3, 2.0),
                0.125 * std::sqrt(2.0 / 0.75), 1e-12);
    }

    // --- metrics unit values ---
    {
        const std::vector<double> zero = {0.0};
        h.close("ks single atom", ks_distance({zero, 0, 0}, GaussianRef{1.0}), 0.5, 1e-15);
        const std::vector<double> pm1 = {-1.0, 1.0};
        h.close("ks two-point", ks_distance({pm1, 0, 0}, GaussianRef{1.0}), 0.3413447460685429,
                1e-9);
        h.close("w1 single atom", w1_distance({zero, 0, 0}, GaussianRef{1.0}),
                0.7978845608028654, 1e-9);
        h.close("w1 scaling (s=2)", w1_distance({zero, 0, 0}, GaussianRef{2.0}),
                0.3989422804014327, 1e-9);
        h.close("lq q=2 single atom (quadrature oracle)",
                lq_distance({zero, 0, 0}, GaussianRef{1.0}, 2.0), 0.23369497725510907, 1e-8);
        Stream st = aux_stream(21);
        std::vector<double> sample(64);
        for (auto& v : sample) v = st.normal();
        std::sort(sample.begin(), sample.end());
        h.close("lq q=1 equals w1", lq_distance({sample, 0, 0}, GaussianRef{1.0}, 1.0),
                w1_distance({sample, 0, 0}, GaussianRef{1.0}), 1e-8);
        std::vector<double> scaled(sample.size());
        const double s = 1.7;
        for (std::size_t i = 0; i < sample.size(); ++i) scaled[i] = s * sample[i];
        h.close("ks scale invariance", ks_distance({sample, 0, 0}, GaussianRef{s}),
                ks_distance({scaled, 0, 0}, GaussianRef{1.0}), 1e-14);
    }

    // --- functionals ---
    {
        bool ok = true;
        for (auto f : {identity_functional(), centered_square_functional(),
                       centered_abs_functional(), lag_product_functional()})
            ok = ok && holder_worst_ratio(f, 20000, 2.0, 5) <= 1.0;
        h.check("declared Hoelder bounds hold", ok);
    }

    // --- processes / coupling ---
    {
        ProcessSpec lin;
        lin.cls = ProcessClass::linear;
        lin.decay.kind = LinearDecayKind::polynomial;
        lin.decay.q = 2.0;
        lin.decay.cutoff = 16;
        StreamKey key;
        key.master_seed = 42;
        const auto cp = generate_coupled(lin, 20, 16, CouplingMode::single_swap, key);
        h.check("finite memory: swap beyond M is bit-exact", cp.x == cp.x_prime);
        const auto cp2 = generate_coupled(lin, 20, 3, CouplingMode::single_swap, key);
        h.check("swap inside memory perturbs", cp2.x != cp2.x_prime);

        const auto spec = ar1_spec(0.5);
        const auto th = theta_hat(spec, 1, 2.0, 20000, 77);
        h.close("theta_hat vs closed form (l=1)", th.value, theta_closed(spec, 1, 2.0),
                5.0 * th.stderr_ + 0.02);
        const auto lam = lambda_hat(spec, 1, 2.0, 20000, 77);
        h.check("lambda >= theta (ar1)", lam.value + 3 * lam.stderr_ >= th.value);

        // stationarity: two halves of one long path agree in mean and variance
        const auto path = generate_path(spec, 100000, key);
        double m1 = 0, m2 = 0, v1 = 0, v2 = 0;
        for (long i = 0; i < 50000; ++i) {
            m1 += path.values[i];
            m2 += path.values[50000 + i];
        }
        m1 /= 50000;
        m2 /= 50000;
        for (long i = 0; i < 50000; ++i) {
            v1 += (path.values[i] - m1) * (path.values[i] - m1);
            v2 += (path.values[50000 + i] - m2) * (path.values[50000 + i] - m2);
        }
        v1 /= 50000;
        v2 /= 50000;
        h.check("stationarity across path halves",
                std::fabs(m1 - m2) < 0.05 && std::fabs(v1 - v2) / v1 < 0.1);

        h.close("garch gamma_C (gaussian, q=4)",
                [] {
                    ProcessSpec g;
                    g.cls = ProcessClass::garch;
                    g.garch_alpha = {0.1};
                    g.garch_beta = {0.2};
                    return garch_gamma_c(g);
                }(),
                0.1 + 0.2 * std::sqrt(3.0), 1e-12);

        ProcessSpec ou;
        ou.cls = ProcessClass::ou_sde;
        ou.ou_theta = 2.0;
        ou.ou_sigma = 1.5;
        h.close("ou stationary variance", gamma_linear(ma_coefficients(ou), 0),
                1.5 * 1.5 / 2.0, 1e-10);
    }

    // --- rate fitting ---
    {
        std::vector<DistanceReport> reports;
        for (long n : {256L, 512L, 1024L, 2048L}) {
            DistanceReport r;
            r.n = n;
            r.estimate = 3.0 / std::sqrt(static_cast<double>(n));
            reports.push_back(r);
        }
        const auto fit = fit_rate(reports);
        h.close("fit_rate exact slope", fit.slope, -0.5, 1e-12);
        h.close("fit_rate exact intercept", fit.intercept, std::log(3.0), 1e-12);

        std::vector<DepEstimate> est;
        for (int l : {1, 2, 3, 4, 5, 6}) {
            DepEstimate e;
            e.lag = l;
            e.value = std::pow(0.5, l);
            e.stderr_ = 1e-12;
            est.push_back(e);
        }
        const auto dec = fit_decay(est);
        h.check("fit_decay exact geometric", dec.geometric &&
                                                 std::fabs(dec.rate - std::log(0.5)) < 1e-9);
    }

    // --- determinism across thread counts ---
    {
        ExperimentPlan plan;
        plan.process = ar1_spec(0.5);
        plan.n_grid = {64, 128, 256, 512};
        plan.reps = 500;
        plan.rule.kind = BandwidthKind::oversmooth_power;
        plan.rule.a_frak = 3.0;
        plan.master_seed = 99;
        plan.threads = 1;
        const auto r1 = run_experiment(plan);
        plan.threads = 4;
        const auto r2 = run_experiment(plan);
        h.check("thread-count determinism (byte-identical CSV)",
                reports_to_csv(r1, plan.master_seed) == reports_to_csv(r2, plan.master_seed));
    }

    os << (h.failures == 0 ? "selftest: all checks passed\n"
                           : "selftest: FAILURES PRESENT\n");
    return h.failures;
}

}  // namespace selfnorm
