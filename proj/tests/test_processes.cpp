#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "selfnorm/analytic.hpp"
#include "selfnorm/lrv.hpp"
#include "selfnorm/metrics.hpp"
#include "selfnorm/processes.hpp"

using namespace selfnorm;

namespace {

ProcessSpec ar1_spec(double phi) {
    ProcessSpec s;
    s.cls = ProcessClass::ar1;
    s.phi = phi;
    return s;
}

ProcessSpec poly_spec(double q, int cutoff) {
    ProcessSpec s;
    s.cls = ProcessClass::linear;
    s.decay.kind = LinearDecayKind::polynomial;
    s.decay.q = q;
    s.decay.cutoff = cutoff;
    return s;
}

StreamKey key_for(std::uint64_t seed, std::uint64_t exp = 0, std::uint64_t rep = 0) {
    StreamKey k;
    k.master_seed = seed;
    k.experiment_id = exp;
    k.replication_index = rep;
    return k;
}

}  // namespace

TEST_CASE("validation names the violated condition") {
    CHECK_THROWS_AS(validate(ar1_spec(1.0)), std::invalid_argument);
    CHECK_THROWS_AS(validate(ar1_spec(-1.2)), std::invalid_argument);

    ProcessSpec lin = poly_spec(1.0, 100);  // needs q > 1
    CHECK_THROWS_AS(validate(lin), std::invalid_argument);

    ProcessSpec g;
    g.cls = ProcessClass::garch;
    g.garch_mu = 0.1;
    g.garch_alpha = {0.5};
    g.garch_beta = {0.5};
    try {
        validate(g);
        FAIL("expected a stationarity error");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("gamma_C") != std::string::npos);
    }

    ProcessSpec ou;
    ou.cls = ProcessClass::ou_sde;
    ou.ou_theta = -1.0;
    CHECK_THROWS_AS(validate(ou), std::invalid_argument);

    ProcessSpec t = ar1_spec(0.5);
    t.law = InnovationLaw::student_t;
    t.t_nu = 2;  // needs finite variance and more
    CHECK_THROWS_AS(validate(t), std::invalid_argument);
}

TEST_CASE("garch contraction coefficient hits the frozen value") {
    ProcessSpec g;
    g.cls = ProcessClass::garch;
    g.garch_mu = 0.1;
    g.garch_alpha = {0.2};
    g.garch_beta = {0.3};
    g.garch_q_moment = 4;
    // alpha + beta ||eps^2||_2 = 0.2 + 0.3 sqrt(3)
    CHECK(garch_gamma_c(g) == doctest::Approx(0.2 + 0.3 * std::sqrt(3.0)).epsilon(1e-12));
    validate(g);
}

TEST_CASE("burn-in defaults follow the contraction factor") {
    CHECK(default_burn_in(ar1_spec(0.5)) == 40);  // ceil(log 1e-12 / log 0.5)
    CHECK(contraction_factor(ar1_spec(0.5)) == doctest::Approx(0.5));

    ProcessSpec pm;
    pm.cls = ProcessClass::positive_matrix_product;
    CHECK(default_burn_in(pm) == 10000);

    ProcessSpec custom = ar1_spec(0.5);
    custom.burn_in = 7;
    CHECK(effective_burn_in(custom) == 7);
}

TEST_CASE("spec hashing separates nearby specs") {
    const auto h1 = spec_hash(ar1_spec(0.5));
    const auto h2 = spec_hash(ar1_spec(0.5000001));
    ProcessSpec f = ar1_spec(0.5);
    f.functional = centered_square_functional();
    CHECK(h1 != h2);
    CHECK(h1 != spec_hash(f));
    CHECK(h1 == spec_hash(ar1_spec(0.5)));
}

TEST_CASE("ar1 with phi = 0 is iid standard normal") {
    const auto path = generate_path(ar1_spec(0.0), 100000, key_for(3));
    std::vector<double> sorted = path.values;
    std::sort(sorted.begin(), sorted.end());
    CHECK(ks_distance({sorted, 0, 0}, GaussianRef{1.0}) < 0.006);
    const auto g = empirical_autocov(path.values, 1);
    CHECK(std::abs(g[1]) < 0.01);
}

TEST_CASE("ar1 sample autocovariances track the closed forms") {
    const auto path = generate_path(ar1_spec(0.5), 1000000, key_for(4));
    const auto g = empirical_autocov(path.values, 2);
    CHECK(g[0] == doctest::Approx(4.0 / 3.0).epsilon(0.02));
    CHECK(g[1] == doctest::Approx(2.0 / 3.0).epsilon(0.02));
    CHECK(g[2] == doctest::Approx(1.0 / 3.0).epsilon(0.03));
    double mean = 0;
    for (double v : path.values) mean += v;
    CHECK(std::abs(mean / (double)path.values.size()) < 0.01);
}

TEST_CASE("geometric linear coefficients reproduce the ar1 law") {
    ProcessSpec lin;
    lin.cls = ProcessClass::linear;
    lin.decay.kind = LinearDecayKind::geometric;
    lin.decay.rho = 0.5;
    const auto c_lin = ma_coefficients(lin);
    const auto c_ar = ma_coefficients(ar1_spec(0.5));
    for (int h : {0, 1, 2, 5})
        CHECK(gamma_linear(c_lin, h) == doctest::Approx(gamma_linear(c_ar, h)).epsilon(1e-10));
}

TEST_CASE("memory-one linear series is iid and couples trivially beyond lag 1") {
    ProcessSpec lin = poly_spec(1.5, 1);
    const auto c = ma_coefficients(lin);
    REQUIRE(c.size() == 1);
    CHECK(exact_memory(lin) == 1);
    for (int l : {2, 3, 10}) {
        const auto pair =
            generate_coupled(lin, 20, l, CouplingMode::single_swap, key_for(5, 0, (std::uint64_t)l));
        CHECK(pair.x == pair.x_prime);
    }
}

TEST_CASE("coupled pairs are bit-identical once the swap leaves the memory window") {
    ProcessSpec lin = poly_spec(1.5, 16);
    CHECK(exact_memory(lin) == 16);
    for (std::uint64_t rep = 0; rep < 50; ++rep) {
        const auto far = generate_coupled(lin, 40, 16, CouplingMode::single_swap, key_for(6, 1, rep));
        CHECK(far.x == far.x_prime);
        const auto near =
            generate_coupled(lin, 40, 3, CouplingMode::single_swap, key_for(6, 1, rep));
        CHECK(near.x != near.x_prime);
    }
}

TEST_CASE("coupled RMS matches the linear coefficients") {
    ProcessSpec lin = poly_spec(1.5, 100);
    const long reps = 30000;
    for (int l : {1, 3, 7}) {
        double acc = 0;
        for (long r = 0; r < reps; ++r) {
            const auto pair = generate_coupled(lin, l, l, CouplingMode::single_swap,
                                               key_for(7, (std::uint64_t)l, (std::uint64_t)r));
            const double d = pair.x - pair.x_prime;
            acc += d * d;
        }
        // E (X - X')^2 = 2 a_l^2
        const double a_l = std::pow(1.0 + l, -1.5);
        CHECK(std::sqrt(acc / (double)reps) ==
              doctest::Approx(std::sqrt(2.0) * a_l).epsilon(0.05));
    }
}

TEST_CASE("coupling marginals are stationary draws") {
    // x' of a lag-1 coupled pair must follow the marginal law N(0, gamma(0))
    const ProcessSpec spec = ar1_spec(0.5);
    const double sd = std::sqrt(4.0 / 3.0);
    const long reps = 20000;
    std::vector<double> xs(reps);
    for (long r = 0; r < reps; ++r) {
        const auto pair =
            generate_coupled(spec, 1, 1, CouplingMode::tail_swap, key_for(8, 2, (std::uint64_t)r));
        xs[r] = pair.x_prime / sd;
    }
    std::sort(xs.begin(), xs.end());
    CHECK(ks_distance({xs, 0, 0}, GaussianRef{1.0}) < 0.015);
}

TEST_CASE("garch squares average to the unconditional variance") {
    ProcessSpec g;
    g.cls = ProcessClass::garch;
    g.garch_mu = 0.1;
    g.garch_alpha = {0.2};
    g.garch_beta = {0.3};
    const long n = 1000000;
    std::vector<double> buf(n);
    generate_path_into(g, n, key_for(9), 0.0, buf);
    double sumsq = 0, dot = 0, sum = 0;
    for (long i = 0; i < n; ++i) {
        sum += buf[i];
        sumsq += buf[i] * buf[i];
        if (i > 0) dot += buf[i] * buf[i - 1];
    }
    // E Y^2 = mu / (1 - alpha - beta) = 0.2
    CHECK(sumsq / (double)n == doctest::Approx(0.2).epsilon(0.02));
    // martingale differences: mean and raw autocorrelation vanish
    CHECK(std::abs(sum / (double)n) < 0.003);
    CHECK(std::abs(dot / sumsq) < 0.005);
}

TEST_CASE("ou discretization has the right stationary law") {
    ProcessSpec ou;
    ou.cls = ProcessClass::ou_sde;
    ou.ou_theta = 1.0;
    ou.ou_sigma = 1.0;
    ou.ou_delta = 0.5;
    const auto path = generate_path(ou, 1000000, key_for(10));
    const auto g = empirical_autocov(path.values, 1);
    // exact transition noise (sigma^2/theta)(1 - e^{-2 theta delta}):
    // var = sigma^2/theta, corr(1) = e^{-theta delta}
    CHECK(g[0] == doctest::Approx(1.0).epsilon(0.02));
    CHECK(g[1] / g[0] == doctest::Approx(std::exp(-0.5)).epsilon(0.02));

    ou.ou_delta = 10.0;  // near-iid sampling
    const auto fast = generate_path(ou, 200000, key_for(11));
    const auto gf = empirical_autocov(fast.values, 1);
    CHECK(std::abs(gf[1] / gf[0]) < 0.01);
}

TEST_CASE("matrix product increments collapse to log(2c) as the noise vanishes") {
    ProcessSpec pm;
    pm.cls = ProcessClass::positive_matrix_product;
    pm.pm_mu_log = 0.3;
    pm.pm_s_log = 1e-12;
    std::vector<double> buf(100);
    generate_path_into(pm, 100, key_for(12), 0.0, buf);
    for (double v : buf) CHECK(v == doctest::Approx(std::log(2.0) + 0.3).epsilon(1e-9));
}

TEST_CASE("gl2 walk with vanishing stretch emits zero log-norm increments") {
    ProcessSpec gl;
    gl.cls = ProcessClass::gl2_random_walk;
    gl.gl2_tau = 1e-12;
    std::vector<double> buf(100);
    generate_path_into(gl, 100, key_for(13), 0.0, buf);
    for (double v : buf) CHECK(std::abs(v) < 1e-9);
}

TEST_CASE("polynomial tails keep h^{2q-1} gamma(h) in check") {
    // empirical autocovariance agrees with the analytic one deep in the tail
    ProcessSpec lin = poly_spec(1.5, 10000);
    const auto c = ma_coefficients(lin);
    const long n = 4000000;
    std::vector<double> buf(n);
    generate_path_into(lin, n, key_for(14), 0.0, buf);
    const auto g = empirical_autocov(buf, 100);
    double gsq = 0;
    for (int h = 0; h <= 100; ++h) {
        const double a = gamma_linear(c, h);
        gsq += a * a;
    }
    const double sd = std::sqrt(4.0 * gsq / (double)n);  // crude long-run bound
    for (int h : {1, 5, 20, 60, 100}) {
        CHECK(std::abs(g[h] - gamma_linear(c, h)) < 6.0 * sd);
        // analytic sanity for the decay exponent itself
        if (h >= 5)
            CHECK(gamma_linear(c, h) * std::pow((double)h, 2.0) <
                  10.0 * gamma_linear(c, 5) * 25.0);
    }
}

TEST_CASE("path halves agree for every recursive class") {
    for (const ProcessSpec& spec : {ar1_spec(0.5), poly_spec(1.5, 2000)}) {
        const long n = 200000;
        const auto path = generate_path(spec, n, key_for(15, spec_hash(spec) & 0xff));
        double m1 = 0, m2 = 0, v = 0;
        for (long i = 0; i < n / 2; ++i) m1 += path.values[i];
        for (long i = n / 2; i < n; ++i) m2 += path.values[i];
        for (double x : path.values) v += x * x;
        m1 /= (double)(n / 2);
        m2 /= (double)(n / 2);
        v /= (double)n;
        const double se = std::sqrt(v / (double)(n / 2));
        CHECK(std::abs(m1 - m2) < 8.0 * se);  // dependence inflates the naive se
    }
}

TEST_CASE("calibrated centering agrees with the analytic constant") {
    ProcessSpec spec = ar1_spec(0.5);
    spec.functional = centered_square_functional();
    const double analytic = functional_center(spec);
    spec.functional.centering = Centering::calibrated;
    CalibrationCache cache;
    const double calibrated = calibrate_center(spec, 400000, &cache);
    CHECK(calibrated == doctest::Approx(analytic).epsilon(0.02));
    // second call is served from the cache, bit-identical
    CHECK(calibrate_center(spec, 400000, &cache) == calibrated);
}

TEST_CASE("generate_path is deterministic in the key and centered") {
    const ProcessSpec spec = ar1_spec(0.5);
    const auto a = generate_path(spec, 500, key_for(16, 1, 2));
    const auto b = generate_path(spec, 500, key_for(16, 1, 2));
    CHECK(a.values == b.values);
    const auto c = generate_path(spec, 500, key_for(16, 1, 3));
    CHECK(a.values != c.values);
}
