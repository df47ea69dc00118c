#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "selfnorm/gaussian.hpp"
#include "selfnorm/metrics.hpp"
#include "selfnorm/rng.hpp"

using namespace selfnorm;

namespace {

EcdfSample make(const std::vector<double>& sorted, long ni = 0, long pi = 0) {
    return EcdfSample{std::span<const double>(sorted), ni, pi};
}

}  // namespace

TEST_CASE("point mass at zero against the standard normal") {
    const std::vector<double> x = {0.0};
    CHECK(ks_distance(make(x), GaussianRef{1.0}) == doctest::Approx(0.5).epsilon(1e-12));
    // E|Z| = sqrt(2/pi)
    CHECK(w1_distance(make(x), GaussianRef{1.0}) ==
          doctest::Approx(0.7978845608028654).epsilon(1e-9));
}

TEST_CASE("symmetric two-point sample") {
    const std::vector<double> x = {-1.0, 1.0};
    // sup gap is Phi(1) - 1/2 = 0.34134...
    CHECK(ks_distance(make(x), GaussianRef{1.0}) ==
          doctest::Approx(0.3413447460685429).epsilon(1e-9));
}

TEST_CASE("lq with q = 1 matches w1") {
    const std::vector<double> x = {-0.7, 0.1, 0.4, 2.3};
    const double w1 = w1_distance(make(x), GaussianRef{1.0});
    const double l1 = lq_distance(make(x), GaussianRef{1.0}, 1.0);
    CHECK(l1 == doctest::Approx(w1).epsilon(1e-8));
}

TEST_CASE("lq at the point mass decreases in q") {
    const std::vector<double> x = {0.0};
    double prev = 1e300;
    for (double q : {1.0, 1.5, 2.0, 3.0, 4.0}) {
        const double v = lq_distance(make(x), GaussianRef{1.0}, q);
        CHECK(v > 0.0);
        CHECK(v < prev);
        prev = v;
    }
    // independently integrated oracle for q = 2
    CHECK(lq_distance(make(x), GaussianRef{1.0}, 2.0) ==
          doctest::Approx(0.23369497725510907).epsilon(1e-8));
}

TEST_CASE("scale_ratio rescales distances exactly") {
    const std::vector<double> x = {0.0};
    // KS is scale invariant for a mass at the center.
    CHECK(ks_distance(make(x), GaussianRef{2.0}) == doctest::Approx(0.5).epsilon(1e-12));
    // W1 against N(0, 1/4) halves the transport cost.
    CHECK(w1_distance(make(x), GaussianRef{2.0}) ==
          doctest::Approx(0.5 * 0.7978845608028654).epsilon(1e-9));
}

TEST_CASE("exact gaussian quantile sample is nearly optimal") {
    const int n = 1000;
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = normal_quantile((i + 0.5) / n);
    CHECK(ks_distance(make(x), GaussianRef{1.0}) < 0.6 / n * 1.2 + 1e-3);
    CHECK(w1_distance(make(x), GaussianRef{1.0}) < 0.002);
    CHECK(lq_distance(make(x), GaussianRef{1.0}, 2.0) < 0.002);
}

TEST_CASE("mass at infinity counts toward KS and breaks W1") {
    const std::vector<double> x = {0.0};
    // one third of the mass escapes to -inf: F_n jumps to 1/3 at -inf already
    const double d = ks_distance(make(x, 1, 1), GaussianRef{1.0});
    CHECK(d == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK_THROWS_AS((void)w1_distance(make(x, 1, 0), GaussianRef{1.0}), std::invalid_argument);
    CHECK_THROWS_AS((void)lq_distance(make(x, 0, 1), GaussianRef{1.0}, 2.0),
                    std::invalid_argument);
}

TEST_CASE("weighted variants reduce to the plain ones under unit weights") {
    const std::vector<double> x = {-1.3, -0.2, 0.5, 0.5, 1.9};
    const std::vector<double> w(x.size(), 1.0);
    const GaussianRef ref{1.0};
    CHECK(ks_distance_weighted(x, w, 0, 0, ref) ==
          doctest::Approx(ks_distance(make(x), ref)).epsilon(1e-12));
    CHECK(w1_distance_weighted(x, w, ref) ==
          doctest::Approx(w1_distance(make(x), ref)).epsilon(1e-10));
    CHECK(lq_distance_weighted(x, w, ref, 2.0) ==
          doctest::Approx(lq_distance(make(x), ref, 2.0)).epsilon(1e-8));
}

TEST_CASE("a large iid gaussian sample is close in every metric") {
    StreamKey key;
    key.master_seed = 5;
    Stream s(key);
    const int n = 100000;
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = s.normal();
    std::sort(x.begin(), x.end());
    CHECK(ks_distance(make(x), GaussianRef{1.0}) < 0.006);
    CHECK(w1_distance(make(x), GaussianRef{1.0}) < 0.01);
    CHECK(lq_distance(make(x), GaussianRef{1.0}, 1.5) < 0.01);
}

TEST_CASE("duplicate atoms merge into one jump") {
    const std::vector<double> x = {0.3, 0.3, 0.3};
    CHECK(ks_distance(make(x), GaussianRef{1.0}) ==
          doctest::Approx(normal_cdf(0.3)).epsilon(1e-12));
}

TEST_CASE("lq rejects q below one") {
    const std::vector<double> x = {0.0};
    CHECK_THROWS_AS((void)lq_distance(make(x), GaussianRef{1.0}, 0.5), std::invalid_argument);
}
