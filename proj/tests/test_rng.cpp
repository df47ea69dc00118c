#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "selfnorm/gaussian.hpp"
#include "selfnorm/metrics.hpp"
#include "selfnorm/rng.hpp"

using namespace selfnorm;

TEST_CASE("equal keys reproduce the same stream") {
    StreamKey key;
    key.master_seed = 42;
    key.experiment_id = 7;
    key.replication_index = 123;
    key.role = StreamRole::path;
    Stream a(key);
    Stream b(key);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("changing any key field changes the stream quickly") {
    StreamKey base;
    base.master_seed = 42;
    base.experiment_id = 7;
    base.replication_index = 123;

    auto differs_soon = [&](const StreamKey& other) {
        Stream a(base);
        Stream b(other);
        for (int i = 0; i < 16; ++i)
            if (a.next_u64() != b.next_u64()) return true;
        return false;
    };

    StreamKey k1 = base;
    k1.master_seed = 43;
    CHECK(differs_soon(k1));

    StreamKey k2 = base;
    k2.experiment_id = 8;
    CHECK(differs_soon(k2));

    CHECK(differs_soon(base.with_replication(124)));
    CHECK(differs_soon(base.with_role(StreamRole::coupling)));
}

TEST_CASE("uniform53 stays strictly inside (0,1) with the right moments") {
    StreamKey key;
    key.master_seed = 1;
    Stream s(key);
    const long n = 2000000;
    double sum = 0, sumsq = 0;
    for (long i = 0; i < n; ++i) {
        const double u = s.uniform53();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
        sum += u;
        sumsq += u * u;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean - 0.5) < 0.001);
    CHECK(std::abs(var - 1.0 / 12.0) < 0.001);
}

TEST_CASE("normal draws have unit variance and pass a KS check") {
    StreamKey key;
    key.master_seed = 2;
    key.role = StreamRole::auxiliary;
    Stream s(key);
    const long n = 1000000;
    std::vector<double> x(n);
    double sum = 0, sumsq = 0;
    for (long i = 0; i < n; ++i) {
        x[i] = s.normal();
        sum += x[i];
        sumsq += x[i] * x[i];
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean) < 0.005);
    CHECK(var == doctest::Approx(1.0).epsilon(0.005));

    std::sort(x.begin(), x.end());
    CHECK(ks_distance({x, 0, 0}, GaussianRef{1.0}) < 0.002);
}

TEST_CASE("streams with adjacent replication indices are decorrelated") {
    StreamKey key;
    key.master_seed = 9;
    Stream a(key.with_replication(0));
    Stream b(key.with_replication(1));
    const long n = 200000;
    double dot = 0;
    for (long i = 0; i < n; ++i) dot += a.normal() * b.normal();
    CHECK(std::abs(dot / n) < 0.01);
}

TEST_CASE("normal_cdf and normal_quantile agree on spot values") {
    CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(normal_cdf(1.0) == doctest::Approx(0.841344746068543).epsilon(1e-12));
    CHECK(normal_cdf(-1.0) == doctest::Approx(0.158655253931457).epsilon(1e-12));
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-9));
    for (double u : {1e-10, 0.001, 0.3, 0.5, 0.7, 0.999, 1 - 1e-10})
        CHECK(normal_cdf(normal_quantile(u)) == doctest::Approx(u).epsilon(1e-9));
}
