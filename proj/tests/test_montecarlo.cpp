#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "selfnorm/montecarlo.hpp"

using namespace selfnorm;

namespace {

ExperimentPlan base_plan() {
    ExperimentPlan plan;
    plan.process.cls = ProcessClass::ar1;
    plan.process.phi = 0.5;
    plan.n_grid = {256};
    plan.reps = 500;
    plan.rule.kind = BandwidthKind::oversmooth_power;
    plan.rule.a_frak = 3.0;
    plan.master_seed = 41;
    return plan;
}

std::vector<DistanceReport> fake_reports(const std::vector<long>& ns,
                                         const std::vector<double>& est) {
    std::vector<DistanceReport> out(ns.size());
    for (std::size_t i = 0; i < ns.size(); ++i) {
        out[i].n = ns[i];
        out[i].estimate = est[i];
    }
    return out;
}

}  // namespace

TEST_CASE("plan validation catches structural mistakes") {
    ExperimentPlan plan = base_plan();
    plan.n_grid = {256, 256};
    CHECK_THROWS_AS(validate_plan(plan), std::invalid_argument);

    plan = base_plan();
    plan.n_grid = {4};
    CHECK_THROWS_AS(validate_plan(plan), std::invalid_argument);

    plan = base_plan();
    plan.metrics = {MetricSel{Metric::w1, 2.0}};  // w1 needs truncation
    CHECK_THROWS_AS(validate_plan(plan), std::invalid_argument);
    plan.trunc = TruncationRule{2.0};
    validate_plan(plan);

    plan = base_plan();
    plan.process.cls = ProcessClass::garch;
    plan.process.garch_mu = 0.1;
    plan.process.garch_alpha = {0.1};
    plan.process.garch_beta = {0.2};
    plan.reference = Reference::corrected;
    try {
        validate_plan(plan);
        FAIL("garch has no linear representation for the corrected reference");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("pivotal") != std::string::npos);
    }
}

TEST_CASE("iid studentized statistic lands in the expected KS envelope") {
    ExperimentPlan plan = base_plan();
    plan.process.phi = 0.0;
    plan.rule.kind = BandwidthKind::fixed;
    plan.rule.fixed_b = 0;
    plan.reps = 100000;
    const auto reports = run_experiment(plan);
    REQUIRE(reports.size() == 1);
    CHECK(reports[0].n == 256);
    CHECK(reports[0].b == 0);
    // gaussian innovations make T nearly t-distributed, so the distance sits
    // just above the MC noise floor but well under the 3 n^{-1/2} envelope
    CHECK(reports[0].estimate > 0.001);
    CHECK(reports[0].estimate < 3.0 / 16.0);
    CHECK(reports[0].mc_stderr == doctest::Approx(1.36 / std::sqrt(100000.0)).epsilon(1e-9));
    CHECK(reports[0].degenerate_count < 100);
}

TEST_CASE("a single replication forces a large KS distance") {
    ExperimentPlan plan = base_plan();
    plan.reps = 2;  // minimum useful size
    const auto reports = run_experiment(plan);
    CHECK(reports[0].estimate >= 0.25);
}

TEST_CASE("results are byte-stable across thread counts") {
    ExperimentPlan plan = base_plan();
    plan.n_grid = {64, 128, 256};
    plan.reps = 400;
    plan.metrics = {MetricSel{Metric::ks, 2.0}, MetricSel{Metric::w1, 2.0}};
    plan.trunc = TruncationRule{2.0};
    plan.threads = 1;
    const auto csv1 = reports_to_csv(run_experiment(plan), plan.master_seed);
    plan.threads = 4;
    const auto csv4 = reports_to_csv(run_experiment(plan), plan.master_seed);
    plan.threads = 0;  // auto
    const auto csv0 = reports_to_csv(run_experiment(plan), plan.master_seed);
    CHECK(csv1 == csv4);
    CHECK(csv1 == csv0);
}

TEST_CASE("csv output has the fixed schema") {
    ExperimentPlan plan = base_plan();
    plan.reps = 100;
    const auto csv = reports_to_csv(run_experiment(plan), plan.master_seed);
    CHECK(csv.find("# selfnorm results schema_version=1") == 0);
    CHECK(csv.find("# master_seed=41") != std::string::npos);
    CHECK(csv.find("n,metric,estimate,stderr,reps,b,rule,reference,degenerate_count") !=
          std::string::npos);
    CHECK(csv.find("oversmooth_power") != std::string::npos);
    CHECK(csv.find("pivotal") != std::string::npos);
}

TEST_CASE("rate fitting recovers exact power laws") {
    const std::vector<long> ns = {256, 512, 1024, 2048, 4096};
    std::vector<double> est(ns.size());
    for (std::size_t i = 0; i < ns.size(); ++i) est[i] = 3.0 * std::pow((double)ns[i], -0.5);
    auto fit = fit_rate(fake_reports(ns, est));
    CHECK(fit.slope == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(fit.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-9));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.stderr_slope == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(fit.points_used == 5);

    for (std::size_t i = 0; i < ns.size(); ++i) est[i] = std::pow((double)ns[i], -1.0 / 3.0);
    fit = fit_rate(fake_reports(ns, est));
    CHECK(fit.slope == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("rate fitting drops nonpositive estimates and wants four points") {
    const std::vector<long> ns = {256, 512, 1024, 2048, 4096};
    std::vector<double> est = {0.5, 0.0, 0.25, -1.0, 0.125};
    CHECK_THROWS_AS((void)fit_rate(fake_reports(ns, est)), std::invalid_argument);
    est = {0.5, 0.4, 0.3, 0.2, -1.0};
    const auto fit = fit_rate(fake_reports(ns, est));
    CHECK(fit.points_used == 4);
}

TEST_CASE("identical variants yield a zero slope difference with zero spread") {
    ExperimentPlan plan = base_plan();
    plan.n_grid = {64, 128, 256, 512};
    plan.reps = 300;
    RuleVariant a;
    a.name = "one";
    a.rule = plan.rule;
    RuleVariant b = a;
    b.name = "two";
    const auto cmp = compare_rules(plan, {a, b});
    REQUIRE(cmp.fits.size() == 2);
    REQUIRE(cmp.pairs.size() == 1);
    CHECK(cmp.fits[0].slope == cmp.fits[1].slope);
    CHECK(cmp.pairs[0].slope_diff == 0.0);
    CHECK(cmp.pairs[0].joint_stderr == 0.0);
    // shared paths: per-variant reports see the same replications
    for (std::size_t i = 0; i < cmp.reports[0].size(); ++i)
        CHECK(cmp.reports[0][i].estimate == cmp.reports[1][i].estimate);
}

TEST_CASE("w1 and lq runs report bootstrap standard errors") {
    ExperimentPlan plan = base_plan();
    plan.reps = 2000;
    plan.trunc = TruncationRule{2.0};
    plan.metrics = {MetricSel{Metric::w1, 2.0}, MetricSel{Metric::lq, 1.5}};
    const auto reports = run_experiment(plan);
    REQUIRE(reports.size() == 2);
    for (const auto& r : reports) {
        CHECK(r.estimate > 0.0);
        CHECK(r.mc_stderr > 0.0);
        CHECK(r.mc_stderr < r.estimate);
        CHECK(r.degenerate_count == 0);  // truncation removes degeneracy
    }
    CHECK(metric_label(reports[1].metric, reports[1].q) == "lq(1.5)");
}

TEST_CASE("labels round-trip the configuration") {
    BandwidthRule r;
    r.kind = BandwidthKind::mse_optimal;
    r.beta = 1.0;
    CHECK(rule_label(r).find("mse_optimal") != std::string::npos);
    CHECK(metric_label(Metric::ks, 2.0) == "ks");
    CHECK(metric_label(Metric::w1, 2.0) == "w1");
    CHECK(reference_label(Reference::corrected) == "corrected");
}
