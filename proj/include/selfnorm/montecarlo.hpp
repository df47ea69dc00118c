#pragma once

#include <optional>
#include <string>
#include <vector>

#include "selfnorm/lrv.hpp"
#include "selfnorm/metrics.hpp"
#include "selfnorm/processes.hpp"

namespace selfnorm {

enum class Metric { ks, w1, lq };
enum class Reference { pivotal, corrected };

struct MetricSel {
    Metric metric = Metric::ks;
    double q = 2.0;  // lq only
};

struct ExperimentPlan {
    ProcessSpec process;
    std::vector<long> n_grid;
    long reps = 10000;
    BandwidthRule rule;
    std::vector<MetricSel> metrics = {MetricSel{}};
    Reference reference = Reference::pivotal;
    std::optional<TruncationRule> trunc;  // truncated studentization when set
    std::uint64_t master_seed = 1;
    std::uint64_t experiment_id = 0;
    int threads = 1;       // 0 = hardware concurrency
    long bootstrap = 200;  // resamples for w1/lq standard errors
};

struct DistanceReport {
    long n = 0;
    int b = 0;
    Metric metric = Metric::ks;
    double q = 2.0;
    double estimate = 0.0;
    double mc_stderr = 0.0;
    long reps = 0;
    long degenerate_count = 0;
    double scale_ratio = 1.0;
    std::string rule;
    std::string reference;
};

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_slope = 0.0;
    double r_squared = 0.0;
    int points_used = 0;
};

/// Throws std::invalid_argument on structural problems (non-increasing grid,
/// w1/lq without truncated studentization, corrected reference without a
/// linear representation, ...).
void validate_plan(const ExperimentPlan& plan);

/// Human-readable bandwidth rule label used in CSV output.
std::string rule_label(const BandwidthRule& rule);
std::string metric_label(Metric m, double q);
std::string reference_label(Reference r);

/// One report per (n, metric). Deterministic given master_seed, independent
/// of thread count.
std::vector<DistanceReport> run_experiment(const ExperimentPlan& plan,
                                           CalibrationCache* cache = nullptr);

/// OLS of log(estimate) on log(n). Nonpositive estimates are dropped;
/// needs >= 4 remaining points.
RateFit fit_rate(const std::vector<DistanceReport>& reports);

/// A full experiment variant sharing process, grid, reps and seeds with the
/// base plan, so replication paths are reused across variants.
struct RuleVariant {
    std::string name;
    BandwidthRule rule;
    Reference reference = Reference::pivotal;
    std::optional<TruncationRule> trunc;
    MetricSel metric;
};

struct SlopePair {
    int i = 0, j = 0;
    double slope_diff = 0.0;
    double joint_stderr = 0.0;
};

struct RuleComparison {
    std::vector<std::vector<DistanceReport>> reports;  // per variant
    std::vector<RateFit> fits;
    std::vector<SlopePair> pairs;  // all i < j
};

RuleComparison compare_rules(const ExperimentPlan& base, const std::vector<RuleVariant>& variants,
                             CalibrationCache* cache = nullptr);

/// CSV with fixed columns n, metric, estimate, stderr, reps, b, rule,
/// reference, degenerate_count; '#' header lines embed seed/build/schema.
std::string reports_to_csv(const std::vector<DistanceReport>& reports, std::uint64_t master_seed);

std::string build_id();

}  // namespace selfnorm
