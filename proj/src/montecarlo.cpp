#include "selfnorm/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "selfnorm/analytic.hpp"

#ifndef SELFNORM_BUILD_ID
#define SELFNORM_BUILD_ID "untracked"
#endif

namespace selfnorm {

std::string build_id() { return SELFNORM_BUILD_ID; }

std::string rule_label(const BandwidthRule& rule) {
    char buf[96];
    switch (rule.kind) {
        case BandwidthKind::fixed:
            std::snprintf(buf, sizeof buf, "fixed(%d)", rule.fixed_b);
            break;
        case BandwidthKind::oversmooth_power:
            std::snprintf(buf, sizeof buf, "oversmooth_power(a=%g,scale=%g)", rule.a_frak,
                          rule.scale);
            break;
        case BandwidthKind::oversmooth_quarter:
            std::snprintf(buf, sizeof buf, "oversmooth_quarter");
            break;
        case BandwidthKind::mse_optimal:
            std::snprintf(buf, sizeof buf, "mse_optimal(beta=%g)", rule.beta);
            break;
    }
    std::string s = buf;
    if (rule.cap_enabled) s += "+cap";
    return s;
}

std::string metric_label(Metric m, double q) {
    switch (m) {
        case Metric::ks: return "ks";
        case Metric::w1: return "w1";
        case Metric::lq: {
            char buf[32];
            std::snprintf(buf, sizeof buf, "lq(%g)", q);
            return buf;
        }
    }
    return "?";
}

std::string reference_label(Reference r) {
    return r == Reference::pivotal ? "pivotal" : "corrected";
}

namespace {

struct Variant {
    BandwidthRule rule;
    Reference reference = Reference::pivotal;
    std::optional<TruncationRule> trunc;
};

// Studentized values in replication order, per grid point. +-inf marks
// replications with non-positive variance estimate (non-truncated only).
using ValueMatrix = std::vector<std::vector<double>>;

void check_common(const ProcessSpec& proc, const std::vector<long>& n_grid, long reps) {
    validate(proc);
    if (n_grid.empty()) throw std::invalid_argument("plan: empty n_grid");
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
        if (n_grid[i] < 8) throw std::invalid_argument("plan: n_grid entries must be >= 8");
        if (i > 0 && n_grid[i] <= n_grid[i - 1])
            throw std::invalid_argument("plan: n_grid must be strictly increasing");
    }
    if (reps < 1) throw std::invalid_argument("plan: reps must be >= 1");
    if (reps < static_cast<long>(50.0 * std::sqrt(static_cast<double>(n_grid.back()))))
        std::cerr << "warning: reps < 50*sqrt(max n); metric noise may bias rate slopes toward 0\n";
}

void check_variant(const ProcessSpec& proc, const Variant& v, const MetricSel* metric) {
    if (v.reference == Reference::corrected) {
        try {
            (void)ma_coefficients(proc);
        } catch (const std::invalid_argument&) {
            throw std::invalid_argument(
                "corrected reference unavailable: this process class has no linear MA "
                "representation for analytic sigma_b/sigma; use the pivotal reference");
        }
    }
    if (metric && metric->metric != Metric::ks && !v.trunc)
        throw std::invalid_argument(
            "w1/lq metrics require truncated studentization (set trunc): the raw statistic "
            "can be degenerate, which integral metrics cannot represent");
}

int resolve_threads(int threads) {
    if (threads > 0) return threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Run every variant on shared replication paths: one path of length max(n)
/// per replication, evaluated on each n-prefix under each variant's rule.
std::vector<ValueMatrix> run_core(const ProcessSpec& proc, const std::vector<long>& n_grid,
                                  long reps, const std::vector<Variant>& vars,
                                  std::uint64_t master_seed, std::uint64_t experiment_id,
                                  int threads, CalibrationCache* cache) {
    const std::size_t ng = n_grid.size();
    const std::size_t nv = vars.size();
    const long n_max = n_grid.back();

    std::vector<std::vector<int>> bw(nv, std::vector<int>(ng));
    for (std::size_t vi = 0; vi < nv; ++vi)
        for (std::size_t ni = 0; ni < ng; ++ni) bw[vi][ni] = bandwidth(vars[vi].rule, n_grid[ni]);

    const double center = functional_center(proc, cache);

    std::vector<ValueMatrix> out(nv, ValueMatrix(ng, std::vector<double>(reps)));
    const double inf = std::numeric_limits<double>::infinity();

    auto work = [&](long r0, long r1) {
        std::vector<double> x(n_max);
        StreamKey key;
        key.master_seed = master_seed;
        key.experiment_id = experiment_id;
        key.role = StreamRole::path;
        for (long r = r0; r < r1; ++r) {
            key.replication_index = static_cast<std::uint64_t>(r);
            generate_path_into(proc, n_max, key, center, x);
            for (std::size_t ni = 0; ni < ng; ++ni) {
                const long n = n_grid[ni];
                const std::span<const double> pre(x.data(), static_cast<std::size_t>(n));
                for (std::size_t vi = 0; vi < nv; ++vi) {
                    double t;
                    if (vars[vi].trunc) {
                        t = studentize_truncated(pre, bw[vi][ni], *vars[vi].trunc);
                    } else {
                        const auto o = studentize(pre, bw[vi][ni]);
                        if (o) {
                            t = *o;
                        } else {
                            const double sn = std::accumulate(pre.begin(), pre.end(), 0.0);
                            t = sn < 0.0 ? -inf : inf;
                        }
                    }
                    out[vi][ni][r] = t;
                }
            }
        }
    };

    const int nt = std::min<long>(resolve_threads(threads), reps);
    if (nt <= 1) {
        work(0, reps);
    } else {
        std::vector<std::thread> pool;
        const long chunk = (reps + nt - 1) / nt;
        for (int i = 0; i < nt; ++i) {
            const long r0 = i * chunk;
            const long r1 = std::min(reps, r0 + chunk);
            if (r0 < r1) pool.emplace_back(work, r0, r1);
        }
        for (auto& th : pool) th.join();
    }
    return out;
}

struct SortedValues {
    std::vector<double> finite;  // ascending
    std::vector<long> orig;      // replication index of each finite value
    std::vector<long> neg_reps, pos_reps;  // degenerate replication indices
};

SortedValues sort_values(const std::vector<double>& t) {
    SortedValues sv;
    sv.finite.reserve(t.size());
    sv.orig.reserve(t.size());
    std::vector<long> idx;
    idx.reserve(t.size());
    for (long r = 0; r < static_cast<long>(t.size()); ++r) {
        if (std::isfinite(t[r])) {
            idx.push_back(r);
        } else if (t[r] < 0) {
            sv.neg_reps.push_back(r);
        } else {
            sv.pos_reps.push_back(r);
        }
    }
    std::sort(idx.begin(), idx.end(),
              [&](long a, long b) { return t[a] < t[b] || (t[a] == t[b] && a < b); });
    for (long r : idx) {
        sv.finite.push_back(t[r]);
        sv.orig.push_back(r);
    }
    return sv;
}

double scale_ratio_for(const ProcessSpec& proc, Reference ref, int b) {
    if (ref == Reference::pivotal) return 1.0;
    const auto c = ma_coefficients(proc);
    return std::sqrt(sigma_b_sq(c, b) / sigma_sq(c));
}

double metric_value(const SortedValues& sv, const MetricSel& sel, GaussianRef ref) {
    EcdfSample s;
    s.finite = sv.finite;
    s.neg_inf = static_cast<long>(sv.neg_reps.size());
    s.pos_inf = static_cast<long>(sv.pos_reps.size());
    switch (sel.metric) {
        case Metric::ks: return ks_distance(s, ref);
        case Metric::w1: return w1_distance(s, ref);
        case Metric::lq: return lq_distance(s, ref, sel.q);
    }
    return 0.0;
}

// Multinomial bootstrap weights over replication indices; one auxiliary
// stream per resample, shared across n and variants for joint fits.
void bootstrap_weights(std::uint64_t master_seed, std::uint64_t experiment_id, long resample,
                       long reps, std::vector<double>& w) {
    StreamKey key;
    key.master_seed = master_seed;
    key.experiment_id = experiment_id ^ 0x626F6F7473747261ull;  // bootstrap stream tag
    key.replication_index = static_cast<std::uint64_t>(resample);
    key.role = StreamRole::auxiliary;
    Stream st = derive_stream(key);
    w.assign(reps, 0.0);
    for (long i = 0; i < reps; ++i) {
        const long j = std::min<long>(reps - 1, static_cast<long>(st.uniform53() * reps));
        w[j] += 1.0;
    }
}

double metric_value_weighted(const SortedValues& sv, const MetricSel& sel, GaussianRef ref,
                             const std::vector<double>& w) {
    std::vector<double> ws(sv.finite.size());
    for (std::size_t i = 0; i < ws.size(); ++i) ws[i] = w[sv.orig[i]];
    double neg = 0.0, pos = 0.0;
    for (long r : sv.neg_reps) neg += w[r];
    for (long r : sv.pos_reps) pos += w[r];
    switch (sel.metric) {
        case Metric::ks:
            return ks_distance_weighted(sv.finite, ws, neg, pos, ref);
        case Metric::w1:
            return w1_distance_weighted(sv.finite, ws, ref);
        case Metric::lq:
            return lq_distance_weighted(sv.finite, ws, ref, sel.q);
    }
    return 0.0;
}

RateFit fit_loglog(const std::vector<double>& ns, const std::vector<double>& est) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        if (est[i] > 0.0) {
            lx.push_back(std::log(ns[i]));
            ly.push_back(std::log(est[i]));
        }
    }
    const int n = static_cast<int>(lx.size());
    if (n < 4) throw std::invalid_argument("fit_rate: fewer than 4 positive estimates");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    const double sxx_c = sxx - sx * sx / n;
    const double slope = (sxy - sx * sy / n) / sxx_c;
    const double icpt = (sy - slope * sx) / n;
    double ssr = 0, sst = 0;
    const double ybar = sy / n;
    for (int i = 0; i < n; ++i) {
        const double e = ly[i] - (icpt + slope * lx[i]);
        ssr += e * e;
        sst += (ly[i] - ybar) * (ly[i] - ybar);
    }
    RateFit fit;
    fit.slope = slope;
    fit.intercept = icpt;
    fit.stderr_slope = n > 2 ? std::sqrt(ssr / (n - 2) / sxx_c) : 0.0;
    fit.r_squared = sst > 0.0 ? 1.0 - ssr / sst : 1.0;
    fit.points_used = n;
    return fit;
}

// Slope of log est on log n without the full fit bookkeeping (bootstrap path).
double slope_only(const std::vector<double>& ln, const std::vector<double>& est) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < ln.size(); ++i) {
        if (!(est[i] > 0.0)) continue;
        const double y = std::log(est[i]);
        sx += ln[i];
        sy += y;
        sxx += ln[i] * ln[i];
        sxy += ln[i] * y;
        ++n;
    }
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    return (sxy - sx * sy / n) / (sxx - sx * sx / n);
}

std::vector<DistanceReport> variant_reports(
    const ExperimentPlan& plan, const Variant& var, const std::vector<MetricSel>& metrics,
    const std::vector<SortedValues>& sorted, const std::vector<int>& bs) {
    std::vector<DistanceReport> reports;
    std::vector<double> w;
    for (std::size_t ni = 0; ni < plan.n_grid.size(); ++ni) {
        const double s = scale_ratio_for(plan.process, var.reference, bs[ni]);
        for (const auto& sel : metrics) {
            DistanceReport rep;
            rep.n = plan.n_grid[ni];
            rep.b = bs[ni];
            rep.metric = sel.metric;
            rep.q = sel.q;
            rep.reps = plan.reps;
            rep.degenerate_count = static_cast<long>(sorted[ni].neg_reps.size() +
                                                     sorted[ni].pos_reps.size());
            rep.scale_ratio = s;
            rep.rule = rule_label(var.rule);
            rep.reference = reference_label(var.reference);
            rep.estimate = metric_value(sorted[ni], sel, GaussianRef{s});
            if (sel.metric == Metric::ks) {
                rep.mc_stderr = 1.36 / std::sqrt(static_cast<double>(plan.reps));
            } else {
                double sum = 0, sum_sq = 0;
                for (long bres = 0; bres < plan.bootstrap; ++bres) {
                    bootstrap_weights(plan.master_seed, plan.experiment_id, bres, plan.reps, w);
                    const double v = metric_value_weighted(sorted[ni], sel, GaussianRef{s}, w);
                    sum += v;
                    sum_sq += v * v;
                }
                const double m = sum / plan.bootstrap;
                rep.mc_stderr = std::sqrt(std::max(0.0, sum_sq / plan.bootstrap - m * m));
            }
            reports.push_back(std::move(rep));
        }
    }
    return reports;
}

}  // namespace

void validate_plan(const ExperimentPlan& plan) {
    check_common(plan.process, plan.n_grid, plan.reps);
    Variant v{plan.rule, plan.reference, plan.trunc};
    if (plan.metrics.empty()) throw std::invalid_argument("plan: no metrics selected");
    for (const auto& sel : plan.metrics) {
        if (sel.metric == Metric::lq && !(sel.q >= 1.0))
            throw std::invalid_argument("plan: lq needs q >= 1");
        check_variant(plan.process, v, &sel);
    }
    if (plan.bootstrap < 2) throw std::invalid_argument("plan: bootstrap resamples must be >= 2");
    for (long n : plan.n_grid) (void)bandwidth(plan.rule, n);
}

std::vector<DistanceReport> run_experiment(const ExperimentPlan& plan, CalibrationCache* cache) {
    validate_plan(plan);
    const Variant var{plan.rule, plan.reference, plan.trunc};
    const auto values = run_core(plan.process, plan.n_grid, plan.reps, {var}, plan.master_seed,
                                 plan.experiment_id, plan.threads, cache);
    std::vector<int> bs(plan.n_grid.size());
    std::vector<SortedValues> sorted(plan.n_grid.size());
    for (std::size_t ni = 0; ni < plan.n_grid.size(); ++ni) {
        bs[ni] = bandwidth(plan.rule, plan.n_grid[ni]);
        sorted[ni] = sort_values(values[0][ni]);
    }
    return variant_reports(plan, var, plan.metrics, sorted, bs);
}

RateFit fit_rate(const std::vector<DistanceReport>& reports) {
    std::vector<double> ns, est;
    for (const auto& r : reports) {
        ns.push_back(static_cast<double>(r.n));
        est.push_back(r.estimate);
    }
    return fit_loglog(ns, est);
}

RuleComparison compare_rules(const ExperimentPlan& base, const std::vector<RuleVariant>& variants,
                             CalibrationCache* cache) {
    if (variants.size() < 2) throw std::invalid_argument("compare_rules: need >= 2 variants");
    check_common(base.process, base.n_grid, base.reps);
    std::vector<Variant> vars;
    for (const auto& rv : variants) {
        Variant v{rv.rule, rv.reference, rv.trunc};
        check_variant(base.process, v, &rv.metric);
        vars.push_back(v);
    }
    const auto values = run_core(base.process, base.n_grid, base.reps, vars, base.master_seed,
                                 base.experiment_id, base.threads, cache);

    const std::size_t ng = base.n_grid.size();
    const std::size_t nv = vars.size();
    RuleComparison cmp;
    std::vector<std::vector<SortedValues>> sorted(nv, std::vector<SortedValues>(ng));
    std::vector<std::vector<int>> bs(nv, std::vector<int>(ng));
    std::vector<std::vector<double>> scales(nv, std::vector<double>(ng));
    for (std::size_t vi = 0; vi < nv; ++vi) {
        for (std::size_t ni = 0; ni < ng; ++ni) {
            bs[vi][ni] = bandwidth(vars[vi].rule, base.n_grid[ni]);
            sorted[vi][ni] = sort_values(values[vi][ni]);
            scales[vi][ni] =
                scale_ratio_for(base.process, vars[vi].reference, bs[vi][ni]);
        }
        cmp.reports.push_back(
            variant_reports(base, vars[vi], {variants[vi].metric}, sorted[vi], bs[vi]));
        cmp.fits.push_back(fit_rate(cmp.reports.back()));
    }

    // Joint bootstrap over shared replications: one weight vector per
    // resample reused across variants, so slope differences see the common
    // path noise cancel.
    std::vector<double> ln(ng);
    for (std::size_t ni = 0; ni < ng; ++ni) ln[ni] = std::log(static_cast<double>(base.n_grid[ni]));
    std::vector<std::vector<double>> slopes(nv, std::vector<double>(base.bootstrap));
    std::vector<double> w, est(ng);
    for (long bres = 0; bres < base.bootstrap; ++bres) {
        bootstrap_weights(base.master_seed, base.experiment_id, bres, base.reps, w);
        for (std::size_t vi = 0; vi < nv; ++vi) {
            for (std::size_t ni = 0; ni < ng; ++ni)
                est[ni] = metric_value_weighted(sorted[vi][ni], variants[vi].metric,
                                                GaussianRef{scales[vi][ni]}, w);
            slopes[vi][bres] = slope_only(ln, est);
        }
    }
    for (std::size_t i = 0; i < nv; ++i) {
        for (std::size_t j = i + 1; j < nv; ++j) {
            SlopePair pr;
            pr.i = static_cast<int>(i);
            pr.j = static_cast<int>(j);
            pr.slope_diff = cmp.fits[i].slope - cmp.fits[j].slope;
            double sum = 0, sum_sq = 0;
            long cnt = 0;
            for (long bres = 0; bres < base.bootstrap; ++bres) {
                const double d = slopes[i][bres] - slopes[j][bres];
                if (!std::isfinite(d)) continue;
                sum += d;
                sum_sq += d * d;
                ++cnt;
            }
            if (cnt > 1) {
                const double m = sum / cnt;
                pr.joint_stderr = std::sqrt(std::max(0.0, sum_sq / cnt - m * m));
            }
            cmp.pairs.push_back(pr);
        }
    }
    return cmp;
}

std::string reports_to_csv(const std::vector<DistanceReport>& reports,
                           std::uint64_t master_seed) {
    std::ostringstream os;
    os << "# selfnorm results schema_version=1\n";
    os << "# master_seed=" << master_seed << " build=" << build_id() << "\n";
    os << "n,metric,estimate,stderr,reps,b,rule,reference,degenerate_count\n";
    char num[64];
    for (const auto& r : reports) {
        os << r.n << "," << metric_label(r.metric, r.q) << ",";
        std::snprintf(num, sizeof num, "%.12g", r.estimate);
        os << num << ",";
        std::snprintf(num, sizeof num, "%.12g", r.mc_stderr);
        os << num << "," << r.reps << "," << r.b << "," << r.rule << "," << r.reference << ","
           << r.degenerate_count << "\n";
    }
    return os.str();
}

}  // namespace selfnorm
