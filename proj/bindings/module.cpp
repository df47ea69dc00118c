#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <optional>

#include "selfnorm/analytic.hpp"
#include "selfnorm/config.hpp"
#include "selfnorm/depmeasure.hpp"
#include "selfnorm/gaussian.hpp"
#include "selfnorm/lrv.hpp"
#include "selfnorm/metrics.hpp"
#include "selfnorm/montecarlo.hpp"
#include "selfnorm/processes.hpp"

namespace py = pybind11;
using namespace selfnorm;

namespace {

py::dict report_to_dict(const DistanceReport& r) {
    py::dict d;
    d["n"] = r.n;
    d["metric"] = metric_label(r.metric, r.q);
    d["estimate"] = r.estimate;
    d["stderr"] = r.mc_stderr;
    d["reps"] = r.reps;
    d["b"] = r.b;
    d["rule"] = r.rule;
    d["reference"] = r.reference;
    d["degenerate_count"] = r.degenerate_count;
    return d;
}

py::dict dep_to_dict(const DepEstimate& e) {
    py::dict d;
    d["lag"] = e.lag;
    d["p"] = e.p;
    d["estimate"] = e.value;
    d["stderr"] = e.stderr_;
    d["reps"] = e.reps;
    return d;
}

}  // namespace

PYBIND11_MODULE(_selfnorm, m) {
    m.doc() = "Self-normalized partial-sum Monte Carlo laboratory (C++ core)";

    m.def("normal_cdf", &normal_cdf, py::arg("x"));
    m.def("normal_quantile", &normal_quantile, py::arg("u"));

    m.def(
        "generate_path",
        [](const std::string& process_json, long n, std::uint64_t master_seed,
           std::uint64_t experiment_id, std::uint64_t replication) {
            const ProcessSpec spec = parse_process_text(process_json);
            StreamKey key;
            key.master_seed = master_seed;
            key.experiment_id = experiment_id;
            key.replication_index = replication;
            key.role = StreamRole::path;
            return generate_path(spec, n, key).values;
        },
        py::arg("process_json"), py::arg("n"), py::arg("master_seed"),
        py::arg("experiment_id") = 0, py::arg("replication") = 0,
        "Simulate X_1..X_n for a process described as a JSON object");

    m.def(
        "autocov",
        [](const std::vector<double>& x, int max_lag) {
            return empirical_autocov(std::span<const double>(x), max_lag);
        },
        py::arg("x"), py::arg("max_lag"));

    m.def(
        "lrv_estimate",
        [](const std::vector<double>& x, int b) {
            return lrv_estimate(std::span<const double>(x), b).sigma_sq;
        },
        py::arg("x"), py::arg("b"), "Rectangular lag-window long-run variance estimate");

    m.def(
        "bandwidth",
        [](const std::string& kind, long n, int b, double a, double beta, double scale, bool cap) {
            BandwidthRule rule;
            if (kind == "fixed") rule.kind = BandwidthKind::fixed;
            else if (kind == "oversmooth_power") rule.kind = BandwidthKind::oversmooth_power;
            else if (kind == "oversmooth_quarter") rule.kind = BandwidthKind::oversmooth_quarter;
            else if (kind == "mse_optimal") rule.kind = BandwidthKind::mse_optimal;
            else throw std::invalid_argument("unknown bandwidth rule kind: " + kind);
            rule.fixed_b = b;
            rule.a_frak = a;
            rule.beta = beta;
            rule.scale = scale;
            rule.cap_enabled = cap;
            return bandwidth(rule, n);
        },
        py::arg("kind"), py::arg("n"), py::arg("b") = 1, py::arg("a") = 3.0,
        py::arg("beta") = 1.0, py::arg("scale") = 1.0, py::arg("cap") = false);

    m.def(
        "studentize",
        [](const std::vector<double>& x, int b, std::optional<double> c_tau) -> py::object {
            const std::span<const double> s(x);
            if (c_tau) return py::float_(studentize_truncated(s, b, TruncationRule{*c_tau}));
            const auto t = studentize(s, b);
            if (!t) return py::none();
            return py::float_(*t);
        },
        py::arg("x"), py::arg("b"), py::arg("c_tau") = py::none(),
        "Studentized statistic; None when the variance estimate is non-positive "
        "and no truncation constant is given");

    m.def(
        "ks_distance",
        [](std::vector<double> sample, double scale_ratio, long neg_inf, long pos_inf) {
            std::sort(sample.begin(), sample.end());
            return ks_distance({sample, neg_inf, pos_inf}, GaussianRef{scale_ratio});
        },
        py::arg("sample"), py::arg("scale_ratio") = 1.0, py::arg("neg_inf") = 0,
        py::arg("pos_inf") = 0);

    m.def(
        "w1_distance",
        [](std::vector<double> sample, double scale_ratio) {
            std::sort(sample.begin(), sample.end());
            return w1_distance({sample, 0, 0}, GaussianRef{scale_ratio});
        },
        py::arg("sample"), py::arg("scale_ratio") = 1.0);

    m.def(
        "lq_distance",
        [](std::vector<double> sample, double q, double scale_ratio) {
            std::sort(sample.begin(), sample.end());
            return lq_distance({sample, 0, 0}, GaussianRef{scale_ratio}, q);
        },
        py::arg("sample"), py::arg("q"), py::arg("scale_ratio") = 1.0);

    m.def(
        "theta_hat",
        [](const std::string& process_json, int lag, double p, long reps,
           std::uint64_t master_seed) {
            return dep_to_dict(theta_hat(parse_process_text(process_json), lag, p, reps,
                                         master_seed));
        },
        py::arg("process_json"), py::arg("lag"), py::arg("p") = 2.0, py::arg("reps") = 10000,
        py::arg("master_seed") = 1);

    m.def(
        "lambda_hat",
        [](const std::string& process_json, int lag, double p, long reps,
           std::uint64_t master_seed) {
            return dep_to_dict(lambda_hat(parse_process_text(process_json), lag, p, reps,
                                          master_seed));
        },
        py::arg("process_json"), py::arg("lag"), py::arg("p") = 2.0, py::arg("reps") = 10000,
        py::arg("master_seed") = 1);

    m.def(
        "run_experiment",
        [](const std::string& config_json) {
            const CliConfig cfg = parse_config_text(config_json, ConfigKind::simulate);
            const auto reports = run_experiment(cfg.plan);
            py::list out;
            for (const auto& r : reports) out.append(report_to_dict(r));
            return out;
        },
        py::arg("config_json"),
        "Run a simulate-style plan given as JSON text; returns one dict per (n, metric)");

    m.def(
        "fit_rate",
        [](const std::vector<long>& ns, const std::vector<double>& estimates) {
            if (ns.size() != estimates.size())
                throw std::invalid_argument("fit_rate: length mismatch");
            std::vector<DistanceReport> reports(ns.size());
            for (std::size_t i = 0; i < ns.size(); ++i) {
                reports[i].n = ns[i];
                reports[i].estimate = estimates[i];
            }
            const RateFit fit = fit_rate(reports);
            py::dict d;
            d["slope"] = fit.slope;
            d["intercept"] = fit.intercept;
            d["stderr_slope"] = fit.stderr_slope;
            d["r_squared"] = fit.r_squared;
            d["points_used"] = fit.points_used;
            return d;
        },
        py::arg("n"), py::arg("estimates"), "OLS rate fit of log(estimate) on log(n)");
}
