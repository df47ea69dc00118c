#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include "../vendor/CLI11.hpp"
#include "../vendor/json.hpp"
#include "selfnorm/analytic.hpp"
#include "selfnorm/config.hpp"
#include "selfnorm/depmeasure.hpp"
#include "selfnorm/gaussian.hpp"
#include "selfnorm/montecarlo.hpp"
#include "selfnorm/selftest.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace selfnorm;

namespace {

struct CommonOpts {
    std::string config_path;
    int threads = -1;  // -1: not given
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string output;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool needs_config) {
    auto* c = cmd->add_option("--config", opts.config_path, "JSON config file");
    if (needs_config) c->required();
    cmd->add_option("--threads", opts.threads, "worker thread count (0 = auto)");
    cmd->add_option("--seed", opts.seed, "override master_seed")->each([&](const std::string&) {
        opts.seed_given = true;
    });
    cmd->add_option("--output", opts.output, "output directory (overrides config)");
}

int env_threads() {
    const char* env = std::getenv("SELFNORM_THREADS");
    if (!env) return 0;
    return std::atoi(env);
}

void apply_overrides(CliConfig& cfg, const CommonOpts& opts) {
    if (opts.threads >= 0)
        cfg.threads = opts.threads;
    else if (cfg.threads == 0)
        cfg.threads = env_threads();
    if (opts.seed_given) cfg.plan.master_seed = opts.seed;
    if (!opts.output.empty()) cfg.output_dir = opts.output;
    cfg.plan.threads = cfg.threads;
}

fs::path prepare_output(const CliConfig& cfg) {
    fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    return dir;
}

json fit_to_json(const RateFit& fit) {
    return json{{"slope", fit.slope},
                {"intercept", fit.intercept},
                {"stderr_slope", fit.stderr_slope},
                {"r_squared", fit.r_squared},
                {"points_used", fit.points_used}};
}

std::string dat_for_metric(const std::vector<DistanceReport>& reports, Metric m, double q) {
    std::ostringstream os;
    os << "# n estimate stderr b\n";
    os.precision(12);
    for (const auto& r : reports)
        if (r.metric == m && r.q == q)
            os << r.n << " " << r.estimate << " " << r.mc_stderr << " " << r.b << "\n";
    return os.str();
}

int cmd_simulate(const CommonOpts& opts) {
    CliConfig cfg = load_config(opts.config_path, ConfigKind::simulate);
    apply_overrides(cfg, opts);
    const fs::path dir = prepare_output(cfg);

    CalibrationCache cache((dir / "calibration_cache.txt").string());
    const auto reports = run_experiment(cfg.plan, &cache);
    atomic_write((dir / "results.csv").string(), reports_to_csv(reports, cfg.plan.master_seed));

    json summary;
    summary["schema_version"] = 1;
    summary["master_seed"] = cfg.plan.master_seed;
    summary["build"] = build_id();
    summary["rule"] = rule_label(cfg.plan.rule);
    summary["reference"] = reference_label(cfg.plan.reference);
    for (const auto& sel : cfg.plan.metrics) {
        std::vector<DistanceReport> sub;
        for (const auto& r : reports)
            if (r.metric == sel.metric && r.q == sel.q) sub.push_back(r);
        const std::string label = metric_label(sel.metric, sel.q);
        if (sub.size() >= 4) summary["rate_fits"][label] = fit_to_json(fit_rate(sub));
        atomic_write((dir / ("figure_" + label + ".dat")).string(),
                     dat_for_metric(reports, sel.metric, sel.q));
    }
    atomic_write((dir / "summary.json").string(), summary.dump(2) + "\n");
    std::cout << "wrote " << (dir / "results.csv").string() << " (" << reports.size()
              << " rows)\n";
    return 0;
}

int cmd_rates(const CommonOpts& opts) {
    CliConfig cfg = load_config(opts.config_path, ConfigKind::rates);
    apply_overrides(cfg, opts);
    const fs::path dir = prepare_output(cfg);

    if (cfg.bias_table) {
        const auto rows =
            bias_rate_table(cfg.plan.process, cfg.plan.n_grid, cfg.plan.rule);
        std::ostringstream os;
        os << "# selfnorm bias table schema_version=1\n";
        os << "n,b,bias,sqrt_n_bias\n";
        os.precision(12);
        for (const auto& r : rows)
            os << r.n << "," << r.b << "," << r.bias << "," << r.sqrt_n_bias << "\n";
        atomic_write((dir / "bias_table.csv").string(), os.str());
        std::cout << os.str();
        return 0;
    }

    if (cfg.plan.n_grid.size() < 4) throw ConfigError("rates: need >= 4 grid points");
    CalibrationCache cache((dir / "calibration_cache.txt").string());
    const auto cmp = compare_rules(cfg.plan, cfg.variants, &cache);

    std::vector<DistanceReport> all;
    json summary;
    summary["schema_version"] = 1;
    summary["master_seed"] = cfg.plan.master_seed;
    summary["build"] = build_id();
    for (std::size_t i = 0; i < cfg.variants.size(); ++i) {
        summary["variants"][cfg.variants[i].name] = fit_to_json(cmp.fits[i]);
        all.insert(all.end(), cmp.reports[i].begin(), cmp.reports[i].end());
        std::cout << cfg.variants[i].name << ": slope = " << cmp.fits[i].slope
                  << " +- " << cmp.fits[i].stderr_slope << " (r^2 = " << cmp.fits[i].r_squared
                  << ")\n";
    }
    for (const auto& p : cmp.pairs) {
        json pj{{"a", cfg.variants[p.i].name},
                {"b", cfg.variants[p.j].name},
                {"slope_diff", p.slope_diff},
                {"joint_stderr", p.joint_stderr}};
        summary["pairs"].push_back(pj);
        std::cout << cfg.variants[p.i].name << " - " << cfg.variants[p.j].name
                  << ": slope diff = " << p.slope_diff << " +- " << p.joint_stderr << "\n";
    }
    atomic_write((dir / "results.csv").string(), reports_to_csv(all, cfg.plan.master_seed));
    atomic_write((dir / "summary.json").string(), summary.dump(2) + "\n");
    return 0;
}

int cmd_depmeasure(const CommonOpts& opts) {
    CliConfig cfg = load_config(opts.config_path, ConfigKind::depmeasure);
    apply_overrides(cfg, opts);
    const fs::path dir = prepare_output(cfg);
    CalibrationCache cache((dir / "calibration_cache.txt").string());

    std::vector<DepEstimate> thetas, lambdas;
    for (int l : cfg.lags) {
        thetas.push_back(theta_hat(cfg.plan.process, l, cfg.p, cfg.plan.reps,
                                   cfg.plan.master_seed, &cache));
        lambdas.push_back(lambda_hat(cfg.plan.process, l, cfg.p, cfg.plan.reps,
                                     cfg.plan.master_seed, &cache));
    }
    auto to_csv = [&](const std::vector<DepEstimate>& es) {
        std::ostringstream os;
        os << "# selfnorm depmeasure schema_version=1 master_seed=" << cfg.plan.master_seed
           << "\n";
        os << "lag,p,estimate,stderr,reps\n";
        os.precision(12);
        for (const auto& e : es)
            os << e.lag << "," << e.p << "," << e.value << "," << e.stderr_ << "," << e.reps
               << "\n";
        return os.str();
    };
    atomic_write((dir / "theta.csv").string(), to_csv(thetas));
    atomic_write((dir / "lambda.csv").string(), to_csv(lambdas));

    json summary;
    summary["schema_version"] = 1;
    summary["master_seed"] = cfg.plan.master_seed;
    try {
        const auto fit = fit_decay(thetas);
        summary["theta_decay"] = {{"rate", fit.rate},
                                  {"geometric", fit.geometric},
                                  {"r_squared", fit.r_squared},
                                  {"points_used", fit.points_used}};
        std::cout << "theta decay: " << (fit.geometric ? "geometric, log-rate " : "polynomial, exponent ")
                  << fit.rate << " (r^2 = " << fit.r_squared << ")\n";
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("depmeasure: ") + e.what());
    }
    atomic_write((dir / "summary.json").string(), summary.dump(2) + "\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo laboratory for self-normalized partial sums"};
    app.require_subcommand(1);

    CommonOpts sim_opts, rates_opts, dep_opts;
    bool corrupt = false;
    app.add_flag("--corrupt-normal-cdf", corrupt)->group("");  // fault-injection hook

    auto* sim = app.add_subcommand("simulate", "run one experiment plan");
    add_common(sim, sim_opts, true);
    auto* rates = app.add_subcommand("rates", "compare bandwidth rules / bias tables");
    add_common(rates, rates_opts, true);
    auto* dep = app.add_subcommand("depmeasure", "estimate coupling dependence measures");
    add_common(dep, dep_opts, true);
    auto* self = app.add_subcommand("selftest", "run the built-in oracle suite");
    (void)self;

    CLI11_PARSE(app, argc, argv);
    selfnorm::testing::corrupt_normal_cdf = corrupt;

    try {
        if (sim->parsed()) return cmd_simulate(sim_opts);
        if (rates->parsed()) return cmd_rates(rates_opts);
        if (dep->parsed()) return cmd_depmeasure(dep_opts);
        if (self->parsed()) return run_selftest(std::cout) == 0 ? 0 : 1;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
