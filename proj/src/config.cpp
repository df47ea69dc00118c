#include "selfnorm/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "../vendor/json.hpp"

namespace selfnorm {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& ctx, const std::string& what) {
    throw ConfigError("config: " + (ctx.empty() ? what : ctx + ": " + what));
}

void expect_object(const json& j, const std::string& ctx) {
    if (!j.is_object()) fail(ctx, "expected an object");
}

void expect_keys(const json& o, const std::set<std::string>& allowed, const std::string& ctx) {
    for (const auto& [k, v] : o.items())
        if (!allowed.count(k)) fail(ctx, "unknown key '" + k + "'");
}

template <typename T>
T get_as(const json& o, const std::string& key, const T& dflt, const std::string& ctx) {
    if (!o.contains(key)) return dflt;
    try {
        return o.at(key).get<T>();
    } catch (const json::exception& e) {
        fail(ctx + "." + key, e.what());
    }
}

template <typename T>
T get_required(const json& o, const std::string& key, const std::string& ctx) {
    if (!o.contains(key)) fail(ctx, "missing required key '" + key + "'");
    try {
        return o.at(key).get<T>();
    } catch (const json::exception& e) {
        fail(ctx + "." + key, e.what());
    }
}

template <typename E>
E parse_enum(const json& o, const std::string& key,
             const std::vector<std::pair<std::string, E>>& table, E dflt, bool required,
             const std::string& ctx) {
    if (!o.contains(key)) {
        if (required) fail(ctx, "missing required key '" + key + "'");
        return dflt;
    }
    const std::string s = get_required<std::string>(o, key, ctx);
    for (const auto& [name, v] : table)
        if (name == s) return v;
    std::string opts;
    for (const auto& [name, v] : table) opts += (opts.empty() ? "" : ", ") + name;
    fail(ctx + "." + key, "'" + s + "' is not one of {" + opts + "}");
}

FunctionalSpec parse_functional(const json& j, const std::string& ctx) {
    expect_object(j, ctx);
    expect_keys(j, {"kind", "d", "centering", "alpha", "beta", "c_f", "steps"}, ctx);
    const auto kind = parse_enum<FunctionalKind>(
        j, "kind",
        {{"identity", FunctionalKind::identity},
         {"centered_square", FunctionalKind::centered_square},
         {"centered_abs", FunctionalKind::centered_abs},
         {"lag_product", FunctionalKind::lag_product},
         {"custom", FunctionalKind::custom}},
        FunctionalKind::identity, false, ctx);
    FunctionalSpec f;
    switch (kind) {
        case FunctionalKind::identity: f = identity_functional(); break;
        case FunctionalKind::centered_square: f = centered_square_functional(); break;
        case FunctionalKind::centered_abs: f = centered_abs_functional(); break;
        case FunctionalKind::lag_product: f = lag_product_functional(); break;
        case FunctionalKind::custom: f.kind = FunctionalKind::custom; break;
    }
    f.d = get_as<int>(j, "d", f.d, ctx);
    f.centering = parse_enum<Centering>(
        j, "centering", {{"analytic", Centering::analytic}, {"calibrated", Centering::calibrated}},
        f.centering, false, ctx);
    f.alpha = get_as<double>(j, "alpha", f.alpha, ctx);
    f.beta = get_as<double>(j, "beta", f.beta, ctx);
    f.c_f = get_as<double>(j, "c_f", f.c_f, ctx);
    if (j.contains("steps")) {
        if (!j.at("steps").is_array()) fail(ctx + ".steps", "expected an array");
        int si = 0;
        for (const auto& sj : j.at("steps")) {
            const std::string sctx = ctx + ".steps[" + std::to_string(si++) + "]";
            expect_object(sj, sctx);
            expect_keys(sj, {"op", "a", "b", "c", "lo", "hi", "i", "j"}, sctx);
            CustomStep st;
            st.op = parse_enum<CustomStep::Op>(
                sj, "op",
                {{"affine", CustomStep::Op::affine},
                 {"abs_value", CustomStep::Op::abs_value},
                 {"tanh_scale", CustomStep::Op::tanh_scale},
                 {"clip", CustomStep::Op::clip},
                 {"product_pair", CustomStep::Op::product_pair}},
                CustomStep::Op::affine, true, sctx);
            st.a = get_as<double>(sj, "a", st.a, sctx);
            st.b = get_as<double>(sj, "b", st.b, sctx);
            st.c = get_as<double>(sj, "c", st.c, sctx);
            st.lo = get_as<double>(sj, "lo", st.lo, sctx);
            st.hi = get_as<double>(sj, "hi", st.hi, sctx);
            st.i = get_as<int>(sj, "i", st.i, sctx);
            st.j = get_as<int>(sj, "j", st.j, sctx);
            f.steps.push_back(st);
        }
    }
    return f;
}

ProcessSpec parse_process(const json& j, const std::string& ctx) {
    expect_object(j, ctx);
    expect_keys(j,
                {"class", "phi", "sigma_eps", "nonlinearity", "tanh_c", "decay", "garch_mu",
                 "garch_alpha", "garch_beta", "garch_q_moment", "ou_theta", "ou_sigma", "ou_delta",
                 "pm_mu_log", "pm_s_log", "gl2_tau", "gl2_start", "law", "t_nu", "burn_in",
                 "functional"},
                ctx);
    ProcessSpec p;
    p.cls = parse_enum<ProcessClass>(
        j, "class",
        {{"ar1", ProcessClass::ar1},
         {"linear", ProcessClass::linear},
         {"garch", ProcessClass::garch},
         {"iterated_ar", ProcessClass::iterated_ar},
         {"ou_sde", ProcessClass::ou_sde},
         {"positive_matrix_product", ProcessClass::positive_matrix_product},
         {"gl2_random_walk", ProcessClass::gl2_random_walk}},
        ProcessClass::ar1, true, ctx);
    p.phi = get_as<double>(j, "phi", p.phi, ctx);
    p.sigma_eps = get_as<double>(j, "sigma_eps", p.sigma_eps, ctx);
    p.nonlin = parse_enum<ArNonlinearity>(
        j, "nonlinearity", {{"none", ArNonlinearity::none}, {"tanh", ArNonlinearity::tanh_scale}},
        p.nonlin, false, ctx);
    p.tanh_c = get_as<double>(j, "tanh_c", p.tanh_c, ctx);
    if (j.contains("decay")) {
        const json& d = j.at("decay");
        const std::string dctx = ctx + ".decay";
        expect_object(d, dctx);
        expect_keys(d, {"kind", "rho", "q", "cutoff"}, dctx);
        p.decay.kind = parse_enum<LinearDecayKind>(
            d, "kind",
            {{"geometric", LinearDecayKind::geometric},
             {"polynomial", LinearDecayKind::polynomial}},
            p.decay.kind, true, dctx);
        p.decay.rho = get_as<double>(d, "rho", p.decay.rho, dctx);
        p.decay.q = get_as<double>(d, "q", p.decay.q, dctx);
        p.decay.cutoff = get_as<int>(d, "cutoff", p.decay.cutoff, dctx);
    }
    p.garch_mu = get_as<double>(j, "garch_mu", p.garch_mu, ctx);
    p.garch_alpha = get_as<std::vector<double>>(j, "garch_alpha", p.garch_alpha, ctx);
    p.garch_beta = get_as<std::vector<double>>(j, "garch_beta", p.garch_beta, ctx);
    p.garch_q_moment = get_as<int>(j, "garch_q_moment", p.garch_q_moment, ctx);
    p.ou_theta = get_as<double>(j, "ou_theta", p.ou_theta, ctx);
    p.ou_sigma = get_as<double>(j, "ou_sigma", p.ou_sigma, ctx);
    p.ou_delta = get_as<double>(j, "ou_delta", p.ou_delta, ctx);
    p.pm_mu_log = get_as<double>(j, "pm_mu_log", p.pm_mu_log, ctx);
    p.pm_s_log = get_as<double>(j, "pm_s_log", p.pm_s_log, ctx);
    p.gl2_tau = get_as<double>(j, "gl2_tau", p.gl2_tau, ctx);
    if (j.contains("gl2_start")) {
        const auto v = get_required<std::vector<double>>(j, "gl2_start", ctx);
        if (v.size() != 2) fail(ctx + ".gl2_start", "expected exactly 2 entries");
        p.gl2_start = {v[0], v[1]};
    }
    p.law = parse_enum<InnovationLaw>(
        j, "law",
        {{"gaussian", InnovationLaw::gaussian},
         {"uniform", InnovationLaw::uniform},
         {"student_t", InnovationLaw::student_t}},
        p.law, false, ctx);
    p.t_nu = get_as<int>(j, "t_nu", p.t_nu, ctx);
    p.burn_in = get_as<int>(j, "burn_in", p.burn_in, ctx);
    if (j.contains("functional")) p.functional = parse_functional(j.at("functional"), ctx + ".functional");
    try {
        validate(p);
    } catch (const std::invalid_argument& e) {
        fail(ctx, e.what());
    }
    return p;
}

BandwidthRule parse_rule(const json& j, const std::string& ctx) {
    expect_object(j, ctx);
    expect_keys(j, {"kind", "b", "a", "scale", "beta", "cap"}, ctx);
    BandwidthRule r;
    r.kind = parse_enum<BandwidthKind>(
        j, "kind",
        {{"fixed", BandwidthKind::fixed},
         {"oversmooth_power", BandwidthKind::oversmooth_power},
         {"oversmooth_quarter", BandwidthKind::oversmooth_quarter},
         {"mse_optimal", BandwidthKind::mse_optimal}},
        BandwidthKind::fixed, true, ctx);
    r.fixed_b = get_as<int>(j, "b", r.fixed_b, ctx);
    r.a_frak = get_as<double>(j, "a", r.a_frak, ctx);
    r.scale = get_as<double>(j, "scale", r.scale, ctx);
    r.beta = get_as<double>(j, "beta", r.beta, ctx);
    r.cap_enabled = get_as<bool>(j, "cap", r.cap_enabled, ctx);
    return r;
}

MetricSel parse_metric(const json& j, const std::string& ctx) {
    expect_object(j, ctx);
    expect_keys(j, {"metric", "q"}, ctx);
    MetricSel sel;
    sel.metric = parse_enum<Metric>(
        j, "metric", {{"ks", Metric::ks}, {"w1", Metric::w1}, {"lq", Metric::lq}}, Metric::ks,
        true, ctx);
    sel.q = get_as<double>(j, "q", sel.q, ctx);
    return sel;
}

TruncationRule parse_trunc(const json& j, const std::string& ctx) {
    expect_object(j, ctx);
    expect_keys(j, {"c_tau"}, ctx);
    TruncationRule t;
    t.c_tau = get_as<double>(j, "c_tau", t.c_tau, ctx);
    if (!(t.c_tau > 0.0)) fail(ctx, "c_tau must be positive");
    return t;
}

Reference parse_reference(const json& j, Reference dflt, const std::string& ctx) {
    return parse_enum<Reference>(
        j, "reference", {{"pivotal", Reference::pivotal}, {"corrected", Reference::corrected}},
        dflt, false, ctx);
}

RuleVariant parse_variant(const json& j, const std::string& ctx) {
    expect_object(j, ctx);
    expect_keys(j, {"name", "rule", "reference", "trunc", "metric"}, ctx);
    RuleVariant v;
    v.name = get_required<std::string>(j, "name", ctx);
    if (!j.contains("rule")) fail(ctx, "missing required key 'rule'");
    v.rule = parse_rule(j.at("rule"), ctx + ".rule");
    v.reference = parse_reference(j, Reference::pivotal, ctx);
    if (j.contains("trunc")) v.trunc = parse_trunc(j.at("trunc"), ctx + ".trunc");
    if (j.contains("metric")) v.metric = parse_metric(j.at("metric"), ctx + ".metric");
    return v;
}

}  // namespace

namespace {

CliConfig parse_config_json(const json& j, ConfigKind kind) {
    expect_object(j, "");

    std::set<std::string> allowed = {"schema_version", "output_dir", "threads", "master_seed"};
    if (kind == ConfigKind::simulate || kind == ConfigKind::rates) {
        allowed.insert({"process", "n_grid", "reps", "rule", "metrics", "reference", "trunc",
                        "bootstrap", "experiment_id"});
    }
    if (kind == ConfigKind::rates) allowed.insert({"variants", "bias_table"});
    if (kind == ConfigKind::depmeasure) allowed.insert({"process", "lags", "p", "reps"});
    expect_keys(j, allowed, "");

    CliConfig cfg;
    cfg.schema_version = get_as<int>(j, "schema_version", 1, "");
    if (cfg.schema_version != 1) fail("schema_version", "only schema_version 1 is supported");
    cfg.output_dir = get_as<std::string>(j, "output_dir", cfg.output_dir, "");
    cfg.threads = get_as<int>(j, "threads", cfg.threads, "");
    cfg.plan.master_seed = get_as<std::uint64_t>(j, "master_seed", cfg.plan.master_seed, "");

    if (kind == ConfigKind::simulate || kind == ConfigKind::rates) {
        if (j.contains("process")) cfg.plan.process = parse_process(j.at("process"), "process");
        else if (!(kind == ConfigKind::rates && get_as<bool>(j, "bias_table", false, "")))
            fail("", "missing required key 'process'");
        cfg.plan.n_grid = get_required<std::vector<long>>(j, "n_grid", "");
        cfg.plan.reps = get_as<long>(j, "reps", cfg.plan.reps, "");
        cfg.plan.experiment_id = get_as<std::uint64_t>(j, "experiment_id", 0, "");
        if (j.contains("rule")) cfg.plan.rule = parse_rule(j.at("rule"), "rule");
        else if (kind == ConfigKind::simulate) fail("", "missing required key 'rule'");
        if (j.contains("metrics")) {
            if (!j.at("metrics").is_array()) fail("metrics", "expected an array");
            cfg.plan.metrics.clear();
            int mi = 0;
            for (const auto& mj : j.at("metrics"))
                cfg.plan.metrics.push_back(parse_metric(mj, "metrics[" + std::to_string(mi++) + "]"));
            if (cfg.plan.metrics.empty()) fail("metrics", "at least one metric required");
        }
        cfg.plan.reference = parse_reference(j, cfg.plan.reference, "");
        if (j.contains("trunc")) cfg.plan.trunc = parse_trunc(j.at("trunc"), "trunc");
        cfg.plan.bootstrap = get_as<long>(j, "bootstrap", cfg.plan.bootstrap, "");
    }
    if (kind == ConfigKind::rates) {
        cfg.bias_table = get_as<bool>(j, "bias_table", false, "");
        if (cfg.bias_table && !j.contains("process")) fail("", "bias_table still needs 'process'");
        if (j.contains("variants")) {
            if (!j.at("variants").is_array()) fail("variants", "expected an array");
            int vi = 0;
            for (const auto& vj : j.at("variants"))
                cfg.variants.push_back(parse_variant(vj, "variants[" + std::to_string(vi++) + "]"));
        }
        if (!cfg.bias_table && cfg.variants.size() < 2)
            fail("variants", "rates needs >= 2 variants (or bias_table: true)");
    }
    if (kind == ConfigKind::depmeasure) {
        cfg.plan.process = parse_process(get_required<json>(j, "process", ""), "process");
        cfg.lags = get_required<std::vector<int>>(j, "lags", "");
        if (cfg.lags.empty()) fail("lags", "at least one lag required");
        cfg.p = get_as<double>(j, "p", cfg.p, "");
        if (!(cfg.p >= 1.0)) fail("p", "p must be >= 1");
        cfg.plan.reps = get_as<long>(j, "reps", cfg.plan.reps, "");
    }
    return cfg;
}

}  // namespace

CliConfig load_config(const std::string& path, ConfigKind kind) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: JSON parse error: ") + e.what());
    }
    return parse_config_json(j, kind);
}

CliConfig parse_config_text(const std::string& text, ConfigKind kind) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: JSON parse error: ") + e.what());
    }
    return parse_config_json(j, kind);
}

ProcessSpec parse_process_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: JSON parse error: ") + e.what());
    }
    return parse_process(j, "process");
}

void atomic_write(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp + "'");
        out << content;
        if (!out) throw std::runtime_error("short write to '" + tmp + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("rename to '" + path + "' failed");
}

}  // namespace selfnorm
