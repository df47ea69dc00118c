#include <cstdio>
#include <fstream>
#include <string>

#include "doctest.h"
#include "selfnorm/config.hpp"

using namespace selfnorm;

namespace {

const char* kSimulate = R"({
  "schema_version": 1,
  "master_seed": 7,
  "output_dir": "out",
  "process": {"class": "ar1", "phi": 0.5},
  "n_grid": [256, 512, 1024],
  "reps": 2000,
  "rule": {"kind": "oversmooth_power", "a": 3},
  "metrics": [{"metric": "ks"}, {"metric": "lq", "q": 1.5}],
  "reference": "corrected",
  "trunc": {"c_tau": 2.0}
})";

std::string expect_config_error(const std::string& text, ConfigKind kind) {
    try {
        (void)parse_config_text(text, kind);
    } catch (const ConfigError& e) {
        return e.what();
    }
    FAIL("expected a ConfigError");
    return {};
}

}  // namespace

TEST_CASE("a full simulate config round-trips") {
    const CliConfig cfg = parse_config_text(kSimulate, ConfigKind::simulate);
    CHECK(cfg.plan.master_seed == 7);
    CHECK(cfg.output_dir == "out");
    CHECK(cfg.plan.process.cls == ProcessClass::ar1);
    CHECK(cfg.plan.process.phi == 0.5);
    CHECK(cfg.plan.n_grid == std::vector<long>{256, 512, 1024});
    CHECK(cfg.plan.reps == 2000);
    CHECK(cfg.plan.rule.kind == BandwidthKind::oversmooth_power);
    REQUIRE(cfg.plan.metrics.size() == 2);
    CHECK(cfg.plan.metrics[1].metric == Metric::lq);
    CHECK(cfg.plan.metrics[1].q == 1.5);
    CHECK(cfg.plan.reference == Reference::corrected);
    REQUIRE(cfg.plan.trunc.has_value());
    CHECK(cfg.plan.trunc->c_tau == 2.0);
}

TEST_CASE("unknown keys are rejected with their path") {
    const auto msg = expect_config_error(
        R"({"process": {"class": "ar1", "bogus": 1}, "n_grid": [256],
            "rule": {"kind": "fixed", "b": 1}})",
        ConfigKind::simulate);
    CHECK(msg.find("bogus") != std::string::npos);
    CHECK(msg.find("process") != std::string::npos);

    const auto top = expect_config_error(R"({"n_grdi": [256]})", ConfigKind::simulate);
    CHECK(top.find("n_grdi") != std::string::npos);
}

TEST_CASE("enum values outside the table are named in the error") {
    const auto msg = expect_config_error(
        R"({"process": {"class": "arma"}, "n_grid": [256], "rule": {"kind": "fixed"}})",
        ConfigKind::simulate);
    CHECK(msg.find("arma") != std::string::npos);
    CHECK(msg.find("ar1") != std::string::npos);  // error lists the choices
}

TEST_CASE("schema_version other than 1 is refused") {
    const auto msg = expect_config_error(
        R"({"schema_version": 2, "process": {"class": "ar1"}, "n_grid": [256],
            "rule": {"kind": "fixed"}})",
        ConfigKind::simulate);
    CHECK(msg.find("schema_version") != std::string::npos);
}

TEST_CASE("required keys are enforced per subcommand") {
    CHECK(expect_config_error(R"({"process": {"class": "ar1"}, "rule": {"kind": "fixed"}})",
                              ConfigKind::simulate)
              .find("n_grid") != std::string::npos);
    CHECK(expect_config_error(R"({"process": {"class": "ar1"}, "n_grid": [256]})",
                              ConfigKind::simulate)
              .find("rule") != std::string::npos);
    CHECK(expect_config_error(R"({"process": {"class": "ar1"}})", ConfigKind::depmeasure)
              .find("lags") != std::string::npos);
    // rates without variants or a bias table is underdetermined
    CHECK(expect_config_error(R"({"process": {"class": "ar1"}, "n_grid": [256, 512]})",
                              ConfigKind::rates)
              .find("variants") != std::string::npos);
}

TEST_CASE("stationarity violations surface as config errors") {
    const auto msg = expect_config_error(
        R"({"process": {"class": "garch", "garch_mu": 0.1,
                        "garch_alpha": [0.5], "garch_beta": [0.5]},
            "lags": [1, 2], "p": 2})",
        ConfigKind::depmeasure);
    CHECK(msg.find("gamma_C") != std::string::npos);
}

TEST_CASE("value constraints are checked") {
    CHECK(expect_config_error(
              R"({"process": {"class": "ar1"}, "n_grid": [256], "rule": {"kind": "fixed"},
                  "trunc": {"c_tau": 0}})",
              ConfigKind::simulate)
              .find("c_tau") != std::string::npos);
    CHECK(expect_config_error(R"({"process": {"class": "ar1"}, "lags": [1], "p": 0.5})",
                              ConfigKind::depmeasure)
              .find("p") != std::string::npos);
    CHECK(expect_config_error(R"({"process": {"class": "ar1"}, "lags": [], "p": 2})",
                              ConfigKind::depmeasure)
              .find("lags") != std::string::npos);
}

TEST_CASE("variants need a name and a rule") {
    const char* base = R"({
      "process": {"class": "ar1"}, "n_grid": [256, 512],
      "variants": [{"name": "a", "rule": {"kind": "fixed", "b": 2}},
                   {"name": "b"}]
    })";
    CHECK(expect_config_error(base, ConfigKind::rates).find("rule") != std::string::npos);
}

TEST_CASE("malformed JSON maps to ConfigError, not a parser crash") {
    const auto msg = expect_config_error("{ not json", ConfigKind::simulate);
    CHECK(msg.find("parse error") != std::string::npos);
    CHECK_THROWS_AS((void)load_config("/nonexistent/config.json", ConfigKind::simulate),
                    ConfigError);
}

TEST_CASE("process text parser accepts the full preset schema") {
    const ProcessSpec p = parse_process_text(R"({
      "class": "linear",
      "decay": {"kind": "polynomial", "q": 1.5, "cutoff": 10000},
      "law": "student_t", "t_nu": 8,
      "functional": {"kind": "centered_square"}
    })");
    CHECK(p.cls == ProcessClass::linear);
    CHECK(p.decay.kind == LinearDecayKind::polynomial);
    CHECK(p.decay.q == 1.5);
    CHECK(p.law == InnovationLaw::student_t);
    CHECK(p.t_nu == 8);
    CHECK(p.functional.kind == FunctionalKind::centered_square);
}

TEST_CASE("every shipped preset round-trips through the strict parser") {
    const std::string dir = SELFNORM_PRESET_DIR "/";
    CHECK(load_config(dir + "ar1-oversmooth.json", ConfigKind::simulate).plan.process.cls ==
          ProcessClass::ar1);
    CHECK(load_config(dir + "cor-optimal-fails.json", ConfigKind::rates).variants.size() == 2);
    CHECK(load_config(dir + "bias-table.json", ConfigKind::rates).bias_table);
    CHECK(load_config(dir + "ar1-depmeasure.json", ConfigKind::depmeasure).lags.size() > 0);
    CHECK(load_config(dir + "ou-depmeasure.json", ConfigKind::depmeasure).lags.size() > 0);

    const char* classes[] = {"ar1",    "linear-polynomial",       "garch",           "iterated_ar",
                             "ou_sde", "positive_matrix_product", "gl2_random_walk"};
    for (const char* name : classes) {
        CAPTURE(name);
        std::ifstream in(dir + name + ".json");
        REQUIRE(in.good());
        std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
        const ProcessSpec spec = parse_process_text(text);
        CHECK_NOTHROW(validate(spec));
    }
}

TEST_CASE("atomic_write replaces the target in one step") {
    const std::string path = "test_config_atomic.tmp.json";
    atomic_write(path, "first");
    atomic_write(path, "second");
    std::ifstream in(path);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(content == "second");
    std::remove(path.c_str());
    std::remove((path + ".tmp").c_str());
}
