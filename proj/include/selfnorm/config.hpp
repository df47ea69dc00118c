#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "selfnorm/montecarlo.hpp"

namespace selfnorm {

/// Raised for any problem with a config file (I/O, JSON syntax, unknown
/// keys, bad values). The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class ConfigKind { simulate, rates, depmeasure };

struct CliConfig {
    int schema_version = 1;
    std::string output_dir = ".";
    int threads = 0;  // 0 = auto
    ExperimentPlan plan;

    // rates
    std::vector<RuleVariant> variants;
    bool bias_table = false;

    // depmeasure
    std::vector<int> lags;
    double p = 2.0;
};

/// Parse a config file with strict key checking: any key outside the schema
/// for `kind` fails with a diagnostic naming the offending path.
CliConfig load_config(const std::string& path, ConfigKind kind);

/// Parse from JSON text instead of a file (used by the python bindings).
CliConfig parse_config_text(const std::string& text, ConfigKind kind);
ProcessSpec parse_process_text(const std::string& text);

/// Write content to path via a temp file + rename (atomic on POSIX).
void atomic_write(const std::string& path, const std::string& content);

}  // namespace selfnorm
