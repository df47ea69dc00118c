#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "selfnorm/functionals.hpp"
#include "selfnorm/rng.hpp"

namespace selfnorm {

enum class ProcessClass {
    ar1,
    linear,
    garch,
    iterated_ar,
    ou_sde,
    positive_matrix_product,
    gl2_random_walk
};

enum class InnovationLaw { gaussian, uniform, student_t };

enum class LinearDecayKind { geometric, polynomial };

struct LinearDecay {
    LinearDecayKind kind = LinearDecayKind::geometric;
    double rho = 0.5;     // geometric
    double q = 1.5;       // polynomial a_i = (1+i)^{-q}
    int cutoff = 10000;   // memory M (geometric: derived unless set explicitly)
};

enum class ArNonlinearity { none, tanh_scale };

/// Declarative description of a stationary weakly dependent process.
/// Only the fields of the selected class are meaningful.
struct ProcessSpec {
    ProcessClass cls = ProcessClass::ar1;

    // ar1 / iterated_ar
    double phi = 0.5;
    double sigma_eps = 1.0;
    ArNonlinearity nonlin = ArNonlinearity::none;
    double tanh_c = 10.0;

    // linear
    LinearDecay decay;

    // garch(p,q): vol recursion coefficients; moment check uses q_moment
    double garch_mu = 0.1;
    std::vector<double> garch_alpha;
    std::vector<double> garch_beta;
    int garch_q_moment = 4;  // strict mode uses 12

    // ou_sde
    double ou_theta = 1.0;
    double ou_sigma = 1.0;
    double ou_delta = 0.5;

    // positive_matrix_product: iid log-normal entries exp(mu_log + s_log Z)
    double pm_mu_log = 0.0;
    double pm_s_log = 0.5;

    // gl2_random_walk: rotation-diagonal-rotation with S ~ N(0, tau^2)
    double gl2_tau = 0.5;
    std::array<double, 2> gl2_start = {1.0, 0.0};  // quenched start direction

    InnovationLaw law = InnovationLaw::gaussian;
    int t_nu = 8;  // student_t degrees of freedom (integer)

    int burn_in = -1;  // -1: class default
    FunctionalSpec functional;
};

enum class CouplingMode { single_swap, tail_swap };

struct SeriesSample {
    std::vector<double> values;  // X_1..X_n, functional applied and centered
    long n = 0;
    StreamKey seed_key;
    int burn_in_used = 0;
};

struct CouplingPair {
    double x = 0;
    double x_prime = 0;
    int lag = 0;
    CouplingMode mode = CouplingMode::single_swap;
};

/// Throws std::invalid_argument naming the violated stationarity condition.
void validate(const ProcessSpec& spec);

/// Class default burn-in: smallest m with rho_eff^m < 1e-12 for geometric
/// classes, 10^4 for the matrix classes, M for finite-memory linear.
int default_burn_in(const ProcessSpec& spec);
int effective_burn_in(const ProcessSpec& spec);

/// Geometric contraction factor per step (|phi|, e^{-theta delta}, gamma_C, ...).
double contraction_factor(const ProcessSpec& spec);

/// Hash over the canonical serialized spec; keys the calibration cache.
std::uint64_t spec_hash(const ProcessSpec& spec);

/// Memory length of the truncated coefficient representation, or -1 for
/// classes without exact finite memory.
long exact_memory(const ProcessSpec& spec);

/// Truncated MA coefficient vector for linear-representable classes
/// (linear, ar1, ou_sde after exact discretization); throws otherwise.
std::vector<double> ma_coefficients(const ProcessSpec& spec);

/// Innovation absolute moment E|eps|^m for the configured unit-variance law.
double innovation_abs_moment(const ProcessSpec& spec, int m);

/// gamma_C = sum_i ||alpha_i + beta_i eps^2||_{q/2} (triangle-inequality form).
double garch_gamma_c(const ProcessSpec& spec);

/// Cache of long-run calibration constants (Lyapunov exponents, functional
/// centerings), keyed by spec/functional hash. Optionally file-backed.
class CalibrationCache {
  public:
    CalibrationCache() = default;
    explicit CalibrationCache(std::string file_path);

    double get_or_compute(std::uint64_t key, double (*fn)(const void*), const void* ctx);
    std::optional<double> lookup(std::uint64_t key) const;
    void store(std::uint64_t key, double value);
    void save() const;

  private:
    mutable std::mutex mu_;
    std::map<std::uint64_t, double> values_;
    std::string path_;
};

/// Long-run average of the uncentered functional over calibration_steps
/// steps, driven by an auxiliary stream derived from the spec hash.
double calibrate_center(const ProcessSpec& spec, long calibration_steps = 10000000,
                        CalibrationCache* cache = nullptr);

/// Centering offset E f(Y_k,...,Y_{k-d+1}). Analytic mode uses closed forms
/// (available for ar1/linear/ou_sde and garch second moments) and throws a
/// descriptive error otherwise; calibrated mode averages a long run.
double functional_center(const ProcessSpec& spec, CalibrationCache* cache = nullptr);

SeriesSample generate_path(const ProcessSpec& spec, long n, const StreamKey& key,
                           CalibrationCache* cache = nullptr);

/// Generate X_1..X_n into out (size n) without the SeriesSample wrapper;
/// center must come from functional_center.
void generate_path_into(const ProcessSpec& spec, long n, const StreamKey& key, double center,
                        std::span<double> out);

/// Coupled pair (X_n, X_n') sharing every innovation except index n-l
/// (single_swap) or all indices <= n-l (tail_swap). Requires 1 <= l <= n + burn_in.
CouplingPair generate_coupled(const ProcessSpec& spec, long n, int l, CouplingMode mode,
                              const StreamKey& key, CalibrationCache* cache = nullptr);

}  // namespace selfnorm
