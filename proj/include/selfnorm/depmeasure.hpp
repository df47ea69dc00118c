#pragma once

#include <vector>

#include "selfnorm/processes.hpp"

namespace selfnorm {

struct DepEstimate {
    double value = 0.0;   // ||X - X'||_p estimate
    double stderr_ = 0.0;  // delta-method standard error
    long reps = 0;
    int lag = 0;
    double p = 2.0;
};

/// Monte Carlo estimate of theta_{l,p} = ||X_n - X_n'||_p with a single
/// innovation swapped, evaluated at time point n = l.
DepEstimate theta_hat(const ProcessSpec& spec, int lag, double p, long reps,
                      std::uint64_t master_seed, CalibrationCache* cache = nullptr);

/// Same with the whole innovation tail replaced (lambda_{l,p}).
DepEstimate lambda_hat(const ProcessSpec& spec, int lag, double p, long reps,
                       std::uint64_t master_seed, CalibrationCache* cache = nullptr);

struct DecayFit {
    double rate = 0.0;       // geometric: log-slope; polynomial: power exponent
    double intercept = 0.0;
    double r_squared = 0.0;
    bool geometric = true;   // which regression fit better
    int points_used = 0;
};

/// OLS of log(value) against lag (geometric) and against log(lag)
/// (polynomial); keeps whichever explains more variance. Estimates below
/// 10x their stderr or nonpositive are dropped; needs >= 4 usable points.
DecayFit fit_decay(const std::vector<DepEstimate>& estimates);

}  // namespace selfnorm
