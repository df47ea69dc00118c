#pragma once

#include <cmath>

namespace selfnorm {

inline double normal_pdf(double x) {
    return 0.39894228040143267794 * std::exp(-0.5 * x * x);
}

/// Standard normal distribution function, absolute error below 1e-15 on |x| <= 8.
double normal_cdf(double x);

/// Inverse of normal_cdf on (0,1) (Wichura's PPND16), absolute error below 1e-9.
double normal_quantile(double u);

namespace testing {
// Fault-injection knob for the self test: adds a small bias to normal_cdf.
extern bool corrupt_normal_cdf;
}

}  // namespace selfnorm
