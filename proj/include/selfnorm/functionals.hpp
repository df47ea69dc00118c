#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace selfnorm {

enum class FunctionalKind { identity, centered_square, centered_abs, lag_product, custom };
enum class Centering { analytic, calibrated };

/// One step of a restricted composition pipeline for custom functionals.
/// The base term is window[i] (or window[i]*window[j] for product_pair),
/// every later step is a unary map of the accumulator. Restricting to this
/// table keeps the declared Hoelder constants machine-checkable.
struct CustomStep {
    enum class Op { affine, abs_value, tanh_scale, clip, product_pair };
    Op op = Op::affine;
    double a = 1.0, b = 0.0;  // affine: a*v + b
    double c = 1.0;           // tanh_scale: c*tanh(v/c)
    double lo = -1.0, hi = 1.0;  // clip
    int i = 0, j = 1;         // product_pair coordinates (first step only)
};

struct FunctionalSpec {
    FunctionalKind kind = FunctionalKind::identity;
    int d = 1;  // window length
    Centering centering = Centering::analytic;
    std::vector<CustomStep> steps;  // custom only
    // Hoelder parameters |f(x)-f(y)| <= c_f (||x-y||^alpha ∧ 1)(1+||x||+||y||)^beta
    double alpha = 1.0;
    double beta = 1.0;
    double c_f = 1.0;
};

FunctionalSpec identity_functional();
FunctionalSpec centered_square_functional();
FunctionalSpec centered_abs_functional();
FunctionalSpec lag_product_functional();

void validate(const FunctionalSpec& f);

/// Uncentered value f(window). window.size() must equal f.d.
double apply(const FunctionalSpec& f, std::span<const double> window);

/// Checks the declared Hoelder bound on random window pairs drawn from
/// N(0, scale^2). Returns the worst observed ratio |f(x)-f(y)| / bound.
double holder_worst_ratio(const FunctionalSpec& f, int trials, double scale, std::uint64_t seed);

}  // namespace selfnorm
