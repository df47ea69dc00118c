#include "selfnorm/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "selfnorm/rng.hpp"

namespace selfnorm {

FunctionalSpec identity_functional() { return FunctionalSpec{}; }

FunctionalSpec centered_square_functional() {
    FunctionalSpec f;
    f.kind = FunctionalKind::centered_square;
    f.alpha = 1.0;
    f.beta = 2.0;
    f.c_f = 1.0;
    return f;
}

FunctionalSpec centered_abs_functional() {
    FunctionalSpec f;
    f.kind = FunctionalKind::centered_abs;
    f.alpha = 1.0;
    f.beta = 1.0;
    f.c_f = 1.0;
    return f;
}

FunctionalSpec lag_product_functional() {
    FunctionalSpec f;
    f.kind = FunctionalKind::lag_product;
    f.d = 2;
    f.alpha = 1.0;
    f.beta = 2.0;
    f.c_f = 1.0;
    return f;
}

void validate(const FunctionalSpec& f) {
    if (f.d < 1) throw std::invalid_argument("functional: window length d must be >= 1");
    switch (f.kind) {
        case FunctionalKind::identity:
        case FunctionalKind::centered_square:
        case FunctionalKind::centered_abs:
            if (f.d != 1) throw std::invalid_argument("functional: scalar kind requires d=1");
            break;
        case FunctionalKind::lag_product:
            if (f.d != 2) throw std::invalid_argument("functional: lag_product requires d=2");
            break;
        case FunctionalKind::custom:
            if (f.steps.empty()) throw std::invalid_argument("functional: custom needs steps");
            for (std::size_t s = 0; s < f.steps.size(); ++s) {
                const auto& st = f.steps[s];
                if (st.op == CustomStep::Op::product_pair && s != 0)
                    throw std::invalid_argument("functional: product_pair allowed as first step only");
                if (st.op == CustomStep::Op::product_pair &&
                    (st.i < 0 || st.i >= f.d || st.j < 0 || st.j >= f.d))
                    throw std::invalid_argument("functional: product_pair index out of window");
                if (st.op == CustomStep::Op::clip && !(st.lo < st.hi))
                    throw std::invalid_argument("functional: clip needs lo < hi");
                if (st.op == CustomStep::Op::tanh_scale && !(st.c > 0))
                    throw std::invalid_argument("functional: tanh scale must be positive");
            }
            break;
    }
    if (!(f.alpha > 0.0 && f.alpha <= 1.0)) throw std::invalid_argument("functional: alpha in (0,1]");
    if (f.beta < 0.0) throw std::invalid_argument("functional: beta >= 0");
    if (!(f.c_f > 0.0)) throw std::invalid_argument("functional: c_f > 0");
}

double apply(const FunctionalSpec& f, std::span<const double> window) {
    if (static_cast<int>(window.size()) != f.d)
        throw std::invalid_argument("functional: window length mismatch");
    switch (f.kind) {
        case FunctionalKind::identity:
            return window[0];
        case FunctionalKind::centered_square:
            return window[0] * window[0];
        case FunctionalKind::centered_abs:
            return std::fabs(window[0]);
        case FunctionalKind::lag_product:
            return window[0] * window[1];
        case FunctionalKind::custom: {
            double v;
            std::size_t first = 0;
            if (f.steps[0].op == CustomStep::Op::product_pair) {
                v = window[f.steps[0].i] * window[f.steps[0].j];
                first = 1;
            } else {
                v = window[0];
            }
            for (std::size_t s = first; s < f.steps.size(); ++s) {
                const auto& st = f.steps[s];
                switch (st.op) {
                    case CustomStep::Op::affine: v = st.a * v + st.b; break;
                    case CustomStep::Op::abs_value: v = std::fabs(v); break;
                    case CustomStep::Op::tanh_scale: v = st.c * std::tanh(v / st.c); break;
                    case CustomStep::Op::clip: v = std::clamp(v, st.lo, st.hi); break;
                    case CustomStep::Op::product_pair: break;  // rejected by validate
                }
            }
            return v;
        }
    }
    return 0.0;
}

double holder_worst_ratio(const FunctionalSpec& f, int trials, double scale, std::uint64_t seed) {
    StreamKey key;
    key.master_seed = seed;
    key.role = StreamRole::auxiliary;
    Stream st = derive_stream(key);
    std::vector<double> x(f.d), y(f.d);
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        double nx = 0, ny = 0, nd = 0;
        for (int i = 0; i < f.d; ++i) {
            x[i] = scale * st.normal();
            y[i] = scale * st.normal();
            nx += std::fabs(x[i]);
            ny += std::fabs(y[i]);
            nd += std::fabs(x[i] - y[i]);
        }
        const double lhs = std::fabs(selfnorm::apply(f, x) - selfnorm::apply(f, y));
        const double bound =
            f.c_f * std::min(std::pow(nd, f.alpha), 1.0) * std::pow(1.0 + nx + ny, f.beta);
        if (bound > 0) worst = std::max(worst, lhs / bound);
    }
    return worst;
}

}  // namespace selfnorm
