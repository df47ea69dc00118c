#include "selfnorm/depmeasure.hpp"

#include <cmath>
#include <stdexcept>

namespace selfnorm {

namespace {

DepEstimate coupled_norm(const ProcessSpec& spec, int lag, double p, long reps,
                         std::uint64_t master_seed, CouplingMode mode, CalibrationCache* cache) {
    if (reps < 2) throw std::invalid_argument("dependence estimate: need reps >= 2");
    if (!(p >= 1.0)) throw std::invalid_argument("dependence estimate: p >= 1");
    if (lag < 1) throw std::invalid_argument("dependence estimate: lag >= 1");
    long double sum = 0.0, sum_sq = 0.0;
    StreamKey key;
    key.master_seed = master_seed;
    key.experiment_id = (static_cast<std::uint64_t>(lag) << 1) |
                        (mode == CouplingMode::tail_swap ? 1u : 0u);
    for (long r = 0; r < reps; ++r) {
        key.replication_index = static_cast<std::uint64_t>(r);
        const CouplingPair cp = generate_coupled(spec, lag, lag, mode, key, cache);
        const double d = std::pow(std::fabs(cp.x - cp.x_prime), p);
        sum += d;
        sum_sq += d * d;
    }
    const double m = static_cast<double>(sum / reps);
    const double var = std::max(0.0, static_cast<double>(sum_sq / reps) - m * m) *
                       (reps / (reps - 1.0));
    DepEstimate est;
    est.reps = reps;
    est.lag = lag;
    est.p = p;
    est.value = std::pow(m, 1.0 / p);
    // delta method for m^{1/p}
    est.stderr_ = m > 0.0
                      ? std::pow(m, 1.0 / p - 1.0) / p * std::sqrt(var / reps)
                      : 0.0;
    return est;
}

}  // namespace

DepEstimate theta_hat(const ProcessSpec& spec, int lag, double p, long reps,
                      std::uint64_t master_seed, CalibrationCache* cache) {
    return coupled_norm(spec, lag, p, reps, master_seed, CouplingMode::single_swap, cache);
}

DepEstimate lambda_hat(const ProcessSpec& spec, int lag, double p, long reps,
                       std::uint64_t master_seed, CalibrationCache* cache) {
    return coupled_norm(spec, lag, p, reps, master_seed, CouplingMode::tail_swap, cache);
}

DecayFit fit_decay(const std::vector<DepEstimate>& estimates) {
    std::vector<double> ls, lv;
    for (const auto& e : estimates) {
        if (!(e.value > 0.0)) continue;
        if (e.value < 10.0 * e.stderr_) continue;  // too noisy to trust the log
        ls.push_back(static_cast<double>(e.lag));
        lv.push_back(std::log(e.value));
    }
    const int n = static_cast<int>(ls.size());
    if (n < 4) throw std::invalid_argument("fit_decay: fewer than 4 usable estimates");
    auto ols = [&](bool log_x) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
        for (int i = 0; i < n; ++i) {
            const double x = log_x ? std::log(ls[i]) : ls[i];
            const double y = lv[i];
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            syy += y * y;
        }
        const double den = n * sxx - sx * sx;
        const double slope = (n * sxy - sx * sy) / den;
        const double icpt = (sy - slope * sx) / n;
        double ssr = 0, sst = 0;
        const double ybar = sy / n;
        for (int i = 0; i < n; ++i) {
            const double x = log_x ? std::log(ls[i]) : ls[i];
            const double e = lv[i] - (icpt + slope * x);
            ssr += e * e;
            sst += (lv[i] - ybar) * (lv[i] - ybar);
        }
        const double r2 = sst > 0.0 ? 1.0 - ssr / sst : 1.0;
        return std::array<double, 3>{slope, icpt, r2};
    };
    const auto geo = ols(false);
    const auto poly = ols(true);
    DecayFit fit;
    fit.points_used = n;
    if (geo[2] >= poly[2]) {
        fit.geometric = true;
        fit.rate = geo[0];
        fit.intercept = geo[1];
        fit.r_squared = geo[2];
    } else {
        fit.geometric = false;
        fit.rate = poly[0];
        fit.intercept = poly[1];
        fit.r_squared = poly[2];
    }
    return fit;
}

}  // namespace selfnorm
