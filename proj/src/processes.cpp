#include "selfnorm/processes.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "selfnorm/gaussian.hpp"

namespace selfnorm {

// ---------------------------------------------------------------------------
// innovations
// ---------------------------------------------------------------------------

namespace {

int innovation_draws(const ProcessSpec& spec) {
    return spec.law == InnovationLaw::student_t ? spec.t_nu + 1 : 1;
}

// Unit-variance innovation from `d` uniforms (d = innovation_draws).
double innovation_value(const ProcessSpec& spec, const double* u) {
    switch (spec.law) {
        case InnovationLaw::gaussian:
            return normal_quantile(u[0]);
        case InnovationLaw::uniform:
            return 3.4641016151377543864 * (u[0] - 0.5);  // sqrt(12) (u - 1/2)
        case InnovationLaw::student_t: {
            const double z = normal_quantile(u[0]);
            double chi2 = 0.0;
            for (int i = 1; i <= spec.t_nu; ++i) {
                const double g = normal_quantile(u[i]);
                chi2 += g * g;
            }
            const double t = z / std::sqrt(chi2 / spec.t_nu);
            return t * std::sqrt((spec.t_nu - 2.0) / spec.t_nu);  // unit variance
        }
    }
    return 0.0;
}

}  // namespace

double innovation_abs_moment(const ProcessSpec& spec, int m) {
    if (m < 1) throw std::invalid_argument("innovation_abs_moment: m >= 1");
    const double sqrt_pi = 1.7724538509055160273;
    switch (spec.law) {
        case InnovationLaw::gaussian:
            return std::pow(2.0, m / 2.0) * std::tgamma((m + 1) / 2.0) / sqrt_pi;
        case InnovationLaw::uniform:
            return std::pow(std::sqrt(3.0), m) / (m + 1.0);
        case InnovationLaw::student_t: {
            const int nu = spec.t_nu;
            if (m >= nu)
                throw std::invalid_argument("innovation_abs_moment: E|t_nu|^m infinite for m >= nu");
            const double raw = std::pow(nu, m / 2.0) * std::tgamma((m + 1) / 2.0) *
                               std::tgamma((nu - m) / 2.0) / (sqrt_pi * std::tgamma(nu / 2.0));
            return raw * std::pow((nu - 2.0) / nu, m / 2.0);
        }
    }
    return 0.0;
}

double garch_gamma_c(const ProcessSpec& spec) {
    const std::size_t r = std::max(spec.garch_alpha.size(), spec.garch_beta.size());
    const int q = spec.garch_q_moment;
    const double eps_sq_norm = std::pow(innovation_abs_moment(spec, q), 2.0 / q);
    double gc = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
        const double a = i < spec.garch_alpha.size() ? spec.garch_alpha[i] : 0.0;
        const double b = i < spec.garch_beta.size() ? spec.garch_beta[i] : 0.0;
        gc += a + b * eps_sq_norm;
    }
    return gc;
}

// ---------------------------------------------------------------------------
// validation / burn-in
// ---------------------------------------------------------------------------

void validate(const ProcessSpec& spec) {
    validate(spec.functional);
    if (spec.law == InnovationLaw::student_t && spec.t_nu < 3)
        throw std::invalid_argument("innovation: student_t requires nu >= 3 (unit variance)");
    if (!(spec.sigma_eps > 0.0)) throw std::invalid_argument("sigma_eps must be positive");
    switch (spec.cls) {
        case ProcessClass::ar1:
        case ProcessClass::iterated_ar:
            if (!(std::fabs(spec.phi) < 1.0))
                throw std::invalid_argument("stationarity violated: |phi| >= 1");
            if (spec.cls == ProcessClass::iterated_ar &&
                spec.nonlin == ArNonlinearity::tanh_scale && !(spec.tanh_c > 0.0))
                throw std::invalid_argument("iterated_ar: tanh scale must be positive");
            break;
        case ProcessClass::linear:
            if (spec.decay.kind == LinearDecayKind::geometric) {
                if (!(spec.decay.rho > 0.0 && spec.decay.rho < 1.0))
                    throw std::invalid_argument("stationarity violated: geometric decay needs 0 < rho < 1");
            } else {
                if (!(spec.decay.q > 1.0))
                    throw std::invalid_argument(
                        "linear: polynomial exponent q <= 1 gives non-summable coefficients");
                if (spec.decay.cutoff < 1)
                    throw std::invalid_argument("linear: memory cutoff M must be >= 1");
            }
            break;
        case ProcessClass::garch: {
            if (!(spec.garch_mu > 0.0)) throw std::invalid_argument("garch: mu must be positive");
            for (double a : spec.garch_alpha)
                if (a < 0.0) throw std::invalid_argument("garch: alpha coefficients must be >= 0");
            for (double b : spec.garch_beta)
                if (b < 0.0) throw std::invalid_argument("garch: beta coefficients must be >= 0");
            const double gc = garch_gamma_c(spec);
            if (!(gc < 1.0)) {
                char buf[128];
                std::snprintf(buf, sizeof buf,
                              "stationarity violated: garch gamma_C = %.6f >= 1", gc);
                throw std::invalid_argument(buf);
            }
            break;
        }
        case ProcessClass::ou_sde:
            if (!(spec.ou_theta > 0.0))
                throw std::invalid_argument("stationarity violated: ou_sde needs theta > 0");
            if (!(spec.ou_delta > 0.0)) throw std::invalid_argument("ou_sde: delta must be positive");
            if (!(spec.ou_sigma > 0.0)) throw std::invalid_argument("ou_sde: sigma must be positive");
            break;
        case ProcessClass::positive_matrix_product:
            if (spec.pm_s_log < 0.0)
                throw std::invalid_argument("positive_matrix_product: s_log must be >= 0");
            break;
        case ProcessClass::gl2_random_walk: {
            if (spec.gl2_tau < 0.0) throw std::invalid_argument("gl2_random_walk: tau must be >= 0");
            const double norm = std::hypot(spec.gl2_start[0], spec.gl2_start[1]);
            if (!(norm > 0.0))
                throw std::invalid_argument("gl2_random_walk: start direction must be nonzero");
            break;
        }
    }
}

double contraction_factor(const ProcessSpec& spec) {
    switch (spec.cls) {
        case ProcessClass::ar1:
        case ProcessClass::iterated_ar:
            return std::fabs(spec.phi);
        case ProcessClass::ou_sde:
            return std::exp(-spec.ou_theta * spec.ou_delta);
        case ProcessClass::garch:
            return garch_gamma_c(spec);
        case ProcessClass::linear:
            return spec.decay.kind == LinearDecayKind::geometric ? spec.decay.rho : 0.0;
        default:
            return 0.0;  // matrix classes: no closed-form rate
    }
}

namespace {

int geometric_burn_in(double rho) {
    if (rho <= 0.0) return 1;
    return std::max(1, static_cast<int>(std::ceil(std::log(1e-12) / std::log(rho))));
}

int linear_memory(const ProcessSpec& spec) {
    if (spec.decay.kind == LinearDecayKind::polynomial) return spec.decay.cutoff;
    return geometric_burn_in(spec.decay.rho);  // rho^M < 1e-12
}

}  // namespace

int default_burn_in(const ProcessSpec& spec) {
    switch (spec.cls) {
        case ProcessClass::ar1:
        case ProcessClass::iterated_ar:
        case ProcessClass::ou_sde:
            return geometric_burn_in(contraction_factor(spec));
        case ProcessClass::garch: {
            const int r = static_cast<int>(std::max(spec.garch_alpha.size(), spec.garch_beta.size()));
            return std::max(std::max(r, 1), geometric_burn_in(garch_gamma_c(spec)));
        }
        case ProcessClass::linear:
            return linear_memory(spec);
        case ProcessClass::positive_matrix_product:
        case ProcessClass::gl2_random_walk:
            return 10000;
    }
    return 1;
}

int effective_burn_in(const ProcessSpec& spec) {
    return spec.burn_in >= 0 ? spec.burn_in : default_burn_in(spec);
}

long exact_memory(const ProcessSpec& spec) {
    if (spec.cls == ProcessClass::linear) return linear_memory(spec);
    return -1;
}

std::vector<double> ma_coefficients(const ProcessSpec& spec) {
    switch (spec.cls) {
        case ProcessClass::ar1: {
            const int m = geometric_burn_in(std::fabs(spec.phi));
            std::vector<double> c(m);
            double p = spec.sigma_eps;
            for (int i = 0; i < m; ++i, p *= spec.phi) c[i] = p;
            return c;
        }
        case ProcessClass::linear: {
            const int m = linear_memory(spec);
            std::vector<double> c(m);
            if (spec.decay.kind == LinearDecayKind::geometric) {
                double p = spec.sigma_eps;
                for (int i = 0; i < m; ++i, p *= spec.decay.rho) c[i] = p;
            } else {
                for (int i = 0; i < m; ++i)
                    c[i] = spec.sigma_eps * std::pow(1.0 + i, -spec.decay.q);
            }
            return c;
        }
        case ProcessClass::ou_sde: {
            const double a = std::exp(-spec.ou_theta * spec.ou_delta);
            const double s = std::sqrt(spec.ou_sigma * spec.ou_sigma / spec.ou_theta *
                                       (1.0 - a * a));
            const int m = geometric_burn_in(a);
            std::vector<double> c(m);
            double p = s;
            for (int i = 0; i < m; ++i, p *= a) c[i] = p;
            return c;
        }
        default:
            throw std::invalid_argument("ma_coefficients: no linear representation for this class");
    }
}

std::uint64_t spec_hash(const ProcessSpec& spec) {
    std::ostringstream os;
    os.precision(17);
    os << "cls=" << static_cast<int>(spec.cls) << ";law=" << static_cast<int>(spec.law)
       << ";nu=" << spec.t_nu << ";burn=" << spec.burn_in << ";se=" << spec.sigma_eps;
    switch (spec.cls) {
        case ProcessClass::ar1:
            os << ";phi=" << spec.phi;
            break;
        case ProcessClass::iterated_ar:
            os << ";phi=" << spec.phi << ";nl=" << static_cast<int>(spec.nonlin)
               << ";c=" << spec.tanh_c;
            break;
        case ProcessClass::linear:
            os << ";dk=" << static_cast<int>(spec.decay.kind) << ";rho=" << spec.decay.rho
               << ";q=" << spec.decay.q << ";M=" << spec.decay.cutoff;
            break;
        case ProcessClass::garch:
            os << ";mu=" << spec.garch_mu << ";qm=" << spec.garch_q_moment << ";a=";
            for (double a : spec.garch_alpha) os << a << ",";
            os << ";b=";
            for (double b : spec.garch_beta) os << b << ",";
            break;
        case ProcessClass::ou_sde:
            os << ";th=" << spec.ou_theta << ";sg=" << spec.ou_sigma << ";dl=" << spec.ou_delta;
            break;
        case ProcessClass::positive_matrix_product:
            os << ";ml=" << spec.pm_mu_log << ";sl=" << spec.pm_s_log;
            break;
        case ProcessClass::gl2_random_walk:
            os << ";tau=" << spec.gl2_tau << ";x0=" << spec.gl2_start[0] << ","
               << spec.gl2_start[1];
            break;
    }
    const auto& f = spec.functional;
    os << ";f=" << static_cast<int>(f.kind) << ";d=" << f.d
       << ";cen=" << static_cast<int>(f.centering);
    for (const auto& st : f.steps)
        os << ";op=" << static_cast<int>(st.op) << "," << st.a << "," << st.b << "," << st.c << ","
           << st.lo << "," << st.hi << "," << st.i << "," << st.j;
    const std::string s = os.str();
    std::uint64_t h = 0xCBF29CE484222325ull;  // FNV-1a
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001B3ull;
    }
    return h;
}

// ---------------------------------------------------------------------------
// recursion engines (all classes except linear, which is a pure convolution)
// ---------------------------------------------------------------------------

namespace {

constexpr double kTwoPi = 6.2831853071795864769;

class Engine {
  public:
    explicit Engine(const ProcessSpec& spec) : spec_(spec) {
        switch (spec.cls) {
            case ProcessClass::ar1:
            case ProcessClass::iterated_ar:
            case ProcessClass::ou_sde:
                dps_ = innovation_draws(spec);
                break;
            case ProcessClass::garch: {
                dps_ = innovation_draws(spec);
                r_ = static_cast<int>(
                    std::max(spec.garch_alpha.size(), spec.garch_beta.size()));
                r_ = std::max(r_, 1);
                double csum = 0.0;
                for (double a : spec.garch_alpha) csum += a;
                for (double b : spec.garch_beta) csum += b;
                const double init = csum < 1.0 ? spec.garch_mu / (1.0 - csum) : spec.garch_mu;
                l2_.assign(r_, init);
                y2_.assign(r_, init);
                break;
            }
            case ProcessClass::positive_matrix_product:
                dps_ = 4;
                y_vec_ = {0.5, 0.5};
                break;
            case ProcessClass::gl2_random_walk: {
                dps_ = 3;
                const double nrm = std::hypot(spec.gl2_start[0], spec.gl2_start[1]);
                y_vec_ = {spec.gl2_start[0] / nrm, spec.gl2_start[1] / nrm};
                break;
            }
            case ProcessClass::linear:
                throw std::logic_error("Engine does not handle the linear class");
        }
        if (spec.cls == ProcessClass::ou_sde) {
            ou_a_ = std::exp(-spec.ou_theta * spec.ou_delta);
            ou_s_ = std::sqrt(spec.ou_sigma * spec.ou_sigma / spec.ou_theta * (1.0 - ou_a_ * ou_a_));
        }
    }

    int draws_per_step() const { return dps_; }

    double step(const double* u) {
        switch (spec_.cls) {
            case ProcessClass::ar1: {
                state_ = spec_.phi * state_ + spec_.sigma_eps * innovation_value(spec_, u);
                return state_;
            }
            case ProcessClass::iterated_ar: {
                const double prev = spec_.nonlin == ArNonlinearity::tanh_scale
                                        ? spec_.tanh_c * std::tanh(state_ / spec_.tanh_c)
                                        : state_;
                state_ = spec_.phi * prev + spec_.sigma_eps * innovation_value(spec_, u);
                return state_;
            }
            case ProcessClass::ou_sde: {
                state_ = ou_a_ * state_ + ou_s_ * innovation_value(spec_, u);
                return state_;
            }
            case ProcessClass::garch: {
                double l2 = spec_.garch_mu;
                for (std::size_t i = 0; i < spec_.garch_alpha.size(); ++i)
                    l2 += spec_.garch_alpha[i] * l2_[(pos_ + r_ - 1 - static_cast<int>(i)) % r_];
                for (std::size_t i = 0; i < spec_.garch_beta.size(); ++i)
                    l2 += spec_.garch_beta[i] * y2_[(pos_ + r_ - 1 - static_cast<int>(i)) % r_];
                const double eps = innovation_value(spec_, u);
                const double y = eps * std::sqrt(l2);
                l2_[pos_ % r_] = l2;
                y2_[pos_ % r_] = y * y;
                ++pos_;
                return y;
            }
            case ProcessClass::positive_matrix_product: {
                const double e11 = std::exp(spec_.pm_mu_log + spec_.pm_s_log * normal_quantile(u[0]));
                const double e12 = std::exp(spec_.pm_mu_log + spec_.pm_s_log * normal_quantile(u[1]));
                const double e21 = std::exp(spec_.pm_mu_log + spec_.pm_s_log * normal_quantile(u[2]));
                const double e22 = std::exp(spec_.pm_mu_log + spec_.pm_s_log * normal_quantile(u[3]));
                const double v0 = e11 * y_vec_[0] + e12 * y_vec_[1];
                const double v1 = e21 * y_vec_[0] + e22 * y_vec_[1];
                const double s = v0 + v1;  // l1 norm, entries positive
                y_vec_[0] = v0 / s;
                y_vec_[1] = v1 / s;
                return std::log(s);
            }
            case ProcessClass::gl2_random_walk: {
                const double u1 = kTwoPi * u[0];
                const double u2 = kTwoPi * u[1];
                const double s = spec_.gl2_tau * normal_quantile(u[2]);
                // w = R(u1) diag(e^s, e^-s) R(u2) z, z unit
                const double c2 = std::cos(u2), s2 = std::sin(u2);
                double w0 = c2 * y_vec_[0] - s2 * y_vec_[1];
                double w1 = s2 * y_vec_[0] + c2 * y_vec_[1];
                w0 *= std::exp(s);
                w1 *= std::exp(-s);
                const double c1 = std::cos(u1), s1 = std::sin(u1);
                const double r0 = c1 * w0 - s1 * w1;
                const double r1 = s1 * w0 + c1 * w1;
                const double nrm = std::hypot(r0, r1);
                y_vec_[0] = r0 / nrm;
                y_vec_[1] = r1 / nrm;
                return std::log(nrm);
            }
            case ProcessClass::linear:
                break;
        }
        return 0.0;
    }

  private:
    const ProcessSpec& spec_;
    int dps_ = 1;
    double state_ = 0.0;
    double ou_a_ = 0.0, ou_s_ = 1.0;
    int r_ = 1, pos_ = 0;
    std::vector<double> l2_, y2_;
    std::array<double, 2> y_vec_ = {1.0, 0.0};
};

// ---------------------------------------------------------------------------
// FFT convolution for the linear class
// ---------------------------------------------------------------------------

std::mutex g_fftw_mutex;

struct FftPlans {
    fftw_plan r2c = nullptr;
    fftw_plan c2r = nullptr;
};

FftPlans& plans_for(std::size_t nfft) {
    static std::map<std::size_t, FftPlans> cache;
    std::lock_guard<std::mutex> lock(g_fftw_mutex);
    auto it = cache.find(nfft);
    if (it != cache.end()) return it->second;
    std::vector<double> re(nfft);
    std::vector<std::complex<double>> cp(nfft / 2 + 1);
    FftPlans p;
    p.r2c = fftw_plan_dft_r2c_1d(static_cast<int>(nfft), re.data(),
                                 reinterpret_cast<fftw_complex*>(cp.data()),
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
    p.c2r = fftw_plan_dft_c2r_1d(static_cast<int>(nfft),
                                 reinterpret_cast<fftw_complex*>(cp.data()), re.data(),
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
    return cache.emplace(nfft, p).first->second;
}

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

std::uint64_t bytes_hash(const void* data, std::size_t len) {
    const auto* b = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= b[i];
        h *= 0x100000001B3ull;
    }
    return h;
}

// Valid part of the linear convolution: out[j] = sum_i c[i] eps[j + M - 1 - i].
void linear_convolve(std::span<const double> eps, std::span<const double> c,
                     std::span<double> out) {
    const std::size_t m = c.size();
    const std::size_t t = eps.size();
    if (out.size() != t - m + 1) throw std::logic_error("linear_convolve: size mismatch");
    if (m * out.size() < 2000000) {  // direct
        for (std::size_t j = 0; j < out.size(); ++j) {
            double acc = 0.0;
            const double* e = eps.data() + j + m - 1;
            for (std::size_t i = 0; i < m; ++i) acc += c[i] * e[-static_cast<long>(i)];
            out[j] = acc;
        }
        return;
    }
    // overlap-save
    const std::size_t nfft = next_pow2(std::max<std::size_t>(2 * m, 1 << 16));
    const std::size_t hop = nfft - (m - 1);
    auto& plans = plans_for(nfft);
    const std::size_t nc = nfft / 2 + 1;

    thread_local std::map<std::pair<std::uint64_t, std::size_t>, std::vector<std::complex<double>>>
        kernel_cache;
    const std::uint64_t chash = bytes_hash(c.data(), m * sizeof(double));
    auto& kspec = kernel_cache[{chash, nfft}];
    thread_local std::vector<double> re;
    thread_local std::vector<std::complex<double>> cp;
    re.assign(nfft, 0.0);
    cp.assign(nc, {0.0, 0.0});
    if (kspec.empty()) {
        std::copy(c.begin(), c.end(), re.begin());
        fftw_execute_dft_r2c(plans.r2c, re.data(), reinterpret_cast<fftw_complex*>(cp.data()));
        kspec = cp;
    }
    const double inv = 1.0 / static_cast<double>(nfft);
    for (std::size_t s = 0; s + m - 1 < t; s += hop) {
        const std::size_t take = std::min(nfft, t - s);
        std::copy(eps.begin() + s, eps.begin() + s + take, re.begin());
        std::fill(re.begin() + take, re.end(), 0.0);
        fftw_execute_dft_r2c(plans.r2c, re.data(), reinterpret_cast<fftw_complex*>(cp.data()));
        for (std::size_t i = 0; i < nc; ++i) cp[i] *= kspec[i] * inv;
        fftw_execute_dft_c2r(plans.c2r, reinterpret_cast<fftw_complex*>(cp.data()), re.data());
        // valid outputs: conv index tt in [s+m-1, s+nfft) intersect [m-1, t)
        const std::size_t lo = s + m - 1;
        const std::size_t hi = std::min(s + nfft, t);
        for (std::size_t tt = lo; tt < hi; ++tt) out[tt - (m - 1)] = re[tt - s];
    }
}

void fill_uniforms(Stream& st, std::span<double> buf) {
    for (auto& v : buf) v = st.uniform53();
}

// Apply the functional over raw values y (times 1-w .. n stored ascending) and
// write centered X_1..X_n. w = d-1.
void apply_functional(const FunctionalSpec& f, std::span<const double> y, long n, double center,
                      std::span<double> out) {
    const int d = f.d;
    const int w = d - 1;
    if (f.kind == FunctionalKind::identity) {
        for (long k = 0; k < n; ++k) out[k] = y[w + k] - center;
        return;
    }
    if (f.kind == FunctionalKind::centered_square) {
        for (long k = 0; k < n; ++k) out[k] = y[w + k] * y[w + k] - center;
        return;
    }
    if (f.kind == FunctionalKind::centered_abs) {
        for (long k = 0; k < n; ++k) out[k] = std::fabs(y[w + k]) - center;
        return;
    }
    if (f.kind == FunctionalKind::lag_product) {
        for (long k = 0; k < n; ++k) out[k] = y[w + k] * y[w + k - 1] - center;
        return;
    }
    std::vector<double> window(d);
    for (long k = 0; k < n; ++k) {
        for (int i = 0; i < d; ++i) window[i] = y[w + k - i];
        out[k] = selfnorm::apply(f, window) - center;
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// calibration
// ---------------------------------------------------------------------------

CalibrationCache::CalibrationCache(std::string file_path) : path_(std::move(file_path)) {
    std::ifstream in(path_);
    if (!in) return;
    std::uint64_t k;
    double v;
    while (in >> k >> v) values_[k] = v;
}

std::optional<double> CalibrationCache::lookup(std::uint64_t key) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

void CalibrationCache::store(std::uint64_t key, double value) {
    std::lock_guard<std::mutex> lock(mu_);
    values_[key] = value;
}

double CalibrationCache::get_or_compute(std::uint64_t key, double (*fn)(const void*),
                                        const void* ctx) {
    if (auto v = lookup(key)) return *v;
    const double v = fn(ctx);
    store(key, v);
    save();
    return v;
}

void CalibrationCache::save() const {
    if (path_.empty()) return;
    std::lock_guard<std::mutex> lock(mu_);
    const std::string tmp = path_ + ".tmp";
    {
        std::ofstream out(tmp);
        out.precision(17);
        for (const auto& [k, v] : values_) out << k << " " << v << "\n";
    }
    std::rename(tmp.c_str(), path_.c_str());
}

double calibrate_center(const ProcessSpec& spec, long calibration_steps, CalibrationCache* cache) {
    const std::uint64_t key = spec_hash(spec) ^ (0x9E37u + static_cast<std::uint64_t>(calibration_steps));
    if (cache) {
        if (auto v = cache->lookup(key)) return *v;
    }
    StreamKey sk;
    sk.master_seed = spec_hash(spec);
    sk.role = StreamRole::auxiliary;
    Stream stream = derive_stream(sk);

    const int w = spec.functional.d - 1;
    const long burn = effective_burn_in(spec);
    const int dps = innovation_draws(spec);
    double mean = 0.0;
    if (spec.cls == ProcessClass::linear) {
        const auto c = ma_coefficients(spec);
        const long m = static_cast<long>(c.size());
        const long overlap = m - 1 + w;
        const long block = 1 << 20;
        std::vector<double> u(dps);
        auto draw = [&]() {
            fill_uniforms(stream, u);
            return innovation_value(spec, u.data());
        };
        std::vector<double> carry(overlap);
        for (auto& v : carry) v = draw();
        long done = 0;
        long double acc = 0.0;
        std::vector<double> inno, yv, xv;
        while (done < calibration_steps) {
            const long take = std::min(block, calibration_steps - done);
            inno.assign(carry.begin(), carry.end());
            inno.resize(overlap + take);
            for (long i = 0; i < take; ++i) inno[overlap + i] = draw();
            yv.resize(inno.size() - m + 1);
            linear_convolve(inno, c, yv);
            xv.resize(yv.size() - w);
            apply_functional(spec.functional, yv, static_cast<long>(xv.size()), 0.0, xv);
            for (double v : xv) acc += v;
            carry.assign(inno.end() - overlap, inno.end());
            done += take;
        }
        mean = static_cast<double>(acc / calibration_steps);
    } else {
        Engine eng(spec);
        const int edps = eng.draws_per_step();
        std::vector<double> u(edps);
        const int d = spec.functional.d;
        std::vector<double> ring(d, 0.0);
        std::vector<double> window(d);
        long double acc = 0.0;
        long count = 0;
        const long total = burn + w + calibration_steps;  // keep a window warm-up of w steps
        for (long s = 0; s < total; ++s) {
            for (int i = 0; i < edps; ++i) u[i] = stream.uniform53();
            ring[s % d] = eng.step(u.data());
            if (s >= burn + w) {
                for (int i = 0; i < d; ++i) window[i] = ring[(s - i) % d];
                acc += selfnorm::apply(spec.functional, window);
                ++count;
            }
        }
        mean = static_cast<double>(acc / count);
    }
    if (cache) {
        cache->store(key, mean);
        cache->save();
    }
    return mean;
}

double functional_center(const ProcessSpec& spec, CalibrationCache* cache) {
    const auto& f = spec.functional;
    if (f.centering == Centering::calibrated) return calibrate_center(spec, 10000000, cache);

    const bool linear_like = spec.cls == ProcessClass::ar1 || spec.cls == ProcessClass::linear ||
                             spec.cls == ProcessClass::ou_sde;
    auto gamma0 = [&]() {
        const auto c = ma_coefficients(spec);
        double g = 0.0;
        for (double ci : c) g += ci * ci;
        return g;
    };
    auto gamma1 = [&]() {
        const auto c = ma_coefficients(spec);
        double g = 0.0;
        for (std::size_t i = 0; i + 1 < c.size(); ++i) g += c[i] * c[i + 1];
        return g;
    };
    switch (f.kind) {
        case FunctionalKind::identity:
            // iterated_ar: the update map is odd and every supported
            // innovation law is symmetric, so the stationary mean vanishes
            if (linear_like || spec.cls == ProcessClass::garch ||
                spec.cls == ProcessClass::iterated_ar)
                return 0.0;
            throw std::invalid_argument(
                "analytic centering unavailable for this class (unknown stationary mean); "
                "use calibrated centering");
        case FunctionalKind::centered_square:
            if (linear_like) return gamma0();
            if (spec.cls == ProcessClass::garch) {
                double csum = 0.0;
                for (double a : spec.garch_alpha) csum += a;
                for (double b : spec.garch_beta) csum += b;
                return spec.garch_mu / (1.0 - csum);
            }
            throw std::invalid_argument(
                "analytic centering unavailable for centered_square on this class; use calibrated");
        case FunctionalKind::centered_abs:
            if (linear_like && spec.law == InnovationLaw::gaussian)
                return std::sqrt(2.0 / std::numbers::pi) * std::sqrt(gamma0());
            throw std::invalid_argument(
                "analytic centering unavailable for centered_abs here; use calibrated");
        case FunctionalKind::lag_product:
            if (linear_like) return gamma1();
            if (spec.cls == ProcessClass::garch) return 0.0;  // martingale difference
            throw std::invalid_argument(
                "analytic centering unavailable for lag_product on this class; use calibrated");
        case FunctionalKind::custom:
            throw std::invalid_argument("custom functionals require calibrated centering");
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// path generation
// ---------------------------------------------------------------------------

void generate_path_into(const ProcessSpec& spec, long n, const StreamKey& key, double center,
                        std::span<double> out) {
    if (n < 1) throw std::invalid_argument("generate_path: n must be >= 1");
    if (static_cast<long>(out.size()) != n) throw std::invalid_argument("generate_path: bad buffer");
    validate(spec);
    Stream stream = derive_stream(key);
    const int w = spec.functional.d - 1;

    if (spec.cls == ProcessClass::linear) {
        const auto c = ma_coefficients(spec);
        const long m = static_cast<long>(c.size());
        const long t = m - 1 + w + n;
        std::vector<double> inno(t);
        if (innovation_draws(spec) == 1) {
            for (long i = 0; i < t; ++i) {
                const double u = stream.uniform53();
                inno[i] = innovation_value(spec, &u);
            }
        } else {
            std::vector<double> u(innovation_draws(spec));
            for (long i = 0; i < t; ++i) {
                fill_uniforms(stream, u);
                inno[i] = innovation_value(spec, u.data());
            }
        }
        std::vector<double> y(w + n);
        linear_convolve(inno, c, y);
        apply_functional(spec.functional, y, n, center, out);
        return;
    }

    Engine eng(spec);
    const long burn = effective_burn_in(spec);
    const int dps = eng.draws_per_step();
    std::vector<double> u(dps);
    std::vector<double> y(w + n);
    const long total = burn + w + n;  // times 1-burn-w .. n, keep last w+n
    for (long s = 0; s < total; ++s) {
        for (int i = 0; i < dps; ++i) u[i] = stream.uniform53();
        const double yv = eng.step(u.data());
        const long idx = s - burn;
        if (idx >= 0) y[idx] = yv;
    }
    apply_functional(spec.functional, y, n, center, out);
}

SeriesSample generate_path(const ProcessSpec& spec, long n, const StreamKey& key,
                           CalibrationCache* cache) {
    SeriesSample s;
    s.n = n;
    s.seed_key = key;
    s.burn_in_used = effective_burn_in(spec);
    s.values.resize(n);
    const double center = functional_center(spec, cache);
    generate_path_into(spec, n, key, center, s.values);
    return s;
}

// ---------------------------------------------------------------------------
// coupled generation
// ---------------------------------------------------------------------------

CouplingPair generate_coupled(const ProcessSpec& spec, long n, int l, CouplingMode mode,
                              const StreamKey& key, CalibrationCache* cache) {
    validate(spec);
    const long burn = effective_burn_in(spec);
    if (l < 1 || l > n + burn)
        throw std::invalid_argument("generate_coupled: lag l out of range [1, n + burn_in]");
    const double center = functional_center(spec, cache);
    const int w = spec.functional.d - 1;
    const int dps = spec.cls == ProcessClass::linear ? innovation_draws(spec)
                    : Engine(spec).draws_per_step();

    Stream base_stream = derive_stream(key.with_role(StreamRole::path));
    Stream prime_stream = derive_stream(key.with_role(StreamRole::coupling));

    CouplingPair pair;
    pair.lag = l;
    pair.mode = mode;

    if (spec.cls == ProcessClass::linear) {
        const auto c = ma_coefficients(spec);
        const long m = static_cast<long>(c.size());
        // innovations for times a in [n - w - m + 1, n]
        const long count = m + w;
        std::vector<double> inno(count), inno_p(count);
        std::vector<double> u(dps);
        for (long i = 0; i < count; ++i) {
            fill_uniforms(base_stream, u);
            inno[i] = innovation_value(spec, u.data());
        }
        inno_p = inno;
        const long a_min = n - w - m + 1;
        const long a_star = n - l;
        if (mode == CouplingMode::single_swap) {
            if (a_star >= a_min) {
                fill_uniforms(prime_stream, u);
                inno_p[a_star - a_min] = innovation_value(spec, u.data());
            }
        } else {
            for (long a = a_min; a <= a_star && a <= n; ++a) {
                fill_uniforms(prime_stream, u);
                inno_p[a - a_min] = innovation_value(spec, u.data());
            }
        }
        auto value_at = [&](const std::vector<double>& e) {
            std::vector<double> window(spec.functional.d);
            for (int j = 0; j <= w; ++j) {
                // Y_{n-j} = sum_i c[i] eps_{n-j-i}
                double acc = 0.0;
                const long base = n - j - a_min;  // index of eps_{n-j}
                for (long i = 0; i < m && base - i >= 0; ++i) acc += c[i] * e[base - i];
                window[j] = acc;
            }
            return selfnorm::apply(spec.functional, window) - center;
        };
        pair.x = value_at(inno);
        pair.x_prime = value_at(inno_p);
        return pair;
    }

    const long burn_w = burn + w;
    const long total = burn_w + n;  // steps s=1..total, time a = s - burn_w
    std::vector<double> draws(static_cast<std::size_t>(total) * dps);
    fill_uniforms(base_stream, draws);
    const long s_star = n - l + burn_w;  // swapped step (time n - l)
    std::vector<double> prime;
    long prime_lo = 0, prime_hi = -1;  // inclusive step range replaced
    if (mode == CouplingMode::single_swap) {
        if (s_star >= 1) {
            prime_lo = prime_hi = s_star;
            prime.resize(dps);
            fill_uniforms(prime_stream, prime);
        }
    } else {
        if (s_star >= 1) {
            prime_lo = 1;
            prime_hi = std::min(s_star, total);
            prime.resize(static_cast<std::size_t>(prime_hi - prime_lo + 1) * dps);
            fill_uniforms(prime_stream, prime);
        }
    }
    auto run = [&](bool primed) {
        Engine eng(spec);
        std::vector<double> yw(w + 1);
        for (long s = 1; s <= total; ++s) {
            const double* u = draws.data() + static_cast<std::size_t>(s - 1) * dps;
            if (primed && s >= prime_lo && s <= prime_hi && prime_hi >= prime_lo && !prime.empty())
                u = prime.data() + static_cast<std::size_t>(s - prime_lo) * dps;
            const double yv = eng.step(u);
            const long a = s - burn_w;  // time
            if (a >= n - w) yw[a - (n - w)] = yv;
        }
        std::vector<double> window(spec.functional.d);
        for (int i = 0; i <= w; ++i) window[i] = yw[w - i];
        return selfnorm::apply(spec.functional, window) - center;
    };
    pair.x = run(false);
    pair.x_prime = run(true);
    return pair;
}

}  // namespace selfnorm
