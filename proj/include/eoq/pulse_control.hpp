#pragma once

// Voltage-to-exchange model, pulse calibration, fingerprint maps and
// N_osc extraction.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eoq/encoding.hpp"
#include "eoq/fit.hpp"
#include "eoq/lattice.hpp"
#include "eoq/noise.hpp"
#include "eoq/parallel.hpp"
#include "eoq/pulse_seq.hpp"
#include "eoq/rng.hpp"
#include "eoq/spin_sim.hpp"

namespace eoq {

/// J = j0 * exp(barrier / v_b0) * (1 + (detuning / eps0)^2).
struct ExchangeModel {
    double j0_hz = 10e6;
    double v_b0 = 0.01;
    double eps0 = 0.005;

    void validate() const {
        if (!(j0_hz > 0.0) || !(v_b0 > 0.0) || !(eps0 > 0.0))
            throw std::invalid_argument("exchange model requires j0_hz, v_b0, eps0 > 0");
    }
};

inline double j_of_v(const ExchangeModel& m, double barrier_v, double detuning_v) {
    const double x = detuning_v / m.eps0;
    return m.j0_hz * std::exp(barrier_v / m.v_b0) * (1.0 + x * x);
}

struct VoltageRange {
    double min_v = -std::numeric_limits<double>::infinity();
    double max_v = std::numeric_limits<double>::infinity();
};

class CalibrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PulseSpec {
    std::string axis;
    double theta_target = 0.0;
    double t_pulse_s = 0.0;
    double barrier_v = 0.0;
    double detuning_v = 0.0;
};

inline double realized_angle(const ExchangeModel& m, const PulseSpec& p) {
    return 2.0 * std::numbers::pi * j_of_v(m, p.barrier_v, p.detuning_v) * p.t_pulse_s;
}

/// Barrier voltage giving theta_target in t_pulse_s at the symmetric point.
inline PulseSpec calibrate_pulse(const ExchangeModel& m, const std::string& axis, double theta_target,
                                 double t_pulse_s, const VoltageRange& barrier_range = {}) {
    m.validate();
    if (!(theta_target > 0.0 && theta_target <= 2.0 * std::numbers::pi))
        throw std::invalid_argument("theta_target must lie in (0, 2pi]");
    if (!(t_pulse_s > 0.0)) throw std::invalid_argument("t_pulse_s must be > 0");
    const double j = theta_target / (2.0 * std::numbers::pi * t_pulse_s);
    const double vb = m.v_b0 * std::log(j / m.j0_hz);
    if (vb < barrier_range.min_v || vb > barrier_range.max_v)
        throw CalibrationError("required exchange " + std::to_string(j) + " Hz needs barrier " + std::to_string(vb) +
                               " V, outside the configured range");
    return {axis, theta_target, t_pulse_s, vb, 0.0};
}

/// Timed pulse carrying the angle the model actually realizes.
inline Pulse to_pulse(const ExchangeModel& m, const PulseSpec& p, double t_idle_s = 0.0) {
    return {p.axis, realized_angle(m, p), p.t_pulse_s, t_idle_s};
}

namespace detail {

inline std::pair<int, int> spins_of(const GridSpec& grid, std::pair<DotId, DotId> p) {
    return {grid.index(p.first), grid.index(p.second)};
}

/// Follows the singlet through a swap-only route; throws on anything else.
inline std::pair<DotId, DotId> follow_route(const GridSpec& grid, std::pair<DotId, DotId> pair, const PulseSeq& route) {
    for (const auto& p : route) {
        auto ax = grid.find_axis(p.axis);
        if (!grid.axis_live(ax)) throw std::invalid_argument("invalid route: axis " + p.axis + " is dead");
        if (std::abs(p.theta - std::numbers::pi) > 1e-9)
            throw std::invalid_argument("invalid route: pulse on " + p.axis + " is not a swap");
        auto move = [&](DotId d) { return d == ax.a ? ax.b : d == ax.b ? ax.a : d; };
        pair = {move(pair.first), move(pair.second)};
    }
    return pair;
}

/// Validates a fingerprint setup and returns the target axis' spins and slot.
inline AxisTable::Entry check_fingerprint_route(const GridSpec& grid, std::pair<DotId, DotId> spam,
                                                const std::string& target_axis, const PulseSeq& route) {
    if (!grid.dot_live(spam.first) || !grid.dot_live(spam.second) || !grid.live_link(spam.first, spam.second))
        throw std::invalid_argument("spam pair must be two live, coupled dots");
    AxisTable table(grid);
    auto target = table(target_axis);
    auto end = follow_route(grid, spam, route);
    auto ax = grid.find_axis(target_axis);
    int shared = ax.touches(end.first) + ax.touches(end.second);
    if (shared != 1)
        throw std::invalid_argument("invalid route: singlet does not end with exactly one member on axis " +
                                    target_axis);
    return target;
}

}  // namespace detail

/// Shortest swap route leaving exactly one singlet member on `target_axis`.
inline PulseSeq fingerprint_route(const GridSpec& grid, std::pair<DotId, DotId> spam, const std::string& target_axis,
                                  double t_pulse_s = 0.0, double t_idle_s = 0.0) {
    auto ax = grid.find_axis(target_axis);
    if (!grid.axis_live(ax)) throw std::invalid_argument("axis " + target_axis + " is dead");
    return route_singlet_to(
        grid, spam, [&](DotId u, DotId v) { return ax.touches(u) + ax.touches(v) == 1; }, t_pulse_s, t_idle_s);
}

struct FingerprintMap {
    std::vector<double> v1;  // barrier voltages
    std::vector<double> v2;  // detuning voltages
    std::vector<double> p_singlet;  // row-major, |v1| x |v2|

    double at(std::size_t i, std::size_t j) const { return p_singlet.at(i * v2.size() + j); }
};

struct FingerprintSpec {
    std::pair<DotId, DotId> spam_pair;
    std::string target_axis;
    PulseSeq route;
    std::vector<double> v1;
    std::vector<double> v2;
    double t_evolve_s = 0.0;
    QuasiStaticNoise noise;
    int shots = 1;
    bool probability_mode = true;  // average exact P_S instead of sampling outcomes
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

/// Singlet return probability after route, exchange on the target axis, and
/// the reversed route. `fields` must be sampled for `grid`.
inline double fingerprint_shot(const GridSpec& grid, SpinPair spam, const AxisTable::Entry& target,
                               const PulseSeq& route, double j_hz, double t_evolve_s, const FieldSpec& fields) {
    AxisTable table(grid);
    PureState s = prepare_state(grid.dot_count(), spam, AllUp{});
    s = run_pulses(std::move(s), table, route, fields);
    s = evolve_segment(std::move(s), ActiveExchange{target.spins, j_hz, target.slot}, t_evolve_s, fields);
    s = run_pulses(std::move(s), table, reversed(route), fields);
    return singlet_probability(s, spam);
}

inline FingerprintMap simulate_fingerprint(const GridSpec& grid, const ExchangeModel& model,
                                           const FingerprintSpec& spec) {
    model.validate();
    if (spec.shots < 1) throw std::invalid_argument("shots must be >= 1");
    if (!(spec.t_evolve_s >= 0.0)) throw std::invalid_argument("t_evolve_s must be >= 0");
    auto target = detail::check_fingerprint_route(grid, spec.spam_pair, spec.target_axis, spec.route);
    auto spam = detail::spins_of(grid, spec.spam_pair);

    FingerprintMap map{spec.v1, spec.v2, std::vector<double>(spec.v1.size() * spec.v2.size())};
    parallel_for(map.p_singlet.size(), spec.threads, [&](std::size_t cell) {
        const double j = j_of_v(model, spec.v1[cell / spec.v2.size()], spec.v2[cell % spec.v2.size()]);
        double acc = 0.0;
        for (int shot = 0; shot < spec.shots; ++shot) {
            auto rng = substream(spec.seed, "fingerprint", {cell, static_cast<std::uint64_t>(shot)});
            FieldSpec f = sample_fields(grid, spec.noise, rng);
            double p = fingerprint_shot(grid, spam, target, spec.route, j, spec.t_evolve_s, f);
            if (spec.probability_mode)
                acc += p;
            else
                acc += std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p ? 1.0 : 0.0;
        }
        map.p_singlet[cell] = std::clamp(acc / spec.shots, 0.0, 1.0);
    });
    return map;
}

struct TraceSpec {
    std::pair<DotId, DotId> spam_pair;
    std::string target_axis;
    PulseSeq route;
    double j_hz = 0.0;
    std::vector<double> times_s;
    QuasiStaticNoise noise;
    int samples = 1;
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

/// Noise-averaged P_S(t) at fixed exchange: one quasi-static draw per sample,
/// shared by every time point of that sample.
inline std::vector<double> simulate_exchange_trace(const GridSpec& grid, const TraceSpec& spec) {
    if (spec.samples < 1) throw std::invalid_argument("samples must be >= 1");
    auto target = detail::check_fingerprint_route(grid, spec.spam_pair, spec.target_axis, spec.route);
    auto spam = detail::spins_of(grid, spec.spam_pair);
    AxisTable table(grid);
    const std::size_t nt = spec.times_s.size();
    std::vector<std::vector<double>> per_sample(spec.samples);
    parallel_for(per_sample.size(), spec.threads, [&](std::size_t k) {
        auto rng = substream(spec.seed, "exchange-trace", {k});
        FieldSpec f = sample_fields(grid, spec.noise, rng);
        PureState routed = run_pulses(prepare_state(grid.dot_count(), spam, AllUp{}), table, spec.route, f);
        auto back = reversed(spec.route);
        auto& out = per_sample[k];
        out.resize(nt);
        for (std::size_t i = 0; i < nt; ++i) {
            PureState s = evolve_segment(routed, ActiveExchange{target.spins, spec.j_hz, target.slot},
                                         spec.times_s[i], f);
            out[i] = singlet_probability(run_pulses(std::move(s), table, back, f), spam);
        }
    });
    std::vector<double> mean(nt, 0.0);
    for (const auto& v : per_sample)
        for (std::size_t i = 0; i < nt; ++i) mean[i] += v[i];
    for (auto& m : mean) m /= spec.samples;
    return mean;
}

struct NoscEstimate {
    bool bounded = false;
    double n_osc = std::numeric_limits<double>::infinity();
    double frequency_hz = 0.0;
    double tau_s = std::numeric_limits<double>::infinity();
    int power = 2;
    double amplitude = 0.0;
    double phase = 0.0;
    double offset = 0.0;
    double residual_rms = 0.0;
    int iterations = 0;
};

namespace detail {

inline std::complex<double> dft_at(const std::vector<double>& u, const std::vector<double>& y, double f) {
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) acc += y[i] * std::polar(1.0, -2.0 * std::numbers::pi * f * u[i]);
    return acc;
}

}  // namespace detail

/// Fits A cos(2 pi f t + phi) exp(-(t/tau)^p) + c to a P_S trace.
///
/// The fit runs on time rescaled to [0, 1], so jointly rescaling time and
/// frequency leaves the result unchanged.
inline NoscEstimate extract_n_osc(const std::vector<double>& times_s, const std::vector<double>& p_singlet,
                                  int power = 2) {
    if (power != 1 && power != 2) throw std::invalid_argument("envelope power must be 1 or 2");
    const std::size_t n = times_s.size();
    if (n != p_singlet.size()) throw std::invalid_argument("trace times and values differ in length");
    if (n < 64) throw std::invalid_argument("trace needs at least 64 samples");
    for (std::size_t i = 1; i < n; ++i)
        if (!(times_s[i] > times_s[i - 1])) throw std::invalid_argument("trace times must be strictly increasing");

    const double t0 = times_s.front(), span = times_s.back() - times_s.front();
    std::vector<double> u(n), y(n);
    double mean = 0.0;
    for (double v : p_singlet) mean += v;
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        u[i] = (times_s[i] - t0) / span;
        y[i] = p_singlet[i] - mean;
    }

    // Dominant spectral peak on the 1/span grid, refined by golden section.
    const std::size_t kmax = n / 2;
    std::size_t kbest = 1;
    double best = -1.0;
    for (std::size_t k = 1; k <= kmax; ++k) {
        double m = std::abs(detail::dft_at(u, y, static_cast<double>(k)));
        if (m > best) best = m, kbest = k;
    }
    double lo = kbest - 1.0, hi = kbest + 1.0;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 60; ++it) {
        double a = hi - gr * (hi - lo), b = lo + gr * (hi - lo);
        if (std::abs(detail::dft_at(u, y, a)) > std::abs(detail::dft_at(u, y, b)))
            hi = b;
        else
            lo = a;
    }
    const double f0 = 0.5 * (lo + hi);
    if (f0 < 8.0) throw std::invalid_argument("trace must span at least 8 oscillation periods");
    if (static_cast<double>(n - 1) / f0 < 8.0)
        throw std::invalid_argument("trace must be sampled at >= 8 points per period");
    const double phi0 = std::arg(detail::dft_at(u, y, f0));

    // Envelope: per-period RMS amplitude, regressed in log against u^p.
    std::vector<double> xs, ls;
    for (double w0 = 0.0; w0 + 1.0 / f0 <= 1.0 + 1e-12; w0 += 1.0 / f0) {
        double ss = 0.0;
        int cnt = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (u[i] >= w0 && u[i] < w0 + 1.0 / f0) ss += y[i] * y[i], ++cnt;
        if (cnt < 4) continue;
        double amp = std::sqrt(2.0 * ss / cnt);
        if (!ls.empty() && amp < 0.1 * std::exp(ls.front())) break;
        xs.push_back(std::pow(w0 + 0.5 / f0, power));
        ls.push_back(std::log(std::max(amp, 1e-300)));
    }
    double gamma0 = 0.0, a0 = std::sqrt(2.0) * std::sqrt(std::inner_product(y.begin(), y.end(), y.begin(), 0.0) / n);
    if (xs.size() >= 2) {
        Eigen::MatrixXd x(xs.size(), 2);
        Eigen::VectorXd l(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) x(i, 0) = 1.0, x(i, 1) = xs[i], l(i) = ls[i];
        Eigen::Vector2d c = x.colPivHouseholderQr().solve(l);
        a0 = std::exp(c(0));
        if (c(1) < 0.0) gamma0 = std::pow(-c(1), 1.0 / power);
    } else if (xs.size() == 1) {
        gamma0 = 2.0 * f0;  // gone within a period
    }

    auto model = [&](const Eigen::VectorXd& q, double ui) {
        return q(0) * std::cos(2.0 * std::numbers::pi * q(1) * ui + q(2)) * std::exp(-std::pow(std::abs(q(3) * ui), power)) +
               q(4);
    };
    ResidualFn resid = [&](const Eigen::VectorXd& q) {
        Eigen::VectorXd r(n);
        for (std::size_t i = 0; i < n; ++i) r(i) = model(q, u[i]) - p_singlet[i];
        return r;
    };
    Eigen::VectorXd start(5);
    start << a0, f0, phi0, gamma0, mean;
    LmResult fit = levenberg_marquardt(resid, start);

    NoscEstimate est;
    est.power = power;
    est.amplitude = fit.params(0);
    est.phase = fit.params(2);
    est.offset = fit.params(4);
    est.frequency_hz = std::abs(fit.params(1)) / span;
    est.iterations = fit.iterations;
    est.residual_rms = std::sqrt(fit.chi2 / static_cast<double>(n));
    const double gamma = std::abs(fit.params(3));
    if (est.amplitude < 0.0) est.amplitude = -est.amplitude, est.phase += std::numbers::pi;
    est.phase = std::remainder(est.phase, 2.0 * std::numbers::pi);
    if (gamma > 0.1) {  // tau under ten trace durations
        est.bounded = true;
        est.tau_s = span / gamma;
        est.n_osc = est.frequency_hz * est.tau_s;
    }
    return est;
}

/// Closed-form N_osc for Gaussian quasi-static noise of relative std sigma_rel.
inline double gaussian_n_osc(double sigma_rel) { return 1.0 / (std::sqrt(2.0) * std::numbers::pi * sigma_rel); }

}  // namespace eoq
