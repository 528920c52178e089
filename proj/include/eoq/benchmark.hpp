#pragma once

// Randomized benchmarking with leakage tracking.
//
// Each shot prepares a singlet at the SPAM pair, routes it into the qubit,
// runs random Cliffords plus the recovery, routes back and reads the singlet
// probability at the SPAM pair.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eoq/clifford.hpp"
#include "eoq/encoding.hpp"
#include "eoq/fit.hpp"
#include "eoq/lattice.hpp"
#include "eoq/noise.hpp"
#include "eoq/parallel.hpp"
#include "eoq/pulse_seq.hpp"
#include "eoq/rng.hpp"
#include "eoq/spin_sim.hpp"

namespace eoq {

struct RBConfig {
    EncodedFrame frame;
    std::pair<DotId, DotId> spam_pair;
    std::vector<int> lengths;
    int n_sequences = 20;
    int shots = 100;
    double t_pulse_s = 5e-9;
    double t_idle_s = 10e-9;
    QuasiStaticNoise noise;
    double readout_error = 0.0;
    double injected_depolarizing = 0.0;  // per Clifford, 0 disables
    bool probability_mode = true;
    std::uint64_t seed = 0;
    unsigned threads = 1;

    void validate() const {
        if (lengths.empty()) throw std::invalid_argument("RB needs at least one sequence length");
        for (std::size_t i = 0; i < lengths.size(); ++i) {
            if (lengths[i] < 1) throw std::invalid_argument("RB lengths must be >= 1");
            if (i && lengths[i] <= lengths[i - 1]) throw std::invalid_argument("RB lengths must strictly increase");
        }
        if (n_sequences < 1 || shots < 1) throw std::invalid_argument("n_sequences and shots must be >= 1");
        if (t_pulse_s < 0.0 || t_idle_s < 0.0) throw std::invalid_argument("pulse timings must be >= 0");
        for (double p : {readout_error, injected_depolarizing})
            if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("probabilities must lie in [0, 1]");
    }
};

/// Per (length, sequence) averages over shots. `leakage` is the quadruplet
/// population gained between routing in and the end of the sequence; it is
/// empty unless the run was in probability mode.
struct RBRawData {
    std::vector<int> lengths;
    int n_sequences = 0;
    std::vector<std::vector<double>> survival;
    std::vector<std::vector<double>> leakage;

    bool has_leakage() const { return !leakage.empty(); }
};

/// Random Cliffords of sequence (length index, sequence index).
inline std::vector<int> rb_sequence(std::uint64_t seed, std::size_t length_index, std::size_t sequence_index,
                                    int length) {
    auto rng = substream(seed, "rb-sequence", {length_index, sequence_index});
    std::uniform_int_distribution<int> pick(0, 23);
    std::vector<int> seq(length);
    for (auto& c : seq) c = pick(rng);
    return seq;
}

inline RBRawData run_rb(const GridSpec& grid, const RBConfig& cfg) {
    cfg.validate();
    const auto& sp = cfg.spam_pair;
    const PulseSeq route = route_singlet(grid, sp, cfg.frame, cfg.t_pulse_s, cfg.t_idle_s);
    const PulseSeq back = reversed(route);
    const SpinPair spam{grid.index(sp.first), grid.index(sp.second)};
    const AxisTable axes(grid);
    for (const auto& label : {cfg.frame.z_axis, cfg.frame.n_axis}) (void)axes(label);  // rejects dead axes

    // Ideal logical Paulis for the depolarizing twirl: I, X, Y, Z.
    std::array<PulseSeq, 4> paulis;
    for (int k = 1; k < 4; ++k) paulis[k] = compile_sequence(cfg.frame, {k}, 0.0, 0.0);

    const std::size_t nl = cfg.lengths.size(), ns = static_cast<std::size_t>(cfg.n_sequences);
    RBRawData out{cfg.lengths, cfg.n_sequences, std::vector<std::vector<double>>(nl, std::vector<double>(ns)), {}};
    if (cfg.probability_mode) out.leakage = out.survival;

    parallel_for(nl * ns, cfg.threads, [&](std::size_t task) {
        const std::size_t li = task / ns, si = task % ns;
        auto cliffords = rb_sequence(cfg.seed, li, si, cfg.lengths[li]);
        cliffords.push_back(clifford_inverse(clifford_product(cliffords)));
        std::vector<PulseSeq> blocks;
        for (int c : cliffords) blocks.push_back(compile_sequence(cfg.frame, {c}, cfg.t_pulse_s, cfg.t_idle_s));

        double surv = 0.0, leak = 0.0;
        for (int shot = 0; shot < cfg.shots; ++shot) {
            auto rng = substream(cfg.seed, "rb-shot", {li, si, static_cast<std::uint64_t>(shot)});
            const FieldSpec f = sample_fields(grid, cfg.noise, rng);
            std::uniform_real_distribution<double> u01(0.0, 1.0);
            PureState s = run_pulses(prepare_state(grid.dot_count(), spam, AllUp{}), axes, route, f);
            // Routing errors can mix a spectator into the frame; only leakage
            // gained during the Clifford sequence is attributed to the gates.
            const double leak_in = cfg.probability_mode ? leakage(s, cfg.frame) : 0.0;
            for (const auto& block : blocks) {
                s = run_pulses(std::move(s), axes, block, f);
                if (cfg.injected_depolarizing > 0.0 && u01(rng) < cfg.injected_depolarizing) {
                    int k = std::uniform_int_distribution<int>(0, 3)(rng);
                    s = run_pulses(std::move(s), axes, paulis[k], f);
                }
            }
            if (cfg.probability_mode) leak += leakage(s, cfg.frame) - leak_in;
            s = run_pulses(std::move(s), axes, back, f);
            const double ps = singlet_probability(s, spam);
            const double p_read = (1.0 - cfg.readout_error) * ps + cfg.readout_error * (1.0 - ps);
            surv += cfg.probability_mode ? p_read : (u01(rng) < p_read ? 1.0 : 0.0);
        }
        out.survival[li][si] = std::clamp(surv / cfg.shots, 0.0, 1.0);
        if (cfg.probability_mode) out.leakage[li][si] = std::clamp(leak / cfg.shots, 0.0, 1.0);
    });
    return out;
}

struct FitQuality {
    double chi2 = 0.0;
    int dof = 0;
    double chi2_reduced = 0.0;
    bool weighted = false;  // true when per-length standard errors were used
};

struct RBResult {
    double epsilon = 0.0;
    double epsilon_se = 0.0;
    double gamma = 0.0;  // initial-slope leakage per Clifford, C (1 - beta)
    double gamma_se = 0.0;
    double A = 0.0, alpha = 1.0, B = 0.0;
    double C = 0.0, beta = 1.0;
    FitQuality survival_fit;
    FitQuality leakage_fit;
    bool survival_degenerate = false;  // constant survival: epsilon pinned to 0
    bool leakage_fitted = false;
    bool leakage_degenerate = false;
};

namespace detail {

struct LengthStats {
    std::vector<double> x, mean, se;
    bool weighted = true;
};

inline LengthStats length_stats(const std::vector<int>& lengths, const std::vector<std::vector<double>>& v) {
    LengthStats s;
    for (std::size_t i = 0; i < lengths.size(); ++i) {
        const auto& row = v.at(i);
        if (row.empty()) throw std::invalid_argument("RB data has an empty length row");
        double m = 0.0;
        for (double x : row) m += x;
        m /= static_cast<double>(row.size());
        double var = 0.0;
        for (double x : row) var += (x - m) * (x - m);
        double se = row.size() > 1 ? std::sqrt(var / static_cast<double>(row.size() - 1) / row.size()) : 0.0;
        s.x.push_back(lengths[i]);
        s.mean.push_back(m);
        s.se.push_back(se);
        if (!(se > 0.0)) s.weighted = false;
    }
    return s;
}

/// Fits `model(params, L)` to per-length means; returns params and the
/// covariance scaled by the reduced chi-square where appropriate.
struct WeightedFit {
    Eigen::VectorXd params;
    Eigen::MatrixXd cov;
    FitQuality quality;
};

template <typename Model>
WeightedFit weighted_fit(const LengthStats& s, Model model, Eigen::VectorXd start,
                         std::function<void(Eigen::VectorXd&)> project) {
    const std::size_t n = s.x.size();
    ResidualFn resid = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(n);
        for (std::size_t i = 0; i < n; ++i) {
            double w = s.weighted ? 1.0 / s.se[i] : 1.0;
            r(i) = (model(p, s.x[i]) - s.mean[i]) * w;
        }
        return r;
    };
    LmOptions opt;
    opt.project = std::move(project);
    LmResult fit = levenberg_marquardt(resid, start, opt);
    WeightedFit out;
    out.params = fit.params;
    out.quality.chi2 = fit.chi2;
    out.quality.dof = static_cast<int>(n) - static_cast<int>(start.size());
    out.quality.chi2_reduced = out.quality.dof > 0 ? fit.chi2 / out.quality.dof : 0.0;
    out.quality.weighted = s.weighted;
    double scale = s.weighted ? std::max(1.0, out.quality.chi2_reduced) : out.quality.chi2_reduced;
    out.cov = normal_covariance(fit.jacobian) * scale;
    return out;
}

/// (1 - (1 - k)^L) / k, continuous at k = 0.
inline double saturation(double k, double L) {
    if (k < 1e-14) return L;
    return -std::expm1(L * std::log1p(-k)) / k;
}

}  // namespace detail

/// Fits survival A alpha^L + B and leakage C (1 - beta^L).
///
/// epsilon = (1 - alpha) / 2. The leakage fit is parameterised by the
/// initial-slope rate gamma = C (1 - beta) and kappa = 1 - beta.
inline RBResult fit_rb(const RBRawData& data) {
    std::vector<int> distinct = data.lengths;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 3) throw std::invalid_argument("RB fit needs at least 3 distinct lengths");
    if (data.survival.size() != data.lengths.size()) throw std::invalid_argument("RB data shape mismatch");

    RBResult res;
    auto surv = detail::length_stats(data.lengths, data.survival);
    const double lo = *std::min_element(surv.mean.begin(), surv.mean.end());
    const double hi = *std::max_element(surv.mean.begin(), surv.mean.end());
    if (hi - lo < 1e-12) {
        res.survival_degenerate = true;
        res.A = 0.0;
        res.B = hi;
    } else {
        // Start: B = 1/2, alpha from a log-linear regression of mean - B.
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int m = 0;
        for (std::size_t i = 0; i < surv.x.size(); ++i) {
            double d = surv.mean[i] - 0.5;
            if (d <= 1e-6) continue;
            sx += surv.x[i], sy += std::log(d), sxx += surv.x[i] * surv.x[i], sxy += surv.x[i] * std::log(d), ++m;
        }
        double slope = m >= 2 ? (m * sxy - sx * sy) / (m * sxx - sx * sx) : -1e-3;
        double alpha0 = std::clamp(std::exp(slope), 0.5, 1.0 - 1e-9);
        double a0 = m >= 2 ? std::exp((sy - slope * sx) / m) : 0.5;
        Eigen::VectorXd start(3);
        start << a0, alpha0, 0.5;
        auto fit = detail::weighted_fit(
            surv, [](const Eigen::VectorXd& p, double L) { return p(0) * std::pow(p(1), L) + p(2); }, start,
            [](Eigen::VectorXd& p) {
                p(0) = std::clamp(p(0), -1.0, 1.0);
                p(1) = std::clamp(p(1), 1e-9, 1.0);
                p(2) = std::clamp(p(2), 0.0, 1.0);
            });
        res.A = fit.params(0);
        res.alpha = fit.params(1);
        res.B = fit.params(2);
        res.survival_fit = fit.quality;
        res.epsilon = std::clamp((1.0 - res.alpha) / 2.0, 0.0, 1.0);
        res.epsilon_se = std::sqrt(std::max(fit.cov(1, 1), 0.0)) / 2.0;
    }

    if (data.has_leakage()) {
        auto leak = detail::length_stats(data.lengths, data.leakage);
        const double lmax = *std::max_element(leak.mean.begin(), leak.mean.end());
        res.leakage_fitted = true;
        if (lmax < 1e-12) {
            res.leakage_degenerate = true;
            res.C = 0.0;
        } else {
            // Start from the slope of the shortest length.
            Eigen::VectorXd start(2);
            start << std::max(leak.mean[0] / leak.x[0], 1e-12), 1e-3;
            auto fit = detail::weighted_fit(
                leak, [](const Eigen::VectorXd& p, double L) { return p(0) * detail::saturation(p(1), L); }, start,
                [](Eigen::VectorXd& p) { p(1) = std::clamp(p(1), 0.0, 1.0 - 1e-12); });
            res.gamma = std::clamp(fit.params(0), 0.0, 1.0);
            res.gamma_se = std::sqrt(std::max(fit.cov(0, 0), 0.0));
            res.beta = 1.0 - fit.params(1);
            res.C = fit.params(1) > 0.0 ? fit.params(0) / fit.params(1) : std::numeric_limits<double>::infinity();
            res.leakage_fit = fit.quality;
        }
    }
    return res;
}

/// Inverse-variance weighted mean of (value, standard error) estimates.
struct Pooled {
    double mean = 0.0;
    double se = 0.0;
};

inline Pooled inverse_variance_pool(const std::vector<std::pair<double, double>>& estimates) {
    if (estimates.empty()) throw std::invalid_argument("nothing to pool");
    double wsum = 0.0, acc = 0.0;
    for (auto [v, se] : estimates) {
        if (!(se > 0.0)) throw std::invalid_argument("pooling needs positive standard errors");
        double w = 1.0 / (se * se);
        wsum += w;
        acc += w * v;
    }
    return {acc / wsum, std::sqrt(1.0 / wsum)};
}

struct OracleReport {
    double p = 0.0;
    double expected_epsilon = 0.0;
    RBResult fit;
    double z_score = 0.0;  // |epsilon - p/2| / se
    bool pass = false;
    std::string diagnostics;
};

/// Runs RB with only the injected depolarizing channel and checks
/// epsilon = p/2 within three standard errors.
inline OracleReport validate_rb_oracle(const GridSpec& grid, RBConfig cfg, double p) {
    if (!(p >= 0.0 && p <= 0.05)) throw std::invalid_argument("oracle p must lie in [0, 0.05]");
    cfg.noise = QuasiStaticNoise{};
    cfg.readout_error = 0.0;
    cfg.injected_depolarizing = p;
    cfg.probability_mode = true;
    OracleReport r;
    r.p = p;
    r.expected_epsilon = p / 2.0;
    r.fit = fit_rb(run_rb(grid, cfg));
    const double diff = std::abs(r.fit.epsilon - r.expected_epsilon);
    if (r.fit.epsilon_se > 0.0) {
        r.z_score = diff / r.fit.epsilon_se;
        r.pass = r.z_score <= 3.0;
    } else {
        r.z_score = diff < 1e-12 ? 0.0 : std::numeric_limits<double>::infinity();
        r.pass = diff < 1e-12;
    }
    r.diagnostics = "epsilon " + std::to_string(r.fit.epsilon) + " +/- " + std::to_string(r.fit.epsilon_se) +
                    ", expected " + std::to_string(r.expected_epsilon) + ", z " + std::to_string(r.z_score);
    return r;
}

}  // namespace eoq
