#pragma once

// State-vector dynamics of up to 12 spin-1/2 electrons under single-axis
// exchange pulses and static Zeeman fields.
//
// Basis: bit k of an amplitude index is spin k, 0 = up, 1 = down. When a
// grid register is simulated, spin k is dot k in row-major order.
//
// Exchange convention: a pulse of angle theta on pair (i,j) applies
//   U(theta) = P_triplet + exp(-i theta) P_singlet,
// i.e. H = J P_singlet (Hz) with theta = 2 pi J t. U(pi) is exactly SWAP and
// U(2 pi) is exactly the identity.

#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "eoq/rng.hpp"

namespace eoq {

using cplx = std::complex<double>;
using SpinPair = std::pair<int, int>;

inline constexpr int kMaxSpins = 12;

class PureState {
public:
    PureState() = default;
    explicit PureState(int n_spins) : n_(n_spins) {
        if (n_spins < 1 || n_spins > kMaxSpins)
            throw std::invalid_argument("n_spins must be in [1, " + std::to_string(kMaxSpins) + "]");
        amps_.assign(std::size_t{1} << n_spins, cplx{0.0, 0.0});
        amps_[0] = 1.0;
    }
    PureState(int n_spins, std::vector<cplx> amplitudes) : n_(n_spins), amps_(std::move(amplitudes)) {
        if (n_spins < 1 || n_spins > kMaxSpins || amps_.size() != (std::size_t{1} << n_spins))
            throw std::invalid_argument("amplitude vector size must be 2^n_spins");
    }

    int n_spins() const { return n_; }
    std::size_t dim() const { return amps_.size(); }
    const std::vector<cplx>& amplitudes() const { return amps_; }
    std::vector<cplx>& amplitudes() { return amps_; }
    cplx operator[](std::size_t i) const { return amps_[i]; }
    cplx& operator[](std::size_t i) { return amps_[i]; }

    double norm() const {
        double s = 0.0;
        for (auto& a : amps_) s += std::norm(a);
        return std::sqrt(s);
    }
    void normalize() {
        double n = norm();
        if (n == 0.0) throw std::domain_error("cannot normalize a zero state");
        for (auto& a : amps_) a /= n;
    }

    void check_pair(SpinPair p) const {
        if (p.first == p.second || p.first < 0 || p.second < 0 || p.first >= n_ || p.second >= n_)
            throw std::invalid_argument("spin pair (" + std::to_string(p.first) + "," + std::to_string(p.second) +
                                        ") invalid for " + std::to_string(n_) + " spins");
    }

private:
    int n_ = 0;
    std::vector<cplx> amps_;
};

inline cplx inner(const PureState& a, const PureState& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("inner product of states with different sizes");
    cplx s = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

inline double fidelity(const PureState& a, const PureState& b) { return std::norm(inner(a, b)); }

/// Sum over spins of s_z (+1/2 up, -1/2 down), weighted by population.
inline double total_sz(const PureState& s) {
    double m = 0.0;
    for (std::size_t x = 0; x < s.dim(); ++x) {
        int down = std::popcount(static_cast<unsigned>(x));
        m += std::norm(s[x]) * (0.5 * s.n_spins() - down);
    }
    return m;
}

/// One spinor (up, down) per spin.
using Spinor = std::array<cplx, 2>;

struct AllUp {};
struct ProductList {
    std::vector<Spinor> spinors;
};
struct RandomProduct {
    std::uint64_t seed = 0;
};
using SpectatorSpec = std::variant<AllUp, ProductList, RandomProduct>;

inline Spinor random_spinor(Engine& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Spinor s{cplx{g(rng), g(rng)}, cplx{g(rng), g(rng)}};
    double n = std::sqrt(std::norm(s[0]) + std::norm(s[1]));
    return {s[0] / n, s[1] / n};
}

/// Singlet (|ud> - |du>)/sqrt2 on `singlet_pair`, spectators per `spectators`.
inline PureState prepare_state(int n_spins, std::optional<SpinPair> singlet_pair,
                               const SpectatorSpec& spectators = AllUp{}) {
    PureState st(n_spins);
    if (singlet_pair) st.check_pair(*singlet_pair);

    std::vector<Spinor> spin(n_spins, Spinor{1.0, 0.0});
    if (auto* pl = std::get_if<ProductList>(&spectators)) {
        if (static_cast<int>(pl->spinors.size()) != n_spins)
            throw std::invalid_argument("product-list spectator spec needs one spinor per spin");
        spin = pl->spinors;
    } else if (auto* rp = std::get_if<RandomProduct>(&spectators)) {
        auto rng = substream(rp->seed, "spectators");
        for (auto& s : spin) s = random_spinor(rng);
    }

    auto& a = st.amplitudes();
    const double r = 1.0 / std::sqrt(2.0);
    for (std::size_t x = 0; x < st.dim(); ++x) {
        cplx amp = 1.0;
        for (int k = 0; k < n_spins; ++k) {
            if (singlet_pair && (k == singlet_pair->first || k == singlet_pair->second)) continue;
            amp *= spin[k][(x >> k) & 1];
        }
        if (singlet_pair) {
            int bi = (x >> singlet_pair->first) & 1, bj = (x >> singlet_pair->second) & 1;
            amp *= (bi == 0 && bj == 1) ? r : (bi == 1 && bj == 0) ? -r : 0.0;
        }
        a[x] = amp;
    }
    st.normalize();
    return st;
}

namespace detail {

// Applies the 2x2 block [[m00, m01], [m10, m11]] on the (|ud>, |du>) subspace of
// pair (i,j) and the phases t_uu, t_dd on |uu>, |dd>.
inline void apply_pair_block(PureState& s, SpinPair p, cplx m00, cplx m01, cplx m10, cplx m11, cplx t_uu,
                             cplx t_dd) {
    const std::size_t bi = std::size_t{1} << p.first, bj = std::size_t{1} << p.second;
    auto& a = s.amplitudes();
    for (std::size_t x = 0; x < s.dim(); ++x) {
        if (x & (bi | bj)) continue;
        std::size_t ud = x | bj, du = x | bi, dd = x | bi | bj;
        cplx v_ud = a[ud], v_du = a[du];
        a[ud] = m00 * v_ud + m01 * v_du;
        a[du] = m10 * v_ud + m11 * v_du;
        a[x] *= t_uu;
        a[dd] *= t_dd;
    }
}

}  // namespace detail

/// Exchange pulse of angle theta on `pair` (singlet phase exp(-i theta)).
inline PureState apply_exchange(PureState s, SpinPair pair, double theta) {
    s.check_pair(pair);
    if (!std::isfinite(theta)) throw std::invalid_argument("exchange angle must be finite");
    const cplx ph = std::exp(cplx{0.0, -theta});
    const cplx diag = 0.5 * (1.0 + ph), off = 0.5 * (1.0 - ph);
    detail::apply_pair_block(s, pair, diag, off, off, diag, 1.0, 1.0);
    return s;
}

/// Quasi-static noise realisation, constant over one shot.
struct NoiseSample {
    std::vector<double> delta_bz_hz;  // per spin; missing entries are zero
    std::vector<double> j_scale;      // per axis slot; missing entries are one

    double dbz(int spin) const {
        return spin < static_cast<int>(delta_bz_hz.size()) ? delta_bz_hz[spin] : 0.0;
    }
    double scale(int axis) const {
        return axis >= 0 && axis < static_cast<int>(j_scale.size()) ? j_scale[axis] : 1.0;
    }
};

struct FieldSpec {
    double b_uniform_hz = 0.0;
    NoiseSample noise;

    double larmor_hz(int spin) const { return b_uniform_hz + noise.dbz(spin); }
};

struct ActiveExchange {
    SpinPair pair;
    double j_hz = 0.0;
    int axis = -1;  // slot into NoiseSample::j_scale, -1 for none
};

/// Exact evolution for `duration_s` with at most one exchange axis on.
///
/// H = sum_k f_k s_z^k + J P_singlet(pair) in Hz, U = exp(-2 pi i H t).
/// Inactive spins pick up closed-form Zeeman phases; the active pair uses the
/// exact 4x4 propagator of exchange plus its two Zeeman terms.
inline PureState evolve_segment(PureState s, const std::optional<ActiveExchange>& active, double duration_s,
                                const FieldSpec& fields) {
    if (!(duration_s >= 0.0)) throw std::invalid_argument("segment duration must be >= 0");
    if (fields.b_uniform_hz < 0.0) throw std::invalid_argument("b_uniform_hz must be >= 0");
    if (duration_s == 0.0) return s;
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const int n = s.n_spins();
    int pi = -1, pj = -1;
    if (active) {
        s.check_pair(active->pair);
        pi = active->pair.first;
        pj = active->pair.second;
    }

    // Zeeman phases of the inactive spins.
    std::vector<std::array<cplx, 2>> phase(n);
    bool any_phase = false;
    for (int k = 0; k < n; ++k) {
        if (k == pi || k == pj) {
            phase[k] = {1.0, 1.0};
            continue;
        }
        double ang = std::numbers::pi * fields.larmor_hz(k) * duration_s;
        phase[k] = {std::exp(cplx{0.0, -ang}), std::exp(cplx{0.0, ang})};
        any_phase = any_phase || ang != 0.0;
    }
    if (any_phase) {
        auto& a = s.amplitudes();
        for (std::size_t x = 0; x < s.dim(); ++x) {
            cplx f = 1.0;
            for (int k = 0; k < n; ++k) f *= phase[k][(x >> k) & 1];
            a[x] *= f;
        }
    }
    if (!active) return s;

    const double fi = fields.larmor_hz(pi), fj = fields.larmor_hz(pj);
    const double j = active->j_hz * fields.noise.scale(active->axis);
    const double d = 0.5 * (fi - fj);
    // (|ud>,|du>) block: H = (J/2) I + d sz - (J/2) sx.
    const double omega = std::hypot(d, 0.5 * j);
    const double phi = two_pi * duration_s * omega;
    const cplx global = std::exp(cplx{0.0, -std::numbers::pi * j * duration_s});
    cplx m00 = global * std::cos(phi), m11 = m00, m01 = 0.0;
    if (omega > 0.0) {
        const double sn = std::sin(phi) / omega;
        m00 = global * cplx{std::cos(phi), -sn * d};
        m11 = global * cplx{std::cos(phi), sn * d};
        m01 = global * cplx{0.0, sn * 0.5 * j};
    }
    const double sum = 0.5 * (fi + fj);
    detail::apply_pair_block(s, active->pair, m00, m01, m01, m11, std::exp(cplx{0.0, -two_pi * duration_s * sum}),
                             std::exp(cplx{0.0, two_pi * duration_s * sum}));
    return s;
}

/// Probability that `pair` is found in its two-spin singlet.
inline double singlet_probability(const PureState& s, SpinPair pair) {
    s.check_pair(pair);
    const std::size_t bi = std::size_t{1} << pair.first, bj = std::size_t{1} << pair.second;
    double p = 0.0;
    for (std::size_t x = 0; x < s.dim(); ++x) {
        if (x & (bi | bj)) continue;
        p += 0.5 * std::norm(s[x | bj] - s[x | bi]);
    }
    return p;
}

struct SingletOutcome {
    bool singlet = false;  // singlet reads as encoded |0>
    PureState post;
};

/// Projective singlet/triplet measurement; collapses and renormalizes.
inline SingletOutcome measure_singlet(const PureState& s, SpinPair pair, Engine& rng) {
    const double p = singlet_probability(s, pair);
    bool singlet = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
    const std::size_t bi = std::size_t{1} << pair.first, bj = std::size_t{1} << pair.second;
    PureState post = s;
    auto& a = post.amplitudes();
    for (std::size_t x = 0; x < s.dim(); ++x) {
        if (x & (bi | bj)) continue;
        cplx sing = 0.5 * (s[x | bj] - s[x | bi]);
        if (singlet) {
            a[x] = 0.0;
            a[x | bi | bj] = 0.0;
            a[x | bj] = sing;
            a[x | bi] = -sing;
        } else {
            a[x | bj] -= sing;
            a[x | bi] += sing;
        }
    }
    post.normalize();
    return {singlet, std::move(post)};
}

}  // namespace eoq
