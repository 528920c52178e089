#pragma once

// Exchange-only qubit encoding in three spins (a,b)c.
//
// Logical basis (m = +1/2 gauge sector, kets ordered |a b c>):
//   |0> = (|udu> - |duu>) / sqrt2                 singlet on (a,b)
//   |1> = (2|uud> - |udu> - |duu>) / sqrt6        triplet on (a,b)
// The m = -1/2 sector is obtained by applying the total lowering operator,
// so exchange acts identically in both gauge sectors. The remaining four
// states form the total-spin-3/2 quadruplet, i.e. leakage.
//
// With this sign choice the (b,c) singlet projector is (I + n.sigma)/2 with
// n = -(sqrt3, 0, 1)/2, and a pulse of angle theta on (a,b) or (b,c) is a
// right-handed Bloch rotation by theta about z or n.

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <functional>
#include <map>
#include <stdexcept>

#include <Eigen/Dense>

#include "eoq/lattice.hpp"
#include "eoq/pulse_seq.hpp"
#include "eoq/spin_sim.hpp"

namespace eoq {

using Vec3 = std::array<double, 3>;

/// A qubit assignment resolved against a grid register.
struct EncodedFrame {
    QubitAssignment assignment;
    std::array<int, 3> spins{};  // register indices of (a, b, c)
    std::string z_axis;          // label of the (a,b) axis
    std::string n_axis;          // label of the (b,c) axis

    SpinPair singlet_spins() const { return {spins[0], spins[1]}; }
};

inline EncodedFrame make_frame(const GridSpec& grid, const QubitAssignment& q) {
    auto dots = q.spin_dots();
    for (DotId d : dots)
        if (!grid.dot_live(d)) throw std::invalid_argument("qubit uses dead or out-of-range dot " + grid.plunger(d));
    if (dots[0] == dots[2]) throw std::invalid_argument("TQD dots must be distinct");
    auto z = grid.axis_between(dots[0], dots[1]);
    auto n = grid.axis_between(dots[1], dots[2]);
    if (!z || !n) throw std::invalid_argument("TQD dots are not nearest neighbours");
    if (!grid.axis_live(*z) || !grid.axis_live(*n))
        throw std::invalid_argument("qubit axis " + (grid.axis_live(*z) ? n->label : z->label) + " is dead");
    return {q, {grid.index(dots[0]), grid.index(dots[1]), grid.index(dots[2])}, z->label, n->label};
}

namespace detail {

using LocalVec = Eigen::Matrix<cplx, 8, 1>;

struct DfsBasis {
    // doublet[L][g]: logical L in gauge sector g (0: m=+1/2, 1: m=-1/2)
    std::array<std::array<LocalVec, 2>, 2> doublet;
    std::array<LocalVec, 4> quadruplet;
};

inline LocalVec lower(const LocalVec& v) {
    LocalVec out = LocalVec::Zero();
    for (int x = 0; x < 8; ++x)
        for (int k = 0; k < 3; ++k)
            if (!((x >> k) & 1)) out(x | (1 << k)) += v(x);
    return out;
}

inline const DfsBasis& dfs_basis() {
    static const DfsBasis basis = [] {
        DfsBasis b;
        const double r2 = 1 / std::sqrt(2.0), r6 = 1 / std::sqrt(6.0);
        // local bits: 0 -> a, 1 -> b, 2 -> c
        LocalVec zero = LocalVec::Zero(), one = LocalVec::Zero();
        zero(0b010) = r2;
        zero(0b001) = -r2;
        one(0b100) = 2 * r6;
        one(0b010) = -r6;
        one(0b001) = -r6;
        b.doublet[0] = {zero, lower(zero)};
        b.doublet[1] = {one, lower(one)};
        LocalVec q = LocalVec::Zero();
        q(0) = 1;
        for (int m = 0; m < 4; ++m) {
            b.quadruplet[m] = q.normalized();
            q = lower(b.quadruplet[m]);
        }
        return b;
    }();
    return basis;
}

// Calls f(rest_index, local amplitudes) for each configuration of the
// spins outside the frame.
template <typename F>
void for_each_local_block(const PureState& s, const std::array<int, 3>& spins, F&& f) {
    std::size_t frame_mask = 0;
    for (int k : spins) frame_mask |= std::size_t{1} << k;
    for (std::size_t rest = 0; rest < s.dim(); ++rest) {
        if (rest & frame_mask) continue;
        LocalVec v;
        for (int x = 0; x < 8; ++x) {
            std::size_t idx = rest;
            for (int k = 0; k < 3; ++k)
                if ((x >> k) & 1) idx |= std::size_t{1} << spins[k];
            v(x) = s[idx];
        }
        f(rest, v);
    }
}

}  // namespace detail

struct LogicalReadout {
    Vec3 bloch{};         // from the doublet-restricted operator; |bloch| <= 1 - p_leak
    double p_leak = 0.0;  // quadruplet population
    double p_logical = 1.0;
};

/// Full-register encoded |0>: singlet on (a,b), all other spins per `spectators`.
inline PureState encoded_zero(const GridSpec& grid, const EncodedFrame& frame,
                              const SpectatorSpec& spectators = AllUp{}) {
    for (int k : frame.spins)
        if (!grid.dot_live(grid.dot(k))) throw std::invalid_argument("frame uses a dead dot");
    return prepare_state(grid.dot_count(), frame.singlet_spins(), spectators);
}

inline LogicalReadout logical_bloch(const PureState& s, const EncodedFrame& frame) {
    for (int k : frame.spins)
        if (k < 0 || k >= s.n_spins()) throw std::invalid_argument("frame spin outside state");
    const auto& basis = detail::dfs_basis();
    Eigen::Matrix2cd rho = Eigen::Matrix2cd::Zero();
    detail::for_each_local_block(s, frame.spins, [&](std::size_t, const detail::LocalVec& v) {
        for (int g = 0; g < 2; ++g) {
            cplx c0 = basis.doublet[0][g].dot(v), c1 = basis.doublet[1][g].dot(v);  // dot() conjugates lhs
            rho(0, 0) += std::norm(c0);
            rho(1, 1) += std::norm(c1);
            rho(0, 1) += c0 * std::conj(c1);
        }
    });
    LogicalReadout out;
    out.p_logical = rho(0, 0).real() + rho(1, 1).real();
    out.p_leak = std::clamp(1.0 - out.p_logical, 0.0, 1.0);
    out.bloch = {2 * rho(0, 1).real(), -2 * rho(0, 1).imag(), rho(0, 0).real() - rho(1, 1).real()};
    return out;
}

/// Quadruplet (total spin 3/2) population of the frame's three spins.
inline double leakage(const PureState& s, const EncodedFrame& frame) { return logical_bloch(s, frame).p_leak; }

/// Exchange Hamiltonian J_i P_S(a,b) + J_j P_S(b,c), projected onto the
/// logical doublet, traceless part, in Hz.
///
/// Equals (J_i/2) sigma_z + (J_j/2) sigma_n with sigma_n = -(sqrt3 sigma_x + sigma_z)/2.
inline Eigen::Matrix2cd effective_qubit_hamiltonian(double j_i_hz, double j_j_hz) {
    if (!std::isfinite(j_i_hz) || !std::isfinite(j_j_hz)) throw std::invalid_argument("exchange must be finite");
    const auto& basis = detail::dfs_basis();
    Eigen::Matrix<cplx, 8, 8> h = Eigen::Matrix<cplx, 8, 8>::Zero();
    auto add_singlet = [&](int i, int j, double jhz) {
        detail::LocalVec sing = detail::LocalVec::Zero();
        for (int x = 0; x < 8; ++x) {
            int bi = (x >> i) & 1, bj = (x >> j) & 1;
            if (bi == 0 && bj == 1) sing(x) = 1 / std::sqrt(2.0);
            if (bi == 1 && bj == 0) sing(x) = -1 / std::sqrt(2.0);
        }
        // P_S(i,j) on three spins: sum over the third spin's two states.
        int other = 3 - i - j;
        for (int s3 = 0; s3 < 2; ++s3) {
            detail::LocalVec v = detail::LocalVec::Zero();
            for (int x = 0; x < 8; ++x)
                if (((x >> other) & 1) == s3) v(x) = sing(x);
            h += jhz * v * v.adjoint();
        }
    };
    add_singlet(0, 1, j_i_hz);
    add_singlet(1, 2, j_j_hz);
    Eigen::Matrix2cd out;
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) out(r, c) = basis.doublet[r][0].dot(h * basis.doublet[c][0]);
    cplx tr = 0.5 * out.trace();
    out(0, 0) -= tr;
    out(1, 1) -= tr;
    return out;
}

/// Projectors onto logical |0>, |1> (both gauge sectors) and the quadruplet,
/// as 8x8 matrices over the local (a,b,c) space.
inline std::array<Eigen::Matrix<cplx, 8, 8>, 3> frame_projectors() {
    const auto& b = detail::dfs_basis();
    std::array<Eigen::Matrix<cplx, 8, 8>, 3> p;
    for (auto& m : p) m.setZero();
    for (int l = 0; l < 2; ++l)
        for (int g = 0; g < 2; ++g) p[l] += b.doublet[l][g] * b.doublet[l][g].adjoint();
    for (auto& q : b.quadruplet) p[2] += q * q.adjoint();
    return p;
}

class RoutingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

using DotPair = std::pair<DotId, DotId>;

inline DotPair sorted_pair(DotId u, DotId v) { return u < v ? DotPair{u, v} : DotPair{v, u}; }

}  // namespace detail

/// Shortest sequence of calibrated swaps (pi pulses) carrying a singlet
/// from `from` to any dot pair accepted by `goal`.
///
/// Each swap moves one singlet member across a live axis. Among shortest
/// routes the one whose axis sequence is lexicographically least in
/// canonical axis order (X before Y, then by number) is returned.
inline PulseSeq route_singlet_to(const GridSpec& grid, std::pair<DotId, DotId> from,
                                 const std::function<bool(DotId, DotId)>& goal, double t_pulse_s = 0.0,
                                 double t_idle_s = 0.0) {
    using detail::DotPair;
    if (!grid.dot_live(from.first) || !grid.dot_live(from.second) || !grid.live_link(from.first, from.second))
        throw std::invalid_argument("singlet source pair must be two live, coupled dots");
    const auto axes = grid.axes();
    auto moves = [&](const DotPair& p) {
        std::vector<std::pair<std::size_t, DotPair>> out;
        for (std::size_t i = 0; i < axes.size(); ++i) {
            const auto& ax = axes[i];
            if (!grid.axis_live(ax)) continue;
            bool ta = ax.touches(p.first), tb = ax.touches(p.second);
            if (ta == tb) continue;
            DotId stay = ta ? p.second : p.first, moved = ta ? p.first : p.second;
            DotId dest = ax.a == moved ? ax.b : ax.a;
            out.emplace_back(i, detail::sorted_pair(stay, dest));
        }
        return out;
    };

    // Reachable set from the source, then distance-to-goal over it.
    DotPair start = detail::sorted_pair(from.first, from.second);
    std::map<DotPair, int> seen{{start, 0}};
    std::deque<DotPair> queue{start};
    std::vector<DotPair> states;
    while (!queue.empty()) {
        auto p = queue.front();
        queue.pop_front();
        states.push_back(p);
        for (auto& [i, q] : moves(p))
            if (seen.emplace(q, 0).second) queue.push_back(q);
    }
    std::map<DotPair, int> dist;
    for (auto& p : states)
        if (goal(p.first, p.second)) {
            dist[p] = 0;
            queue.push_back(p);
        }
    if (queue.empty()) throw RoutingError("no route through live axes reaches the target pair");
    while (!queue.empty()) {
        auto p = queue.front();
        queue.pop_front();
        for (auto& [i, q] : moves(p))  // swap moves are reversible
            if (dist.emplace(q, dist[p] + 1).second) queue.push_back(q);
    }

    PulseSeq seq;
    DotPair cur = start;
    while (dist.at(cur) > 0) {
        for (auto& [i, q] : moves(cur))
            if (dist.count(q) && dist[q] == dist[cur] - 1) {
                seq.push_back({axes[i].label, std::numbers::pi, t_pulse_s, t_idle_s});
                cur = q;
                break;
            }
    }
    return seq;
}

/// Route that places the singlet on the frame's (a,b) pair.
inline PulseSeq route_singlet(const GridSpec& grid, std::pair<DotId, DotId> from, const EncodedFrame& to,
                              double t_pulse_s = 0.0, double t_idle_s = 0.0) {
    auto target = detail::sorted_pair(to.assignment.singlet_pair().first, to.assignment.singlet_pair().second);
    return route_singlet_to(
        grid, from, [&](DotId u, DotId v) { return detail::sorted_pair(u, v) == target; }, t_pulse_s, t_idle_s);
}

}  // namespace eoq
