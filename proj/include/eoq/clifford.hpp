#pragma once

// Single-qubit Clifford group and its compilation to z/n exchange rotations.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eoq/encoding.hpp"
#include "eoq/lattice.hpp"
#include "eoq/pulse_seq.hpp"

namespace eoq {

/// Unit quaternion (w, x, y, z); q and -q are the same rotation.
using Quat = Eigen::Quaterniond;

inline Quat axis_angle(const Eigen::Vector3d& axis, double angle) {
    return Quat(Eigen::AngleAxisd(angle, axis.normalized()));
}

/// |<q1, q2>|; equals |tr(U1^dag U2)| / 2 for the SU(2) representatives.
inline double trace_fidelity(const Quat& a, const Quat& b) { return std::abs(a.dot(b)); }

enum class AxisRole { z, n };

inline const char* to_string(AxisRole r) { return r == AxisRole::z ? "z" : "n"; }

/// Bloch axes of the two exchange rotations.
inline Eigen::Vector3d role_axis(AxisRole r) {
    return r == AxisRole::z ? Eigen::Vector3d(0, 0, 1) : Eigen::Vector3d(-std::sqrt(3.0) / 2, 0, -0.5);
}

struct AxisAnglePulse {
    AxisRole role;
    double angle;  // [0, 2pi)

    bool operator==(const AxisAnglePulse&) const = default;
};

/// Rotation performed by a pulse list, first pulse applied first.
inline Quat compose_pulses(const std::vector<AxisAnglePulse>& seq) {
    Quat q = Quat::Identity();
    for (const auto& p : seq) q = axis_angle(role_axis(p.role), p.angle) * q;
    return q;
}

struct CliffordElement {
    int index;
    std::string name;
    Quat rotation;
};

namespace detail {

inline std::vector<CliffordElement> build_clifford_table() {
    using V = Eigen::Vector3d;
    constexpr double pi = std::numbers::pi;
    const double r2 = 1.0 / std::sqrt(2.0);
    std::vector<std::pair<std::string, Quat>> raw = {
        {"I", Quat::Identity()},
        {"X", axis_angle(V::UnitX(), pi)},
        {"Y", axis_angle(V::UnitY(), pi)},
        {"Z", axis_angle(V::UnitZ(), pi)},
        {"X90", axis_angle(V::UnitX(), pi / 2)},
        {"Xm90", axis_angle(V::UnitX(), -pi / 2)},
        {"Y90", axis_angle(V::UnitY(), pi / 2)},
        {"Ym90", axis_angle(V::UnitY(), -pi / 2)},
        {"S", axis_angle(V::UnitZ(), pi / 2)},
        {"Sdg", axis_angle(V::UnitZ(), -pi / 2)},
        {"H", axis_angle(V(r2, 0, r2), pi)},
        {"Hxz'", axis_angle(V(r2, 0, -r2), pi)},
        {"Hxy", axis_angle(V(r2, r2, 0), pi)},
        {"Hxy'", axis_angle(V(r2, -r2, 0), pi)},
        {"Hyz", axis_angle(V(0, r2, r2), pi)},
        {"Hyz'", axis_angle(V(0, r2, -r2), pi)},
    };
    // Thirds of a turn about the body diagonals.
    for (auto [tag, d] : {std::pair{"+++", V(1, 1, 1)}, {"-++", V(-1, 1, 1)}, {"+-+", V(1, -1, 1)}, {"++-", V(1, 1, -1)}}) {
        raw.push_back({std::string("C") + tag, axis_angle(d, 2 * pi / 3)});
        raw.push_back({std::string("C") + tag + "'", axis_angle(d, -2 * pi / 3)});
    }
    std::vector<CliffordElement> out;
    for (std::size_t i = 0; i < raw.size(); ++i) out.push_back({static_cast<int>(i), raw[i].first, raw[i].second});
    return out;
}

}  // namespace detail

/// The 24 Cliffords in a fixed order; index 0 is the identity.
inline const std::vector<CliffordElement>& clifford_group() {
    static const std::vector<CliffordElement> table = detail::build_clifford_table();
    return table;
}

/// Index of the group element equal to q up to sign; throws if none.
inline int clifford_index(const Quat& q) {
    for (const auto& c : clifford_group())
        if (trace_fidelity(c.rotation, q) > 1.0 - 1e-9) return c.index;
    throw std::invalid_argument("rotation is not a Clifford");
}

namespace detail {

struct CliffordTables {
    std::array<std::array<int, 24>, 24> product{};
    std::array<int, 24> inverse{};
};

inline const CliffordTables& clifford_tables() {
    static const CliffordTables t = [] {
        CliffordTables t;
        const auto& g = clifford_group();
        for (int a = 0; a < 24; ++a)
            for (int b = 0; b < 24; ++b) t.product[a][b] = clifford_index(g[b].rotation * g[a].rotation);
        for (int a = 0; a < 24; ++a) t.inverse[a] = clifford_index(g[a].rotation.conjugate());
        return t;
    }();
    return t;
}

}  // namespace detail

/// Element equal to applying `first` and then `second`.
inline int clifford_compose(int first, int second) { return detail::clifford_tables().product.at(first).at(second); }

inline int clifford_inverse(int c) { return detail::clifford_tables().inverse.at(c); }

/// Net Clifford of a sequence, applied in order.
inline int clifford_product(const std::vector<int>& seq) {
    int acc = 0;
    for (int c : seq) acc = clifford_compose(acc, c);
    return acc;
}

namespace detail {

constexpr double kAngleEps = 1e-12;

inline double wrap_angle(double a) {
    a = std::fmod(a, 2.0 * std::numbers::pi);
    if (a < 0.0) a += 2.0 * std::numbers::pi;
    if (a > 2.0 * std::numbers::pi - kAngleEps) a = 0.0;
    return a;
}

inline bool is_zero_angle(double a) { return a < kAngleEps; }

inline AxisRole other(AxisRole r) { return r == AxisRole::z ? AxisRole::n : AxisRole::z; }

/// Angle of the rotation about unit k taking `from` onto `to` (both with
/// equal k components).
inline double angle_about(const Eigen::Vector3d& k, const Eigen::Vector3d& from, const Eigen::Vector3d& to) {
    Eigen::Vector3d f = from - k.dot(from) * k, t = to - k.dot(to) * k;
    return wrap_angle(std::atan2(k.dot(f.cross(t)), f.dot(t)));
}

/// Drops zero-angle pulses and merges neighbours on the same axis.
inline std::vector<AxisAnglePulse> collapse(const std::vector<AxisAnglePulse>& in) {
    std::vector<AxisAnglePulse> out;
    for (auto p : in) {
        p.angle = wrap_angle(p.angle);
        if (!out.empty() && out.back().role == p.role) {
            out.back().angle = wrap_angle(out.back().angle + p.angle);
            if (is_zero_angle(out.back().angle)) out.pop_back();
        } else if (!is_zero_angle(p.angle)) {
            out.push_back(p);
        }
    }
    return out;
}

/// All (a, b, c) with R_u(c) R_v(b) R_u(a) = target, collapsed to shortest form.
inline std::vector<std::vector<AxisAnglePulse>> solve_uvu(const Quat& target, AxisRole u_role) {
    const AxisRole v_role = other(u_role);
    const Eigen::Vector3d u = role_axis(u_role), v = role_axis(v_role);
    const double k = u.dot(v);
    const Eigen::Matrix3d m = target.toRotationMatrix();
    const double cb = (u.dot(m * u) - k * k) / (1.0 - k * k);
    std::vector<std::vector<AxisAnglePulse>> out;
    if (cb > 1.0 - 1e-12) {  // pure rotation about u
        Eigen::AngleAxisd aa(target);
        double ang = aa.axis().dot(u) >= 0 ? aa.angle() : -aa.angle();
        out.push_back(collapse({{u_role, ang}}));
        return out;
    }
    if (cb < -1.0 - 1e-9) return out;
    const double b0 = std::acos(std::clamp(cb, -1.0, 1.0));
    for (double b : {b0, 2.0 * std::numbers::pi - b0}) {
        const Eigen::Matrix3d rv = Eigen::AngleAxisd(b, v).toRotationMatrix();
        // M u = R_u(c) R_v(b) u and R_u(a) M^T u = R_v(-b) u.
        double c = angle_about(u, rv * u, m * u);
        double a = angle_about(u, m.transpose() * u, rv.transpose() * u);
        std::vector<AxisAnglePulse> seq = collapse({{u_role, a}, {v_role, b}, {u_role, c}});
        if (trace_fidelity(compose_pulses(seq), target) > 1.0 - 1e-12) out.push_back(seq);
    }
    return out;
}

inline bool angles_less(const std::vector<AxisAnglePulse>& a, const std::vector<AxisAnglePulse>& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::abs(a[i].angle - b[i].angle) > kAngleEps) return a[i].angle < b[i].angle;
    if (!a.empty() && a[0].role != b[0].role) return a[0].role == AxisRole::z;
    return false;
}

/// Four-pulse u,v,u,v form with the smallest feasible first angle.
inline std::optional<std::vector<AxisAnglePulse>> solve_four(const Quat& target, AxisRole u_role) {
    const AxisRole v_role = other(u_role);
    const Eigen::Vector3d u = role_axis(u_role), v = role_axis(v_role);
    const double k = u.dot(v);
    const Eigen::Matrix3d t = target.toRotationMatrix();
    // Remainder T R_u(-a) is v-u-v solvable iff v.T R_u(-a) v >= 2k^2 - 1.
    const Eigen::Vector3d w = v - k * u, x = u.cross(v);
    const double A = k * v.dot(t * u), B = v.dot(t * w), C = -v.dot(t * x);
    const double R = std::hypot(B, C);
    if (R < 1e-15) return std::nullopt;
    const double rhs = (2 * k * k - 1 - A) / R;
    if (rhs > 1.0 || rhs < -1.0) return std::nullopt;
    const double phi = std::atan2(C, B), d = std::acos(rhs);
    std::vector<double> roots = {wrap_angle(phi + d), wrap_angle(phi - d)};
    std::sort(roots.begin(), roots.end());
    for (double a : roots) {
        if (is_zero_angle(a)) continue;
        Quat rest = target * axis_angle(u, -a);
        for (auto& tail : solve_uvu(rest, v_role)) {
            std::vector<AxisAnglePulse> seq{{u_role, a}};
            seq.insert(seq.end(), tail.begin(), tail.end());
            if (seq.size() == 4 && tail.front().role == v_role &&
                trace_fidelity(compose_pulses(seq), target) > 1.0 - 1e-12)
                return seq;
        }
    }
    return std::nullopt;
}

inline std::vector<AxisAnglePulse> decompose(const Quat& target) {
    std::optional<std::vector<AxisAnglePulse>> best;
    auto consider = [&](const std::vector<AxisAnglePulse>& s) {
        if (!best || angles_less(s, *best)) best = s;
    };
    for (AxisRole r : {AxisRole::z, AxisRole::n})
        for (auto& s : solve_uvu(target, r)) consider(s);
    if (best) return *best;
    for (AxisRole r : {AxisRole::z, AxisRole::n})
        if (auto s = solve_four(target, r)) consider(*s);
    if (!best) throw std::logic_error("no alternating z/n decomposition found");
    return *best;
}

}  // namespace detail

/// Cached decomposition of Clifford `c` into at most four alternating pulses.
inline const std::vector<AxisAnglePulse>& decompose_clifford(int c) {
    static const std::vector<std::vector<AxisAnglePulse>> table = [] {
        std::vector<std::vector<AxisAnglePulse>> t;
        for (const auto& e : clifford_group()) t.push_back(detail::decompose(e.rotation));
        return t;
    }();
    return table.at(c);
}

inline double average_pulses_per_clifford() {
    double total = 0.0;
    for (int c = 0; c < 24; ++c) total += static_cast<double>(decompose_clifford(c).size());
    return total / 24.0;
}

/// Pulses for a Clifford list on one qubit; z maps to the frame's singlet
/// axis and n to its gauge axis. A zero t_pulse_s gives ideal pulses.
inline PulseSeq compile_sequence(const EncodedFrame& frame, const std::vector<int>& cliffords, double t_pulse_s,
                                 double t_idle_s) {
    if (t_pulse_s < 0.0 || t_idle_s < 0.0) throw std::invalid_argument("pulse timings must be >= 0");
    PulseSeq out;
    for (int c : cliffords)
        for (const auto& p : decompose_clifford(c))
            out.push_back({p.role == AxisRole::z ? frame.z_axis : frame.n_axis, p.angle, t_pulse_s, t_idle_s});
    return out;
}

/// As above, rejecting frames whose axes are dead on `grid`.
inline PulseSeq compile_sequence(const GridSpec& grid, const EncodedFrame& frame, const std::vector<int>& cliffords,
                                 double t_pulse_s, double t_idle_s) {
    for (const auto& label : {frame.z_axis, frame.n_axis})
        if (!grid.axis_live(grid.find_axis(label))) throw std::invalid_argument("frame axis " + label + " is dead");
    return compile_sequence(frame, cliffords, t_pulse_s, t_idle_s);
}

}  // namespace eoq
