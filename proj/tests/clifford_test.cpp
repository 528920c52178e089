#include "eoq/clifford.hpp"

#include <numbers>
#include <set>

#include "gtest/gtest.h"

using namespace eoq;
using std::numbers::pi;

namespace {

// Best fidelity reachable with `len` alternating pulses starting on `start`:
// coarse grid followed by a shrinking pattern search.
double best_fidelity(const Quat& target, int len, AxisRole start) {
    auto seq_of = [&](const std::vector<double>& ang) {
        std::vector<AxisAnglePulse> s;
        AxisRole r = start;
        for (double a : ang) {
            s.push_back({r, a});
            r = r == AxisRole::z ? AxisRole::n : AxisRole::z;
        }
        return trace_fidelity(compose_pulses(s), target);
    };
    const int steps = len == 1 ? 720 : len == 2 ? 180 : 48;
    std::vector<std::pair<double, std::vector<double>>> seeds;
    std::vector<int> idx(len, 0);
    for (;;) {
        std::vector<double> ang(len);
        for (int i = 0; i < len; ++i) ang[i] = 2 * pi * idx[i] / steps;
        seeds.push_back({seq_of(ang), ang});
        int i = 0;
        while (i < len && ++idx[i] == steps) idx[i++] = 0;
        if (i == len) break;
    }
    std::partial_sort(seeds.begin(), seeds.begin() + 8, seeds.end(),
                      [](auto& a, auto& b) { return a.first > b.first; });
    double best = 0;
    for (int s = 0; s < 8; ++s) {
        auto [f, ang] = seeds[s];
        for (double h = 2 * pi / steps; h > 1e-10; h *= 0.5)
            for (bool improved = true; improved;) {
                improved = false;
                for (int i = 0; i < len; ++i)
                    for (double d : {h, -h}) {
                        auto trial = ang;
                        trial[i] += d;
                        double ft = seq_of(trial);
                        if (ft > f) f = ft, ang = trial, improved = true;
                    }
            }
        best = std::max(best, f);
    }
    return best;
}

Vec3 to_vec3(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

}  // namespace

TEST(clifford, group_structure) {
    const auto& g = clifford_group();
    ASSERT_EQ(g.size(), 24u);
    EXPECT_EQ(g[0].name, "I");
    EXPECT_NEAR(trace_fidelity(g[0].rotation, Quat::Identity()), 1.0, 1e-15);
    std::set<std::string> names;
    for (int a = 0; a < 24; ++a) {
        EXPECT_EQ(g[a].index, a);
        names.insert(g[a].name);
        for (int b = a + 1; b < 24; ++b) EXPECT_LT(trace_fidelity(g[a].rotation, g[b].rotation), 0.9);
    }
    EXPECT_EQ(names.size(), 24u);
}

TEST(clifford, closure_and_inverses) {
    const auto& g = clifford_group();
    int products = 0;
    for (int a = 0; a < 24; ++a) {
        Quat id = g[clifford_inverse(a)].rotation * g[a].rotation;
        EXPECT_GT(trace_fidelity(id, Quat::Identity()), 1 - 1e-12);
        EXPECT_EQ(clifford_compose(a, clifford_inverse(a)), 0);
        std::set<int> row;
        for (int b = 0; b < 24; ++b) {
            int c = clifford_compose(a, b);
            EXPECT_GT(trace_fidelity(g[c].rotation, g[b].rotation * g[a].rotation), 1 - 1e-12);
            row.insert(c);
            ++products;
        }
        EXPECT_EQ(row.size(), 24u);  // Latin square row
    }
    EXPECT_EQ(products, 576);
    EXPECT_EQ(clifford_product({}), 0);
    EXPECT_EQ(clifford_product({4, 4}), 1);  // two X90 make X
}

TEST(clifford, decomposition_examples) {
    const auto& g = clifford_group();
    EXPECT_TRUE(decompose_clifford(0).empty());
    int s = clifford_index(axis_angle(Eigen::Vector3d::UnitZ(), pi / 2));
    EXPECT_EQ(g[s].name, "S");
    ASSERT_EQ(decompose_clifford(s).size(), 1u);
    EXPECT_EQ(decompose_clifford(s)[0].role, AxisRole::z);
    EXPECT_NEAR(decompose_clifford(s)[0].angle, pi / 2, 1e-12);
    auto x = decompose_clifford(1);
    EXPECT_LE(x.size(), 4u);
    EXPECT_GE(trace_fidelity(compose_pulses(x), axis_angle(Eigen::Vector3d::UnitX(), pi)), 1 - 1e-9);
}

TEST(clifford, every_decomposition_is_valid) {
    for (const auto& c : clifford_group()) {
        const auto& d = decompose_clifford(c.index);
        EXPECT_LE(d.size(), 4u) << c.name;
        for (std::size_t i = 0; i < d.size(); ++i) {
            EXPECT_GE(d[i].angle, 1e-12) << c.name;
            EXPECT_LT(d[i].angle, 2 * pi) << c.name;
            if (i) {
                EXPECT_NE(d[i].role, d[i - 1].role) << c.name;
            }
        }
        EXPECT_GE(trace_fidelity(compose_pulses(d), c.rotation), 1 - 1e-9) << c.name;
    }
    EXPECT_LE(average_pulses_per_clifford(), 4.0);
    EXPECT_GT(average_pulses_per_clifford(), 1.0);
}

TEST(clifford, decompositions_are_shortest) {
    // No alternating sequence one pulse shorter reaches the element.
    for (const auto& c : clifford_group()) {
        int len = static_cast<int>(decompose_clifford(c.index).size());
        if (len <= 1) continue;
        for (AxisRole start : {AxisRole::z, AxisRole::n})
            EXPECT_LT(best_fidelity(c.rotation, len - 1, start), 1 - 1e-6) << c.name;
    }
}

TEST(clifford, decomposition_is_deterministic) {
    for (int c = 0; c < 24; ++c) {
        auto again = detail::decompose(clifford_group()[c].rotation);
        EXPECT_EQ(again, decompose_clifford(c));
    }
}

TEST(clifford, compile_examples) {
    GridSpec g(2, 3);
    QubitAssignment q{{{g.parse_plunger("P5"), g.parse_plunger("P2"), g.parse_plunger("P3")},
                       TqdShape::Elbow},
                      Permutation::P23_1};
    auto frame = make_frame(g, q);
    EXPECT_TRUE(compile_sequence(frame, {0}, 5e-9, 10e-9).empty());
    auto s = compile_sequence(frame, {8}, 5e-9, 10e-9);
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s[0].axis, "X2");
    EXPECT_NEAR(s[0].theta, pi / 2, 1e-12);
    EXPECT_EQ(s[0].t_pulse_s, 5e-9);
    EXPECT_EQ(s[0].t_idle_s, 10e-9);

    std::vector<int> all(24);
    for (int i = 0; i < 24; ++i) all[i] = i;
    std::size_t expected = 0;
    for (int i : all) expected += decompose_clifford(i).size();
    auto seq = compile_sequence(frame, all, 5e-9, 10e-9);
    EXPECT_EQ(seq.size(), expected);
    for (auto& p : seq) EXPECT_TRUE(p.axis == "X2" || p.axis == "Y5");

    EXPECT_THROW(compile_sequence(GridSpec(2, 3, {}, {"Y5"}), frame, {1}, 5e-9, 10e-9), std::invalid_argument);
    EXPECT_THROW(compile_sequence(frame, {1}, -1.0, 0.0), std::invalid_argument);
}

TEST(clifford, encoded_action_matches_bloch_rotation) {
    // Three starting states fix the whole rotation.
    GridSpec g(2, 3);
    AxisTable axes(g);
    const std::vector<int> preps = {0, 4, 6};  // I, X90, Y90
    for (auto& q : enumerate_qubit_assignments(g)) {
        auto frame = make_frame(g, q);
        for (int prep : preps)
            for (const auto& c : clifford_group()) {
                auto psi = encoded_zero(g, frame, RandomProduct{static_cast<std::uint64_t>(c.index)});
                psi = run_pulses(psi, axes, compile_sequence(frame, {prep, c.index}, 0, 0), FieldSpec{});
                auto r = logical_bloch(psi, frame);
                Quat total = c.rotation * clifford_group()[prep].rotation;
                auto expect = to_vec3(total * Eigen::Vector3d::UnitZ());
                for (int i = 0; i < 3; ++i) EXPECT_NEAR(r.bloch[i], expect[i], 1e-9) << c.name;
                EXPECT_LT(r.p_leak, 1e-10);
            }
    }
}
