#include "eoq/encoding.hpp"

#include <numbers>
#include <random>

#include "dense_oracle.hpp"
#include "gtest/gtest.h"

using namespace eoq;
using std::numbers::pi;

namespace {

const Vec3 kZ{0, 0, 1};
const Vec3 kN{-std::sqrt(3.0) / 2, 0, -0.5};

// Right-handed rotation of v by angle about unit axis (Rodrigues).
Vec3 rotate(const Vec3& v, const Vec3& k, double angle) {
    double c = std::cos(angle), s = std::sin(angle);
    double kv = k[0] * v[0] + k[1] * v[1] + k[2] * v[2];
    Vec3 kxv{k[1] * v[2] - k[2] * v[1], k[2] * v[0] - k[0] * v[2], k[0] * v[1] - k[1] * v[0]};
    Vec3 out;
    for (int i = 0; i < 3; ++i) out[i] = v[i] * c + kxv[i] * s + k[i] * kv * (1 - c);
    return out;
}

void expect_vec_near(const Vec3& a, const Vec3& b, double tol) {
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(a[i], b[i], tol) << "component " << i;
}

QubitAssignment qubit(const GridSpec& g, const std::string& p1, const std::string& p2, const std::string& p3,
                      Permutation perm) {
    DotId d1 = g.parse_plunger(p1), d2 = g.parse_plunger(p2), d3 = g.parse_plunger(p3);
    return {{{d1, d2, d3}, classify_tqd(d1, d2, d3)}, perm};
}

}  // namespace

TEST(encoding, frame_axes_on_2x3) {
    GridSpec g(2, 3);
    // Singlet on P3-P2 (X2), gauge spin on P5 via Y5.
    auto f = make_frame(g, qubit(g, "P5", "P2", "P3", Permutation::P23_1));
    EXPECT_EQ(f.z_axis, "X2");
    EXPECT_EQ(f.n_axis, "Y5");
    auto f2 = make_frame(g, qubit(g, "P4", "P5", "P2", Permutation::P12_3));
    EXPECT_EQ(f2.z_axis, "X4");
    EXPECT_EQ(f2.n_axis, "Y5");
}

TEST(encoding, frame_errors) {
    GridSpec dead_dot(2, 3, {{0, 0}});
    auto q = enumerate_qubit_assignments(GridSpec(2, 3))[0];  // uses P1
    EXPECT_THROW(make_frame(dead_dot, q), std::invalid_argument);
    GridSpec dead_axis(2, 3, {}, {"X1"});
    EXPECT_THROW(make_frame(dead_axis, q), std::invalid_argument);
}

TEST(encoding, encoded_zero_readout) {
    GridSpec g(2, 3);
    for (auto& q : enumerate_qubit_assignments(g)) {
        auto f = make_frame(g, q);
        auto s = encoded_zero(g, f);
        auto r = logical_bloch(s, f);
        expect_vec_near(r.bloch, kZ, 1e-12);
        EXPECT_NEAR(r.p_leak, 0.0, 1e-12);
        EXPECT_NEAR(singlet_probability(s, f.singlet_spins()), 1.0, 1e-12);
        EXPECT_NEAR(singlet_probability(s, {f.spins[0], f.spins[2]}), 0.25, 1e-12);
    }
}

TEST(encoding, encoded_zero_with_random_spectators) {
    GridSpec g(2, 3);
    auto f = make_frame(g, enumerate_qubit_assignments(g)[7]);
    auto s = encoded_zero(g, f, RandomProduct{99});
    auto r = logical_bloch(s, f);
    expect_vec_near(r.bloch, kZ, 1e-12);
    EXPECT_NEAR(r.p_leak, 0.0, 1e-12);
}

TEST(encoding, z_pulse_keeps_zero_and_n_pi_pulse_reflects) {
    GridSpec g(1, 3);
    for (auto perm : {Permutation::P12_3, Permutation::P23_1}) {
        auto f = make_frame(g, {enumerate_tqds(g)[0], perm});
        auto s = encoded_zero(g, f);
        for (double th : {0.3, 1.0, pi, 5.0}) expect_vec_near(logical_bloch(apply_exchange(s, f.singlet_spins(), th), f).bloch, kZ, 1e-12);
        auto r = logical_bloch(apply_exchange(s, {f.spins[1], f.spins[2]}, pi), f);
        expect_vec_near(r.bloch, {std::sqrt(3.0) / 2, 0, -0.5}, 1e-12);
        EXPECT_NEAR(r.p_leak, 0.0, 1e-12);
    }
}

TEST(encoding, effective_hamiltonian_axes) {
    const double j = 1.3e8;
    auto hz = effective_qubit_hamiltonian(j, 0);
    EXPECT_LT(std::abs(hz(0, 1)), 1e-10 * j);
    EXPECT_NEAR(hz(0, 0).real(), j / 2, 1e-10 * j);

    auto hn = effective_qubit_hamiltonian(0, j);
    // Traceless part is (j/2) sigma_n; sigma_n = -(sqrt3 sx + sz)/2.
    EXPECT_NEAR(hn(0, 1).real(), -j / 2 * std::sqrt(3.0) / 2, 1e-10 * j);
    EXPECT_NEAR(hn(0, 1).imag(), 0.0, 1e-10 * j);
    EXPECT_NEAR(hn(0, 0).real(), -j / 4, 1e-10 * j);

    auto hb = effective_qubit_hamiltonian(j, j);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(hb);
    EXPECT_NEAR(es.eigenvalues()(1) - es.eigenvalues()(0), j, 1e-10 * j);
}

TEST(encoding, effective_hamiltonian_matches_dense_spectrum) {
    // Independent route: the m=+1/2 block of the dense 3-spin operator holds
    // both doublet levels plus one quadruplet level, which is lifted away.
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0, 2e8);
    const int m_half[3] = {0b001, 0b010, 0b100};
    Eigen::Vector3cd quad = Eigen::Vector3cd::Constant(1 / std::sqrt(3.0));
    for (int trial = 0; trial < 100; ++trial) {
        double ji = u(rng), jj = u(rng);
        oracle::Mat h = ji * oracle::singlet_projector(0, 1, 3) + jj * oracle::singlet_projector(1, 2, 3);
        Eigen::Matrix3cd block;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) block(r, c) = h(m_half[r], m_half[c]);
        block += 1e10 * quad * quad.adjoint();
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd> dense(block);

        auto heff = effective_qubit_hamiltonian(ji, jj);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> e2(heff);
        for (int k = 0; k < 2; ++k)
            EXPECT_NEAR(e2.eigenvalues()(k) + 0.5 * (ji + jj), dense.eigenvalues()(k), 1e-4);
        EXPECT_NEAR(e2.eigenvalues()(1) - e2.eigenvalues()(0), std::sqrt(ji * ji - ji * jj + jj * jj), 1e-6);
    }
}

TEST(encoding, projectors_are_complete) {
    auto p = frame_projectors();
    Eigen::Matrix<cplx, 8, 8> sum = p[0] + p[1] + p[2];
    EXPECT_LT((sum - Eigen::Matrix<cplx, 8, 8>::Identity()).cwiseAbs().maxCoeff(), 1e-12);
    for (int i = 0; i < 3; ++i) {
        EXPECT_LT((p[i] * p[i] - p[i]).cwiseAbs().maxCoeff(), 1e-12);
        for (int j = i + 1; j < 3; ++j) EXPECT_LT((p[i] * p[j]).cwiseAbs().maxCoeff(), 1e-12);
    }
    EXPECT_NEAR(p[2].trace().real(), 4.0, 1e-12);
}

TEST(encoding, pulse_pairs_match_rotation_oracle) {
    GridSpec g(2, 3);
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0, 2 * pi);
    auto qa = enumerate_qubit_assignments(g);
    for (int trial = 0; trial < 40; ++trial) {
        auto f = make_frame(g, qa[trial % qa.size()]);
        auto s = encoded_zero(g, f, RandomProduct{static_cast<std::uint64_t>(trial)});
        Vec3 v = kZ;
        for (int step = 0; step < 6; ++step) {
            double a = u(rng), b = u(rng);
            s = apply_exchange(s, f.singlet_spins(), a);
            v = rotate(v, kZ, a);
            s = apply_exchange(s, {f.spins[1], f.spins[2]}, b);
            v = rotate(v, kN, b);
        }
        auto r = logical_bloch(s, f);
        expect_vec_near(r.bloch, v, 1e-9);
        EXPECT_LT(r.p_leak, 1e-10);
    }
}

TEST(encoding, zeeman_gradient_causes_leakage) {
    GridSpec g(1, 3);
    auto f = make_frame(g, enumerate_qubit_assignments(g)[0]);
    auto s = encoded_zero(g, f);
    FieldSpec fields{0, {{3e6, -2e6, 1e6}, {}}};
    auto e = evolve_segment(s, std::nullopt, 100e-9, fields);
    auto r = logical_bloch(e, f);
    EXPECT_GT(r.p_leak, 1e-3);
    EXPECT_NEAR(r.p_leak + r.p_logical, 1.0, 1e-9);
}

TEST(encoding, route_examples) {
    GridSpec g(2, 3);
    auto p = [&](const char* n) { return g.parse_plunger(n); };
    std::pair spam{p("P2"), p("P3")};

    auto here = make_frame(g, qubit(g, "P1", "P2", "P3", Permutation::P23_1));
    EXPECT_TRUE(route_singlet(g, spam, here).empty());

    // Singlet pair (P2,P6) is not a TQD axis pair, so use the generic goal form.
    auto r26 = route_singlet_to(g, spam, [&](DotId u, DotId v) {
        return std::minmax(u, v) == std::minmax(p("P2"), p("P6"));
    });
    ASSERT_EQ(r26.size(), 1u);
    EXPECT_EQ(r26[0].axis, "Y6");
    EXPECT_DOUBLE_EQ(r26[0].theta, pi);

    auto f12 = make_frame(g, qubit(g, "P1", "P2", "P3", Permutation::P12_3));
    auto r12 = route_singlet(g, spam, f12);
    ASSERT_EQ(r12.size(), 2u);
    EXPECT_EQ(r12[0].axis, "X1");
    EXPECT_EQ(r12[1].axis, "X2");
}

TEST(encoding, route_errors) {
    GridSpec g(2, 3, {}, {"X1", "Y4"});
    auto p = [&](const char* n) { return g.parse_plunger(n); };
    auto q = qubit(GridSpec(2, 3), "P4", "P5", "P6", Permutation::P12_3);
    // P1 is isolated, but (P4,P5) is still reachable.
    EXPECT_NO_THROW(route_singlet(g, {p("P2"), p("P3")}, make_frame(g, q)));
    EXPECT_THROW(route_singlet(g, {p("P1"), p("P3")}, make_frame(g, q)), std::invalid_argument);
    GridSpec cut(2, 3, {}, {"Y4", "Y5", "Y6"});
    EXPECT_THROW(route_singlet(cut, {p("P2"), p("P3")}, make_frame(cut, q)), RoutingError);
}

TEST(encoding, every_route_round_trips) {
    GridSpec g(2, 3);
    AxisTable axes(g);
    std::pair spam{g.parse_plunger("P2"), g.parse_plunger("P3")};
    int idx = 0;
    for (auto& q : enumerate_qubit_assignments(g)) {
        auto f = make_frame(g, q);
        auto route = route_singlet(g, spam, f);
        auto s0 = prepare_state(6, SpinPair{1, 2}, RandomProduct{static_cast<std::uint64_t>(idx++)});
        auto there = run_pulses(s0, axes, route, {});
        EXPECT_NEAR(singlet_probability(there, f.singlet_spins()), 1.0, 1e-12);
        auto back = run_pulses(there, axes, reversed(route), {});
        EXPECT_GT(fidelity(back, s0), 1 - 1e-10);
    }
}
