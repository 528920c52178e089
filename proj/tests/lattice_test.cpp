#include "eoq/lattice.hpp"

#include <random>
#include <set>

#include "gtest/gtest.h"

using namespace eoq;

namespace {

// Oracle: count 3-dot simple paths by scanning every ordered triple of dots.
std::size_t brute_force_path_count(const GridSpec& g) {
    std::size_t ordered = 0;
    int n = g.dot_count();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                if (i == j || j == k || i == k) continue;
                DotId a = g.dot(i), b = g.dot(j), c = g.dot(k);
                if (!g.dot_live(a) || !g.dot_live(b) || !g.dot_live(c)) continue;
                if (g.live_link(a, b) && g.live_link(b, c)) ++ordered;
            }
    return ordered / 2;
}

GridSpec random_defects(int rows, int cols, std::mt19937_64& rng, int max_dead_dots, int max_dead_axes) {
    GridSpec clean(rows, cols);
    std::set<DotId> dd;
    std::set<std::string> da;
    std::uniform_int_distribution<int> pick_dot(0, clean.dot_count() - 1);
    int ndd = std::uniform_int_distribution<int>(0, max_dead_dots)(rng);
    for (int i = 0; i < ndd; ++i) dd.insert(clean.dot(pick_dot(rng)));
    auto axes = clean.axes();
    if (!axes.empty()) {
        std::uniform_int_distribution<std::size_t> pick_axis(0, axes.size() - 1);
        int nda = std::uniform_int_distribution<int>(0, max_dead_axes)(rng);
        for (int i = 0; i < nda; ++i) da.insert(axes[pick_axis(rng)].label);
    }
    return GridSpec(rows, cols, dd, da);
}

}  // namespace

TEST(lattice, axis_labels_2x3) {
    GridSpec g(2, 3);
    std::vector<std::string> labels;
    for (auto& ax : g.axes()) labels.push_back(ax.label);
    EXPECT_EQ(labels, (std::vector<std::string>{"X1", "X2", "X4", "X5", "Y4", "Y5", "Y6"}));

    auto x2 = g.find_axis("X2");
    EXPECT_EQ(g.plunger(x2.a), "P2");
    EXPECT_EQ(g.plunger(x2.b), "P3");
    auto y5 = g.find_axis("Y5");
    EXPECT_EQ(g.plunger(y5.a), "P2");
    EXPECT_EQ(g.plunger(y5.b), "P5");
    // X4 and Y5 share P5, so X4Y5 is a TQD.
    auto x4 = g.find_axis("X4");
    EXPECT_TRUE(x4.touches(g.parse_plunger("P5")));
    EXPECT_THROW(g.find_axis("X3"), std::invalid_argument);
}

TEST(lattice, grid_validation) {
    EXPECT_THROW(GridSpec(0, 3), std::invalid_argument);
    EXPECT_THROW(GridSpec(2, 3, {{2, 0}}), std::invalid_argument);
    EXPECT_THROW(GridSpec(2, 3, {}, {"Y7"}), std::invalid_argument);
    EXPECT_NO_THROW(GridSpec(2, 3, {{1, 2}}, {"Y6"}));
}

TEST(lattice, enumerate_tqds_examples) {
    EXPECT_EQ(enumerate_tqds(GridSpec(2, 3)).size(), 10u);
    auto line = enumerate_tqds(GridSpec(1, 3));
    ASSERT_EQ(line.size(), 1u);
    EXPECT_EQ(line[0].shape, TqdShape::LinearHorizontal);
    EXPECT_EQ(enumerate_tqds(GridSpec(2, 3, {{0, 0}})).size(), 6u);
    EXPECT_TRUE(enumerate_tqds(GridSpec(1, 2)).empty());
    EXPECT_TRUE(enumerate_tqds(GridSpec(1, 1)).empty());
}

TEST(lattice, enumerate_tqds_canonical_order) {
    GridSpec g(2, 3);
    auto t = enumerate_tqds(g);
    for (std::size_t i = 1; i < t.size(); ++i) EXPECT_LE(g.index(t[i - 1].center()), g.index(t[i].center()));
    for (auto& q : t) {
        EXPECT_LT(q.dots[0], q.dots[2]);
        EXPECT_EQ(q.shape, classify_tqd(q.dots[0], q.dots[1], q.dots[2]));
    }
    // Centre P1 has exactly one path: P2-P1-P4.
    EXPECT_EQ(t[0].center(), (DotId{0, 0}));
    EXPECT_EQ(t[0].shape, TqdShape::Elbow);
    // Centre P2: horizontal line first, then elbows.
    EXPECT_EQ(t[1].shape, TqdShape::LinearHorizontal);
    EXPECT_EQ(t[1].center(), (DotId{0, 1}));
}

TEST(lattice, formula_examples) {
    EXPECT_EQ(tqd_count_formula(2, 3), 10);
    EXPECT_EQ(tqd_count_formula(2, 2), 4);
    EXPECT_EQ(tqd_count_formula(6, 6), 148);
    EXPECT_THROW(tqd_count_formula(1, 5), std::domain_error);
    EXPECT_THROW(tqd_count_formula(4, 1), std::domain_error);
}

TEST(lattice, formula_matches_enumeration_and_oracle) {
    for (int n = 2; n <= 6; ++n)
        for (int m = 2; m <= 6; ++m) {
            GridSpec g(n, m);
            auto count = enumerate_tqds(g).size();
            EXPECT_EQ(static_cast<long long>(count), tqd_count_formula(n, m)) << n << "x" << m;
            EXPECT_EQ(count, brute_force_path_count(g)) << n << "x" << m;
        }
}

TEST(lattice, enumeration_matches_oracle_with_defects) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        int rows = 1 + static_cast<int>(rng() % 4), cols = 1 + static_cast<int>(rng() % 4);
        auto g = random_defects(rows, cols, rng, 3, 3);
        auto tqds = enumerate_tqds(g);
        EXPECT_EQ(tqds.size(), brute_force_path_count(g));
        for (auto& t : tqds) {
            EXPECT_TRUE(g.live_link(t.dots[0], t.dots[1]));
            EXPECT_TRUE(g.live_link(t.dots[1], t.dots[2]));
            for (DotId d : t.dots) EXPECT_TRUE(g.dot_live(d));
        }
        EXPECT_EQ(enumerate_qubit_assignments(g).size(), 2 * tqds.size());
    }
}

TEST(lattice, dead_axis_keeps_dots_usable) {
    GridSpec g(1, 3, {}, {"X1"});
    EXPECT_TRUE(g.dot_live({0, 0}));
    EXPECT_TRUE(enumerate_tqds(g).empty());
    GridSpec g2(2, 3, {}, {"Y4"});
    // Losing Y4 removes the two paths that use it: P2-P1-P4 and P1-P4-P5.
    EXPECT_EQ(enumerate_tqds(g2).size(), 8u);
}

TEST(lattice, qubit_assignments) {
    EXPECT_EQ(enumerate_qubit_assignments(GridSpec(2, 3)).size(), 20u);
    EXPECT_EQ(enumerate_qubit_assignments(GridSpec(1, 3)).size(), 2u);
    EXPECT_EQ(enumerate_qubit_assignments(GridSpec(2, 3, {{0, 0}})).size(), 12u);

    GridSpec g(1, 3);
    auto qa = enumerate_qubit_assignments(g);
    // Both permutations keep b on the middle dot, so both pairs are physical axes.
    for (auto& q : qa) {
        auto [a, b] = q.singlet_pair();
        auto [b2, c] = q.gauge_pair();
        EXPECT_EQ(b, b2);
        EXPECT_TRUE(g.live_link(a, b));
        EXPECT_TRUE(g.live_link(b, c));
    }
    EXPECT_EQ(qa[0].singlet_pair(), std::pair(DotId{0, 0}, DotId{0, 1}));
    EXPECT_EQ(qa[1].singlet_pair(), std::pair(DotId{0, 2}, DotId{0, 1}));
}

TEST(lattice, qubit_pair_partitions_2x3) {
    auto pairs = disjoint_tqd_pairs(GridSpec(2, 3));
    // {P1P2P3 | P4P5P6}, {P1P2P4 | P3P5P6}, {P1P4P5 | P2P3P6}.
    EXPECT_EQ(pairs.size(), 3u);
    EXPECT_EQ(2 * pairs.size(), 6u);
}

TEST(lattice, pack_examples) {
    auto p = pack_qubits(GridSpec(2, 3), PackObjective::MaxCount);
    EXPECT_EQ(p.qubits.size(), 2u);
    EXPECT_EQ(pack_qubits(GridSpec(2, 3, {{0, 0}}), PackObjective::MaxCount).qubits.size(), 1u);
    auto empty = pack_qubits(GridSpec(1, 2));
    EXPECT_TRUE(empty.qubits.empty());
    EXPECT_EQ(empty.adjacency_count, 0);
}

TEST(lattice, pack_result_is_disjoint_and_consistent) {
    GridSpec g(3, 4, {{1, 1}});
    auto p = pack_qubits(g);
    std::set<DotId> seen;
    for (auto& q : p.qubits)
        for (DotId d : q.tqd.dots) EXPECT_TRUE(seen.insert(d).second);
    EXPECT_EQ(p.adjacency_count, adjacency_count(g, p.qubits));
    EXPECT_EQ(p.qubits.size(), 3u);
}

TEST(lattice, exact_matches_oracle_random_grids) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 150; ++trial) {
        int rows = 1 + static_cast<int>(rng() % 3), cols = 1 + static_cast<int>(rng() % 4);
        auto g = random_defects(rows, cols, rng, 2, 2);
        for (auto obj : {PackObjective::MaxCount, PackObjective::MaxCountThenAdjacency}) {
            auto exact = pack_qubits(g, obj, PackSolver::Exact);
            auto oracle = pack_qubits(g, obj, PackSolver::BruteForceOracle);
            ASSERT_EQ(exact.qubits.size(), oracle.qubits.size());
            if (obj == PackObjective::MaxCountThenAdjacency) {
                EXPECT_EQ(exact.adjacency_count, oracle.adjacency_count);
            }
            EXPECT_EQ(exact.qubits, oracle.qubits) << "tie-break must agree";
        }
    }
}

TEST(lattice, defects_are_monotone) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 60; ++trial) {
        int rows = 2 + static_cast<int>(rng() % 2), cols = 2 + static_cast<int>(rng() % 3);
        auto g = random_defects(rows, cols, rng, 1, 1);
        auto base_tqds = enumerate_tqds(g).size();
        auto base_pack = pack_qubits(g, PackObjective::MaxCount).qubits.size();
        for (int i = 0; i < g.dot_count(); ++i) {
            auto dd = g.dead_dots();
            dd.insert(g.dot(i));
            GridSpec worse(rows, cols, dd, g.dead_axes());
            EXPECT_LE(enumerate_tqds(worse).size(), base_tqds);
            EXPECT_LE(pack_qubits(worse, PackObjective::MaxCount).qubits.size(), base_pack);
        }
        for (auto& ax : g.axes()) {
            auto da = g.dead_axes();
            da.insert(ax.label);
            GridSpec worse(rows, cols, g.dead_dots(), da);
            EXPECT_LE(enumerate_tqds(worse).size(), base_tqds);
            EXPECT_LE(pack_qubits(worse, PackObjective::MaxCount).qubits.size(), base_pack);
        }
    }
}
