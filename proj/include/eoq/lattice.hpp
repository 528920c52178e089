#pragma once

// Quantum-dot lattice: dots, exchange axes, triple-dot paths, and
// defect-aware qubit packing.
//
// Dots are numbered P1..P(n*m) row-major. Exchange axes are named after the
// plunger they hang from:
//   X<k>  joins P<k> and P<k+1> (same row; k is the left dot)
//   Y<k>  joins P<k-m> and P<k> (adjacent rows; k is the lower-row dot)
// On the 2x3 device this gives X1, X2, X4, X5, Y4, Y5, Y6.

#include <algorithm>
#include <array>
#include <bit>
#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace eoq {

struct DotId {
    int row = 0;
    int col = 0;
    auto operator<=>(const DotId&) const = default;
};

enum class AxisKind { X, Y };

struct ExchangeAxis {
    DotId a;  // a < b
    DotId b;
    AxisKind kind = AxisKind::X;
    int number = 0;
    std::string label;

    bool touches(DotId d) const { return a == d || b == d; }
    bool operator==(const ExchangeAxis& o) const { return a == o.a && b == o.b; }
};

enum class TqdShape { LinearHorizontal, LinearVertical, Elbow };

inline const char* to_string(TqdShape s) {
    switch (s) {
        case TqdShape::LinearHorizontal: return "linear-horizontal";
        case TqdShape::LinearVertical: return "linear-vertical";
        case TqdShape::Elbow: return "elbow";
    }
    return "?";
}

/// Three dots joined by the live axes (d1,d2) and (d2,d3); d1 < d3.
struct Tqd {
    std::array<DotId, 3> dots;
    TqdShape shape = TqdShape::LinearHorizontal;

    DotId center() const { return dots[1]; }
    bool contains(DotId d) const { return std::find(dots.begin(), dots.end(), d) != dots.end(); }
    bool operator==(const Tqd&) const = default;
};

/// DFS permutation tag, written (a,b)c over the TQD's internal order.
enum class Permutation { P12_3, P23_1 };

inline const char* to_string(Permutation p) {
    return p == Permutation::P12_3 ? "(1,2)3" : "(2,3)1";
}

inline Permutation parse_permutation(const std::string& s) {
    if (s == "(1,2)3") return Permutation::P12_3;
    if (s == "(2,3)1") return Permutation::P23_1;
    throw std::invalid_argument("unknown permutation '" + s + "' (expected (1,2)3 or (2,3)1)");
}

/// A TQD plus a permutation: names one logical qubit.
///
/// The middle dot always carries spin b, so both the singlet axis (a,b) and
/// the gauge axis (b,c) are physical exchange axes of the TQD.
struct QubitAssignment {
    Tqd tqd;
    Permutation permutation = Permutation::P12_3;

    /// Dots carrying spins (a, b, c).
    std::array<DotId, 3> spin_dots() const {
        const auto& d = tqd.dots;
        if (permutation == Permutation::P12_3) return {d[0], d[1], d[2]};
        return {d[2], d[1], d[0]};
    }
    std::pair<DotId, DotId> singlet_pair() const {
        auto s = spin_dots();
        return {s[0], s[1]};
    }
    std::pair<DotId, DotId> gauge_pair() const {
        auto s = spin_dots();
        return {s[1], s[2]};
    }
    bool operator==(const QubitAssignment&) const = default;
};

class GridSpec {
public:
    GridSpec() = default;
    GridSpec(int rows, int cols, std::set<DotId> dead_dots = {}, std::set<std::string> dead_axes = {})
        : rows_(rows), cols_(cols), dead_dots_(std::move(dead_dots)), dead_axes_(std::move(dead_axes)) {
        validate();
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int dot_count() const { return rows_ * cols_; }
    const std::set<DotId>& dead_dots() const { return dead_dots_; }
    const std::set<std::string>& dead_axes() const { return dead_axes_; }

    bool in_bounds(DotId d) const { return d.row >= 0 && d.row < rows_ && d.col >= 0 && d.col < cols_; }

    /// Row-major index; also the spin index of the dot in a full-register simulation.
    int index(DotId d) const { return d.row * cols_ + d.col; }
    DotId dot(int index) const { return {index / cols_, index % cols_}; }
    std::string plunger(DotId d) const { return "P" + std::to_string(index(d) + 1); }

    DotId parse_plunger(const std::string& name) const {
        if (name.size() < 2 || name[0] != 'P') throw std::invalid_argument("bad plunger name '" + name + "'");
        int k = std::stoi(name.substr(1));
        if (k < 1 || k > dot_count()) throw std::invalid_argument("plunger '" + name + "' out of range");
        return dot(k - 1);
    }

    bool dot_live(DotId d) const { return in_bounds(d) && !dead_dots_.count(d); }

    /// All axes of the grid, X axes first, each kind by label number.
    std::vector<ExchangeAxis> axes() const {
        std::vector<ExchangeAxis> out;
        for (int r = 0; r < rows_; ++r)
            for (int c = 0; c + 1 < cols_; ++c) out.push_back(make_axis({r, c}, {r, c + 1}));
        std::vector<ExchangeAxis> ys;
        for (int r = 1; r < rows_; ++r)
            for (int c = 0; c < cols_; ++c) ys.push_back(make_axis({r - 1, c}, {r, c}));
        out.insert(out.end(), ys.begin(), ys.end());
        return out;
    }

    /// The axis joining two nearest-neighbour dots, if they are neighbours.
    std::optional<ExchangeAxis> axis_between(DotId u, DotId v) const {
        if (!in_bounds(u) || !in_bounds(v)) return std::nullopt;
        int dr = std::abs(u.row - v.row), dc = std::abs(u.col - v.col);
        if (dr + dc != 1) return std::nullopt;
        return make_axis(std::min(u, v), std::max(u, v));
    }

    ExchangeAxis find_axis(const std::string& label) const {
        for (auto& ax : axes())
            if (ax.label == label) return ax;
        throw std::invalid_argument("no exchange axis '" + label + "' in " + std::to_string(rows_) + "x" +
                                    std::to_string(cols_) + " grid");
    }

    /// Usable for exchange: not marked dead and both dots live.
    bool axis_live(const ExchangeAxis& ax) const {
        return !dead_axes_.count(ax.label) && dot_live(ax.a) && dot_live(ax.b);
    }
    bool live_link(DotId u, DotId v) const {
        auto ax = axis_between(u, v);
        return ax && axis_live(*ax);
    }

    /// Live neighbours of d over live axes, row-major order.
    std::vector<DotId> live_neighbors(DotId d) const {
        std::vector<DotId> out;
        for (DotId v : {DotId{d.row - 1, d.col}, DotId{d.row, d.col - 1}, DotId{d.row, d.col + 1},
                        DotId{d.row + 1, d.col}})
            if (live_link(d, v)) out.push_back(v);
        return out;
    }

    std::vector<DotId> live_dots() const {
        std::vector<DotId> out;
        for (int i = 0; i < dot_count(); ++i)
            if (dot_live(dot(i))) out.push_back(dot(i));
        return out;
    }

    void validate() const {
        if (rows_ < 1 || cols_ < 1) throw std::invalid_argument("grid needs at least one row and one column");
        for (auto& d : dead_dots_)
            if (!in_bounds(d))
                throw std::invalid_argument("dead dot (" + std::to_string(d.row) + "," + std::to_string(d.col) +
                                            ") out of bounds");
        auto all = axes();
        for (auto& label : dead_axes_) {
            bool found = std::any_of(all.begin(), all.end(), [&](auto& ax) { return ax.label == label; });
            if (!found) throw std::invalid_argument("dead axis '" + label + "' does not exist in grid");
        }
    }

private:
    ExchangeAxis make_axis(DotId a, DotId b) const {
        ExchangeAxis ax{a, b, a.row == b.row ? AxisKind::X : AxisKind::Y, 0, {}};
        ax.number = ax.kind == AxisKind::X ? index(a) + 1 : index(b) + 1;
        ax.label = (ax.kind == AxisKind::X ? "X" : "Y") + std::to_string(ax.number);
        return ax;
    }

    int rows_ = 1;
    int cols_ = 1;
    std::set<DotId> dead_dots_;
    std::set<std::string> dead_axes_;
};

inline TqdShape classify_tqd(DotId d1, DotId d2, DotId d3) {
    if (d1.row == d2.row && d2.row == d3.row) return TqdShape::LinearHorizontal;
    if (d1.col == d2.col && d2.col == d3.col) return TqdShape::LinearVertical;
    return TqdShape::Elbow;
}

/// All three-dot simple paths over live dots and axes.
///
/// Ordered row-major by the centre dot, then by shape, then by (d1, d3).
inline std::vector<Tqd> enumerate_tqds(const GridSpec& grid) {
    std::vector<Tqd> out;
    for (DotId center : grid.live_dots()) {
        auto nb = grid.live_neighbors(center);
        std::vector<Tqd> local;
        for (std::size_t i = 0; i < nb.size(); ++i)
            for (std::size_t j = i + 1; j < nb.size(); ++j) {
                DotId d1 = std::min(nb[i], nb[j]), d3 = std::max(nb[i], nb[j]);
                local.push_back({{d1, center, d3}, classify_tqd(d1, center, d3)});
            }
        std::sort(local.begin(), local.end(), [](const Tqd& x, const Tqd& y) {
            if (x.shape != y.shape) return x.shape < y.shape;
            return std::pair(x.dots[0], x.dots[2]) < std::pair(y.dots[0], y.dots[2]);
        });
        out.insert(out.end(), local.begin(), local.end());
    }
    return out;
}

/// Closed-form TQD count for a defect-free n x m grid, valid for n, m >= 2.
inline long long tqd_count_formula(long long n, long long m) {
    if (n < 2 || m < 2) throw std::domain_error("tqd_count_formula requires n >= 2 and m >= 2; enumerate instead");
    return 6 * (n - 1) * (m - 1) - 2;
}

inline std::vector<QubitAssignment> enumerate_qubit_assignments(const GridSpec& grid) {
    std::vector<QubitAssignment> out;
    for (auto& t : enumerate_tqds(grid)) {
        out.push_back({t, Permutation::P12_3});
        out.push_back({t, Permutation::P23_1});
    }
    return out;
}

/// Whether two dot sets share at least one live exchange axis.
template <typename A, typename B>
bool dot_sets_coupled(const GridSpec& grid, const A& xs, const B& ys) {
    for (DotId x : xs)
        for (DotId y : ys)
            if (grid.live_link(x, y)) return true;
    return false;
}

struct Placement {
    std::vector<QubitAssignment> qubits;
    int adjacency_count = 0;
};

inline int adjacency_count(const GridSpec& grid, const std::vector<QubitAssignment>& qubits) {
    int n = 0;
    for (std::size_t i = 0; i < qubits.size(); ++i)
        for (std::size_t j = i + 1; j < qubits.size(); ++j)
            if (dot_sets_coupled(grid, qubits[i].tqd.dots, qubits[j].tqd.dots)) ++n;
    return n;
}

/// Unordered pairs of dot-disjoint TQDs, as indices into enumerate_tqds(grid).
inline std::vector<std::pair<std::size_t, std::size_t>> disjoint_tqd_pairs(const GridSpec& grid) {
    auto tqds = enumerate_tqds(grid);
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < tqds.size(); ++i)
        for (std::size_t j = i + 1; j < tqds.size(); ++j) {
            bool disjoint = std::none_of(tqds[i].dots.begin(), tqds[i].dots.end(),
                                         [&](DotId d) { return tqds[j].contains(d); });
            if (disjoint) out.emplace_back(i, j);
        }
    return out;
}

enum class PackObjective { MaxCount, MaxCountThenAdjacency };
enum class PackSolver { Exact, BruteForceOracle };

namespace detail {

struct PackProblem {
    std::vector<Tqd> tqds;
    std::vector<std::uint64_t> masks;
    std::vector<std::vector<char>> coupled;
    bool use_adjacency = false;

    explicit PackProblem(const GridSpec& grid, PackObjective objective)
        : tqds(enumerate_tqds(grid)), use_adjacency(objective == PackObjective::MaxCountThenAdjacency) {
        if (grid.dot_count() > 64) throw std::invalid_argument("qubit packing supports at most 64 dots");
        for (auto& t : tqds) {
            std::uint64_t m = 0;
            for (DotId d : t.dots) m |= std::uint64_t{1} << grid.index(d);
            masks.push_back(m);
        }
        coupled.assign(tqds.size(), std::vector<char>(tqds.size(), 0));
        for (std::size_t i = 0; i < tqds.size(); ++i)
            for (std::size_t j = 0; j < tqds.size(); ++j)
                if (i != j) coupled[i][j] = dot_sets_coupled(grid, tqds[i].dots, tqds[j].dots);
    }

    std::pair<int, int> score(int count, int adjacency) const {
        return {count, use_adjacency ? adjacency : 0};
    }
};

struct PackBest {
    bool found = false;
    std::pair<int, int> score{-1, -1};
    std::vector<std::size_t> chosen;
};

inline void pack_exhaustive(const PackProblem& p, std::size_t i, std::uint64_t used, std::vector<std::size_t>& chosen,
                            int adjacency, PackBest& best) {
    if (i == p.tqds.size()) {
        auto s = p.score(static_cast<int>(chosen.size()), adjacency);
        if (!best.found || s > best.score || (s == best.score && chosen < best.chosen)) {
            best = {true, s, chosen};
        }
        return;
    }
    if (!(used & p.masks[i])) {
        int add = 0;
        for (auto c : chosen) add += p.coupled[i][c];
        chosen.push_back(i);
        pack_exhaustive(p, i + 1, used | p.masks[i], chosen, adjacency + add, best);
        chosen.pop_back();
    }
    pack_exhaustive(p, i + 1, used, chosen, adjacency, best);
}

// Include-first DFS visits equal-size sets in lexicographic order, so the
// first set reaching the best score is the tie-break winner and any branch
// whose bound cannot strictly beat it is pruned.
inline void pack_branch_and_bound(const PackProblem& p, std::size_t i, std::uint64_t used,
                                  std::vector<std::size_t>& chosen, int adjacency, PackBest& best) {
    int count = static_cast<int>(chosen.size());
    if (best.found) {
        std::uint64_t reachable = 0;
        int candidates = 0;
        for (std::size_t k = i; k < p.tqds.size(); ++k)
            if (!(used & p.masks[k])) {
                reachable |= p.masks[k];
                ++candidates;
            }
        int extra = std::min(std::popcount(reachable) / 3, candidates);
        auto bound = p.score(count + extra, adjacency + extra * count + extra * (extra - 1) / 2);
        if (bound <= best.score) return;
    }
    if (i == p.tqds.size()) {
        best = {true, p.score(count, adjacency), chosen};
        return;
    }
    if (!(used & p.masks[i])) {
        int add = 0;
        for (auto c : chosen) add += p.coupled[i][c];
        chosen.push_back(i);
        pack_branch_and_bound(p, i + 1, used | p.masks[i], chosen, adjacency + add, best);
        chosen.pop_back();
    }
    pack_branch_and_bound(p, i + 1, used, chosen, adjacency, best);
}

}  // namespace detail

/// Maximum set of dot-disjoint qubits.
///
/// Ties between equal-objective placements go to the lexicographically least
/// sorted list of TQD indices (enumeration order). Each qubit uses the
/// (1,2)3 permutation; permutations do not affect the objective.
inline Placement pack_qubits(const GridSpec& grid, PackObjective objective = PackObjective::MaxCountThenAdjacency,
                             PackSolver solver = PackSolver::Exact) {
    detail::PackProblem problem(grid, objective);
    detail::PackBest best;
    std::vector<std::size_t> chosen;
    if (solver == PackSolver::Exact)
        detail::pack_branch_and_bound(problem, 0, 0, chosen, 0, best);
    else
        detail::pack_exhaustive(problem, 0, 0, chosen, 0, best);

    Placement out;
    for (auto i : best.chosen) out.qubits.push_back({problem.tqds[i], Permutation::P12_3});
    out.adjacency_count = adjacency_count(grid, out.qubits);
    return out;
}

}  // namespace eoq
