#pragma once

// Quasi-static noise model: one draw per shot, constant over the shot.
//
// Charge noise scales each axis' exchange by (1 + sigma_j_rel * g);
// hyperfine noise offsets each dot's Larmor frequency by sigma_bz_hz * g.

#include <algorithm>
#include <map>
#include <random>
#include <string>

#include "eoq/lattice.hpp"
#include "eoq/rng.hpp"
#include "eoq/spin_sim.hpp"

namespace eoq {

struct QuasiStaticNoise {
    double sigma_j_rel = 0.0;
    std::map<std::string, double> sigma_j_rel_per_axis;  // overrides by axis label
    double sigma_bz_hz = 0.0;
    double b_uniform_hz = 0.0;

    double sigma_j_for(const std::string& axis) const {
        auto it = sigma_j_rel_per_axis.find(axis);
        return it == sigma_j_rel_per_axis.end() ? sigma_j_rel : it->second;
    }
    bool quiet() const {
        bool axes_quiet = std::all_of(sigma_j_rel_per_axis.begin(), sigma_j_rel_per_axis.end(),
                                      [](auto& kv) { return kv.second == 0.0; });
        return sigma_j_rel == 0.0 && sigma_bz_hz == 0.0 && axes_quiet;
    }
};

/// Draws a FieldSpec for a grid register. Axis slots follow grid.axes() order.
inline FieldSpec sample_fields(const GridSpec& grid, const QuasiStaticNoise& noise, Engine& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    FieldSpec f;
    f.b_uniform_hz = noise.b_uniform_hz;
    f.noise.delta_bz_hz.resize(grid.dot_count());
    for (auto& d : f.noise.delta_bz_hz) d = noise.sigma_bz_hz * g(rng);
    auto axes = grid.axes();
    f.noise.j_scale.resize(axes.size());
    for (std::size_t i = 0; i < axes.size(); ++i)
        f.noise.j_scale[i] = std::max(1.0 + noise.sigma_j_for(axes[i].label) * g(rng), 1e-9);
    return f;
}

}  // namespace eoq
