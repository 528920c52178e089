#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "eoq/lattice.hpp"
#include "eoq/spin_sim.hpp"

namespace eoq {

/// One rectangular exchange pulse followed by an idle.
///
/// A pulse with t_pulse_s == 0 is applied as an ideal instantaneous rotation
/// (no Zeeman evolution, no exchange noise).
struct Pulse {
    std::string axis;
    double theta = 0.0;
    double t_pulse_s = 0.0;
    double t_idle_s = 0.0;
};

using PulseSeq = std::vector<Pulse>;

inline PulseSeq reversed(const PulseSeq& seq) { return PulseSeq(seq.rbegin(), seq.rend()); }

/// Spin-index pair and j_scale slot for each axis label of a grid.
class AxisTable {
public:
    explicit AxisTable(const GridSpec& grid) : grid_(grid), axes_(grid.axes()) {}

    struct Entry {
        SpinPair spins;
        int slot;
    };

    Entry operator()(const std::string& label) const {
        for (std::size_t i = 0; i < axes_.size(); ++i)
            if (axes_[i].label == label) {
                if (!grid_.axis_live(axes_[i])) throw std::invalid_argument("axis " + label + " is not live");
                return {{grid_.index(axes_[i].a), grid_.index(axes_[i].b)}, static_cast<int>(i)};
            }
        throw std::invalid_argument("unknown axis " + label);
    }

    const std::vector<ExchangeAxis>& axes() const { return axes_; }

private:
    GridSpec grid_;
    std::vector<ExchangeAxis> axes_;
};

/// Executes a pulse sequence on a full-register state.
inline PureState run_pulses(PureState s, const AxisTable& axes, const PulseSeq& seq, const FieldSpec& fields) {
    for (const auto& p : seq) {
        auto e = axes(p.axis);
        if (p.t_pulse_s <= 0.0) {
            s = apply_exchange(std::move(s), e.spins, p.theta);
        } else {
            double j = p.theta / (2.0 * std::numbers::pi * p.t_pulse_s);
            s = evolve_segment(std::move(s), ActiveExchange{e.spins, j, e.slot}, p.t_pulse_s, fields);
        }
        if (p.t_idle_s > 0.0) s = evolve_segment(std::move(s), std::nullopt, p.t_idle_s, fields);
    }
    return s;
}

}  // namespace eoq
