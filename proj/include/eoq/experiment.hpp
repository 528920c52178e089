#pragma once

// Config-driven experiment runner behind the `eoq` command line tool.
//
// A run reads one JSON config, applies command line overrides, writes its
// artifacts into the output directory and returns a process exit code.
// Every artifact embeds the normalized config echo, the seed and the tool
// version. The echo leaves out `threads` and `output_dir`, so artifacts do
// not depend on either.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "eoq/benchmark.hpp"
#include "eoq/clifford.hpp"
#include "eoq/encoding.hpp"
#include "eoq/fit.hpp"
#include "eoq/lattice.hpp"
#include "eoq/noise.hpp"
#include "eoq/pulse_control.hpp"
#include "eoq/spin_sim.hpp"

namespace eoq::experiment {

using json = nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kCsvVersion = "eoq-csv v1";

// Larmor frequency per tesla for g = 2.
inline constexpr double kLarmorHzPerTesla = 27.99249e9;

enum ExitCode { kOk = 0, kFailure = 1, kConfigError = 2, kFitError = 3, kValidationFailed = 4 };

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names = {"enumerate", "place", "fingerprint", "nosc",
                                                   "rb",        "route", "validate"};
    return names;
}

namespace detail {

/// Typed access to one JSON object; rejects keys that were never asked for.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + " must be an object");
    }

    bool has(const std::string& key) {
        known_.insert(key);
        return j_.contains(key);
    }

    template <typename T>
    T get(const std::string& key, T fallback) {
        if (!has(key)) return fallback;
        return as<T>(j_.at(key), key);
    }

    template <typename T>
    T require(const std::string& key) {
        if (!has(key)) throw ConfigError(where() + " is missing required key '" + key + "'");
        return as<T>(j_.at(key), key);
    }

    std::optional<Reader> object(const std::string& key) {
        if (!has(key)) return std::nullopt;
        return Reader(j_.at(key), path_ + "." + key);
    }

    /// Throws on keys not requested so far.
    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!known_.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where());
    }

    std::string where() const { return path_.empty() ? "config" : path_; }

private:
    template <typename T>
    T as(const json& v, const std::string& key) const {
        try {
            if constexpr (std::is_same_v<T, double>) {
                if (!v.is_number()) throw ConfigError("");
            } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
                if (!v.is_number_integer()) throw ConfigError("");
                if constexpr (std::is_unsigned_v<T>) {
                    if (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)
                        throw ConfigError("");
                }
            } else if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) throw ConfigError("");
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string()) throw ConfigError("");
            }
            return v.get<T>();
        } catch (const std::exception&) {
            throw ConfigError(where() + "." + key + " has the wrong type");
        }
    }

    const json& j_;
    std::string path_;
    std::set<std::string> known_;
};

inline std::vector<double> number_list(const json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigError(path + " must be an array of numbers");
    std::vector<double> out;
    for (auto& x : v) {
        if (!x.is_number()) throw ConfigError(path + " must be an array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

inline std::vector<std::string> string_list(const json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigError(path + " must be an array of strings");
    std::vector<std::string> out;
    for (auto& x : v) {
        if (!x.is_string()) throw ConfigError(path + " must be an array of strings");
        out.push_back(x.get<std::string>());
    }
    return out;
}

}  // namespace detail

/// Voltage sweep: `points` evenly spaced values from start to stop.
struct Sweep {
    double start_mv = 0.0;
    double stop_mv = 0.0;
    int points = 1;

    std::vector<double> volts() const {
        std::vector<double> v(points);
        for (int i = 0; i < points; ++i)
            v[i] = 1e-3 * (points == 1 ? start_mv : start_mv + (stop_mv - start_mv) * i / (points - 1));
        return v;
    }
};

struct QubitSpec {
    std::array<std::string, 3> dots;
    std::string permutation = "(1,2)3";
};

struct FingerprintOptions {
    std::vector<std::string> axes;
    Sweep barrier{-10.0, 30.0, 41};
    Sweep detuning{-10.0, 10.0, 41};
    double t_evolve_ns = 20.0;
    int shots = 1;
    bool probability_mode = true;
};

struct NoscOptions {
    std::vector<std::string> axes;
    double j_mhz = 100.0;
    double periods = 40.0;
    int points_per_period = 10;
    int samples = 2000;
    int envelope_power = 2;
};

struct RbOptions {
    QubitSpec qubit;
    std::vector<int> lengths = {1, 2, 4, 8, 16, 32, 64, 128, 256};
    int n_sequences = 20;
    int shots = 20;
    double t_pulse_ns = 5.0;
    double t_idle_ns = 10.0;
    double readout_error = 0.0;
    double injected_depolarizing = 0.0;
    bool probability_mode = true;
    std::array<double, 2> epsilon_band = {5e-4, 5e-3};
};

struct RouteOptions {
    QubitSpec qubit;
    double t_pulse_ns = 0.0;
    double t_idle_ns = 0.0;
};

struct ValidateOptions {
    std::vector<std::string> suites = {"combinatorics", "exchange_law", "clifford", "routing",
                                       "packing",       "rb_oracle",    "nosc_oracle"};
    double rb_oracle_p = 2e-3;
    std::vector<int> rb_oracle_lengths = {2, 4, 8, 16, 32, 64, 128, 256};
    int rb_oracle_sequences = 20;
    int rb_oracle_shots = 200;
    std::vector<double> nosc_sigmas = {0.005, 0.02, 0.05};
    int nosc_samples = 2000;
};

struct Config {
    std::string experiment;  // empty: taken from the command line
    int rows = 2, cols = 3;
    std::vector<std::string> dead_dots;
    std::vector<std::string> dead_axes;
    std::array<std::string, 2> spam_pair = {"P2", "P3"};
    std::uint64_t seed = 1;
    unsigned threads = 1;
    std::string output_dir = "eoq-out";

    double j0_mhz = 10.0, v_b0_mv = 10.0, eps0_mv = 5.0;
    std::map<std::string, std::array<double, 3>> exchange_per_axis;  // {j0_mhz, v_b0_mv, eps0_mv}

    double sigma_j_rel = 0.01;
    std::map<std::string, double> sigma_j_rel_per_axis;
    double sigma_bz_khz = 50.0;
    double b_uniform_mt = 1.0;

    std::string place_objective = "max_count_then_adjacency";
    std::optional<FingerprintOptions> fingerprint;
    std::optional<NoscOptions> nosc;
    std::optional<RbOptions> rb;
    std::optional<RouteOptions> route;
    ValidateOptions validate;

    GridSpec grid() const {
        GridSpec bare(rows, cols);
        std::set<DotId> dead;
        for (auto& d : dead_dots) dead.insert(bare.parse_plunger(d));
        return GridSpec(rows, cols, dead, {dead_axes.begin(), dead_axes.end()});
    }
    std::pair<DotId, DotId> spam(const GridSpec& g) const {
        return {g.parse_plunger(spam_pair[0]), g.parse_plunger(spam_pair[1])};
    }
    ExchangeModel exchange_for(const std::string& axis) const {
        auto it = exchange_per_axis.find(axis);
        auto p = it == exchange_per_axis.end() ? std::array<double, 3>{j0_mhz, v_b0_mv, eps0_mv} : it->second;
        ExchangeModel m{p[0] * 1e6, p[1] * 1e-3, p[2] * 1e-3};
        m.validate();
        return m;
    }
    QuasiStaticNoise noise() const {
        return {sigma_j_rel, sigma_j_rel_per_axis, sigma_bz_khz * 1e3, b_uniform_mt * 1e-3 * kLarmorHzPerTesla};
    }
};

namespace detail {

inline QubitSpec read_qubit(Reader r) {
    QubitSpec q;
    auto dots = string_list(r.require<json>("dots"), r.where() + ".dots");
    if (dots.size() != 3) throw ConfigError(r.where() + ".dots must list three plungers");
    q.dots = {dots[0], dots[1], dots[2]};
    q.permutation = r.get<std::string>("permutation", q.permutation);
    r.finish();
    return q;
}

inline json qubit_json(const QubitSpec& q) { return {{"dots", q.dots}, {"permutation", q.permutation}}; }

inline Sweep read_sweep(Reader r, Sweep s) {
    s.start_mv = r.get("start_mv", s.start_mv);
    s.stop_mv = r.get("stop_mv", s.stop_mv);
    s.points = r.get("points", s.points);
    if (s.points < 1) throw ConfigError(r.where() + ".points must be >= 1");
    r.finish();
    return s;
}

inline json sweep_json(const Sweep& s) {
    return {{"start_mv", s.start_mv}, {"stop_mv", s.stop_mv}, {"points", s.points}};
}

inline std::vector<int> int_list(const json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigError(path + " must be an array of integers");
    std::vector<int> out;
    for (auto& x : v) {
        if (!x.is_number_integer()) throw ConfigError(path + " must be an array of integers");
        out.push_back(x.get<int>());
    }
    return out;
}

}  // namespace detail

/// Parses and schema-checks a config document.
inline Config parse_config(const json& doc) {
    using detail::Reader;
    Config c;
    Reader top(doc, "");
    c.experiment = top.get<std::string>("experiment", "");
    if (!c.experiment.empty() &&
        std::find(experiment_names().begin(), experiment_names().end(), c.experiment) == experiment_names().end())
        throw ConfigError("unknown experiment '" + c.experiment + "'");
    c.seed = top.get<std::uint64_t>("seed", c.seed);
    c.threads = top.get<unsigned>("threads", c.threads);
    c.output_dir = top.get<std::string>("output_dir", c.output_dir);

    if (auto g = top.object("grid")) {
        c.rows = g->require<int>("rows");
        c.cols = g->require<int>("cols");
        if (g->has("dead_dots")) c.dead_dots = detail::string_list(doc["grid"]["dead_dots"], "grid.dead_dots");
        if (g->has("dead_axes")) c.dead_axes = detail::string_list(doc["grid"]["dead_axes"], "grid.dead_axes");
        g->finish();
    }
    if (top.has("spam_pair")) {
        auto p = detail::string_list(doc["spam_pair"], "spam_pair");
        if (p.size() != 2) throw ConfigError("spam_pair must name two plungers");
        c.spam_pair = {p[0], p[1]};
    }
    if (auto e = top.object("exchange")) {
        c.j0_mhz = e->get("j0_mhz", c.j0_mhz);
        c.v_b0_mv = e->get("v_b0_mv", c.v_b0_mv);
        c.eps0_mv = e->get("eps0_mv", c.eps0_mv);
        if (auto per = e->object("per_axis")) {
            for (auto& [axis, v] : doc["exchange"]["per_axis"].items()) {
                (void)per->has(axis);
                Reader a(v, "exchange.per_axis." + axis);
                c.exchange_per_axis[axis] = {a.get("j0_mhz", c.j0_mhz), a.get("v_b0_mv", c.v_b0_mv),
                                             a.get("eps0_mv", c.eps0_mv)};
                a.finish();
            }
            per->finish();
        }
        e->finish();
    }
    if (auto n = top.object("noise")) {
        c.sigma_j_rel = n->get("sigma_j_rel", c.sigma_j_rel);
        if (auto per = n->object("sigma_j_rel_per_axis")) {
            for (auto& [axis, v] : doc["noise"]["sigma_j_rel_per_axis"].items()) {
                (void)per->has(axis);
                if (!v.is_number()) throw ConfigError("noise.sigma_j_rel_per_axis." + axis + " must be a number");
                c.sigma_j_rel_per_axis[axis] = v.get<double>();
            }
            per->finish();
        }
        c.sigma_bz_khz = n->get("sigma_bz_khz", c.sigma_bz_khz);
        c.b_uniform_mt = n->get("b_uniform_mt", c.b_uniform_mt);
        n->finish();
    }
    if (auto p = top.object("place")) {
        c.place_objective = p->get<std::string>("objective", c.place_objective);
        if (c.place_objective != "max_count" && c.place_objective != "max_count_then_adjacency")
            throw ConfigError("place.objective must be max_count or max_count_then_adjacency");
        p->finish();
    }
    if (auto f = top.object("fingerprint")) {
        FingerprintOptions o;
        if (f->has("axes")) o.axes = detail::string_list(doc["fingerprint"]["axes"], "fingerprint.axes");
        if (auto s = f->object("barrier")) o.barrier = detail::read_sweep(*s, o.barrier);
        if (auto s = f->object("detuning")) o.detuning = detail::read_sweep(*s, o.detuning);
        o.t_evolve_ns = f->get("t_evolve_ns", o.t_evolve_ns);
        o.shots = f->get("shots", o.shots);
        o.probability_mode = f->get("probability_mode", o.probability_mode);
        f->finish();
        c.fingerprint = o;
    }
    if (auto n = top.object("nosc")) {
        NoscOptions o;
        if (n->has("axes")) o.axes = detail::string_list(doc["nosc"]["axes"], "nosc.axes");
        o.j_mhz = n->get("j_mhz", o.j_mhz);
        o.periods = n->get("periods", o.periods);
        o.points_per_period = n->get("points_per_period", o.points_per_period);
        o.samples = n->get("samples", o.samples);
        o.envelope_power = n->get("envelope_power", o.envelope_power);
        n->finish();
        c.nosc = o;
    }
    if (auto r = top.object("rb")) {
        RbOptions o;
        if (auto q = r->object("qubit")) o.qubit = detail::read_qubit(*q);
        else throw ConfigError("rb is missing required key 'qubit'");
        if (r->has("lengths")) o.lengths = detail::int_list(doc["rb"]["lengths"], "rb.lengths");
        o.n_sequences = r->get("n_sequences", o.n_sequences);
        o.shots = r->get("shots", o.shots);
        o.t_pulse_ns = r->get("t_pulse_ns", o.t_pulse_ns);
        o.t_idle_ns = r->get("t_idle_ns", o.t_idle_ns);
        o.readout_error = r->get("readout_error", o.readout_error);
        o.injected_depolarizing = r->get("injected_depolarizing", o.injected_depolarizing);
        o.probability_mode = r->get("probability_mode", o.probability_mode);
        if (r->has("epsilon_band")) {
            auto b = detail::number_list(doc["rb"]["epsilon_band"], "rb.epsilon_band");
            if (b.size() != 2 || !(b[0] <= b[1])) throw ConfigError("rb.epsilon_band must be [low, high]");
            o.epsilon_band = {b[0], b[1]};
        }
        r->finish();
        c.rb = o;
    }
    if (auto r = top.object("route")) {
        RouteOptions o;
        if (auto q = r->object("qubit")) o.qubit = detail::read_qubit(*q);
        else throw ConfigError("route is missing required key 'qubit'");
        o.t_pulse_ns = r->get("t_pulse_ns", o.t_pulse_ns);
        o.t_idle_ns = r->get("t_idle_ns", o.t_idle_ns);
        r->finish();
        c.route = o;
    }
    if (auto v = top.object("validate")) {
        auto& o = c.validate;
        if (v->has("suites")) o.suites = detail::string_list(doc["validate"]["suites"], "validate.suites");
        o.rb_oracle_p = v->get("rb_oracle_p", o.rb_oracle_p);
        if (v->has("rb_oracle_lengths"))
            o.rb_oracle_lengths = detail::int_list(doc["validate"]["rb_oracle_lengths"], "validate.rb_oracle_lengths");
        o.rb_oracle_sequences = v->get("rb_oracle_sequences", o.rb_oracle_sequences);
        o.rb_oracle_shots = v->get("rb_oracle_shots", o.rb_oracle_shots);
        if (v->has("nosc_sigmas"))
            o.nosc_sigmas = detail::number_list(doc["validate"]["nosc_sigmas"], "validate.nosc_sigmas");
        o.nosc_samples = v->get("nosc_samples", o.nosc_samples);
        v->finish();
    }
    top.finish();

    // Semantic checks that need no experiment.
    if (c.sigma_j_rel < 0 || c.sigma_bz_khz < 0 || c.b_uniform_mt < 0)
        throw ConfigError("noise magnitudes must be >= 0");
    for (auto& [axis, s] : c.sigma_j_rel_per_axis)
        if (s < 0) throw ConfigError("noise.sigma_j_rel_per_axis." + axis + " must be >= 0");
    try {
        auto g = c.grid();
        auto sp = c.spam(g);
        if (!g.dot_live(sp.first) || !g.dot_live(sp.second) || !g.live_link(sp.first, sp.second))
            throw ConfigError("spam_pair must be two live dots joined by a live axis");
        for (auto& [axis, _] : c.exchange_per_axis) (void)g.find_axis(axis);
        for (auto& [axis, _] : c.sigma_j_rel_per_axis) (void)g.find_axis(axis);
        (void)c.exchange_for("");
        for (auto& [axis, _] : c.exchange_per_axis) (void)c.exchange_for(axis);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (c.threads < 1) throw ConfigError("threads must be >= 1");
    return c;
}

/// Normalized config: every field with its effective value. Leaves out
/// threads and output_dir.
inline json config_echo(const Config& c) {
    json j;
    if (!c.experiment.empty()) j["experiment"] = c.experiment;
    j["seed"] = c.seed;
    j["grid"] = {{"rows", c.rows}, {"cols", c.cols}, {"dead_dots", c.dead_dots}, {"dead_axes", c.dead_axes}};
    j["spam_pair"] = c.spam_pair;
    j["exchange"] = {{"j0_mhz", c.j0_mhz}, {"v_b0_mv", c.v_b0_mv}, {"eps0_mv", c.eps0_mv}};
    j["exchange"]["per_axis"] = json::object();
    for (auto& [axis, p] : c.exchange_per_axis)
        j["exchange"]["per_axis"][axis] = {{"j0_mhz", p[0]}, {"v_b0_mv", p[1]}, {"eps0_mv", p[2]}};
    j["noise"] = {{"sigma_j_rel", c.sigma_j_rel},
                  {"sigma_j_rel_per_axis", c.sigma_j_rel_per_axis},
                  {"sigma_bz_khz", c.sigma_bz_khz},
                  {"b_uniform_mt", c.b_uniform_mt}};
    j["noise"]["sigma_j_rel_per_axis"] = json::object();
    for (auto& [axis, s] : c.sigma_j_rel_per_axis) j["noise"]["sigma_j_rel_per_axis"][axis] = s;
    j["place"] = {{"objective", c.place_objective}};
    if (c.fingerprint) {
        auto& o = *c.fingerprint;
        j["fingerprint"] = {{"axes", o.axes},
                            {"barrier", detail::sweep_json(o.barrier)},
                            {"detuning", detail::sweep_json(o.detuning)},
                            {"t_evolve_ns", o.t_evolve_ns},
                            {"shots", o.shots},
                            {"probability_mode", o.probability_mode}};
    }
    if (c.nosc) {
        auto& o = *c.nosc;
        j["nosc"] = {{"axes", o.axes},         {"j_mhz", o.j_mhz},     {"periods", o.periods},
                     {"points_per_period", o.points_per_period}, {"samples", o.samples},
                     {"envelope_power", o.envelope_power}};
    }
    if (c.rb) {
        auto& o = *c.rb;
        j["rb"] = {{"qubit", detail::qubit_json(o.qubit)},
                   {"lengths", o.lengths},
                   {"n_sequences", o.n_sequences},
                   {"shots", o.shots},
                   {"t_pulse_ns", o.t_pulse_ns},
                   {"t_idle_ns", o.t_idle_ns},
                   {"readout_error", o.readout_error},
                   {"injected_depolarizing", o.injected_depolarizing},
                   {"probability_mode", o.probability_mode},
                   {"epsilon_band", o.epsilon_band}};
    }
    if (c.route) {
        j["route"] = {{"qubit", detail::qubit_json(c.route->qubit)},
                      {"t_pulse_ns", c.route->t_pulse_ns},
                      {"t_idle_ns", c.route->t_idle_ns}};
    }
    const auto& v = c.validate;
    j["validate"] = {{"suites", v.suites},
                     {"rb_oracle_p", v.rb_oracle_p},
                     {"rb_oracle_lengths", v.rb_oracle_lengths},
                     {"rb_oracle_sequences", v.rb_oracle_sequences},
                     {"rb_oracle_shots", v.rb_oracle_shots},
                     {"nosc_sigmas", v.nosc_sigmas},
                     {"nosc_samples", v.nosc_samples}};
    return j;
}

/// Writes artifacts into one directory; every file carries the provenance
/// block (version, seed, config echo).
class Emitter {
public:
    Emitter(std::filesystem::path dir, const Config& cfg, std::string experiment)
        : dir_(std::move(dir)), echo_(config_echo(cfg)), seed_(cfg.seed), experiment_(std::move(experiment)) {
        std::filesystem::create_directories(dir_);
    }

    /// Opens `name` inside the output directory and writes the CSV preamble.
    std::ofstream csv(const std::string& name, const std::string& header) const {
        auto f = open(name);
        f << "# " << kCsvVersion << " experiment=" << experiment_ << " version=" << kVersion << " seed=" << seed_
          << "\n# config=" << echo_.dump() << "\n"
          << header << "\n";
        return f;
    }

    void write_json(const std::string& name, json body) const {
        body["version"] = kVersion;
        body["experiment"] = experiment_;
        body["seed"] = seed_;
        body["config"] = echo_;
        auto f = open(name);
        f << body.dump(2) << "\n";
    }

    const std::filesystem::path& dir() const { return dir_; }

private:
    std::ofstream open(const std::string& name) const {
        if (name.find('/') != std::string::npos || name.find("..") != std::string::npos)
            throw std::logic_error("artifact names must be plain file names");
        std::ofstream f(dir_ / name);
        if (!f) throw std::runtime_error("cannot write " + (dir_ / name).string());
        return f;
    }

    std::filesystem::path dir_;
    json echo_;
    std::uint64_t seed_;
    std::string experiment_;
};

/// Shortest round-trip formatting for CSV cells.
inline std::string num(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// JSON number or null for non-finite values.
inline json jnum(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

namespace detail {

inline std::string dots_text(const GridSpec& g, const std::array<DotId, 3>& d) {
    return g.plunger(d[0]) + "-" + g.plunger(d[1]) + "-" + g.plunger(d[2]);
}

inline json pulses_json(const PulseSeq& seq) {
    json a = json::array();
    for (auto& p : seq)
        a.push_back({{"axis", p.axis}, {"theta", p.theta}, {"t_pulse_ns", p.t_pulse_s * 1e9}, {"t_idle_ns", p.t_idle_s * 1e9}});
    return a;
}

inline QubitAssignment resolve_qubit(const GridSpec& g, const QubitSpec& q) {
    std::array<DotId, 3> d;
    for (int i = 0; i < 3; ++i) d[i] = g.parse_plunger(q.dots[i]);
    auto perm = parse_permutation(q.permutation);
    for (auto& t : enumerate_tqds(g))
        if ((t.dots == d) || (t.dots == std::array<DotId, 3>{d[2], d[1], d[0]})) {
            if (t.dots != d) throw std::invalid_argument("qubit dots must be listed in TQD order " + dots_text(g, t.dots));
            return {t, perm};
        }
    throw std::invalid_argument("dots " + q.dots[0] + "," + q.dots[1] + "," + q.dots[2] + " do not form a live TQD");
}

inline std::vector<std::string> axes_or_all_live(const GridSpec& g, const std::vector<std::string>& axes) {
    if (!axes.empty()) return axes;
    std::vector<std::string> out;
    for (auto& ax : g.axes())
        if (g.axis_live(ax)) out.push_back(ax.label);
    return out;
}

}  // namespace detail

// Individual experiments. Each returns an exit code.

inline int run_enumerate(const Config& c, const Emitter& out) {
    auto g = c.grid();
    auto tqds = enumerate_tqds(g);
    auto qubits = enumerate_qubit_assignments(g);
    auto pairs = disjoint_tqd_pairs(g);
    {
        auto f = out.csv("tqds.csv", "index,dots,shape");
        for (std::size_t i = 0; i < tqds.size(); ++i)
            f << i << "," << detail::dots_text(g, tqds[i].dots) << "," << to_string(tqds[i].shape) << "\n";
    }
    {
        auto f = out.csv("assignments.csv", "index,tqd_dots,permutation,spin_a,spin_b,spin_c,z_axis,n_axis");
        for (std::size_t i = 0; i < qubits.size(); ++i) {
            auto fr = make_frame(g, qubits[i]);
            auto s = qubits[i].spin_dots();
            f << i << "," << detail::dots_text(g, qubits[i].tqd.dots) << "," << to_string(qubits[i].permutation)
              << "," << g.plunger(s[0]) << "," << g.plunger(s[1]) << "," << g.plunger(s[2]) << "," << fr.z_axis
              << "," << fr.n_axis << "\n";
        }
    }
    json body = {{"tqd_count", tqds.size()},
                 {"assignment_count", qubits.size()},
                 {"disjoint_tqd_pairs", pairs.size()},
                 {"ordered_qubit_pairs", 2 * pairs.size()}};
    if (!g.dead_dots().empty() || !g.dead_axes().empty() || c.rows < 2 || c.cols < 2)
        body["formula_count"] = nullptr;
    else
        body["formula_count"] = tqd_count_formula(c.rows, c.cols);
    out.write_json("enumerate.json", body);
    std::cout << tqds.size() << " TQDs, " << qubits.size() << " qubit assignments\n";
    return kOk;
}

inline int run_place(const Config& c, const Emitter& out) {
    auto g = c.grid();
    auto obj = c.place_objective == "max_count" ? PackObjective::MaxCount : PackObjective::MaxCountThenAdjacency;
    auto p = pack_qubits(g, obj);
    json qubits = json::array();
    auto f = out.csv("placement.csv", "qubit,tqd_dots,permutation,z_axis,n_axis");
    for (std::size_t i = 0; i < p.qubits.size(); ++i) {
        auto fr = make_frame(g, p.qubits[i]);
        auto dots = detail::dots_text(g, p.qubits[i].tqd.dots);
        f << i << "," << dots << "," << to_string(p.qubits[i].permutation) << "," << fr.z_axis << "," << fr.n_axis
          << "\n";
        qubits.push_back({{"dots", dots}, {"permutation", to_string(p.qubits[i].permutation)}, {"z_axis", fr.z_axis},
                          {"n_axis", fr.n_axis}});
    }
    out.write_json("placement.json", {{"objective", c.place_objective},
                                      {"qubit_count", p.qubits.size()},
                                      {"adjacency_count", p.adjacency_count},
                                      {"qubits", qubits}});
    std::cout << p.qubits.size() << " qubits placed, " << p.adjacency_count << " coupled pairs\n";
    return kOk;
}

inline int run_fingerprint(const Config& c, const Emitter& out) {
    if (!c.fingerprint) throw ConfigError("fingerprint experiment needs a 'fingerprint' block");
    const auto& o = *c.fingerprint;
    auto g = c.grid();
    auto spam = c.spam(g);
    json maps = json::array();
    for (const auto& axis : detail::axes_or_all_live(g, o.axes)) {
        FingerprintSpec spec;
        spec.spam_pair = spam;
        spec.target_axis = axis;
        spec.route = fingerprint_route(g, spam, axis);
        spec.v1 = o.barrier.volts();
        spec.v2 = o.detuning.volts();
        spec.t_evolve_s = o.t_evolve_ns * 1e-9;
        spec.noise = c.noise();
        spec.shots = o.shots;
        spec.probability_mode = o.probability_mode;
        spec.seed = substream_seed(c.seed, "fingerprint-axis", {static_cast<std::uint64_t>(g.find_axis(axis).number),
                                                                static_cast<std::uint64_t>(g.find_axis(axis).kind)});
        spec.threads = c.threads;
        auto model = c.exchange_for(axis);
        auto map = simulate_fingerprint(g, model, spec);
        const std::string name = "fingerprint_" + axis + ".csv";
        auto f = out.csv(name, "barrier_mv,detuning_mv,p_singlet");
        for (std::size_t i = 0; i < map.v1.size(); ++i)
            for (std::size_t j = 0; j < map.v2.size(); ++j)
                f << num(map.v1[i] * 1e3) << "," << num(map.v2[j] * 1e3) << "," << num(map.at(i, j)) << "\n";
        maps.push_back({{"axis", axis},
                        {"file", name},
                        {"route", detail::pulses_json(spec.route)},
                        {"exchange_model", {{"j0_mhz", model.j0_hz * 1e-6}, {"v_b0_mv", model.v_b0 * 1e3},
                                            {"eps0_mv", model.eps0 * 1e3}}},
                        {"substream_seed", spec.seed}});
    }
    out.write_json("fingerprint.json", {{"maps", maps}, {"v1", "barrier voltage"}, {"v2", "detuning voltage"}});
    std::cout << maps.size() << " fingerprint maps written\n";
    return kOk;
}

inline int run_nosc(const Config& c, const Emitter& out) {
    if (!c.nosc) throw ConfigError("nosc experiment needs a 'nosc' block");
    const auto& o = *c.nosc;
    if (o.j_mhz <= 0 || o.periods <= 0 || o.points_per_period < 1 || o.samples < 1)
        throw ConfigError("nosc needs positive j_mhz, periods, points_per_period and samples");
    auto g = c.grid();
    auto spam = c.spam(g);
    auto f = out.csv("nosc.csv", "axis,j_mhz,bounded,n_osc,frequency_mhz,tau_ns,envelope_power,offset,residual_rms");
    json rows = json::array();
    for (const auto& axis : detail::axes_or_all_live(g, o.axes)) {
        TraceSpec spec;
        spec.spam_pair = spam;
        spec.target_axis = axis;
        spec.route = fingerprint_route(g, spam, axis);
        spec.j_hz = o.j_mhz * 1e6;
        const int n = static_cast<int>(std::lround(o.periods * o.points_per_period)) + 1;
        const double duration = o.periods / spec.j_hz;
        for (int i = 0; i < n; ++i) spec.times_s.push_back(duration * i / (n - 1));
        spec.noise = c.noise();
        spec.samples = o.samples;
        spec.seed = substream_seed(c.seed, "nosc-axis", {static_cast<std::uint64_t>(g.find_axis(axis).number),
                                                         static_cast<std::uint64_t>(g.find_axis(axis).kind)});
        spec.threads = c.threads;
        auto trace = simulate_exchange_trace(g, spec);
        auto est = extract_n_osc(spec.times_s, trace, o.envelope_power);
        f << axis << "," << num(o.j_mhz) << "," << (est.bounded ? "true" : "false") << "," << num(est.n_osc) << ","
          << num(est.frequency_hz * 1e-6) << "," << num(est.tau_s * 1e9) << "," << est.power << ","
          << num(est.offset) << "," << num(est.residual_rms) << "\n";
        {
            auto t = out.csv("nosc_trace_" + axis + ".csv", "t_ns,p_singlet");
            for (std::size_t i = 0; i < trace.size(); ++i) t << num(spec.times_s[i] * 1e9) << "," << num(trace[i]) << "\n";
        }
        rows.push_back({{"axis", axis},
                        {"bounded", est.bounded},
                        {"n_osc", jnum(est.n_osc)},
                        {"frequency_mhz", est.frequency_hz * 1e-6},
                        {"tau_ns", jnum(est.tau_s * 1e9)},
                        {"envelope_power", est.power},
                        {"offset", est.offset},
                        {"amplitude", est.amplitude},
                        {"residual_rms", est.residual_rms},
                        {"route", detail::pulses_json(spec.route)}});
    }
    out.write_json("nosc.json", {{"axes", rows}});
    std::cout << rows.size() << " N_osc estimates written\n";
    return kOk;
}

inline RBConfig rb_config(const Config& c, const GridSpec& g) {
    const auto& o = *c.rb;
    RBConfig r;
    r.frame = make_frame(g, detail::resolve_qubit(g, o.qubit));
    r.spam_pair = c.spam(g);
    r.lengths = o.lengths;
    r.n_sequences = o.n_sequences;
    r.shots = o.shots;
    r.t_pulse_s = o.t_pulse_ns * 1e-9;
    r.t_idle_s = o.t_idle_ns * 1e-9;
    r.noise = c.noise();
    r.readout_error = o.readout_error;
    r.injected_depolarizing = o.injected_depolarizing;
    r.probability_mode = o.probability_mode;
    r.seed = c.seed;
    r.threads = c.threads;
    return r;
}

inline json fit_quality_json(const FitQuality& q) {
    return {{"chi2", q.chi2}, {"dof", q.dof}, {"chi2_reduced", q.chi2_reduced}, {"weighted", q.weighted}};
}

inline int run_rb_experiment(const Config& c, const Emitter& out) {
    if (!c.rb) throw ConfigError("rb experiment needs an 'rb' block");
    auto g = c.grid();
    RBConfig cfg;
    try {
        cfg = rb_config(c, g);
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    auto raw = run_rb(g, cfg);
    {
        auto f = out.csv("rb_raw.csv", "length,sequence_id,survival,leakage");
        for (std::size_t i = 0; i < raw.lengths.size(); ++i)
            for (int s = 0; s < raw.n_sequences; ++s)
                f << raw.lengths[i] << "," << s << "," << num(raw.survival[i][s]) << ","
                  << (raw.has_leakage() ? num(raw.leakage[i][s]) : "") << "\n";
    }
    auto r = fit_rb(raw);
    const auto& band = c.rb->epsilon_band;
    json body = {
        {"epsilon", r.epsilon},
        {"epsilon_se", r.epsilon_se},
        {"gamma", r.gamma},
        {"gamma_se", r.gamma_se},
        {"gamma_definition", "initial-slope leakage per Clifford, C*(1-beta)"},
        {"leakage_definition", "frame quadruplet population gained between routing in and the recovery Clifford"},
        {"epsilon_definition", "(1-alpha)/2"},
        {"fit", {{"A", r.A}, {"alpha", r.alpha}, {"B", r.B}, {"C", jnum(r.C)}, {"beta", r.beta}}},
        {"survival_fit", fit_quality_json(r.survival_fit)},
        {"leakage_fit", r.leakage_fitted ? fit_quality_json(r.leakage_fit) : json(nullptr)},
        {"survival_degenerate", r.survival_degenerate},
        {"leakage_degenerate", r.leakage_degenerate},
        {"frame", {{"z_axis", cfg.frame.z_axis}, {"n_axis", cfg.frame.n_axis}}},
        {"route", detail::pulses_json(route_singlet(g, cfg.spam_pair, cfg.frame, cfg.t_pulse_s, cfg.t_idle_s))},
        {"average_pulses_per_clifford", average_pulses_per_clifford()},
        {"epsilon_band_check",
         {{"band", band},
          {"inside", r.epsilon >= band[0] && r.epsilon <= band[1]},
          {"kind", "calibration-band plausibility check, not a reproduction of device numbers"}}},
    };
    out.write_json("rb_result.json", body);
    std::cout << "epsilon = " << r.epsilon << " +/- " << r.epsilon_se << ", gamma = " << r.gamma << " +/- "
              << r.gamma_se << "\n";
    return kOk;
}

inline int run_route(const Config& c, const Emitter& out) {
    if (!c.route) throw ConfigError("route experiment needs a 'route' block");
    auto g = c.grid();
    EncodedFrame frame;
    try {
        frame = make_frame(g, detail::resolve_qubit(g, c.route->qubit));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    auto seq = route_singlet(g, c.spam(g), frame, c.route->t_pulse_ns * 1e-9, c.route->t_idle_ns * 1e-9);
    out.write_json("route.json", {{"pulses", detail::pulses_json(seq)},
                                  {"pulse_count", seq.size()},
                                  {"target", {{"z_axis", frame.z_axis}, {"n_axis", frame.n_axis}}}});
    for (auto& p : seq) std::cout << p.axis << " theta=" << num(p.theta) << "\n";
    if (seq.empty()) std::cout << "(already in place)\n";
    return kOk;
}

// Oracle suites for `validate`.

struct SuiteResult {
    std::string name;
    bool pass = false;
    json detail;
};

namespace suites {

inline SuiteResult combinatorics() {
    SuiteResult r{"combinatorics", true, json::object()};
    GridSpec g(2, 3);
    auto t = enumerate_tqds(g).size(), q = enumerate_qubit_assignments(g).size();
    auto pairs = disjoint_tqd_pairs(g).size();
    r.detail = {{"tqds_2x3", t}, {"assignments_2x3", q}, {"ordered_qubit_pairs_2x3", 2 * pairs}};
    r.pass = t == 10 && q == 20 && 2 * pairs == 6;
    for (int n = 2; n <= 6; ++n)
        for (int m = 2; m <= 6; ++m)
            if (static_cast<long long>(enumerate_tqds(GridSpec(n, m)).size()) != tqd_count_formula(n, m)) {
                r.pass = false;
                r.detail["formula_mismatch"].push_back({n, m});
            }
    return r;
}

inline SuiteResult exchange_law() {
    double worst = 0;
    for (int k = 0; k <= 400; ++k) {
        double theta = 4 * std::numbers::pi * k / 400;
        auto s = apply_exchange(prepare_state(3, SpinPair{0, 1}, AllUp{}), {1, 2}, theta);
        worst = std::max(worst, std::abs(singlet_probability(s, {0, 1}) - (1 - 0.75 * std::pow(std::sin(theta / 2), 2))));
    }
    return {"exchange_law", worst < 1e-10, {{"max_abs_error", worst}}};
}

inline SuiteResult clifford_action(const GridSpec& g) {
    double worst = 0, leak = 0;
    AxisTable axes(g);
    auto qubits = enumerate_qubit_assignments(g);
    if (qubits.empty()) return {"clifford", false, {{"error", "grid has no qubit assignment"}}};
    auto frame = make_frame(g, qubits.front());
    for (const auto& c : clifford_group()) {
        auto s = run_pulses(encoded_zero(g, frame), axes, compile_sequence(frame, {c.index}, 0, 0), FieldSpec{});
        auto r = logical_bloch(s, frame);
        Eigen::Vector3d e = c.rotation * Eigen::Vector3d::UnitZ();
        for (int i = 0; i < 3; ++i) worst = std::max(worst, std::abs(r.bloch[i] - e[i]));
        leak = std::max(leak, r.p_leak);
    }
    return {"clifford", worst < 1e-9 && leak < 1e-10,
            {{"max_bloch_error", worst}, {"max_leakage", leak}, {"average_pulses", average_pulses_per_clifford()}}};
}

inline SuiteResult routing(const GridSpec& g, std::pair<DotId, DotId> spam) {
    AxisTable axes(g);
    double worst = 1.0;
    int routed = 0, unreachable = 0;
    const SpinPair sp{g.index(spam.first), g.index(spam.second)};
    for (auto& q : enumerate_qubit_assignments(g)) {
        auto frame = make_frame(g, q);
        PulseSeq route;
        try {
            route = route_singlet(g, spam, frame);
        } catch (const RoutingError&) {
            ++unreachable;
            continue;
        }
        auto psi = prepare_state(g.dot_count(), sp, RandomProduct{static_cast<std::uint64_t>(routed)});
        auto there = run_pulses(psi, axes, route, FieldSpec{});
        worst = std::min(worst, singlet_probability(there, frame.singlet_spins()));
        worst = std::min(worst, fidelity(psi, run_pulses(there, axes, reversed(route), FieldSpec{})));
        ++routed;
    }
    return {"routing", worst >= 1 - 1e-10 && routed > 0,
            {{"routed", routed}, {"unreachable", unreachable}, {"min_fidelity", worst}}};
}

inline SuiteResult packing() {
    int checked = 0, mismatched = 0;
    for (int n = 1; n <= 3; ++n)
        for (int m = 1; m <= 3; ++m) {
            const int dots = n * m;
            for (int a = -1; a < dots; ++a)
                for (int b = a; b < dots; ++b) {
                    if (a == -1 && b != -1) continue;
                    std::set<DotId> dead;
                    if (a >= 0) dead.insert({a / m, a % m});
                    if (b >= 0) dead.insert({b / m, b % m});
                    GridSpec g(n, m, dead);
                    for (auto obj : {PackObjective::MaxCount, PackObjective::MaxCountThenAdjacency}) {
                        auto x = pack_qubits(g, obj, PackSolver::Exact);
                        auto y = pack_qubits(g, obj, PackSolver::BruteForceOracle);
                        if (x.qubits.size() != y.qubits.size() ||
                            (obj == PackObjective::MaxCountThenAdjacency && x.adjacency_count != y.adjacency_count))
                            ++mismatched;
                        ++checked;
                    }
                }
        }
    return {"packing", mismatched == 0, {{"instances", checked}, {"mismatches", mismatched}}};
}

inline SuiteResult rb_oracle(const Config& c, const GridSpec& g) {
    const auto& v = c.validate;
    auto qubits = enumerate_qubit_assignments(g);
    RBConfig cfg;
    cfg.spam_pair = c.spam(g);
    // First assignment whose singlet pair the SPAM pair can reach.
    bool found = false;
    for (auto& q : qubits) {
        try {
            cfg.frame = make_frame(g, q);
            (void)route_singlet(g, cfg.spam_pair, cfg.frame);
            found = true;
            break;
        } catch (const RoutingError&) {
        }
    }
    if (!found) return {"rb_oracle", false, {{"error", "no reachable qubit"}}};
    cfg.lengths = v.rb_oracle_lengths;
    cfg.n_sequences = v.rb_oracle_sequences;
    cfg.shots = v.rb_oracle_shots;
    cfg.t_pulse_s = cfg.t_idle_s = 0.0;
    cfg.seed = substream_seed(c.seed, "validate-rb");
    cfg.threads = c.threads;
    auto rep = validate_rb_oracle(g, cfg, v.rb_oracle_p);
    return {"rb_oracle", rep.pass,
            {{"p", rep.p},
             {"expected_epsilon", rep.expected_epsilon},
             {"epsilon", rep.fit.epsilon},
             {"epsilon_se", rep.fit.epsilon_se},
             {"z_score", jnum(rep.z_score)}}};
}

inline SuiteResult nosc_oracle(const Config& c) {
    SuiteResult r{"nosc_oracle", true, json::array()};
    GridSpec g(1, 3);
    for (std::size_t i = 0; i < c.validate.nosc_sigmas.size(); ++i) {
        double sigma = c.validate.nosc_sigmas[i];
        TraceSpec spec;
        spec.spam_pair = {{0, 0}, {0, 1}};
        spec.target_axis = "X2";
        spec.j_hz = 100e6;
        spec.noise.sigma_j_rel = sigma;
        spec.samples = c.validate.nosc_samples;
        spec.seed = substream_seed(c.seed, "validate-nosc", {i});
        spec.threads = c.threads;
        const double expected = gaussian_n_osc(sigma);
        const double duration = 3.0 * expected / spec.j_hz;
        const int n = static_cast<int>(3.0 * expected * 10) + 1;
        for (int k = 0; k < n; ++k) spec.times_s.push_back(duration * k / (n - 1));
        auto est = extract_n_osc(spec.times_s, simulate_exchange_trace(g, spec));
        double rel = est.bounded ? std::abs(est.n_osc - expected) / expected : 1.0;
        bool ok = est.bounded && rel <= 0.05;
        r.pass = r.pass && ok;
        r.detail.push_back({{"sigma_j_rel", sigma}, {"expected", expected}, {"n_osc", jnum(est.n_osc)},
                            {"relative_error", rel}, {"pass", ok}});
    }
    return r;
}

}  // namespace suites

inline int run_validate(const Config& c, const Emitter& out) {
    auto g = c.grid();
    std::vector<SuiteResult> results;
    for (const auto& s : c.validate.suites) {
        if (s == "combinatorics") results.push_back(suites::combinatorics());
        else if (s == "exchange_law") results.push_back(suites::exchange_law());
        else if (s == "clifford") results.push_back(suites::clifford_action(g));
        else if (s == "routing") results.push_back(suites::routing(g, c.spam(g)));
        else if (s == "packing") results.push_back(suites::packing());
        else if (s == "rb_oracle") results.push_back(suites::rb_oracle(c, g));
        else if (s == "nosc_oracle") results.push_back(suites::nosc_oracle(c));
        else throw ConfigError("unknown validation suite '" + s + "'");
    }
    bool all = true;
    json arr = json::array();
    for (auto& r : results) {
        all = all && r.pass;
        arr.push_back({{"suite", r.name}, {"pass", r.pass}, {"detail", r.detail}});
        std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << "\n";
    }
    out.write_json("validate.json", {{"suites", arr}, {"pass", all}});
    return all ? kOk : kValidationFailed;
}

struct Overrides {
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
};

inline Config load_config(const std::filesystem::path& path, const Overrides& ov) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config file " + path.string());
    json doc;
    try {
        doc = json::parse(f);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    Config c = parse_config(doc);
    if (ov.out) c.output_dir = *ov.out;
    if (ov.seed) c.seed = *ov.seed;
    if (ov.threads) {
        if (*ov.threads < 1) throw ConfigError("threads must be >= 1");
        c.threads = *ov.threads;
    }
    return c;
}

/// Runs one subcommand; all diagnostics go to `err`.
inline int run_experiment(const std::string& experiment, const std::filesystem::path& config_path,
                          const Overrides& ov, std::ostream& err = std::cerr) {
    try {
        if (std::find(experiment_names().begin(), experiment_names().end(), experiment) == experiment_names().end())
            throw ConfigError("unknown subcommand '" + experiment + "'");
        Config c = load_config(config_path, ov);
        if (!c.experiment.empty() && c.experiment != experiment)
            throw ConfigError("config is for experiment '" + c.experiment + "', not '" + experiment + "'");
        Emitter out(c.output_dir, c, experiment);
        try {
            if (experiment == "enumerate") return run_enumerate(c, out);
            if (experiment == "place") return run_place(c, out);
            if (experiment == "fingerprint") return run_fingerprint(c, out);
            if (experiment == "nosc") return run_nosc(c, out);
            if (experiment == "rb") return run_rb_experiment(c, out);
            if (experiment == "route") return run_route(c, out);
            return run_validate(c, out);
        } catch (const RoutingError& e) {
            throw ConfigError(e.what());
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const FitError& e) {
        err << "fit did not converge: " << e.what() << "\n";
        return kFitError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kFailure;
    }
}

}  // namespace eoq::experiment
