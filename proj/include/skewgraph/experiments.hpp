#pragma once

#include "skewgraph/attractor.hpp"
#include "skewgraph/config.hpp"
#include "skewgraph/emit.hpp"
#include "skewgraph/measures.hpp"
#include "skewgraph/splitting.hpp"
#include "skewgraph/stats.hpp"
#include "skewgraph/zoo.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace skewgraph {

inline constexpr const char* kVersion = "0.1.0";

/// A runnable system plus the builder metadata experiments can lean on:
/// canonical split words, the chain intervals, K-pair word data.
struct SystemBundle {
    SkewSystem system;
    std::string preset;  // empty when the maps came inline from the config
    std::optional<Word> word_a;
    std::optional<Word> word_b;
    std::vector<Interval> intervals;
    std::vector<Word> contracting_words;
    Word repelling_word;
    bool porcupine_variant = false;
};

inline const std::vector<std::pair<std::string, std::string>>& preset_catalog() {
    static const std::vector<std::pair<std::string, std::string>> v = {
        {"binary_ifs", "the affine pair x/2, x/2 + 1/2 over a fair coin"},
        {"contraction_cover",
         "binary pair plus inline extra maps (system.map.N.x/.y), uniform base"},
        {"msplits", "splitting two-map system on [0,1]^m; system.m, system.p11, system.p21"},
        {"kpair", "the stock K-pair over a fair coin, with its word metadata"},
        {"interval_chain",
         "four maps chaining m disjoint K-pair intervals (system.m), Bernoulli(1/4) base"},
        {"porcupine", "orientation-preserving porcupine variant over a fair coin"},
    };
    return v;
}

inline const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> v = {
        "code",  "spine", "target", "split-check", "decay", "wasserstein-curve",
        "sync-curve", "omega", "graph-sample"};
    return v;
}

namespace detail {

inline Word to_word(const std::vector<std::int64_t>& v, const std::string& key) {
    Word w;
    w.reserve(v.size());
    for (std::int64_t x : v) {
        if (x < 1 || x > 1024) throw ConfigError("key `" + key + "`: symbol out of range");
        w.push_back(static_cast<int>(x));
    }
    return w;
}

inline MarkovSpec parse_markov(const Config& cfg, const std::string& key) {
    std::vector<std::vector<double>> rows = cfg.get_matrix(key);
    std::size_t k = rows.size();
    for (std::size_t i = 0; i < k; ++i) {
        if (rows[i].size() != k)
            throw ConfigError(key + ": row " + std::to_string(i + 1) + " has " +
                              std::to_string(rows[i].size()) + " entries, expected " +
                              std::to_string(k));
        double sum = 0.0;
        for (double p : rows[i]) sum += p;
        if (std::abs(sum - 1.0) > 1e-12)
            throw ConfigError(key + ": row " + std::to_string(i + 1) + " sums to " +
                              format_double(sum) + ", expected 1");
    }
    try {
        return MarkovSpec(std::move(rows));
    } catch (const std::exception& e) {
        throw ConfigError(key + ": " + e.what());
    }
}

inline PLMap parse_plmap(const Config& cfg, const std::string& prefix) {
    std::vector<Rational> xs = cfg.get_rationals(prefix + ".x");
    std::vector<Rational> ys = cfg.get_rationals(prefix + ".y");
    try {
        return PLMap(std::move(xs), std::move(ys));
    } catch (const std::exception& e) {
        throw ConfigError(prefix + ": " + e.what());
    }
}

/// Inline maps: system.map.<i>.x/.y for interval fibers, or
/// system.map.<i>.<s>.x/.y with coordinates s = 1..dim for cube fibers.
/// Indices must be contiguous from 1.
inline std::vector<FiberMap> parse_inline_maps(const Config& cfg) {
    std::vector<FiberMap> maps;
    for (int i = 1;; ++i) {
        std::string mp = "system.map." + std::to_string(i);
        if (cfg.has(mp + ".x")) {
            maps.push_back(FiberMap(parse_plmap(cfg, mp)));
        } else if (cfg.has(mp + ".1.x")) {
            std::vector<PLMap> comps;
            for (int s = 1; cfg.has(mp + "." + std::to_string(s) + ".x"); ++s)
                comps.push_back(parse_plmap(cfg, mp + "." + std::to_string(s)));
            maps.push_back(FiberMap(std::move(comps)));
        } else {
            break;
        }
    }
    for (std::size_t i = 1; i < maps.size(); ++i)
        if (maps[i].dim() != maps[0].dim())
            throw ConfigError("system.map." + std::to_string(i + 1) +
                              " has a different fiber dimension than system.map.1");
    return maps;
}

}  // namespace detail

/// Builds the system named by system.preset, or an inline system from
/// system.map.* with base.matrix. base.matrix overrides a preset's default
/// base; base.stationary, when given, is cross-checked against the solved
/// stationary vector. system.jitter perturbs every breakpoint value by at
/// most that amount (seeded by system.jitter_seed, default the main seed).
inline SystemBundle build_system(const Config& cfg) {
    std::optional<MarkovSpec> base_override;
    if (cfg.has("base.matrix")) base_override = detail::parse_markov(cfg, "base.matrix");

    SystemBundle out = [&]() -> SystemBundle {
        if (cfg.has("system.preset")) {
            std::string p = cfg.get_string("system.preset");
            if (p == "binary_ifs") return SystemBundle{build_binary_ifs(), p};
            if (p == "contraction_cover") {
                std::vector<FiberMap> extras = detail::parse_inline_maps(cfg);
                std::vector<PLMap> one_d;
                for (const FiberMap& f : extras) {
                    if (f.dim() != 1)
                        throw ConfigError("contraction_cover extra maps must be 1-dimensional");
                    one_d.push_back(f.component(0));
                }
                return SystemBundle{build_contraction_cover(one_d), p};
            }
            if (p == "msplits") {
                MSplitsSystem ms = build_msplits(
                    static_cast<int>(cfg.get_int_or("system.m", 1)),
                    cfg.get_rational_or("system.p11", Rational(1, 2)),
                    cfg.get_rational_or("system.p21", Rational(1, 2)));
                SystemBundle b{std::move(ms.system), p};
                b.word_a = std::move(ms.word_a);
                b.word_b = std::move(ms.word_b);
                return b;
            }
            if (p == "kpair") {
                KPairSpec kp = build_kpair();
                SystemBundle b{build_porcupine().system, p};
                b.contracting_words = std::move(kp.contracting_words);
                b.repelling_word = std::move(kp.repelling_word);
                return b;
            }
            if (p == "interval_chain") {
                IntervalChainSystem ic =
                    build_interval_chain(static_cast<int>(cfg.get_int_or("system.m", 1)));
                SystemBundle b{std::move(ic.system), p};
                b.intervals = std::move(ic.intervals);
                return b;
            }
            if (p == "porcupine") {
                SystemBundle b{build_porcupine().system, p};
                b.porcupine_variant = true;
                return b;
            }
            throw ConfigError("unknown preset `" + p + "` (see `skewgraph presets`)");
        }
        std::vector<FiberMap> maps = detail::parse_inline_maps(cfg);
        if (maps.empty())
            throw ConfigError("no system given: set system.preset or system.map.1.x/.y");
        if (!base_override) throw ConfigError("inline systems need base.matrix");
        MarkovSpec base = *base_override;
        base_override.reset();  // consumed; skip the preset-override rebuild below
        try {
            return SystemBundle{SkewSystem(std::move(maps), std::move(base)), ""};
        } catch (const std::exception& e) {
            throw ConfigError(std::string("system: ") + e.what());
        }
    }();

    if (base_override) {
        try {
            out.system = SkewSystem(out.system.fiber_maps, *base_override);
        } catch (const std::exception& e) {
            throw ConfigError(std::string("base.matrix: ") + e.what());
        }
    }

    if (cfg.has("base.stationary")) {
        std::vector<double> want = cfg.get_doubles("base.stationary");
        const std::vector<double>& got = out.system.markov.stationary();
        if (want.size() != got.size())
            throw ConfigError("base.stationary has " + std::to_string(want.size()) +
                              " entries, expected " + std::to_string(got.size()));
        for (std::size_t i = 0; i < got.size(); ++i)
            if (std::abs(want[i] - got[i]) > 1e-9)
                throw ConfigError("base.stationary[" + std::to_string(i + 1) +
                                  "] = " + format_double(want[i]) +
                                  " but the solved stationary vector has " +
                                  format_double(got[i]));
    }

    if (cfg.has("system.jitter")) {
        Rational delta = cfg.get_rational("system.jitter");
        std::uint64_t jseed = cfg.has("system.jitter_seed")
                                  ? cfg.get_uint64("system.jitter_seed")
                                  : cfg.get_uint64("seed");
        out.system = jitter_system(out.system, delta, jseed);
    }
    return out;
}

namespace detail {

inline SymbolWindow parse_theta(const Config& cfg, int k) {
    if (!cfg.has("theta.left_tail"))
        throw ConfigError(
            "this experiment needs theta.left_tail (repeating block, written "
            "left to right, last symbol adjacent to the core)");
    Word left = to_word(cfg.get_ints("theta.left_tail"), "theta.left_tail");
    Word core = cfg.has("theta.core") ? to_word(cfg.get_ints("theta.core"), "theta.core")
                                      : Word{};
    std::int64_t offset = cfg.get_int_or("theta.core_offset", 0);
    if (cfg.has("theta.right_tail") && cfg.has("theta.disjunctive_right"))
        throw ConfigError("set only one of theta.right_tail / theta.disjunctive_right");
    Word right;
    if (cfg.has("theta.disjunctive_right")) {
        std::int64_t len = cfg.get_int("theta.disjunctive_right");
        if (len < 1 || len > 12)
            throw ConfigError("theta.disjunctive_right must be in 1..12");
        right = disjunctive_prefix(k, static_cast<int>(len));
    } else if (cfg.has("theta.right_tail")) {
        right = to_word(cfg.get_ints("theta.right_tail"), "theta.right_tail");
    } else {
        right = left;
    }
    try {
        return SymbolWindow(k, std::move(core), offset, std::move(left), std::move(right));
    } catch (const std::exception& e) {
        throw ConfigError(std::string("theta: ") + e.what());
    }
}

inline std::vector<std::int64_t> parse_depths(const Config& cfg, const std::string& key,
                                              std::vector<std::int64_t> def,
                                              std::int64_t min_depth) {
    std::vector<std::int64_t> d = cfg.has(key) ? cfg.get_ints(key) : std::move(def);
    if (d.empty()) throw ConfigError(key + " must list at least one depth");
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (d[i] < min_depth)
            throw ConfigError(key + " entries must be >= " + std::to_string(min_depth));
        if (i && d[i] <= d[i - 1])
            throw ConfigError(key + " must be strictly increasing");
    }
    return d;
}

inline std::vector<Rational> parse_x0(const Config& cfg, int dim) {
    std::vector<Rational> x0;
    if (cfg.has("params.x0")) {
        x0 = cfg.get_rationals("params.x0");
        if (x0.size() != static_cast<std::size_t>(dim))
            throw ConfigError("params.x0 needs " + std::to_string(dim) + " coordinates");
        for (const Rational& c : x0)
            if (c < 0 || c > 1) throw ConfigError("params.x0 must lie in [0,1]");
    } else {
        x0.assign(static_cast<std::size_t>(dim), Rational(1, 2));
    }
    return x0;
}

inline FiberLaw parse_law(const Config& cfg, int dim) {
    std::string name = cfg.get_string_or("params.law", "uniform");
    if (name == "uniform") return UniformLaw{};
    if (name == "dirac") {
        std::vector<Rational> pt = cfg.get_rationals("params.law_point");
        if (pt.size() != static_cast<std::size_t>(dim))
            throw ConfigError("params.law_point needs " + std::to_string(dim) +
                              " coordinates");
        for (const Rational& c : pt)
            if (c < 0 || c > 1) throw ConfigError("params.law_point must lie in [0,1]");
        return DiracLaw{std::move(pt)};
    }
    if (name == "grid") {
        std::int64_t g = cfg.get_int_or("params.law_per_axis", 2);
        if (g < 1) throw ConfigError("params.law_per_axis must be >= 1");
        return GridLaw{static_cast<int>(g)};
    }
    throw ConfigError("params.law must be uniform, dirac, or grid");
}

inline double parse_tol(const Config& cfg, const std::string& key, double def) {
    double tol = cfg.get_double_or(key, def);
    if (!(tol > 0.0)) throw ConfigError(key + " must be positive");
    return tol;
}

struct CodeParams {
    SymbolWindow theta;
    std::int64_t max_depth;
    double tol;
};

inline CodeParams parse_code(const Config& cfg, const SystemBundle& b) {
    CodeParams p{parse_theta(cfg, b.system.markov.alphabet()),
                 cfg.get_int_or("params.max_depth", 256),
                 parse_tol(cfg, "params.tol", 1e-15)};
    if (p.max_depth < 1) throw ConfigError("params.max_depth must be >= 1");
    return p;
}

struct SpineParams {
    SymbolWindow theta;
    std::int64_t depth;
    std::string base;
    std::int64_t target_max_iter;
    double target_tol;
};

inline SpineParams parse_spine(const Config& cfg, const SystemBundle& b) {
    SpineParams p{parse_theta(cfg, b.system.markov.alphabet()),
                  cfg.get_int_or("params.depth", 200),
                  cfg.get_string_or("params.base",
                                    b.intervals.empty() ? "target" : "intervals"),
                  cfg.get_int_or("params.target_max_iter", 400),
                  parse_tol(cfg, "params.target_tol", 1e-9)};
    if (p.depth < 1) throw ConfigError("params.depth must be >= 1");
    if (p.base != "target" && p.base != "cube" && p.base != "intervals")
        throw ConfigError("params.base must be `target`, `cube`, or `intervals`");
    if (p.base == "intervals" && b.intervals.empty())
        throw ConfigError(
            "params.base = intervals needs a preset with interval metadata "
            "(interval_chain)");
    if (p.target_max_iter < 1) throw ConfigError("params.target_max_iter must be >= 1");
    return p;
}

struct TargetParams {
    std::int64_t max_iter;
    double tol;
};

inline TargetParams parse_target(const Config& cfg, const SystemBundle&) {
    TargetParams p{cfg.get_int_or("params.max_iter", 400),
                   parse_tol(cfg, "params.tol", 1e-9)};
    if (p.max_iter < 1) throw ConfigError("params.max_iter must be >= 1");
    return p;
}

struct SplitParams {
    Word word_a;
    Word word_b;
    std::int64_t sweep_words;
    std::int64_t sweep_max_len;
};

inline SplitParams parse_split(const Config& cfg, const SystemBundle& b) {
    SplitParams p{{},
                  {},
                  cfg.get_int_or("params.sweep_words", 1000),
                  cfg.get_int_or("params.sweep_max_len", 12)};
    if (cfg.has("params.word_a") != cfg.has("params.word_b"))
        throw ConfigError("params.word_a and params.word_b come as a pair");
    if (cfg.has("params.word_a")) {
        p.word_a = to_word(cfg.get_ints("params.word_a"), "params.word_a");
        p.word_b = to_word(cfg.get_ints("params.word_b"), "params.word_b");
    } else if (b.word_a && b.word_b) {
        p.word_a = *b.word_a;
        p.word_b = *b.word_b;
    } else {
        throw ConfigError(
            "params.word_a/params.word_b required (only the msplits preset "
            "carries canonical words)");
    }
    if (p.sweep_words < 0) throw ConfigError("params.sweep_words must be >= 0");
    if (p.sweep_max_len < 1) throw ConfigError("params.sweep_max_len must be >= 1");
    return p;
}

struct DecayParams {
    std::vector<std::int64_t> depths;
    std::int64_t n_samples;
};

inline DecayParams parse_decay(const Config& cfg, const SystemBundle&) {
    std::vector<std::int64_t> def;
    for (std::int64_t d = 10; d <= 200; d += 10) def.push_back(d);
    DecayParams p{parse_depths(cfg, "params.depths", std::move(def), 1),
                  cfg.get_int_or("params.n_samples", 2000)};
    if (p.n_samples < 100) throw ConfigError("params.n_samples must be >= 100");
    return p;
}

struct WassersteinParams {
    std::vector<std::int64_t> depths;
    std::int64_t n_atoms;
    std::int64_t word_length;
    std::int64_t base_depth;
    double tol;
    FiberLaw law;
};

inline WassersteinParams parse_wasserstein(const Config& cfg, const SystemBundle& b) {
    std::vector<std::int64_t> def;
    for (std::int64_t d = 0; d <= 60; d += 5) def.push_back(d);
    WassersteinParams p{parse_depths(cfg, "params.depths", std::move(def), 0),
                        cfg.get_int_or("params.n_atoms", 500),
                        cfg.get_int_or("params.word_length", 300),
                        cfg.get_int_or("params.base_depth", 8),
                        parse_tol(cfg, "params.tol", 1e-6),
                        parse_law(cfg, b.system.fiber_dimension)};
    if (p.n_atoms < 1) throw ConfigError("params.n_atoms must be >= 1");
    if (p.n_atoms > 2000) throw ConfigError("params.n_atoms must be <= 2000 (transport budget)");
    if (p.word_length < 1) throw ConfigError("params.word_length must be >= 1");
    if (p.base_depth < 0) throw ConfigError("params.base_depth must be >= 0");
    return p;
}

struct SyncParams {
    SymbolWindow theta;
    std::vector<Rational> x0;
    std::vector<std::int64_t> depths;
    double tol;
    std::int64_t code_depth;
};

inline SyncParams parse_sync(const Config& cfg, const SystemBundle& b) {
    std::vector<std::int64_t> def;
    for (std::int64_t d = 0; d <= 60; d += 5) def.push_back(d);
    SyncParams p{parse_theta(cfg, b.system.markov.alphabet()),
                 parse_x0(cfg, b.system.fiber_dimension),
                 parse_depths(cfg, "params.depths", std::move(def), 0),
                 parse_tol(cfg, "params.tol", 1e-6),
                 cfg.get_int_or("params.code_depth", 512)};
    if (p.code_depth < 1) throw ConfigError("params.code_depth must be >= 1");
    return p;
}

struct OmegaParams {
    SymbolWindow theta;
    std::vector<Rational> x0;
    std::int64_t burn_in;
    std::int64_t n_iter;
};

inline OmegaParams parse_omega(const Config& cfg, const SystemBundle& b) {
    OmegaParams p{parse_theta(cfg, b.system.markov.alphabet()),
                  parse_x0(cfg, b.system.fiber_dimension),
                  cfg.get_int_or("params.burn_in", 1000),
                  cfg.get_int_or("params.n_iter", 100000)};
    if (p.burn_in < 0) throw ConfigError("params.burn_in must be >= 0");
    if (p.n_iter <= p.burn_in)
        throw ConfigError("params.n_iter must exceed params.burn_in");
    return p;
}

struct GraphParams {
    std::int64_t n_points;
    std::int64_t word_length;
    double tol;
};

inline GraphParams parse_graph(const Config& cfg, const SystemBundle&) {
    GraphParams p{cfg.get_int_or("params.n_points", 200),
                  cfg.get_int_or("params.word_length", 300),
                  parse_tol(cfg, "params.tol", 1e-6)};
    if (p.n_points < 1) throw ConfigError("params.n_points must be >= 1");
    if (p.word_length < 1) throw ConfigError("params.word_length must be >= 1");
    return p;
}

/// Reads every key the named experiment would read, throwing ConfigError on
/// the first problem; shared by validate (dry run) and run.
inline void parse_experiment_params(const Config& cfg, const SystemBundle& b,
                                    const std::string& exp) {
    if (exp == "code")
        (void)parse_code(cfg, b);
    else if (exp == "spine")
        (void)parse_spine(cfg, b);
    else if (exp == "target")
        (void)parse_target(cfg, b);
    else if (exp == "split-check")
        (void)parse_split(cfg, b);
    else if (exp == "decay")
        (void)parse_decay(cfg, b);
    else if (exp == "wasserstein-curve")
        (void)parse_wasserstein(cfg, b);
    else if (exp == "sync-curve")
        (void)parse_sync(cfg, b);
    else if (exp == "omega")
        (void)parse_omega(cfg, b);
    else if (exp == "graph-sample")
        (void)parse_graph(cfg, b);
}

struct Emitter {
    std::filesystem::path dir;
    nlohmann::json results = nlohmann::json::object();

    void csv(const CsvTable& t) const {
        write_text_file((dir / "data.csv").string(), t.to_string());
    }
    void svg(const std::string& s) const {
        write_text_file((dir / "plot.svg").string(), s);
    }
    void txt(const std::string& name, const std::string& s) const {
        write_text_file((dir / name).string(), s);
    }
    void finish() const {
        write_text_file((dir / "results.json").string(), results.dump(2) + "\n");
    }
};

inline CsvTable boxes_csv(const BoxUnion& u) {
    CsvTable t;
    t.header = {"component"};
    for (int s = 1; s <= u.dim(); ++s) {
        t.header.push_back("lo_" + std::to_string(s));
        t.header.push_back("hi_" + std::to_string(s));
    }
    int i = 0;
    for (const Box& b : u.boxes()) {
        std::vector<std::string> row{std::to_string(++i)};
        for (const Interval& iv : b) {
            row.push_back(format_double(to_double(iv.lo)));
            row.push_back(format_double(to_double(iv.hi)));
        }
        t.add_row(std::move(row));
    }
    return t;
}

inline nlohmann::json boxes_json(const BoxUnion& u) {
    nlohmann::json arr = nlohmann::json::array();
    for (const Box& b : u.boxes()) {
        nlohmann::json box = nlohmann::json::array();
        for (const Interval& iv : b)
            box.push_back({rational_to_string(iv.lo), rational_to_string(iv.hi)});
        arr.push_back(std::move(box));
    }
    return arr;
}

inline nlohmann::json log_fit_json(const std::vector<double>& xs,
                                   const std::vector<double>& ys) {
    std::vector<double> fx, fy;
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (ys[i] > 0.0) {
            fx.push_back(xs[i]);
            fy.push_back(std::log(ys[i]));
        }
    nlohmann::json j = nlohmann::json::object();
    LinearFit fit = fit_line(fx, fy);
    j["ok"] = fit.ok;
    if (fit.ok) {
        j["slope"] = fit.slope;
        j["r2"] = fit.r2;
        j["rate_per_step"] = std::exp(fit.slope);
        j["n_used"] = fit.n_used;
    }
    return j;
}

}  // namespace detail

/// Pure validation pass: an empty findings list means the config is
/// runnable. Collects missing/bad keys, system construction errors, and
/// keys nothing would read (usually typos).
inline std::vector<std::string> validate_config(const Config& cfg) {
    std::vector<std::string> findings;

    if (!cfg.has("seed")) {
        findings.push_back("seed required (set `seed = <integer>`; runs take --seed too)");
    } else {
        try {
            (void)cfg.get_uint64("seed");
        } catch (const std::exception& e) {
            findings.push_back(e.what());
        }
    }

    std::string exp;
    if (!cfg.has("experiment")) {
        findings.push_back("experiment required: one of code, spine, target, split-check, "
                           "decay, wasserstein-curve, sync-curve, omega, graph-sample");
    } else {
        try {
            exp = cfg.get_string("experiment");
            const auto& names = experiment_names();
            if (std::find(names.begin(), names.end(), exp) == names.end()) {
                findings.push_back("unknown experiment `" + exp + "`");
                exp.clear();
            }
        } catch (const std::exception& e) {
            findings.push_back(e.what());
        }
    }

    (void)cfg.get_string_or("output", "out");

    std::optional<SystemBundle> bundle;
    try {
        bundle = build_system(cfg);
    } catch (const std::exception& e) {
        findings.push_back(e.what());
    }

    if (bundle && !exp.empty()) {
        try {
            detail::parse_experiment_params(cfg, *bundle, exp);
            if (exp == "split-check") {
                detail::SplitParams sp = detail::parse_split(cfg, *bundle);
                if (!is_admissible(sp.word_a, bundle->system.markov))
                    findings.push_back("split word_a is not admissible under the base chain");
                if (!is_admissible(sp.word_b, bundle->system.markov))
                    findings.push_back("split word_b is not admissible under the base chain");
            }
        } catch (const std::exception& e) {
            findings.push_back(e.what());
        }
    }

    for (const std::string& k : cfg.unused_keys())
        findings.push_back("unknown key `" + k + "` (line " +
                           std::to_string(cfg.line_of(k)) + ")");
    return findings;
}

struct RunResult {
    int exit_code = 0;
    std::string message;
};

namespace detail {

inline RunResult exec_code(const CodeParams& p, const SystemBundle& b, Emitter& em) {
    CodingResult c = code(p.theta, b.system, p.max_depth, p.tol);
    bool ok = c.status == CodingStatus::Converged;
    em.results["status"] = ok ? "converged" : "not_converged_at_depth";
    em.results["depth_used"] = c.depth_used;
    em.results["final_diameter"] = to_double(c.final_diameter);
    nlohmann::json pt = nlohmann::json::array(), pt_exact = nlohmann::json::array();
    for (const Rational& v : c.point) {
        pt.push_back(to_double(v));
        pt_exact.push_back(rational_to_string(v));
    }
    em.results["point"] = std::move(pt);
    em.results["point_exact"] = std::move(pt_exact);

    CsvTable t;
    t.header = {"coordinate", "value", "exact"};
    for (std::size_t s = 0; s < c.point.size(); ++s)
        t.add_row({std::to_string(s + 1), format_double(to_double(c.point[s])),
                   rational_to_string(c.point[s])});
    em.csv(t);
    if (!ok)
        return {3, "coding stopped above the singleton tolerance at depth " +
                       std::to_string(c.depth_used)};
    return {};
}

inline RunResult exec_spine(const SpineParams& p, const SystemBundle& b, Emitter& em) {
    bool target_converged = true;
    BoxUnion base = BoxUnion::cube(b.system.fiber_dimension);
    if (p.base == "target") {
        TargetSetResult t = target_set(b.system, static_cast<int>(p.target_max_iter),
                                       p.target_tol);
        base = std::move(t.set);
        target_converged = t.converged;
        em.results["target_converged"] = t.converged;
        em.results["target_iterations"] = t.iterations;
    } else if (p.base == "intervals") {
        base = BoxUnion::from_intervals(b.intervals);
    }
    BoxUnion sp = spine(p.theta, b.system, base, p.depth);
    em.results["base"] = p.base;
    em.results["depth"] = p.depth;
    em.results["n_components"] = sp.boxes().size();
    em.results["components"] = boxes_json(sp);
    em.csv(boxes_csv(sp));
    if (!target_converged)
        return {0,
                "note: the target-set base had not converged within its budget; "
                "the spine is an outer enclosure over that outer enclosure"};
    return {};
}

inline RunResult exec_target(const TargetParams& p, const SystemBundle& b, Emitter& em) {
    TargetSetResult t = target_set(b.system, static_cast<int>(p.max_iter), p.tol);
    em.results["converged"] = t.converged;
    em.results["iterations"] = t.iterations;
    em.results["last_delta"] = to_double(t.last_delta);
    em.results["n_components"] = t.set.boxes().size();
    em.results["components"] = boxes_json(t.set);
    em.csv(boxes_csv(t.set));
    if (!t.converged)
        return {3, "target-set iteration still moving after " +
                       std::to_string(t.iterations) + " steps (last delta " +
                       format_double(to_double(t.last_delta)) + ")"};
    return {};
}

inline const char* split_failure_name(SplitFailure::Kind k) {
    switch (k) {
        case SplitFailure::Kind::InadmissibleWord: return "inadmissible_word";
        case SplitFailure::Kind::LastSymbolMismatch: return "last_symbol_mismatch";
        case SplitFailure::Kind::NotStrictlyIncreasing: return "not_strictly_increasing";
        case SplitFailure::Kind::ProjectionsOverlap: return "projections_overlap";
    }
    return "unknown";
}

inline RunResult exec_split(const SplitParams& p, const SystemBundle& b,
                            std::uint64_t seed, Emitter& em) {
    SplitCheck sc = check_split(b.system, p.word_a, p.word_b);
    em.results["word_a"] = p.word_a;
    em.results["word_b"] = p.word_b;
    em.results["certified"] = static_cast<bool>(sc);

    CsvTable t;
    t.header = {"coordinate", "gap", "gap_exact"};
    if (sc) {
        const SplitCertificate& cert = *sc.certificate;
        nlohmann::json gaps = nlohmann::json::array();
        for (std::size_t s = 0; s < cert.gaps.size(); ++s) {
            gaps.push_back(rational_to_string(cert.gaps[s]));
            t.add_row({std::to_string(s + 1), format_double(to_double(cert.gaps[s])),
                       rational_to_string(cert.gaps[s])});
        }
        em.results["gaps"] = std::move(gaps);
        em.results["image_a"] = boxes_json(cert.image_a);
        em.results["image_b"] = boxes_json(cert.image_b);
        if (p.sweep_words > 0) {
            int overlaps = separation_sweep(b.system, cert,
                                            static_cast<int>(p.sweep_words),
                                            static_cast<int>(p.sweep_max_len), seed);
            em.results["sweep_words"] = p.sweep_words;
            em.results["sweep_overlaps"] = overlaps;
        }
    } else {
        em.results["failure_kind"] = split_failure_name(sc.failure->kind);
        em.results["failure_detail"] = sc.failure->detail;
        if (sc.failure->kind == SplitFailure::Kind::ProjectionsOverlap) {
            em.results["failure_coordinate"] = sc.failure->coordinate + 1;
            em.results["failure_overlap"] = to_double(sc.failure->overlap);
        }
    }
    em.csv(t);
    return {};
}

inline RunResult exec_decay(const DecayParams& p, const SystemBundle& b,
                            std::uint64_t seed, Emitter& em) {
    DecayEstimate de = decay_estimate(b.system, p.depths,
                                      static_cast<int>(p.n_samples), seed);
    CsvTable t;
    t.header = {"depth", "mean", "stderr"};
    std::vector<double> xs;
    for (std::size_t i = 0; i < de.depths.size(); ++i) {
        t.add_row({std::to_string(de.depths[i]), format_double(de.mean_diams[i]),
                   format_double(de.std_errs[i])});
        xs.push_back(static_cast<double>(de.depths[i]));
    }
    em.results["fitted_lambda"] = de.fitted_lambda;
    em.results["fit_r2"] = de.fit_r2;
    em.results["n_samples"] = de.n_samples;
    em.csv(t);
    em.svg(line_plot_svg("backward image diameter decay", "depth", "mean diameter", xs,
                         de.mean_diams, true));
    return {};
}

inline RunResult exec_wasserstein(const WassersteinParams& p, const SystemBundle& b,
                                  std::uint64_t seed, Emitter& em) {
    Rng root(seed);
    std::int64_t fwd = p.depths.back() + p.base_depth;
    EmpiricalMeasure mu0 = sample_with_marginal(b.system, static_cast<int>(p.n_atoms),
                                                p.law, p.word_length,
                                                root.derive(1).key(), fwd);
    CsvTable t;
    t.header = {"n", "value", "error"};
    try {
        std::vector<CurvePoint> curve =
            convergence_curve(b.system, mu0, p.depths, root.derive(2).key(),
                              p.word_length, p.tol, p.base_depth);
        std::vector<double> xs, vals;
        for (const CurvePoint& c : curve) {
            t.add_row({std::to_string(c.n), format_double(c.value),
                       format_double(c.error_bound)});
            xs.push_back(static_cast<double>(c.n));
            vals.push_back(c.value);
        }
        em.results["log_fit"] = log_fit_json(xs, vals);
        em.csv(t);
        em.svg(line_plot_svg("pushforward convergence to the attracting sample", "n",
                             "wasserstein d2", xs, vals, true));
        return {};
    } catch (const DiscardFractionTooHigh& e) {
        em.results["error"] = e.what();
        em.csv(t);
        return {3, e.what()};
    }
}

inline RunResult exec_sync(const SyncParams& p, const SystemBundle& b, Emitter& em) {
    std::vector<SyncPoint> curve =
        pointwise_sync_curve(b.system, p.theta, p.x0, p.depths, p.tol, p.code_depth);
    CsvTable t;
    t.header = {"n", "coded", "value"};
    std::vector<double> xs, vals;
    std::int64_t n_coded = 0;
    for (const SyncPoint& s : curve) {
        t.add_row({std::to_string(s.n), s.coded ? "1" : "0", format_double(s.value)});
        if (s.coded) {
            xs.push_back(static_cast<double>(s.n));
            vals.push_back(s.value);
            ++n_coded;
        }
    }
    em.results["n_points"] = curve.size();
    em.results["n_coded"] = n_coded;
    if (!vals.empty()) em.results["final_value"] = vals.back();
    em.results["log_fit"] = log_fit_json(xs, vals);
    em.csv(t);
    em.svg(line_plot_svg("orbit distance to the invariant graph", "n", "d1 to graph point",
                         xs, vals, true));
    return {};
}

inline RunResult exec_omega(const OmegaParams& p, const SystemBundle& b, Emitter& em) {
    std::vector<OrbitPoint> cloud =
        omega_limit_sample(p.theta, p.x0, b.system, p.burn_in, p.n_iter);
    CsvTable t;
    t.header = {"t", "symbol"};
    for (int s = 1; s <= b.system.fiber_dimension; ++s)
        t.header.push_back("x_" + std::to_string(s));
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        std::vector<std::string> row{std::to_string(p.burn_in + 1 + static_cast<std::int64_t>(i)),
                                     std::to_string(cloud[i].window.symbol_at(0))};
        for (double v : cloud[i].x) row.push_back(format_double(v));
        t.add_row(std::move(row));
    }
    em.results["n_points"] = cloud.size();
    em.results["burn_in"] = p.burn_in;
    em.results["n_iter"] = p.n_iter;
    em.csv(t);
    return {};
}

inline RunResult exec_graph(const GraphParams& p, const SystemBundle& b,
                            std::uint64_t seed, Emitter& em) {
    GraphSample g = graph_sample(b.system, static_cast<int>(p.n_points), p.word_length,
                                 seed, p.tol);
    CsvTable t;
    t.header = {"atom"};
    for (int s = 1; s <= b.system.fiber_dimension; ++s)
        t.header.push_back("x_" + std::to_string(s));
    for (std::size_t i = 0; i < g.pairs.size(); ++i) {
        std::vector<std::string> row{std::to_string(i + 1)};
        for (const Rational& v : g.pairs[i].second) row.push_back(format_double(to_double(v)));
        t.add_row(std::move(row));
    }
    em.results["n_requested"] = p.n_points;
    em.results["n_converged"] = g.pairs.size();
    em.results["not_converged"] = g.not_converged;
    em.results["max_equivariance_residual"] = to_double(g.max_equivariance_residual);
    em.csv(t);
    if (!g.pairs.empty()) {
        EmpiricalMeasure mu;
        double w = 1.0 / static_cast<double>(g.pairs.size());
        for (const auto& [win, x] : g.pairs) mu.atoms.push_back(Atom{win, x, w});
        em.txt("graph.txt", serialize_measure(mu));
    }
    return {};
}

}  // namespace detail

/// Runs the configured experiment into out_dir: always results.json and
/// data.csv, plus plot.svg for the curve experiments and graph.txt for
/// graph-sample. Exit 0 on success, 3 when a convergence or sampling budget
/// ran out (results.json still describes the partial state). Config errors
/// throw ConfigError; callers map those to exit 2.
inline RunResult run_experiment(const Config& cfg, const std::string& out_dir) {
    std::string exp = cfg.get_string("experiment");
    std::uint64_t seed = cfg.get_uint64("seed");
    SystemBundle bundle = build_system(cfg);

    std::filesystem::create_directories(out_dir);
    detail::Emitter em{out_dir, nlohmann::json::object()};
    em.results["version"] = kVersion;
    em.results["experiment"] = exp;
    em.results["seed"] = seed;
    em.results["alphabet"] = bundle.system.markov.alphabet();
    em.results["fiber_dimension"] = bundle.system.fiber_dimension;
    if (!bundle.preset.empty()) em.results["preset"] = bundle.preset;
    if (bundle.word_a) em.results["canonical_word_a"] = *bundle.word_a;
    if (bundle.word_b) em.results["canonical_word_b"] = *bundle.word_b;
    if (!bundle.intervals.empty()) {
        nlohmann::json arr = nlohmann::json::array();
        for (const Interval& iv : bundle.intervals)
            arr.push_back({rational_to_string(iv.lo), rational_to_string(iv.hi)});
        em.results["intervals"] = std::move(arr);
    }
    if (!bundle.contracting_words.empty())
        em.results["contracting_words"] = bundle.contracting_words;
    if (!bundle.repelling_word.empty())
        em.results["repelling_word"] = bundle.repelling_word;
    if (bundle.porcupine_variant) em.results["orientation_preserving"] = true;

    RunResult rr;
    if (exp == "code")
        rr = detail::exec_code(detail::parse_code(cfg, bundle), bundle, em);
    else if (exp == "spine")
        rr = detail::exec_spine(detail::parse_spine(cfg, bundle), bundle, em);
    else if (exp == "target")
        rr = detail::exec_target(detail::parse_target(cfg, bundle), bundle, em);
    else if (exp == "split-check")
        rr = detail::exec_split(detail::parse_split(cfg, bundle), bundle, seed, em);
    else if (exp == "decay")
        rr = detail::exec_decay(detail::parse_decay(cfg, bundle), bundle, seed, em);
    else if (exp == "wasserstein-curve")
        rr = detail::exec_wasserstein(detail::parse_wasserstein(cfg, bundle), bundle, seed,
                                      em);
    else if (exp == "sync-curve")
        rr = detail::exec_sync(detail::parse_sync(cfg, bundle), bundle, em);
    else if (exp == "omega")
        rr = detail::exec_omega(detail::parse_omega(cfg, bundle), bundle, em);
    else if (exp == "graph-sample")
        rr = detail::exec_graph(detail::parse_graph(cfg, bundle), bundle, seed, em);
    else
        throw ConfigError("unknown experiment `" + exp + "`");

    nlohmann::json rc = nlohmann::json::object();
    for (const auto& [k, toks] : cfg.items()) {
        std::string joined;
        for (std::size_t i = 0; i < toks.size(); ++i) {
            if (i) joined += ' ';
            joined += toks[i];
        }
        rc[k] = joined;
    }
    em.results["resolved_config"] = std::move(rc);
    em.results["config_hash"] = hex64(fnv1a64(cfg.canonical_text()));
    if (!rr.message.empty()) em.results["message"] = rr.message;
    em.finish();
    return rr;
}

}  // namespace skewgraph
