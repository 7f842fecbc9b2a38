#pragma once

#include "skewgraph/attractor.hpp"
#include "skewgraph/fiber.hpp"
#include "skewgraph/parallel.hpp"
#include "skewgraph/rational.hpp"
#include "skewgraph/rng.hpp"
#include "skewgraph/stats.hpp"
#include "skewgraph/symbolic.hpp"
#include "skewgraph/transport.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace skewgraph {

struct Atom {
    SymbolWindow window;
    std::vector<Rational> x;
    double weight = 0.0;
};

struct EmpiricalMeasure {
    std::vector<Atom> atoms;
};

inline void validate_measure(const EmpiricalMeasure& mu) {
    if (mu.atoms.empty()) throw std::invalid_argument("measure has no atoms");
    std::vector<double> ws;
    ws.reserve(mu.atoms.size());
    for (const Atom& a : mu.atoms) {
        if (!(a.weight > 0.0)) throw std::invalid_argument("atom weights must be positive");
        ws.push_back(a.weight);
        for (const Rational& c : a.x)
            if (c < 0 || c > 1) throw std::invalid_argument("atom point outside the unit cube");
    }
    if (std::abs(pairwise_sum(ws) - 1.0) > 1e-12)
        throw std::invalid_argument("atom weights must sum to 1");
}

struct UniformLaw {};
struct DiracLaw {
    std::vector<Rational> point;
};
struct GridLaw {
    int per_axis = 2;
};
using FiberLaw = std::variant<UniformLaw, DiracLaw, GridLaw>;

/// Draws n_atoms equally weighted atoms whose base coordinates follow the
/// Markov measure. Each window carries one stationary chain over positions
/// [-word_length, forward_length] (forward_length < 0 means word_length);
/// pass a forward_length of at least max pushforward depth + d0 truncation
/// depth when the measure will be pushed forward and then compared, so the
/// compared positions stay genuine chain output rather than tail convention.
inline EmpiricalMeasure sample_with_marginal(const SkewSystem& sys, int n_atoms,
                                             const FiberLaw& law, std::int64_t word_length,
                                             std::uint64_t seed,
                                             std::int64_t forward_length = -1) {
    if (n_atoms < 1) throw std::invalid_argument("sample_with_marginal needs n_atoms >= 1");
    if (word_length < 1) throw std::invalid_argument("sample_with_marginal needs word_length >= 1");
    std::int64_t fwd = forward_length < 0 ? word_length : forward_length;
    std::size_t dim = static_cast<std::size_t>(sys.fiber_dimension);

    std::vector<std::vector<Rational>> grid_points;
    if (const GridLaw* g = std::get_if<GridLaw>(&law)) {
        if (g->per_axis < 1) throw std::invalid_argument("grid law needs per_axis >= 1");
        std::int64_t total = 1;
        for (std::size_t s = 0; s < dim; ++s) {
            total *= g->per_axis;
            if (total > 1000000) throw std::invalid_argument("grid law too fine");
        }
        for (std::int64_t idx = 0; idx < total; ++idx) {
            std::vector<Rational> p(dim);
            std::int64_t rest = idx;
            for (std::size_t s = 0; s < dim; ++s) {
                p[s] = Rational(2 * (rest % g->per_axis) + 1, 2 * g->per_axis);
                rest /= g->per_axis;
            }
            grid_points.push_back(std::move(p));
        }
    }
    if (const DiracLaw* d = std::get_if<DiracLaw>(&law)) {
        if (d->point.size() != dim) throw std::invalid_argument("dirac point dimension mismatch");
        for (const Rational& c : d->point)
            if (c < 0 || c > 1) throw std::invalid_argument("dirac point outside the unit cube");
    }

    std::vector<std::optional<Atom>> slots(static_cast<std::size_t>(n_atoms));
    Rng root(seed);
    parallel_for(static_cast<std::size_t>(n_atoms), [&](std::size_t i) {
        Rng rng = root.derive(i);
        SymbolWindow w = sample_window(sys.markov, word_length, fwd, rng);
        std::vector<Rational> x(dim);
        if (std::holds_alternative<UniformLaw>(law)) {
            for (std::size_t s = 0; s < dim; ++s) x[s] = rng.next_dyadic();
        } else if (const DiracLaw* d = std::get_if<DiracLaw>(&law)) {
            x = d->point;
        } else {
            x = grid_points[i % grid_points.size()];
        }
        slots[i] = Atom{std::move(w), std::move(x), 1.0 / static_cast<double>(n_atoms)};
    });
    EmpiricalMeasure out;
    out.atoms.reserve(slots.size());
    for (auto& s : slots) out.atoms.push_back(std::move(*s));
    return out;
}

/// Atomwise n-step dynamics: (theta, x) -> (sigma^n theta, f_theta^n(x)),
/// exact in the fiber. Weights are untouched.
inline EmpiricalMeasure pushforward(const EmpiricalMeasure& mu, const SkewSystem& sys,
                                    std::int64_t n) {
    if (n < 0) throw std::invalid_argument("pushforward needs n >= 0");
    std::vector<std::optional<Atom>> slots(mu.atoms.size());
    parallel_for(mu.atoms.size(), [&](std::size_t i) {
        const Atom& a = mu.atoms[i];
        std::vector<Rational> x = a.x;
        for (std::int64_t t = 0; t < n; ++t) x = sys.map_for(a.window.symbol_at(t)).apply(x);
        slots[i] = Atom{a.window.shift(n), std::move(x), a.weight};
    });
    EmpiricalMeasure out;
    out.atoms.reserve(slots.size());
    for (auto& s : slots) out.atoms.push_back(std::move(*s));
    return out;
}

struct DisintegrationCheck {
    std::vector<std::vector<Rational>> pushed;         // conditional fiber sample of F^n_* mu
    std::vector<std::vector<Rational>> reconstructed;  // backward-word images of the mu sample
    bool equal = false;
};

/// Conditional fiber sample of the pushforward over a base cylinder, built
/// two independent ways: once by pushing atoms forward step by step and
/// selecting, once by selecting atoms of mu in the time-shifted cylinder and
/// applying their composed backward word in one stroke. Exact arithmetic;
/// the two multisets must coincide.
inline DisintegrationCheck disintegration_pushforward_check(const EmpiricalMeasure& mu,
                                                            const SkewSystem& sys, std::int64_t n,
                                                            const Cylinder& cyl) {
    if (n < 0) throw std::invalid_argument("disintegration check needs n >= 0");
    DisintegrationCheck out;
    EmpiricalMeasure fwd = pushforward(mu, sys, n);
    for (const Atom& a : fwd.atoms)
        if (cyl.contains(a.window)) out.pushed.push_back(a.x);

    Cylinder shifted{cyl.start_index + n, cyl.word};
    for (const Atom& a : mu.atoms) {
        if (!shifted.contains(a.window)) continue;
        Word w;
        w.reserve(static_cast<std::size_t>(n));
        for (std::int64_t t = 0; t < n; ++t) w.push_back(a.window.symbol_at(t));
        out.reconstructed.push_back(compose_word(w, sys).apply(a.x));
    }
    if (out.pushed.empty() || out.reconstructed.empty())
        throw std::runtime_error("cylinder has no empirical mass");
    std::sort(out.pushed.begin(), out.pushed.end());
    std::sort(out.reconstructed.begin(), out.reconstructed.end());
    out.equal = out.pushed == out.reconstructed;
    return out;
}

class DiscardFractionTooHigh : public std::runtime_error {
  public:
    explicit DiscardFractionTooHigh(double fraction)
        : std::runtime_error("attracting-measure sampling discarded " +
                             std::to_string(fraction * 100.0) +
                             "% of windows; raise word_length or check contraction"),
          fraction_(fraction) {}
    double fraction() const { return fraction_; }

  private:
    double fraction_;
};

struct AttractingSample {
    EmpiricalMeasure measure;
    double discard_fraction = 0.0;
};

/// Samples the attracting invariant measure: Markov windows coded to their
/// graph points, discards the windows whose backward images have not closed
/// down to tol by depth word_length.
inline AttractingSample attracting_measure_sample(const SkewSystem& sys, int n_atoms,
                                                  std::int64_t word_length, double tol,
                                                  std::uint64_t seed) {
    if (n_atoms < 1) throw std::invalid_argument("attracting_measure_sample needs n_atoms >= 1");
    std::vector<std::optional<Atom>> slots(static_cast<std::size_t>(n_atoms));
    Rng root(seed);
    parallel_for(static_cast<std::size_t>(n_atoms), [&](std::size_t i) {
        Rng rng = root.derive(i);
        SymbolWindow w = sample_window(sys.markov, word_length, word_length, rng);
        CodingResult c = code(w, sys, word_length, tol);
        if (c.status != CodingStatus::Converged) return;
        slots[i] = Atom{std::move(w), std::move(c.point), 0.0};
    });
    AttractingSample out;
    for (auto& s : slots)
        if (s) out.measure.atoms.push_back(std::move(*s));
    std::size_t kept = out.measure.atoms.size();
    out.discard_fraction =
        1.0 - static_cast<double>(kept) / static_cast<double>(static_cast<std::size_t>(n_atoms));
    if (out.discard_fraction > 0.10) throw DiscardFractionTooHigh(out.discard_fraction);
    for (Atom& a : out.measure.atoms) a.weight = 1.0 / static_cast<double>(kept);
    return out;
}

struct WassersteinResult {
    double value = 0.0;
    double error_bound = 0.0;  // d0 truncation; Monte-Carlo error is the caller's business
    std::int64_t pivots = 0;
    bool exact_arithmetic = false;
};

/// Wasserstein-1 distance between atom sets under d2 = d0 + d1, solved as a
/// primal transportation problem. Small instances run in exact rationals;
/// large ones in double. d0 is truncated at base_depth, adding at most
/// 2^-base_depth, which is the reported error bound.
inline WassersteinResult wasserstein_d2(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                        std::int64_t base_depth) {
    if (mu.atoms.empty() || nu.atoms.empty()) throw std::invalid_argument("empty measure");
    if (mu.atoms.size() + nu.atoms.size() > 4000)
        throw std::invalid_argument("wasserstein_d2 atom budget is 4000 combined");
    if (base_depth < 0) throw std::invalid_argument("wasserstein_d2 needs base_depth >= 0");
    std::size_t n = mu.atoms.size(), m = nu.atoms.size();
    std::size_t dim = mu.atoms.front().x.size();
    for (const Atom& a : nu.atoms)
        if (a.x.size() != dim) throw std::invalid_argument("fiber dimension mismatch");

    WassersteinResult out;
    out.error_bound = std::ldexp(1.0, -static_cast<int>(std::min<std::int64_t>(base_depth, 1060)));
    out.exact_arithmetic = n * m <= 1024;

    if (out.exact_arithmetic) {
        Rational ts(0), td(0);
        std::vector<Rational> s, d;
        for (const Atom& a : mu.atoms) {
            s.emplace_back(a.weight);
            ts += s.back();
        }
        for (const Atom& a : nu.atoms) {
            d.emplace_back(a.weight);
            td += d.back();
        }
        for (Rational& w : s) w /= ts;
        for (Rational& w : d) w /= td;
        std::vector<Rational> cost;
        cost.reserve(n * m);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                auto r = truncated_disagreement(mu.atoms[i].window, nu.atoms[j].window, base_depth);
                Rational c = r ? dyadic_unit(*r) : Rational(0);
                for (std::size_t t = 0; t < dim; ++t)
                    c += rational_abs(mu.atoms[i].x[t] - nu.atoms[j].x[t]);
                cost.push_back(std::move(c));
            }
        }
        TransportResult<Rational> res = solve_transport<Rational>(s, d, cost);
        if (!res.optimal) throw std::runtime_error("transport solver hit its pivot cap");
        out.value = to_double(res.cost);
        out.pivots = res.pivots;
        return out;
    }

    std::vector<double> s, d;
    double ts = 0.0, td = 0.0;
    for (const Atom& a : mu.atoms) ts += a.weight;
    for (const Atom& a : nu.atoms) td += a.weight;
    for (const Atom& a : mu.atoms) s.push_back(a.weight / ts);
    for (const Atom& a : nu.atoms) d.push_back(a.weight / td);
    std::vector<std::vector<double>> xa(n, std::vector<double>(dim)), xb(m, std::vector<double>(dim));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; t < dim; ++t) xa[i][t] = to_double(mu.atoms[i].x[t]);
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t t = 0; t < dim; ++t) xb[j][t] = to_double(nu.atoms[j].x[t]);
    std::vector<double> cost(n * m);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            double c = truncated_distance(mu.atoms[i].window, nu.atoms[j].window, base_depth);
            for (std::size_t t = 0; t < dim; ++t) c += std::abs(xa[i][t] - xb[j][t]);
            cost[i * m + j] = c;
        }
    }
    TransportResult<double> res = solve_transport<double>(s, d, cost);
    if (!res.optimal) throw std::runtime_error("transport solver hit its pivot cap");
    out.value = res.cost;
    out.pivots = res.pivots;
    out.error_bound += 1e-9;  // double-precision solve slop
    return out;
}

struct CurvePoint {
    std::int64_t n = 0;
    double value = 0.0;
    double error_bound = 0.0;
};

/// d_W(F^n_* mu0, attracting sample) over the given depths, with a fresh
/// independently seeded attracting sample per depth. The error bound stacks
/// the d0 truncation with a 2/sqrt(atoms) empirical-OT heuristic; it is a
/// reporting aid, not a proven bound.
inline std::vector<CurvePoint> convergence_curve(const SkewSystem& sys,
                                                 const EmpiricalMeasure& mu0,
                                                 const std::vector<std::int64_t>& depths,
                                                 std::uint64_t seed, std::int64_t word_length,
                                                 double tol, std::int64_t base_depth) {
    for (std::size_t i = 0; i + 1 < depths.size(); ++i)
        if (depths[i] >= depths[i + 1])
            throw std::invalid_argument("convergence_curve depths must be increasing");
    if (!depths.empty() && depths.front() < 0)
        throw std::invalid_argument("convergence_curve depths must be >= 0");
    Rng root(seed);
    std::vector<CurvePoint> out;
    for (std::size_t i = 0; i < depths.size(); ++i) {
        AttractingSample vp = attracting_measure_sample(
            sys, static_cast<int>(mu0.atoms.size()), word_length, tol, root.derive(i).key());
        EmpiricalMeasure pushed = pushforward(mu0, sys, depths[i]);
        WassersteinResult w = wasserstein_d2(pushed, vp.measure, base_depth);
        double n_eff = static_cast<double>(std::min(mu0.atoms.size(), vp.measure.atoms.size()));
        out.push_back({depths[i], w.value, w.error_bound + 2.0 / std::sqrt(n_eff)});
    }
    return out;
}

struct SyncPoint {
    std::int64_t n = 0;
    bool coded = false;
    double value = 0.0;
};

/// d2 distance of the orbit of (theta, x0) to the graph point over the
/// shifted base. The base coordinates coincide, so d2 reduces to the d1 gap
/// between the orbit point and the coded point, computed exactly.
inline std::vector<SyncPoint> pointwise_sync_curve(const SkewSystem& sys,
                                                   const SymbolWindow& theta,
                                                   const std::vector<Rational>& x0,
                                                   const std::vector<std::int64_t>& depths,
                                                   double tol, std::int64_t code_depth) {
    if (x0.size() != static_cast<std::size_t>(sys.fiber_dimension))
        throw std::invalid_argument("pointwise_sync_curve point dimension mismatch");
    for (std::size_t i = 0; i + 1 < depths.size(); ++i)
        if (depths[i] >= depths[i + 1])
            throw std::invalid_argument("pointwise_sync_curve depths must be increasing");
    if (!depths.empty() && depths.front() < 0)
        throw std::invalid_argument("pointwise_sync_curve depths must be >= 0");
    std::vector<SyncPoint> out;
    std::vector<Rational> x = x0;
    std::int64_t t = 0;
    for (std::int64_t n : depths) {
        for (; t < n; ++t) x = sys.map_for(theta.symbol_at(t)).apply(x);
        CodingResult c = code(theta.shift(n), sys, code_depth, tol);
        if (c.status != CodingStatus::Converged) {
            out.push_back({n, false, 0.0});
            continue;
        }
        Rational d(0);
        for (std::size_t s = 0; s < x.size(); ++s) d += rational_abs(x[s] - c.point[s]);
        out.push_back({n, true, to_double(d)});
    }
    return out;
}

}  // namespace skewgraph
