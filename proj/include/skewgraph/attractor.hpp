#pragma once

#include "skewgraph/fiber.hpp"
#include "skewgraph/parallel.hpp"
#include "skewgraph/rng.hpp"
#include "skewgraph/sets.hpp"
#include "skewgraph/symbolic.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace skewgraph {

/// One application of the Barnsley-Hutchinson operator: union of the images
/// of u under all fiber maps, renormalized to disjoint components.
inline BoxUnion bh_step(const SkewSystem& sys, const BoxUnion& u) {
    BoxUnion acc = BoxUnion::empty(u.dim());
    for (const FiberMap& f : sys.fiber_maps) acc = acc.union_with(image(f, u));
    return acc;
}

struct TargetSetResult {
    BoxUnion set;
    bool converged = false;
    int iterations = 0;
    Rational last_delta{0};
};

/// Iterates B^n([0,1]^m) until successive iterates are Hausdorff-closer than
/// tol. The iterates are nested (every map sends the cube into itself), so
/// the result always contains the closure of the true target set; equality
/// holds only for systems with extra structure, and the converged flag never
/// asserts it. component_budget caps fragmentation for IFS-like systems
/// whose iterates split without bound.
inline TargetSetResult target_set(const SkewSystem& sys, int max_iter, double tol,
                                  std::size_t component_budget = 100000) {
    if (max_iter < 1) throw std::invalid_argument("target_set needs max_iter >= 1");
    TargetSetResult out{BoxUnion::cube(sys.fiber_dimension)};
    Rational rtol(tol);
    for (int n = 1; n <= max_iter; ++n) {
        BoxUnion next = bh_step(sys, out.set);
        out.iterations = n;
        out.last_delta = hausdorff_d1(out.set, next);
        out.set = std::move(next);
        if (out.last_delta <= rtol) {
            out.converged = true;
            return out;
        }
        if (out.set.component_count() > component_budget) return out;
    }
    return out;
}

enum class CodingStatus { Converged, NotConvergedAtDepth };

struct CodingResult {
    CodingStatus status = CodingStatus::NotConvergedAtDepth;
    std::vector<Rational> point;  // enclosing-box midpoint when Converged
    std::int64_t depth_used = 0;
    Rational final_diameter{0};
    Box final_box;  // the depth_used backward image of the seed set
};

/// Backward image at one fixed depth: f_{theta_{-1}} o ... o f_{theta_{-n}}
/// applied to the seed box, i.e. the symbol at -n acts first.
inline Box backward_image(const SymbolWindow& theta, const SkewSystem& sys, std::int64_t depth,
                          const Box& seed) {
    Box u = seed;
    for (std::int64_t j = depth; j >= 1; --j) u = sys.map_for(theta.symbol_at(-j)).image(u);
    return u;
}

/// Coding map: doubling depth schedule, stopping at the first evaluated
/// depth whose image diameter is <= singleton_tol. The images are nested in
/// depth, so doubling overshoots the minimal depth by at most 2x while
/// keeping total work linear in the final depth. The reported point is the
/// image midpoint; the true limit lies within final_diameter of every point
/// of the image, in particular within final_diameter/2 of the midpoint
/// whenever the limit exists.
inline CodingResult code(const SymbolWindow& theta, const SkewSystem& sys,
                         std::int64_t max_depth, double singleton_tol,
                         std::optional<Box> seed_set = std::nullopt) {
    if (max_depth < 1) throw std::invalid_argument("code needs max_depth >= 1");
    Box seed = seed_set ? *seed_set
                        : Box(static_cast<std::size_t>(sys.fiber_dimension),
                              Interval(Rational(0), Rational(1)));
    Rational rtol(singleton_tol);
    CodingResult out;
    for (std::int64_t depth = 1;; depth *= 2) {
        if (depth > max_depth) depth = max_depth;
        Box u = backward_image(theta, sys, depth, seed);
        Rational diam(0);
        for (const Interval& iv : u) diam += iv.length();
        out.depth_used = depth;
        out.final_diameter = diam;
        out.final_box = u;
        if (diam <= rtol) {
            out.status = CodingStatus::Converged;
            out.point.clear();
            for (const Interval& iv : u) out.point.push_back((iv.lo + iv.hi) / 2);
            return out;
        }
        if (depth == max_depth) return out;
    }
}

/// Depth-n backward image of an arbitrary base set; supersets of the spine
/// I_theta (intersection over all depths), shrinking onto it as depth grows.
inline BoxUnion spine(const SymbolWindow& theta, const SkewSystem& sys, const BoxUnion& base,
                      std::int64_t depth) {
    if (depth < 1) throw std::invalid_argument("spine needs depth >= 1");
    BoxUnion u = base;
    for (std::int64_t j = depth; j >= 1; --j) u = image(sys.map_for(theta.symbol_at(-j)), u);
    return u;
}

/// The theta-fiber of the maximal attractor is exactly the spine over the
/// full fiber; kept as a named operation.
inline BoxUnion maximal_attractor_fiber(const SymbolWindow& theta, const SkewSystem& sys,
                                        std::int64_t depth) {
    return spine(theta, sys, BoxUnion::cube(sys.fiber_dimension), depth);
}

struct GraphSample {
    std::vector<std::pair<SymbolWindow, std::vector<Rational>>> pairs;
    int not_converged = 0;
    Rational max_equivariance_residual{0};
};

/// Builds a sampled window: one stationary chain of length back + fwd + 1
/// laid out over positions [-back, fwd], with single-symbol periodic tails
/// beyond the sampled core. Everything read past the core is convention,
/// which is why distances between sampled windows carry a truncation bound.
inline SymbolWindow sample_window(const MarkovSpec& spec, std::int64_t back, std::int64_t fwd,
                                  Rng& rng) {
    Word w = sample_markov(spec, static_cast<std::size_t>(back + fwd + 1), rng);
    Word left{w.front()}, right{w.back()};
    return SymbolWindow(spec.alphabet(), std::move(w), -back, std::move(left), std::move(right));
}

/// Draws Markov-random windows, codes each to depth word_length, keeps the
/// converged ones as graph points and checks the equivariance identity
/// f_{theta_0}(rho(theta)) = rho(sigma theta) on every kept pair.
inline GraphSample graph_sample(const SkewSystem& sys, int n_points, std::int64_t word_length,
                                std::uint64_t seed, double tol) {
    Rng root(seed);
    std::vector<std::optional<std::pair<SymbolWindow, std::vector<Rational>>>> slots(
        static_cast<std::size_t>(n_points));
    std::vector<Rational> residuals(static_cast<std::size_t>(n_points), Rational(0));
    parallel_for(static_cast<std::size_t>(n_points), [&](std::size_t i) {
        Rng rng = root.derive(i);
        SymbolWindow theta = sample_window(sys.markov, word_length, 1, rng);
        CodingResult here = code(theta, sys, word_length, tol);
        if (here.status != CodingStatus::Converged) return;
        CodingResult there = code(theta.shift(1), sys, word_length, tol);
        if (there.status != CodingStatus::Converged) return;
        std::vector<Rational> pushed = sys.map_for(theta.symbol_at(0)).apply(here.point);
        Rational residual(0);
        for (std::size_t s = 0; s < pushed.size(); ++s) {
            residual += rational_abs(pushed[s] - there.point[s]);
        }
        residuals[i] = residual;
        slots[i] = std::make_pair(std::move(theta), std::move(here.point));
    });
    GraphSample out;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (!slots[i]) {
            ++out.not_converged;
            continue;
        }
        out.pairs.push_back(std::move(*slots[i]));
        out.max_equivariance_residual = std::max(out.max_equivariance_residual, residuals[i]);
    }
    return out;
}

struct OrbitPoint {
    SymbolWindow window;  // the base point at this time, i.e. sigma^t of the start
    std::vector<double> x;
};

/// Forward orbit of one point, recorded after burn_in. Fiber coordinates run
/// in double precision: the recorded cloud feeds coarse matching tolerances
/// (1e-2 scale), far above accumulated rounding.
inline std::vector<OrbitPoint> omega_limit_sample(const SymbolWindow& theta0,
                                                  const std::vector<Rational>& x0,
                                                  const SkewSystem& sys, std::int64_t burn_in,
                                                  std::int64_t n_iter) {
    if (burn_in < 0 || n_iter <= burn_in)
        throw std::invalid_argument("omega_limit_sample needs 0 <= burn_in < n_iter");
    std::vector<double> x;
    x.reserve(x0.size());
    for (const Rational& c : x0) x.push_back(to_double(c));
    std::vector<OrbitPoint> cloud;
    cloud.reserve(static_cast<std::size_t>(n_iter - burn_in));
    for (std::int64_t t = 0; t < n_iter; ++t) {
        const FiberMap& f = sys.map_for(theta0.symbol_at(t));
        x = f.apply_double(x);
        if (t + 1 > burn_in) cloud.push_back({theta0.shift(t + 1), x});
    }
    return cloud;
}

}  // namespace skewgraph
