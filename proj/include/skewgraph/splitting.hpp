#pragma once

#include "skewgraph/fiber.hpp"
#include "skewgraph/parallel.hpp"
#include "skewgraph/rng.hpp"
#include "skewgraph/sets.hpp"
#include "skewgraph/stats.hpp"
#include "skewgraph/symbolic.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace skewgraph {

/// Witness that two admissible words with a common last symbol send the full
/// fiber to sets with disjoint coordinate projections. For coordinatewise
/// strictly increasing maps this finite check is permanent: applying any
/// further composition preserves the strict order of the projections, so the
/// separation survives every continuation (the sweep in the test suite
/// re-checks this empirically).
struct SplitCertificate {
    Word word_a;
    Word word_b;
    BoxUnion image_a = BoxUnion::empty(1);
    BoxUnion image_b = BoxUnion::empty(1);
    std::vector<Rational> gaps;  // per-coordinate distance between the projections
};

struct SplitFailure {
    enum class Kind { InadmissibleWord, LastSymbolMismatch, NotStrictlyIncreasing, ProjectionsOverlap };
    Kind kind;
    std::string detail;
    int coordinate = -1;      // ProjectionsOverlap only
    Rational overlap{0};      // ProjectionsOverlap only
};

struct SplitCheck {
    std::optional<SplitCertificate> certificate;
    std::optional<SplitFailure> failure;
    explicit operator bool() const { return certificate.has_value(); }
};

namespace detail {

inline Box full_fiber_image(const SkewSystem& sys, const Word& word) {
    Box m(static_cast<std::size_t>(sys.fiber_dimension), Interval(Rational(0), Rational(1)));
    return compose_word(word, sys).image(m);
}

}  // namespace detail

inline SplitCheck check_split(const SkewSystem& sys, const Word& word_a, const Word& word_b) {
    if (word_a.empty() || word_b.empty())
        throw std::invalid_argument("check_split needs nonempty words");
    SplitCheck out;
    auto fail = [&](SplitFailure f) {
        out.failure = std::move(f);
        return out;
    };
    if (!is_admissible(word_a, sys.markov))
        return fail({SplitFailure::Kind::InadmissibleWord, "first word is not admissible"});
    if (!is_admissible(word_b, sys.markov))
        return fail({SplitFailure::Kind::InadmissibleWord, "second word is not admissible"});
    if (word_a.back() != word_b.back())
        return fail({SplitFailure::Kind::LastSymbolMismatch,
                     "last symbols differ: " + std::to_string(word_a.back()) + " vs " +
                         std::to_string(word_b.back())});
    for (int s = 1; s <= sys.alphabet(); ++s) {
        if (!sys.map_for(s).strictly_increasing())
            return fail({SplitFailure::Kind::NotStrictlyIncreasing,
                         "fiber map " + std::to_string(s) +
                             " has a flat piece; the separation argument needs strictly "
                             "increasing coordinate maps"});
    }
    Box m1 = detail::full_fiber_image(sys, word_a);
    Box m2 = detail::full_fiber_image(sys, word_b);
    SplitCertificate cert{word_a, word_b, BoxUnion(static_cast<int>(m1.size()), {m1}),
                          BoxUnion(static_cast<int>(m2.size()), {m2}), {}};
    for (std::size_t s = 0; s < m1.size(); ++s) {
        if (m1[s].hi < m2[s].lo) {
            cert.gaps.push_back(m2[s].lo - m1[s].hi);
        } else if (m2[s].hi < m1[s].lo) {
            cert.gaps.push_back(m1[s].lo - m2[s].hi);
        } else {
            Rational width =
                (m1[s].hi < m2[s].hi ? m1[s].hi : m2[s].hi) - (m1[s].lo > m2[s].lo ? m1[s].lo : m2[s].lo);
            return fail({SplitFailure::Kind::ProjectionsOverlap,
                         "coordinate " + std::to_string(s) + " projections overlap",
                         static_cast<int>(s), width});
        }
    }
    out.certificate = std::move(cert);
    return out;
}

/// Empirical half of the certificate: pushes both certified images through
/// random words and counts coordinates where the projections ever meet.
/// Exact rational arithmetic; zero is the sound answer.
inline int separation_sweep(const SkewSystem& sys, const SplitCertificate& cert, int n_words,
                            int max_len, std::uint64_t seed) {
    if (n_words < 1 || max_len < 1) throw std::invalid_argument("separation_sweep needs positive budgets");
    Rng rng(seed);
    int overlaps = 0;
    const Box& a = cert.image_a.boxes().front();
    const Box& b = cert.image_b.boxes().front();
    for (int i = 0; i < n_words; ++i) {
        std::size_t len = 1 + static_cast<std::size_t>(rng.next_below(static_cast<std::uint64_t>(max_len)));
        Word w(len);
        for (std::size_t j = 0; j < len; ++j)
            w[j] = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(sys.alphabet())));
        FiberMap g = compose_word(w, sys);
        Box ga = g.image(a), gb = g.image(b);
        for (std::size_t s = 0; s < ga.size(); ++s) {
            bool disjoint = ga[s].hi < gb[s].lo || gb[s].hi < ga[s].lo;
            if (!disjoint) {
                ++overlaps;
                break;
            }
        }
    }
    return overlaps;
}

struct DecayEstimate {
    std::vector<std::int64_t> depths;
    std::vector<double> mean_diams;
    std::vector<double> std_errs;
    double fitted_lambda = 1.0;
    double fit_r2 = 0.0;
    int n_samples = 0;
    std::uint64_t seed = 0;
};

namespace detail {

inline std::vector<DInterval> unit_cube_d(int dim) {
    return std::vector<DInterval>(static_cast<std::size_t>(dim), DInterval{0.0, 1.0});
}

inline void apply_enclosure(const FiberMap& f, std::vector<DInterval>& u) {
    for (std::size_t s = 0; s < u.size(); ++s)
        u[s] = image_enclosure(f.component(static_cast<int>(s)), u[s]);
}

inline double diam_d(const std::vector<DInterval>& u) {
    double d = 0.0;
    for (const DInterval& iv : u) d += iv.hi - iv.lo;
    return d;
}

}  // namespace detail

/// Monte-Carlo mean backward-image diameters. Each sample folds one
/// stationary chain through outward-rounded interval images, recording the
/// diameter at every requested depth; by stationarity every prefix of the
/// chain has the law of a backward word of its length, so one chain serves
/// all depths of one sample. The fit regresses log(mean) on depth over the
/// later half of the requested depths, where the early transient has died.
inline DecayEstimate decay_estimate(const SkewSystem& sys, const std::vector<std::int64_t>& depths,
                                    int n_samples, std::uint64_t seed) {
    if (depths.empty()) throw std::invalid_argument("decay_estimate needs depths");
    for (std::size_t i = 0; i + 1 < depths.size(); ++i)
        if (depths[i] >= depths[i + 1]) throw std::invalid_argument("depths must be increasing");
    if (depths.front() < 1) throw std::invalid_argument("depths must be >= 1");
    if (n_samples < 100) throw std::invalid_argument("decay_estimate needs n_samples >= 100");

    std::int64_t max_depth = depths.back();
    std::size_t nd = depths.size(), ns = static_cast<std::size_t>(n_samples);
    std::vector<std::vector<double>> diams(nd, std::vector<double>(ns, 0.0));
    Rng root(seed);
    parallel_for(ns, [&](std::size_t i) {
        Rng rng = root.derive(i);
        Word w = sample_markov(sys.markov, static_cast<std::size_t>(max_depth), rng);
        std::vector<DInterval> u = detail::unit_cube_d(sys.fiber_dimension);
        std::size_t next = 0;
        for (std::int64_t t = 1; t <= max_depth; ++t) {
            detail::apply_enclosure(sys.map_for(w[static_cast<std::size_t>(t - 1)]), u);
            while (next < nd && depths[next] == t) {
                diams[next][i] = detail::diam_d(u);
                ++next;
            }
        }
    });

    DecayEstimate out;
    out.depths = depths;
    out.n_samples = n_samples;
    out.seed = seed;
    for (std::size_t d = 0; d < nd; ++d) {
        MeanStderr ms = mean_and_stderr(diams[d]);
        out.mean_diams.push_back(ms.mean);
        out.std_errs.push_back(ms.stderr_);
    }

    std::vector<double> xs, ys;
    for (std::size_t d = nd / 2; d < nd; ++d) {
        if (out.mean_diams[d] > 0.0) {
            xs.push_back(static_cast<double>(depths[d]));
            ys.push_back(std::log(out.mean_diams[d]));
        }
    }
    LinearFit fit = fit_line(xs, ys);
    if (fit.ok) {
        out.fitted_lambda = std::exp(fit.slope);
        out.fit_r2 = fit.r2;
    } else if (!xs.empty()) {
        out.fitted_lambda = 1.0;  // flat or single-point tail: no decay evidence
        out.fit_r2 = 0.0;
    } else {
        out.fitted_lambda = 0.0;  // every tail mean was exactly zero
        out.fit_r2 = 0.0;
    }
    return out;
}

/// Monte-Carlo probability that coordinate s of the depth-n forward image of
/// the full fiber contains x. Outward rounding makes the estimate err toward
/// containment.
inline double coverage_probability(const SkewSystem& sys, const std::vector<double>& x,
                                   int coordinate, std::int64_t depth, int n_samples,
                                   std::uint64_t seed) {
    if (x.size() != static_cast<std::size_t>(sys.fiber_dimension))
        throw std::invalid_argument("coverage_probability point dimension mismatch");
    if (coordinate < 0 || coordinate >= sys.fiber_dimension)
        throw std::invalid_argument("coverage_probability coordinate out of range");
    if (depth < 1 || n_samples < 1) throw std::invalid_argument("coverage_probability needs positive budgets");
    std::size_t ns = static_cast<std::size_t>(n_samples);
    std::vector<double> hit(ns, 0.0);
    Rng root(seed);
    parallel_for(ns, [&](std::size_t i) {
        Rng rng = root.derive(i);
        Word w = sample_markov(sys.markov, static_cast<std::size_t>(depth), rng);
        std::vector<DInterval> u = detail::unit_cube_d(sys.fiber_dimension);
        for (std::size_t t = 0; t < w.size(); ++t) detail::apply_enclosure(sys.map_for(w[t]), u);
        const DInterval& iv = u[static_cast<std::size_t>(coordinate)];
        hit[i] = (iv.lo <= x[static_cast<std::size_t>(coordinate)] &&
                  x[static_cast<std::size_t>(coordinate)] <= iv.hi)
                     ? 1.0
                     : 0.0;
    });
    return pairwise_sum(hit) / static_cast<double>(ns);
}

/// Fraction of sampled histories whose depth-n backward image has d1
/// diameter at most tol. Outward rounding only inflates diameters, so the
/// reported fraction is a lower bound on the exact one.
inline double weak_hyperbolicity_fraction(const SkewSystem& sys, std::int64_t depth, double tol,
                                          int n_samples, std::uint64_t seed) {
    if (depth < 1 || n_samples < 1)
        throw std::invalid_argument("weak_hyperbolicity_fraction needs positive budgets");
    std::size_t ns = static_cast<std::size_t>(n_samples);
    std::vector<double> small(ns, 0.0);
    Rng root(seed);
    parallel_for(ns, [&](std::size_t i) {
        Rng rng = root.derive(i);
        Word w = sample_markov(sys.markov, static_cast<std::size_t>(depth), rng);
        std::vector<DInterval> u = detail::unit_cube_d(sys.fiber_dimension);
        for (std::size_t t = 0; t < w.size(); ++t) detail::apply_enclosure(sys.map_for(w[t]), u);
        small[i] = detail::diam_d(u) <= tol ? 1.0 : 0.0;
    });
    return pairwise_sum(small) / static_cast<double>(ns);
}

}  // namespace skewgraph
