#pragma once

#include "skewgraph/fiber.hpp"
#include "skewgraph/rational.hpp"
#include "skewgraph/rng.hpp"
#include "skewgraph/sets.hpp"
#include "skewgraph/splitting.hpp"
#include "skewgraph/symbolic.hpp"

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace skewgraph {

namespace detail {

inline std::vector<std::vector<double>> uniform_matrix(int k) {
    return std::vector<std::vector<double>>(
        static_cast<std::size_t>(k),
        std::vector<double>(static_cast<std::size_t>(k), 1.0 / static_cast<double>(k)));
}

}  // namespace detail

/// Binary contracting pair f1 = x/2, f2 = x/2 + 1/2 over the fair coin: the
/// coding map is the binary-expansion map, making this the canonical oracle
/// system for tests.
inline SkewSystem build_binary_ifs() {
    PLMap f1({Rational(0), Rational(1)}, {Rational(0), Rational(1, 2)});
    PLMap f2({Rational(0), Rational(1)}, {Rational(1, 2), Rational(1)});
    return SkewSystem({FiberMap(f1), FiberMap(f2)}, MarkovSpec(detail::uniform_matrix(2)));
}

/// The binary pair plus arbitrary extra monotone maps; the covering pair
/// already forces the target set to be the whole fiber, whatever is added.
inline SkewSystem build_contraction_cover(const std::vector<PLMap>& extra_maps) {
    std::vector<FiberMap> maps;
    maps.emplace_back(PLMap({Rational(0), Rational(1)}, {Rational(0), Rational(1, 2)}));
    maps.emplace_back(PLMap({Rational(0), Rational(1)}, {Rational(1, 2), Rational(1)}));
    for (const PLMap& f : extra_maps) maps.emplace_back(f);
    int k = static_cast<int>(maps.size());
    return SkewSystem(std::move(maps), MarkovSpec(detail::uniform_matrix(k)));
}

struct MSplitsSystem {
    SkewSystem system;
    Word word_a;            // (2,...,2,1,2): k contractions, the separator, one shared tail map
    Word word_b;            // (2,...,2) of the same length
    int contraction_depth;  // the k above
};

/// Two-map system on [0,1]^m built to split: f1 fixes 0 and attracts all of
/// [0,1) to it, f2 is a uniform contraction with interior fixed point 4/5,
/// and f1(4/5) = 7/10 differs from 4/5 in every coordinate. The canonical
/// word pair contracts toward the two different points deeply enough that
/// the images separate; the builder searches for the smallest such depth and
/// certifies it before returning.
inline MSplitsSystem build_msplits(int m, const Rational& p11, const Rational& p21) {
    if (m < 1) throw std::invalid_argument("build_msplits needs m >= 1");
    if (!(p21 > 0 && p21 < 1)) throw std::invalid_argument("build_msplits needs p21 in (0,1)");
    if (p11 < 0 || p11 > 1) throw std::invalid_argument("build_msplits needs p11 in [0,1]");

    PLMap g1({Rational(0), Rational(1, 2), Rational(1)},
             {Rational(0), Rational(1, 4), Rational(1)});
    PLMap g2({Rational(0), Rational(1)}, {Rational(2, 5), Rational(9, 10)});
    std::vector<PLMap> c1(static_cast<std::size_t>(m), g1), c2(static_cast<std::size_t>(m), g2);

    std::vector<std::vector<double>> matrix{{to_double(p11), to_double(1 - p11)},
                                            {to_double(p21), to_double(1 - p21)}};
    MSplitsSystem out{
        SkewSystem({FiberMap(std::move(c1)), FiberMap(std::move(c2))}, MarkovSpec(matrix)),
        {},
        {},
        0};

    for (int k = 1; k <= 20; ++k) {
        Word a(static_cast<std::size_t>(k), 2);
        a.push_back(1);
        a.push_back(2);
        Word b(static_cast<std::size_t>(k) + 2, 2);
        if (!is_admissible(a, out.system.markov) || !is_admissible(b, out.system.markov)) break;
        if (check_split(out.system, a, b)) {
            out.word_a = std::move(a);
            out.word_b = std::move(b);
            out.contraction_depth = k;
            return out;
        }
    }
    throw std::logic_error("build_msplits found no certifiable word pair; construction bug");
}

/// Interval pair with attracting endpoint fixed points, an expanding
/// composition in the middle, and a finite family of uniformly contracting
/// words whose images tile the whole interval.
struct KPairSpec {
    Interval J{Rational(0), Rational(1)};
    PLMap f1 = PLMap::identity();
    PLMap f2 = PLMap::identity();
    std::vector<Word> contracting_words;
    Word repelling_word;
};

namespace detail {

inline PLMap kpair_word_map(const KPairSpec& spec, const Word& w) {
    PLMap g = PLMap::identity();
    for (int s : w) {
        if (s == 1)
            g = compose(spec.f1, g);
        else if (s == 2)
            g = compose(spec.f2, g);
        else
            throw std::invalid_argument("k-pair words use symbols 1 and 2");
    }
    return g;
}

/// All exact fixed points of g strictly inside (lo, hi) whose piece slope
/// exceeds 1.
inline std::vector<Rational> repelling_fixed_points(const PLMap& g, const Rational& lo,
                                                    const Rational& hi) {
    std::vector<Rational> out;
    const auto& xs = g.xs();
    const auto& ys = g.ys();
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        Rational dx = xs[i + 1] - xs[i], dy = ys[i + 1] - ys[i];
        if (dy == dx) continue;  // slope one: no isolated fixed point
        // solve y_i + s(x - x_i) = x exactly: x (dx - dy) = y_i dx - x_i dy
        Rational x = (ys[i] * dx - xs[i] * dy) / (dx - dy);
        if (x < xs[i] || x > xs[i + 1]) continue;
        if (x <= lo || x >= hi) continue;
        if (dy > dx) out.push_back(x);
    }
    return out;
}

}  // namespace detail

inline void validate_kpair(const KPairSpec& spec) {
    const Rational &a = spec.J.lo, &b = spec.J.hi;
    if (!(a < b)) throw std::logic_error("k-pair interval is degenerate");
    if (spec.f1.apply(a) != a) throw std::logic_error("k-pair: f1 does not fix the left endpoint");
    if (spec.f2.apply(b) != b) throw std::logic_error("k-pair: f2 does not fix the right endpoint");

    auto adjacent_slope_below_one = [](const PLMap& f, const Rational& at, bool left_endpoint) {
        const auto& xs = f.xs();
        const auto& ys = f.ys();
        for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
            bool touches = left_endpoint ? (xs[i] == at) : (xs[i + 1] == at);
            if (!touches) continue;
            return ys[i + 1] - ys[i] < xs[i + 1] - xs[i];
        }
        return false;
    };
    if (!adjacent_slope_below_one(spec.f1, a, true))
        throw std::logic_error("k-pair: left fixed point is not attracting");
    if (!adjacent_slope_below_one(spec.f2, b, false))
        throw std::logic_error("k-pair: right fixed point is not attracting");

    PLMap rep = detail::kpair_word_map(spec, spec.repelling_word);
    if (detail::repelling_fixed_points(rep, a, b).empty())
        throw std::logic_error("k-pair: repelling word has no interior repelling fixed point");

    if (spec.contracting_words.empty())
        throw std::logic_error("k-pair: no contracting words");
    BoxUnion cover = BoxUnion::empty(1);
    for (const Word& w : spec.contracting_words) {
        PLMap h = detail::kpair_word_map(spec, w);
        if (!(h.lipschitz_bound() < 1))
            throw std::logic_error("k-pair: a covering word is not a uniform contraction");
        cover = cover.union_with(BoxUnion::from_intervals({h.image(spec.J)}));
    }
    if (!cover.set_equals(BoxUnion::from_intervals({spec.J})))
        throw std::logic_error("k-pair: covering word images do not tile the interval");
}

/// The stock K-pair on [0,1]. f1 attracts to 0 with an expanding stretch in
/// the middle, f2 attracts to 1; their composition f1 o f2 has a repelling
/// fixed point at 1/2. Six f1 steps contract everything below the f2 kink,
/// after which 0-3 f2 steps slide the image up; together with four pure f2
/// steps the five word images tile [0,1]. All data validated exactly at
/// construction.
inline KPairSpec build_kpair() {
    KPairSpec spec;
    spec.J = Interval(Rational(0), Rational(1));
    spec.f1 = PLMap({Rational(0), Rational(17, 28), Rational(19, 28), Rational(1)},
                    {Rational(0), Rational(11, 28), Rational(17, 28), Rational(11, 14)});
    spec.f2 = PLMap({Rational(0), Rational(1, 8), Rational(1)},
                    {Rational(1, 8), Rational(3, 8), Rational(1)});
    spec.repelling_word = {2, 1};  // f1 o f2
    Word six_ones(6, 1);
    for (int j = 0; j <= 3; ++j) {
        Word w = six_ones;
        w.insert(w.end(), static_cast<std::size_t>(j), 2);
        spec.contracting_words.push_back(std::move(w));
    }
    spec.contracting_words.push_back(Word(4, 2));
    validate_kpair(spec);
    return spec;
}

struct IntervalChainSystem {
    SkewSystem system;
    std::vector<Interval> intervals;  // the m disjoint K-pair intervals
};

namespace detail {

/// Breakpoints of the global map that restricts to a_i + h*base((x-a_i)/h)
/// on each interval [a_i, a_i + h] and interpolates linearly across gaps.
inline PLMap chain_of_copies(const PLMap& base, const std::vector<Rational>& starts,
                             const Rational& h) {
    std::vector<Rational> xs, ys;
    for (const Rational& a : starts) {
        const auto& bx = base.xs();
        const auto& by = base.ys();
        for (std::size_t i = 0; i < bx.size(); ++i) {
            xs.push_back(a + h * bx[i]);
            ys.push_back(a + h * by[i]);
        }
    }
    return PLMap(std::move(xs), std::move(ys));
}

}  // namespace detail

/// m disjoint intervals I_i = [(2i-2)h, (2i-1)h], h = 1/(2m-1), each
/// carrying a scaled copy of the stock K-pair under symbols 1 and 2; symbol
/// 3 contracts the whole fiber into the interior of I_1 and symbol 4 shifts
/// each I_i into the interior of the next (the last into its own interior).
/// The union of the I_i is exactly invariant under the image operator.
inline IntervalChainSystem build_interval_chain(int m) {
    if (m < 1) throw std::invalid_argument("build_interval_chain needs m >= 1");
    KPairSpec kp = build_kpair();
    Rational h(1, 2 * m - 1);
    std::vector<Rational> starts;
    std::vector<Interval> intervals;
    for (int i = 1; i <= m; ++i) {
        Rational a = Rational(2 * i - 2) * h;
        starts.push_back(a);
        intervals.push_back(Interval(a, a + h));
    }

    PLMap f1 = detail::chain_of_copies(kp.f1, starts, h);
    PLMap f2 = detail::chain_of_copies(kp.f2, starts, h);
    PLMap f3({Rational(0), Rational(1)}, {h / 4, h / 2});
    std::vector<Rational> xs4, ys4;
    for (int i = 1; i <= m; ++i) {
        Rational a = starts[static_cast<std::size_t>(i - 1)];
        Rational target = i < m ? Rational(starts[static_cast<std::size_t>(i)] + h / 4)
                                : Rational(a + 5 * h / 8);
        xs4.push_back(a);
        ys4.push_back(target);
        xs4.push_back(a + h);
        ys4.push_back(target + h / 4);
    }
    PLMap f4(std::move(xs4), std::move(ys4));

    IntervalChainSystem out{
        SkewSystem({FiberMap(f1), FiberMap(f2), FiberMap(f3), FiberMap(f4)},
                   MarkovSpec(detail::uniform_matrix(4))),
        std::move(intervals)};

    const auto& iv = out.intervals;
    Interval full(Rational(0), Rational(1));
    for (int i = 0; i < m; ++i) {
        if (!iv[static_cast<std::size_t>(i)].contains(f1.image(iv[static_cast<std::size_t>(i)])) ||
            !iv[static_cast<std::size_t>(i)].contains(f2.image(iv[static_cast<std::size_t>(i)])))
            throw std::logic_error("interval chain: K-pair copy escapes its interval");
        Interval img4 = f4.image(iv[static_cast<std::size_t>(i)]);
        const Interval& dst = iv[static_cast<std::size_t>(i < m - 1 ? i + 1 : i)];
        if (!(dst.lo < img4.lo && img4.hi < dst.hi))
            throw std::logic_error("interval chain: shift map misses the interior");
    }
    Interval img3 = f3.image(full);
    if (!(iv[0].lo < img3.lo && img3.hi < iv[0].hi))
        throw std::logic_error("interval chain: contraction misses the interior of I_1");
    return out;
}

struct PorcupineSystem {
    SkewSystem system;
    bool orientation_preserving = true;  // the decreasing-map variant is out of scope
};

/// The stock K-pair run as a two-symbol skew product over the fair coin;
/// the orientation-preserving cousin of the folded horseshoe picture, which
/// keeps interval images exact.
inline PorcupineSystem build_porcupine() {
    KPairSpec kp = build_kpair();
    return {SkewSystem({FiberMap(kp.f1), FiberMap(kp.f2)}, MarkovSpec(detail::uniform_matrix(2))),
            true};
}

/// Perturbation harness: every breakpoint value of every map moves by an
/// independent exact-rational offset of magnitude at most delta, clamped to
/// [0,1] and to monotonicity. Base chain untouched.
inline SkewSystem jitter_system(const SkewSystem& sys, const Rational& delta,
                                std::uint64_t seed) {
    if (delta < 0) throw std::invalid_argument("jitter_system needs delta >= 0");
    Rng root(seed);
    std::vector<FiberMap> maps;
    for (int s = 1; s <= sys.alphabet(); ++s) {
        Rng rng = root.derive(static_cast<std::size_t>(s));
        std::vector<PLMap> comps;
        for (int c = 0; c < sys.fiber_dimension; ++c) {
            const PLMap& f = sys.map_for(s).component(c);
            std::vector<Rational> xs = f.xs(), ys = f.ys();
            for (Rational& y : ys) {
                Rational offset = delta * (2 * rng.next_dyadic() - 1);
                y += offset;
                if (y < 0) y = Rational(0);
                if (y > 1) y = Rational(1);
            }
            for (std::size_t i = 1; i < ys.size(); ++i)
                if (ys[i] < ys[i - 1]) ys[i] = ys[i - 1];
            comps.emplace_back(std::move(xs), std::move(ys));
        }
        maps.emplace_back(std::move(comps));
    }
    return SkewSystem(std::move(maps), sys.markov);
}

}  // namespace skewgraph
