#pragma once

#include "skewgraph/rational.hpp"
#include "skewgraph/sets.hpp"
#include "skewgraph/symbolic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace skewgraph {

/// Piecewise-linear nondecreasing self-map of [0,1], exact breakpoints.
/// Nonmonotone inputs are rejected at construction; image and composition
/// are then exact endpoint/breakpoint algebra with no tolerances.
class PLMap {
  public:
    PLMap(std::vector<Rational> xs, std::vector<Rational> ys)
        : xs_(std::move(xs)), ys_(std::move(ys)) {
        validate();
        simplify();
        cache_doubles();
    }

    static PLMap identity() { return PLMap({Rational(0), Rational(1)}, {Rational(0), Rational(1)}); }

    const std::vector<Rational>& xs() const { return xs_; }
    const std::vector<Rational>& ys() const { return ys_; }

    Rational apply(const Rational& x) const {
        if (x < 0 || x > 1) throw std::domain_error("PLMap argument outside [0,1]");
        std::size_t i = piece_index(x);
        if (xs_[i + 1] == xs_[i]) return ys_[i];
        return ys_[i] + (ys_[i + 1] - ys_[i]) * (x - xs_[i]) / (xs_[i + 1] - xs_[i]);
    }

    /// Floating evaluation for Monte-Carlo paths; exact paths use apply().
    double apply_double(double x) const {
        std::size_t i =
            static_cast<std::size_t>(std::upper_bound(xd_.begin() + 1, xd_.end() - 1, x) -
                                     xd_.begin()) -
            1;
        double span = xd_[i + 1] - xd_[i];
        if (span <= 0.0) return yd_[i];
        double v = yd_[i] + (yd_[i + 1] - yd_[i]) * ((x - xd_[i]) / span);
        return std::min(1.0, std::max(0.0, v));
    }

    Interval image(const Interval& iv) const { return Interval(apply(iv.lo), apply(iv.hi)); }

    /// Max piece slope; 0 for constant maps.
    Rational lipschitz_bound() const {
        Rational best(0);
        for (std::size_t i = 0; i + 1 < xs_.size(); ++i)
            best = std::max(best, Rational((ys_[i + 1] - ys_[i]) / (xs_[i + 1] - xs_[i])));
        return best;
    }

    Rational min_slope() const {
        Rational best = lipschitz_bound();
        for (std::size_t i = 0; i + 1 < xs_.size(); ++i)
            best = std::min(best, Rational((ys_[i + 1] - ys_[i]) / (xs_[i + 1] - xs_[i])));
        return best;
    }

    bool strictly_increasing() const { return min_slope() > 0; }

  private:
    void validate() const {
        if (xs_.size() != ys_.size() || xs_.size() < 2)
            throw std::invalid_argument("PLMap needs matching x/y arrays of size >= 2");
        if (xs_.front() != 0 || xs_.back() != 1)
            throw std::invalid_argument("PLMap domain must be exactly [0,1]");
        for (std::size_t i = 0; i + 1 < xs_.size(); ++i)
            if (xs_[i + 1] <= xs_[i])
                throw std::invalid_argument("PLMap breakpoints must be strictly increasing");
        for (std::size_t i = 0; i < ys_.size(); ++i) {
            if (ys_[i] < 0 || ys_[i] > 1)
                throw std::invalid_argument("PLMap values must stay in [0,1]");
            if (i > 0 && ys_[i] < ys_[i - 1])
                throw std::invalid_argument("PLMap must be nondecreasing");
        }
    }

    void simplify() {
        std::vector<Rational> nx{xs_.front()}, ny{ys_.front()};
        for (std::size_t i = 1; i + 1 < xs_.size(); ++i) {
            // Keep (x_i, y_i) only if it bends: cross-multiplied slope test.
            Rational lhs = (ys_[i] - ny.back()) * (xs_[i + 1] - xs_[i]);
            Rational rhs = (ys_[i + 1] - ys_[i]) * (xs_[i] - nx.back());
            if (lhs != rhs) {
                nx.push_back(xs_[i]);
                ny.push_back(ys_[i]);
            }
        }
        nx.push_back(xs_.back());
        ny.push_back(ys_.back());
        xs_ = std::move(nx);
        ys_ = std::move(ny);
    }

    void cache_doubles() {
        xd_.clear();
        yd_.clear();
        for (const auto& x : xs_) xd_.push_back(to_double(x));
        for (const auto& y : ys_) yd_.push_back(to_double(y));
    }

    std::size_t piece_index(const Rational& x) const {
        auto it = std::upper_bound(xs_.begin() + 1, xs_.end() - 1, x);
        return static_cast<std::size_t>(it - xs_.begin()) - 1;
    }

    std::vector<Rational> xs_, ys_;
    std::vector<double> xd_, yd_;
};

/// outer(inner(x)) as an exact PLMap. Breakpoints: inner's own, plus the
/// preimages under inner of outer's breakpoints.
inline PLMap compose(const PLMap& outer, const PLMap& inner) {
    std::vector<Rational> cuts = inner.xs();
    const auto& ix = inner.xs();
    const auto& iy = inner.ys();
    for (std::size_t i = 0; i + 1 < ix.size(); ++i) {
        if (iy[i + 1] == iy[i]) continue;  // constant piece: outer is affine on its value
        for (const Rational& bx : outer.xs()) {
            if (bx <= iy[i] || bx >= iy[i + 1]) continue;
            cuts.push_back(ix[i] + (bx - iy[i]) * (ix[i + 1] - ix[i]) / (iy[i + 1] - iy[i]));
        }
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::vector<Rational> ys;
    ys.reserve(cuts.size());
    for (const Rational& x : cuts) ys.push_back(outer.apply(inner.apply(x)));
    return PLMap(std::move(cuts), std::move(ys));
}

/// Coordinatewise product of PLMaps: the fiber map type for [0,1]^m. A
/// 1-D fiber map is the single-component case.
class ProductMap {
  public:
    explicit ProductMap(std::vector<PLMap> components) : comps_(std::move(components)) {
        if (comps_.empty()) throw std::invalid_argument("ProductMap needs >= 1 component");
    }

    explicit ProductMap(PLMap one_dim) : comps_{std::move(one_dim)} {}

    int dim() const { return static_cast<int>(comps_.size()); }
    const PLMap& component(int s) const { return comps_[static_cast<std::size_t>(s)]; }

    std::vector<Rational> apply(const std::vector<Rational>& x) const {
        check_dim(x.size());
        std::vector<Rational> out;
        out.reserve(comps_.size());
        for (std::size_t s = 0; s < comps_.size(); ++s) out.push_back(comps_[s].apply(x[s]));
        return out;
    }

    std::vector<double> apply_double(const std::vector<double>& x) const {
        check_dim(x.size());
        std::vector<double> out;
        out.reserve(comps_.size());
        for (std::size_t s = 0; s < comps_.size(); ++s)
            out.push_back(comps_[s].apply_double(x[s]));
        return out;
    }

    Box image(const Box& b) const {
        check_dim(b.size());
        Box out;
        out.reserve(comps_.size());
        for (std::size_t s = 0; s < comps_.size(); ++s) out.push_back(comps_[s].image(b[s]));
        return out;
    }

    Rational lipschitz_bound() const {
        Rational best(0);
        for (const PLMap& c : comps_) best = std::max(best, c.lipschitz_bound());
        return best;
    }

    bool strictly_increasing() const {
        for (const PLMap& c : comps_)
            if (!c.strictly_increasing()) return false;
        return true;
    }

  private:
    void check_dim(std::size_t n) const {
        if (n != comps_.size()) throw std::invalid_argument("fiber point dimension mismatch");
    }

    std::vector<PLMap> comps_;
};

using FiberMap = ProductMap;

inline ProductMap compose(const ProductMap& outer, const ProductMap& inner) {
    if (outer.dim() != inner.dim())
        throw std::invalid_argument("composing maps of different fiber dimension");
    std::vector<PLMap> comps;
    for (int s = 0; s < outer.dim(); ++s)
        comps.push_back(compose(outer.component(s), inner.component(s)));
    return ProductMap(std::move(comps));
}

inline BoxUnion image(const FiberMap& f, const BoxUnion& u) {
    std::vector<Box> out;
    out.reserve(u.component_count());
    for (const Box& b : u.boxes()) out.push_back(f.image(b));
    return BoxUnion(u.dim(), std::move(out));
}

inline Rational diameter(const BoxUnion& u) { return u.diameter_d1(); }

/// Step skew product: k fiber maps selected by the symbol under a Markov
/// base. Symbols are 1..k as everywhere else.
struct SkewSystem {
    std::vector<FiberMap> fiber_maps;
    MarkovSpec markov;
    int fiber_dimension;

    SkewSystem(std::vector<FiberMap> maps, MarkovSpec base)
        : fiber_maps(std::move(maps)), markov(std::move(base)),
          fiber_dimension(fiber_maps.empty() ? 0 : fiber_maps.front().dim()) {
        if (fiber_maps.size() < 2)
            throw std::invalid_argument("a skew system needs at least 2 fiber maps");
        if (static_cast<int>(fiber_maps.size()) != markov.alphabet())
            throw std::invalid_argument("fiber map count must match the alphabet size");
        for (const FiberMap& f : fiber_maps)
            if (f.dim() != fiber_dimension)
                throw std::invalid_argument("all fiber maps must share the fiber dimension");
    }

    int alphabet() const { return static_cast<int>(fiber_maps.size()); }
    const FiberMap& map_for(int symbol) const {
        if (symbol < 1 || symbol > alphabet())
            throw std::invalid_argument("symbol out of range: " + std::to_string(symbol));
        return fiber_maps[static_cast<std::size_t>(symbol - 1)];
    }
};

/// Composition along a word in application order: word[0] acts first, so the
/// result is f_{w_{n-1}} o ... o f_{w_0}.
inline FiberMap compose_word(const Word& word, const SkewSystem& sys) {
    if (word.empty()) {
        std::vector<PLMap> ids(static_cast<std::size_t>(sys.fiber_dimension), PLMap::identity());
        return ProductMap(std::move(ids));
    }
    FiberMap cur = sys.map_for(word.front());
    for (std::size_t i = 1; i < word.size(); ++i) cur = compose(sys.map_for(word[i]), cur);
    return cur;
}

/// Enclosure arithmetic for long Monte-Carlo iterations: endpoint images in
/// double, nudged outward enough ulps to absorb evaluation rounding, so the
/// true image interval stays inside. Diameters read from these intervals
/// over-estimate, which is the conservative direction for every stopping
/// and counting rule built on them.
struct DInterval {
    double lo, hi;
};

inline double nudge_down(double v) {
    for (int i = 0; i < 16; ++i) v = std::nextafter(v, -std::numeric_limits<double>::infinity());
    return std::max(v, 0.0);
}

inline double nudge_up(double v) {
    for (int i = 0; i < 16; ++i) v = std::nextafter(v, std::numeric_limits<double>::infinity());
    return std::min(v, 1.0);
}

inline DInterval image_enclosure(const PLMap& f, const DInterval& iv) {
    return {nudge_down(f.apply_double(iv.lo)), nudge_up(f.apply_double(iv.hi))};
}

}  // namespace skewgraph
