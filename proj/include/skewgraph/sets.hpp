#pragma once

#include "skewgraph/rational.hpp"

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace skewgraph {

/// Closed interval [lo, hi] with exact endpoints; degenerate (lo == hi)
/// intervals are allowed (images under flat map pieces, singleton sets).
struct Interval {
    Rational lo, hi;

    Interval(Rational l, Rational h) : lo(std::move(l)), hi(std::move(h)) {
        if (lo > hi) throw std::invalid_argument("interval with lo > hi");
    }

    Rational length() const { return hi - lo; }
    bool contains(const Rational& x) const { return lo <= x && x <= hi; }
    bool contains(const Interval& other) const { return lo <= other.lo && other.hi <= hi; }
};

/// 0 inside the interval, distance to the nearer endpoint outside.
inline Rational point_interval_distance(const Rational& x, const Interval& iv) {
    if (x < iv.lo) return iv.lo - x;
    if (x > iv.hi) return x - iv.hi;
    return Rational(0);
}

using Box = std::vector<Interval>;  // one Interval per fiber coordinate

inline bool box_contains_point(const Box& b, const std::vector<Rational>& p) {
    for (std::size_t s = 0; s < b.size(); ++s)
        if (!b[s].contains(p[s])) return false;
    return true;
}

inline bool box_contains_box(const Box& outer, const Box& inner) {
    for (std::size_t s = 0; s < outer.size(); ++s)
        if (!outer[s].contains(inner[s])) return false;
    return true;
}

/// Finite union of closed axis-aligned boxes in [0,1]^dim. Normalized on
/// construction: dimension 1 keeps a sorted list of disjoint intervals
/// (touching components merge); higher dimensions keep boxes with pairwise
/// disjoint interiors, merging only where the union stays a box.
class BoxUnion {
  public:
    static BoxUnion empty(int dim) { return BoxUnion(dim, {}); }

    /// The full fiber [0,1]^dim.
    static BoxUnion cube(int dim) {
        return BoxUnion(dim, {Box(static_cast<std::size_t>(dim),
                                  Interval(Rational(0), Rational(1)))});
    }

    static BoxUnion singleton(const std::vector<Rational>& p) {
        Box b;
        for (const auto& c : p) b.emplace_back(c, c);
        return BoxUnion(static_cast<int>(p.size()), {b});
    }

    static BoxUnion from_intervals(std::vector<Interval> ivs) {
        std::vector<Box> boxes;
        for (auto& iv : ivs) boxes.push_back({iv});
        return BoxUnion(1, std::move(boxes));
    }

    BoxUnion(int dim, std::vector<Box> boxes) : dim_(dim), boxes_(std::move(boxes)) {
        if (dim_ < 1) throw std::invalid_argument("dimension must be >= 1");
        for (const Box& b : boxes_)
            if (static_cast<int>(b.size()) != dim_)
                throw std::invalid_argument("box dimension mismatch");
        normalize();
    }

    int dim() const { return dim_; }
    bool is_empty() const { return boxes_.empty(); }
    std::size_t component_count() const { return boxes_.size(); }
    const std::vector<Box>& boxes() const { return boxes_; }

    /// Sorted disjoint components; only meaningful in dimension 1.
    std::vector<Interval> intervals() const {
        require_dim1("intervals");
        std::vector<Interval> out;
        for (const Box& b : boxes_) out.push_back(b[0]);
        return out;
    }

    bool contains_point(const std::vector<Rational>& p) const {
        for (const Box& b : boxes_)
            if (box_contains_point(b, p)) return true;
        return false;
    }

    /// Exact subset test: every box of `other` is covered by this union.
    bool covers(const BoxUnion& other) const {
        for (const Box& b : other.boxes_)
            if (!covers_box(b)) return false;
        return true;
    }

    bool set_equals(const BoxUnion& other) const {
        return covers(other) && other.covers(*this);
    }

    BoxUnion union_with(const BoxUnion& other) const {
        if (dim_ != other.dim_) throw std::invalid_argument("dimension mismatch in union");
        std::vector<Box> all = boxes_;
        all.insert(all.end(), other.boxes_.begin(), other.boxes_.end());
        return BoxUnion(dim_, std::move(all));
    }

    std::optional<Box> enclosing_box() const {
        if (boxes_.empty()) return std::nullopt;
        Box out = boxes_.front();
        for (const Box& b : boxes_)
            for (int s = 0; s < dim_; ++s)
                out[static_cast<std::size_t>(s)] =
                    Interval(std::min(out[static_cast<std::size_t>(s)].lo,
                                      b[static_cast<std::size_t>(s)].lo),
                             std::max(out[static_cast<std::size_t>(s)].hi,
                                      b[static_cast<std::size_t>(s)].hi));
        return out;
    }

    /// d1 diameter: sum over coordinates of the enclosing box extent.
    Rational diameter_d1() const {
        auto enc = enclosing_box();
        if (!enc) return Rational(0);
        Rational d(0);
        for (const Interval& iv : *enc) d += iv.length();
        return d;
    }

    std::vector<Rational> midpoint() const {
        auto enc = enclosing_box();
        if (!enc) throw std::invalid_argument("midpoint of empty set");
        std::vector<Rational> p;
        for (const Interval& iv : *enc) p.push_back((iv.lo + iv.hi) / 2);
        return p;
    }

    /// Candidate-free coverage test for one closed box against this union,
    /// via the grid induced by all member-box faces inside it: a grid cell is
    /// covered iff the member box containing its midpoint contains the cell.
    bool covers_box(const Box& target) const {
        for (const Box& b : boxes_)
            if (box_contains_box(b, target)) return true;
        if (boxes_.empty()) return false;
        std::vector<std::vector<Rational>> grid(static_cast<std::size_t>(dim_));
        for (int s = 0; s < dim_; ++s) {
            auto& g = grid[static_cast<std::size_t>(s)];
            const Interval& t = target[static_cast<std::size_t>(s)];
            g.push_back(t.lo);
            g.push_back(t.hi);
            for (const Box& b : boxes_) {
                const Interval& iv = b[static_cast<std::size_t>(s)];
                if (iv.lo > t.lo && iv.lo < t.hi) g.push_back(iv.lo);
                if (iv.hi > t.lo && iv.hi < t.hi) g.push_back(iv.hi);
            }
            std::sort(g.begin(), g.end());
            g.erase(std::unique(g.begin(), g.end()), g.end());
        }
        std::vector<std::size_t> idx(static_cast<std::size_t>(dim_), 0);
        while (true) {
            Box cell;
            for (int s = 0; s < dim_; ++s) {
                const auto& g = grid[static_cast<std::size_t>(s)];
                std::size_t i = idx[static_cast<std::size_t>(s)];
                cell.emplace_back(g[i], g[std::min(i + 1, g.size() - 1)]);
            }
            bool cell_ok = false;
            for (const Box& b : boxes_)
                if (box_contains_box(b, cell)) {
                    cell_ok = true;
                    break;
                }
            if (!cell_ok) return false;
            int s = 0;
            for (; s < dim_; ++s) {
                auto& i = idx[static_cast<std::size_t>(s)];
                std::size_t cells =
                    std::max<std::size_t>(grid[static_cast<std::size_t>(s)].size() - 1, 1);
                if (++i < cells) break;
                i = 0;
            }
            if (s == dim_) return true;
        }
    }

  private:
    void require_dim1(const char* what) const {
        if (dim_ != 1)
            throw std::logic_error(std::string(what) + " requires fiber dimension 1");
    }

    void normalize() {
        if (dim_ == 1) {
            std::sort(boxes_.begin(), boxes_.end(), [](const Box& a, const Box& b) {
                return a[0].lo < b[0].lo || (a[0].lo == b[0].lo && a[0].hi < b[0].hi);
            });
            std::vector<Box> merged;
            for (const Box& b : boxes_) {
                if (!merged.empty() && b[0].lo <= merged.back()[0].hi) {
                    if (b[0].hi > merged.back()[0].hi)
                        merged.back()[0] = Interval(merged.back()[0].lo, b[0].hi);
                } else {
                    merged.push_back(b);
                }
            }
            boxes_ = std::move(merged);
            return;
        }
        // Disjoint-interior decomposition: each incoming box contributes the
        // slabs of itself not already covered.
        std::vector<Box> kept;
        for (const Box& b : boxes_) {
            std::vector<Box> pieces{b};
            for (const Box& k : kept) {
                std::vector<Box> next;
                for (const Box& p : pieces) subtract_box(p, k, next);
                pieces = std::move(next);
                if (pieces.empty()) break;
            }
            for (Box& p : pieces) kept.push_back(std::move(p));
        }
        boxes_ = std::move(kept);
        merge_adjacent();
        std::sort(boxes_.begin(), boxes_.end(), [](const Box& a, const Box& b) {
            for (std::size_t s = 0; s < a.size(); ++s) {
                if (a[s].lo != b[s].lo) return a[s].lo < b[s].lo;
                if (a[s].hi != b[s].hi) return a[s].hi < b[s].hi;
            }
            return false;
        });
    }

    /// Appends the slabs of `a` outside the interior of `cut` to `out`.
    static void subtract_box(const Box& a, const Box& cut, std::vector<Box>& out) {
        Box inter;
        for (std::size_t s = 0; s < a.size(); ++s) {
            Rational lo = std::max(a[s].lo, cut[s].lo);
            Rational hi = std::min(a[s].hi, cut[s].hi);
            if (lo >= hi) {  // no interior overlap in this coordinate
                out.push_back(a);
                return;
            }
            inter.emplace_back(lo, hi);
        }
        Box cur = a;
        for (std::size_t s = 0; s < a.size(); ++s) {
            if (cur[s].lo < inter[s].lo) {
                Box left = cur;
                left[s] = Interval(cur[s].lo, inter[s].lo);
                out.push_back(std::move(left));
            }
            if (inter[s].hi < cur[s].hi) {
                Box right = cur;
                right[s] = Interval(inter[s].hi, cur[s].hi);
                out.push_back(std::move(right));
            }
            cur[s] = inter[s];
        }
    }

    /// Greedy merging of boxes equal in all coordinates but one and
    /// overlapping or touching in that one; repeats to a fixed point.
    void merge_adjacent() {
        bool changed = true;
        while (changed) {
            changed = false;
            for (std::size_t i = 0; i < boxes_.size() && !changed; ++i) {
                for (std::size_t j = i + 1; j < boxes_.size() && !changed; ++j) {
                    int diff = -1;
                    bool mergeable = true;
                    for (int s = 0; s < dim_ && mergeable; ++s) {
                        const Interval& a = boxes_[i][static_cast<std::size_t>(s)];
                        const Interval& b = boxes_[j][static_cast<std::size_t>(s)];
                        if (a.lo == b.lo && a.hi == b.hi) continue;
                        if (diff >= 0) {
                            mergeable = false;
                        } else if (std::max(a.lo, b.lo) <= std::min(a.hi, b.hi)) {
                            diff = s;
                        } else {
                            mergeable = false;
                        }
                    }
                    if (!mergeable || diff < 0) continue;
                    auto su = static_cast<std::size_t>(diff);
                    boxes_[i][su] = Interval(std::min(boxes_[i][su].lo, boxes_[j][su].lo),
                                             std::max(boxes_[i][su].hi, boxes_[j][su].hi));
                    boxes_.erase(boxes_.begin() + static_cast<std::ptrdiff_t>(j));
                    changed = true;
                }
            }
        }
    }

    int dim_;
    std::vector<Box> boxes_;
};

namespace detail {

/// Distance from a point to a sorted disjoint interval list (dimension 1).
inline Rational point_to_union_distance(const Rational& x, const std::vector<Interval>& ivs) {
    Rational best(-1);
    for (const Interval& iv : ivs) {
        Rational d = point_interval_distance(x, iv);
        if (best < 0 || d < best) best = d;
        if (iv.lo > x) break;  // sorted: later intervals are only farther
    }
    return best;
}

/// Exact sup_{x in a} dist(x, b) in d1 for two boxes: the summands separate
/// per coordinate and each 1-D sup is attained at an endpoint.
inline Rational box_to_box_sup_distance(const Box& a, const Box& b) {
    Rational total(0);
    for (std::size_t s = 0; s < a.size(); ++s)
        total += std::max(point_interval_distance(a[s].lo, b[s]),
                          point_interval_distance(a[s].hi, b[s]));
    return total;
}

inline Rational directed_hausdorff_1d(const BoxUnion& a, const BoxUnion& b) {
    std::vector<Interval> from = a.intervals(), to = b.intervals();
    std::vector<Rational> candidates;
    for (const Interval& iv : from) {
        candidates.push_back(iv.lo);
        candidates.push_back(iv.hi);
    }
    // Peaks of dist(., to) sit at the midpoints of to's gaps; they matter
    // only where the source set actually reaches them.
    for (std::size_t i = 0; i + 1 < to.size(); ++i) {
        Rational mid = (to[i].hi + to[i + 1].lo) / 2;
        for (const Interval& iv : from)
            if (iv.contains(mid)) {
                candidates.push_back(mid);
                break;
            }
    }
    Rational best(0);
    for (const Rational& x : candidates)
        best = std::max(best, point_to_union_distance(x, to));
    return best;
}

/// Upper bound on sup_{x in a} dist(x, B) for box unions: serve each source
/// box by its best single target box. Exact when B is one box.
inline Rational directed_hausdorff_ub(const BoxUnion& a, const BoxUnion& b) {
    Rational worst(0);
    for (const Box& pa : a.boxes()) {
        Rational best(-1);
        for (const Box& pb : b.boxes()) {
            Rational d = box_to_box_sup_distance(pa, pb);
            if (best < 0 || d < best) best = d;
        }
        worst = std::max(worst, best);
    }
    return worst;
}

}  // namespace detail

/// Hausdorff distance under d1. Exact in dimension 1; in higher dimensions a
/// conservative upper bound (never reports closer than the truth), which is
/// the safe direction for convergence stopping rules.
inline Rational hausdorff_d1(const BoxUnion& a, const BoxUnion& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("dimension mismatch in hausdorff_d1");
    if (a.is_empty() && b.is_empty()) return Rational(0);
    if (a.is_empty() || b.is_empty())
        throw std::invalid_argument("hausdorff distance with exactly one empty set");
    if (a.dim() == 1)
        return std::max(detail::directed_hausdorff_1d(a, b),
                        detail::directed_hausdorff_1d(b, a));
    return std::max(detail::directed_hausdorff_ub(a, b), detail::directed_hausdorff_ub(b, a));
}

}  // namespace skewgraph
