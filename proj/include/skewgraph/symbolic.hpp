#pragma once

#include "skewgraph/rational.hpp"
#include "skewgraph/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace skewgraph {

using Word = std::vector<int>;  // symbols are 1..k

/// A two-sided symbol sequence with eventually periodic tails: a finite core
/// placed at core_offset, a left tail repeating toward -infinity (aligned so
/// its last entry sits just left of the core) and a right tail repeating
/// toward +infinity (aligned to start just right of the core).
///
/// Shifts only move core_offset, so they are O(1) and windows can share
/// their backing arrays.
class SymbolWindow {
  public:
    SymbolWindow(int k, Word core, std::int64_t core_offset, Word left_tail, Word right_tail)
        : k_(k),
          core_(std::make_shared<const Word>(std::move(core))),
          left_(std::make_shared<const Word>(std::move(left_tail))),
          right_(std::make_shared<const Word>(std::move(right_tail))),
          offset_(core_offset) {
        if (k_ < 1) throw std::invalid_argument("alphabet size must be positive");
        if (left_->empty() || right_->empty())
            throw std::invalid_argument("tails must be nonempty");
        for (const Word* w : {core_.get(), left_.get(), right_.get()})
            for (int s : *w)
                if (s < 1 || s > k_)
                    throw std::invalid_argument("symbol out of range 1.." + std::to_string(k_));
    }

    /// Pure periodic window: repeats `pattern` on both sides of index 0.
    static SymbolWindow periodic(int k, const Word& pattern) {
        return SymbolWindow(k, {}, 0, pattern, pattern);
    }

    int alphabet() const { return k_; }
    std::int64_t core_begin() const { return offset_; }
    std::int64_t core_end() const { return offset_ + static_cast<std::int64_t>(core_->size()); }
    const Word& left_tail() const { return *left_; }
    const Word& right_tail() const { return *right_; }

    int symbol_at(std::int64_t i) const {
        if (i >= offset_) {
            std::int64_t end = core_end();
            if (i < end) return (*core_)[static_cast<std::size_t>(i - offset_)];
            std::int64_t r = (i - end) % static_cast<std::int64_t>(right_->size());
            return (*right_)[static_cast<std::size_t>(r)];
        }
        auto L = static_cast<std::int64_t>(left_->size());
        std::int64_t back = (offset_ - 1 - i) % L;  // 0 for the last tail entry
        return (*left_)[static_cast<std::size_t>(L - 1 - back)];
    }

    /// sigma^n: symbol_at(i) of the result equals symbol_at(i + n) of *this.
    SymbolWindow shift(std::int64_t n) const {
        SymbolWindow out(*this);
        out.offset_ -= n;
        return out;
    }

  private:
    int k_;
    std::shared_ptr<const Word> core_, left_, right_;
    std::int64_t offset_;
};

/// Scan horizon beyond which two windows that still agree must agree forever:
/// past both cores each side is periodic, and periodic sequences sharing one
/// full common period coincide.
inline std::int64_t comparison_horizon(const SymbolWindow& a, const SymbolWindow& b) {
    auto lcm64 = [](std::int64_t x, std::int64_t y) { return std::lcm(x, y); };
    std::int64_t right = std::max(a.core_end(), b.core_end()) +
                         lcm64(static_cast<std::int64_t>(a.right_tail().size()),
                               static_cast<std::int64_t>(b.right_tail().size()));
    std::int64_t left = std::max(-a.core_begin(), -b.core_begin()) +
                        lcm64(static_cast<std::int64_t>(a.left_tail().size()),
                              static_cast<std::int64_t>(b.left_tail().size()));
    return std::max({right, left, std::int64_t{1}});
}

/// min{|i| : a_i != b_i}, or nullopt when the sequences are identical.
inline std::optional<std::int64_t> first_disagreement(const SymbolWindow& a,
                                                      const SymbolWindow& b) {
    if (a.symbol_at(0) != b.symbol_at(0)) return 0;
    std::int64_t horizon = comparison_horizon(a, b);
    for (std::int64_t r = 1; r <= horizon; ++r) {
        if (a.symbol_at(-r) != b.symbol_at(-r) || a.symbol_at(r) != b.symbol_at(r)) return r;
    }
    return std::nullopt;
}

/// Base metric d0(a,b) = 2^-n with n the first disagreement radius; 0 for
/// equal sequences, 1 when the symbols at index 0 already differ.
inline double canonical_distance(const SymbolWindow& a, const SymbolWindow& b) {
    auto n = first_disagreement(a, b);
    if (!n) return 0.0;
    return std::ldexp(1.0, -static_cast<int>(std::min<std::int64_t>(*n, 1060)));
}

/// First disagreement radius among |i| <= depth, or nullopt when the windows
/// agree through the whole truncated range.
inline std::optional<std::int64_t> truncated_disagreement(const SymbolWindow& a,
                                                          const SymbolWindow& b,
                                                          std::int64_t depth) {
    if (a.symbol_at(0) != b.symbol_at(0)) return 0;
    for (std::int64_t r = 1; r <= depth; ++r)
        if (a.symbol_at(-r) != b.symbol_at(-r) || a.symbol_at(r) != b.symbol_at(r)) return r;
    return std::nullopt;
}

/// d0 with the scan truncated at |i| <= depth; agreement through the horizon
/// counts as 0 and underestimates d0 by at most 2^-(depth+1).
inline double truncated_distance(const SymbolWindow& a, const SymbolWindow& b,
                                 std::int64_t depth) {
    auto r = truncated_disagreement(a, b, depth);
    if (!r) return 0.0;
    return std::ldexp(1.0, -static_cast<int>(*r));
}

inline bool windows_equal(const SymbolWindow& a, const SymbolWindow& b) {
    return !first_disagreement(a, b).has_value();
}

/// Finite-word constraint: the window reads `word` starting at start_index.
struct Cylinder {
    std::int64_t start_index = 0;
    Word word;

    bool contains(const SymbolWindow& w) const {
        for (std::size_t j = 0; j < word.size(); ++j)
            if (w.symbol_at(start_index + static_cast<std::int64_t>(j)) != word[j]) return false;
        return true;
    }
};

/// Row-stochastic transition matrix over the alphabet {1..k}. Irreducibility
/// and stochasticity are checked on construction; the stationary vector is
/// solved once and cached.
class MarkovSpec {
  public:
    explicit MarkovSpec(std::vector<std::vector<double>> transition)
        : P_(std::move(transition)) {
        int k = static_cast<int>(P_.size());
        if (k < 1) throw std::invalid_argument("empty transition matrix");
        for (const auto& row : P_) {
            if (static_cast<int>(row.size()) != k)
                throw std::invalid_argument("transition matrix must be square");
            double sum = 0.0;
            for (double p : row) {
                if (p < 0.0) throw std::invalid_argument("negative transition probability");
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-12)
                throw std::invalid_argument("transition row does not sum to 1");
        }
        if (!irreducible())
            throw std::invalid_argument("transition matrix is not irreducible");
        stationary_ = solve_stationary();
    }

    int alphabet() const { return static_cast<int>(P_.size()); }
    const std::vector<std::vector<double>>& transition() const { return P_; }
    double prob(int from, int to) const { return P_[from - 1][to - 1]; }

    /// Unique stationary distribution (irreducible finite chain).
    const std::vector<double>& stationary() const { return stationary_; }

  private:
    bool irreducible() const {
        int k = alphabet();
        std::vector<std::vector<bool>> reach(k, std::vector<bool>(k));
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) reach[i][j] = P_[i][j] > 0.0;
        for (int m = 0; m < k; ++m)
            for (int i = 0; i < k; ++i)
                if (reach[i][m])
                    for (int j = 0; j < k; ++j)
                        if (reach[m][j]) reach[i][j] = true;
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j)
                if (!reach[i][j]) return false;
        return true;
    }

    std::vector<double> solve_stationary() const {
        // Solve pi (P - I) = 0 with the last column replaced by sum(pi) = 1.
        int k = alphabet();
        std::vector<std::vector<double>> A(k, std::vector<double>(k + 1, 0.0));
        for (int j = 0; j < k - 1; ++j)
            for (int i = 0; i < k; ++i) A[j][i] = P_[i][j] - (i == j ? 1.0 : 0.0);
        for (int i = 0; i < k; ++i) A[k - 1][i] = 1.0;
        A[k - 1][k] = 1.0;
        for (int c = 0; c < k; ++c) {
            int pivot = c;
            for (int r = c + 1; r < k; ++r)
                if (std::abs(A[r][c]) > std::abs(A[pivot][c])) pivot = r;
            std::swap(A[c], A[pivot]);
            if (std::abs(A[c][c]) < 1e-14)
                throw std::invalid_argument("stationary solve failed (singular system)");
            for (int r = 0; r < k; ++r) {
                if (r == c) continue;
                double f = A[r][c] / A[c][c];
                for (int j = c; j <= k; ++j) A[r][j] -= f * A[c][j];
            }
        }
        std::vector<double> pi(k);
        double sum = 0.0;
        for (int i = 0; i < k; ++i) {
            pi[i] = A[i][k] / A[i][i];
            if (pi[i] < 0.0 && pi[i] > -1e-13) pi[i] = 0.0;
            sum += pi[i];
        }
        for (double& p : pi) p /= sum;
        return pi;
    }

    std::vector<std::vector<double>> P_;
    std::vector<double> stationary_;
};

inline std::vector<double> stationary_vector(const MarkovSpec& spec) { return spec.stationary(); }

/// True when every consecutive transition of the word has positive
/// probability (single symbols are vacuously admissible).
inline bool is_admissible(const Word& word, const MarkovSpec& spec) {
    for (int s : word)
        if (s < 1 || s > spec.alphabet()) return false;
    for (std::size_t i = 0; i + 1 < word.size(); ++i)
        if (spec.prob(word[i], word[i + 1]) <= 0.0) return false;
    return !word.empty();
}

/// Stationary measure of a cylinder; independent of its start index.
inline double cylinder_measure(const Cylinder& cyl, const MarkovSpec& spec) {
    if (cyl.word.empty()) return 1.0;
    double m = spec.stationary()[cyl.word.front() - 1];
    for (std::size_t i = 0; i + 1 < cyl.word.size(); ++i)
        m *= spec.prob(cyl.word[i], cyl.word[i + 1]);
    return m;
}

inline int sample_from_cdf(const std::vector<double>& weights, double u) {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) return static_cast<int>(i) + 1;
    }
    return static_cast<int>(weights.size());
}

/// Stationary sample path: initial symbol from the stationary vector, then
/// `length - 1` chain transitions.
inline Word sample_markov(const MarkovSpec& spec, std::size_t length, Rng& rng) {
    if (length == 0) return {};
    Word w;
    w.reserve(length);
    w.push_back(sample_from_cdf(spec.stationary(), rng.next_double()));
    while (w.size() < length)
        w.push_back(sample_from_cdf(spec.transition()[w.back() - 1], rng.next_double()));
    return w;
}

/// All words over {1..k} of lengths 1..max_word_length, enumerated by length
/// and lexicographically within each length, concatenated. A sequence with
/// this as repeated forward pattern visits every cylinder of depth up to
/// max_word_length.
inline Word disjunctive_prefix(int k, int max_word_length) {
    if (k < 1 || max_word_length < 1)
        throw std::invalid_argument("disjunctive_prefix needs k >= 1 and length >= 1");
    Word out;
    for (int len = 1; len <= max_word_length; ++len) {
        std::uint64_t count = 1;
        for (int i = 0; i < len; ++i) count *= static_cast<std::uint64_t>(k);
        for (std::uint64_t w = 0; w < count; ++w) {
            std::uint64_t x = w;
            std::vector<int> digits(len);
            for (int pos = len - 1; pos >= 0; --pos) {
                digits[pos] = static_cast<int>(x % k) + 1;
                x /= k;
            }
            out.insert(out.end(), digits.begin(), digits.end());
        }
    }
    return out;
}

}  // namespace skewgraph
