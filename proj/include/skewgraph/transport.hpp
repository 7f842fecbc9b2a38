#pragma once

#include "skewgraph/rational.hpp"

#include <cstddef>
#include <cstdint>
#include <queue>
#include <stdexcept>
#include <utility>
#include <vector>

namespace skewgraph {

/// Entering-arc tolerance: exact types pivot on any negative reduced cost,
/// double pivots only below a scaled epsilon so rounding noise cannot spin.
/// balance_slack plays the same role for the supply/demand totals.
template <typename T>
struct transport_tolerance {
    static T value(const T&) { return T(0); }
    static T balance_slack(const T&) { return T(0); }
};

template <>
struct transport_tolerance<double> {
    static double value(const double& cost_scale) { return 1e-12 * (1.0 + cost_scale); }
    static double balance_slack(const double& total) { return 1e-9 * (1.0 + total); }
};

template <typename T>
struct TransportArc {
    int source;
    int sink;
    T flow;
};

template <typename T>
struct TransportResult {
    T cost{};
    std::vector<TransportArc<T>> plan;  // positive-flow arcs only
    std::int64_t pivots = 0;
    bool optimal = false;
};

/// Balanced transportation problem, solved by the transportation simplex on
/// the basis tree. Northwest-corner start (degenerate zero arcs keep the
/// basis a spanning tree), block pricing with a most-negative scan, Bland's
/// rule after a long run of degenerate pivots so stalls cannot cycle.
/// Supplies and demands must be positive with equal totals.
template <typename T>
TransportResult<T> solve_transport(const std::vector<T>& supply, const std::vector<T>& demand,
                                   const std::vector<T>& cost) {
    const int n = static_cast<int>(supply.size());
    const int m = static_cast<int>(demand.size());
    if (n == 0 || m == 0) throw std::invalid_argument("solve_transport needs nonempty sides");
    if (cost.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(m))
        throw std::invalid_argument("solve_transport cost matrix size mismatch");
    T total_s(0), total_d(0);
    for (const T& a : supply) {
        if (!(a > T(0))) throw std::invalid_argument("supplies must be positive");
        total_s += a;
    }
    for (const T& b : demand) {
        if (!(b > T(0))) throw std::invalid_argument("demands must be positive");
        total_d += b;
    }
    T imbalance = total_s - total_d;
    if (imbalance < T(0)) imbalance = -imbalance;
    if (imbalance > transport_tolerance<T>::balance_slack(total_s))
        throw std::invalid_argument("solve_transport needs balanced totals");

    const int nodes = n + m;  // sources 0..n-1, sinks n..n+m-1
    struct BasicArc {
        int i, j;  // source index, sink index
        T flow;
    };
    std::vector<BasicArc> basis;
    basis.reserve(static_cast<std::size_t>(nodes - 1));

    {  // northwest corner: exactly n+m-1 arcs, zero arcs on simultaneous exhaustion
        std::vector<T> a = supply, b = demand;
        int i = 0, j = 0;
        while (true) {
            if (i == n - 1 && j == m - 1) {
                // the final cell takes all remaining supply, absorbing any
                // inexact-arithmetic drift between the totals
                basis.push_back({i, j, a[static_cast<std::size_t>(i)]});
                break;
            }
            T x = a[static_cast<std::size_t>(i)] < b[static_cast<std::size_t>(j)]
                      ? a[static_cast<std::size_t>(i)]
                      : b[static_cast<std::size_t>(j)];
            basis.push_back({i, j, x});
            a[static_cast<std::size_t>(i)] -= x;
            b[static_cast<std::size_t>(j)] -= x;
            bool src_done = a[static_cast<std::size_t>(i)] == T(0);
            if (src_done && i + 1 < n)
                ++i;  // on simultaneous exhaustion this adds a degenerate zero arc next
            else
                ++j;
        }
    }

    T scale(0);
    for (const T& c : cost) {
        T ac = c;
        if (ac < T(0)) ac = -ac;
        if (ac > scale) scale = ac;
    }
    const T tol = transport_tolerance<T>::value(scale);

    auto cost_at = [&](int i, int j) -> const T& {
        return cost[static_cast<std::size_t>(i) * static_cast<std::size_t>(m) +
                    static_cast<std::size_t>(j)];
    };

    std::vector<std::vector<std::pair<int, int>>> adj(
        static_cast<std::size_t>(nodes));  // node -> (neighbor node, basis index)
    std::vector<T> u(static_cast<std::size_t>(n)), v(static_cast<std::size_t>(m));
    std::vector<int> parent_node(static_cast<std::size_t>(nodes)),
        parent_arc(static_cast<std::size_t>(nodes));

    auto rebuild = [&]() {
        for (auto& lst : adj) lst.clear();
        for (std::size_t k = 0; k < basis.size(); ++k) {
            int a = basis[k].i, b = n + basis[k].j;
            adj[static_cast<std::size_t>(a)].push_back({b, static_cast<int>(k)});
            adj[static_cast<std::size_t>(b)].push_back({a, static_cast<int>(k)});
        }
        // duals from u[0] = 0 across the basis tree
        std::vector<char> seen(static_cast<std::size_t>(nodes), 0);
        std::queue<int> q;
        q.push(0);
        seen[0] = 1;
        u[0] = T(0);
        while (!q.empty()) {
            int x = q.front();
            q.pop();
            for (auto [y, k] : adj[static_cast<std::size_t>(x)]) {
                if (seen[static_cast<std::size_t>(y)]) continue;
                seen[static_cast<std::size_t>(y)] = 1;
                const BasicArc& arc = basis[static_cast<std::size_t>(k)];
                const T& c = cost_at(arc.i, arc.j);
                if (y >= n)
                    v[static_cast<std::size_t>(y - n)] = c - u[static_cast<std::size_t>(x)];
                else
                    u[static_cast<std::size_t>(y)] = c - v[static_cast<std::size_t>(x - n)];
                q.push(y);
            }
        }
    };

    auto reduced = [&](int i, int j) -> T {
        return cost_at(i, j) - u[static_cast<std::size_t>(i)] - v[static_cast<std::size_t>(j)];
    };

    const std::size_t n_arcs = static_cast<std::size_t>(n) * static_cast<std::size_t>(m);
    std::size_t block = 64;
    while (block * block < n_arcs) block *= 2;
    std::size_t cursor = 0;

    TransportResult<T> out;
    const std::int64_t pivot_cap = 2000LL * nodes + 10000;
    int degenerate_streak = 0;
    const int bland_after = 32;

    while (out.pivots < pivot_cap) {
        rebuild();

        int ei = -1, ej = -1;
        if (degenerate_streak >= bland_after) {
            for (std::size_t a = 0; a < n_arcs; ++a) {
                int i = static_cast<int>(a) / m, j = static_cast<int>(a) % m;
                if (reduced(i, j) < -tol) {
                    ei = i;
                    ej = j;
                    break;
                }
            }
        } else {
            T best = -tol;
            std::size_t scanned = 0;
            while (scanned < n_arcs) {
                std::size_t end = scanned + block < n_arcs ? scanned + block : n_arcs;
                for (; scanned < end; ++scanned) {
                    std::size_t a = (cursor + scanned) % n_arcs;
                    int i = static_cast<int>(a) / m, j = static_cast<int>(a) % m;
                    T r = reduced(i, j);
                    if (r < best) {
                        best = r;
                        ei = i;
                        ej = j;
                    }
                }
                if (ei >= 0) break;
            }
            cursor = (cursor + scanned) % n_arcs;
        }
        if (ei < 0) {
            out.optimal = true;
            break;
        }

        // the unique tree path from entering source to entering sink
        std::fill(parent_node.begin(), parent_node.end(), -1);
        parent_node[static_cast<std::size_t>(ei)] = ei;
        std::queue<int> q;
        q.push(ei);
        while (!q.empty()) {
            int x = q.front();
            q.pop();
            if (x == n + ej) break;
            for (auto [y, k] : adj[static_cast<std::size_t>(x)]) {
                if (parent_node[static_cast<std::size_t>(y)] != -1) continue;
                parent_node[static_cast<std::size_t>(y)] = x;
                parent_arc[static_cast<std::size_t>(y)] = k;
                q.push(y);
            }
        }

        std::vector<int> path_arcs;  // from the sink end back toward ei
        for (int x = n + ej; x != ei; x = parent_node[static_cast<std::size_t>(x)])
            path_arcs.push_back(parent_arc[static_cast<std::size_t>(x)]);
        // walking from ei toward the sink, odd path positions gain flow and
        // even positions lose it (the entering arc itself gains)
        std::vector<int> minus;
        for (std::size_t t = 0; t < path_arcs.size(); ++t) {
            std::size_t from_source = path_arcs.size() - 1 - t;
            if (from_source % 2 == 0) minus.push_back(path_arcs[t]);
        }

        int leave = -1;
        for (int k : minus) {
            const BasicArc& cand = basis[static_cast<std::size_t>(k)];
            if (leave < 0) {
                leave = k;
                continue;
            }
            const BasicArc& cur = basis[static_cast<std::size_t>(leave)];
            if (cand.flow < cur.flow ||
                (cand.flow == cur.flow &&
                 (cand.i < cur.i || (cand.i == cur.i && cand.j < cur.j))))
                leave = k;
        }
        T theta = basis[static_cast<std::size_t>(leave)].flow;

        for (std::size_t t = 0; t < path_arcs.size(); ++t) {
            std::size_t from_source = path_arcs.size() - 1 - t;
            BasicArc& arc = basis[static_cast<std::size_t>(path_arcs[t])];
            if (from_source % 2 == 0)
                arc.flow -= theta;
            else
                arc.flow += theta;
        }
        basis[static_cast<std::size_t>(leave)] = {ei, ej, theta};

        ++out.pivots;
        if (theta == T(0)) {
            if (degenerate_streak < bland_after) ++degenerate_streak;
        } else {
            degenerate_streak = 0;
        }
    }

    out.cost = T(0);
    for (const BasicArc& arc : basis) {
        if (arc.flow > T(0)) {
            out.cost += arc.flow * cost_at(arc.i, arc.j);
            out.plan.push_back({arc.i, arc.j, arc.flow});
        }
    }
    return out;
}

}  // namespace skewgraph
