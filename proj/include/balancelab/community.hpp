#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "balancelab/errors.hpp"
#include "balancelab/graph.hpp"

namespace balancelab {

namespace detail {

// One bisection subproblem: a vertex subset of the full graph together with
// the quantities the generalized modularity matrix B^(g) needs. Degrees and
// 2m always refer to the full graph.
struct SplitProblem {
    std::vector<std::size_t> members;            // global vertex ids
    std::vector<std::vector<std::size_t>> adj;   // local adjacency within the subset
    std::vector<double> degree;                  // global degree per member
    double two_m = 0.0;
    double subgraph_degree_sum = 0.0;            // sum of global degrees over members

    std::size_t size() const { return members.size(); }

    double diag_correction(std::size_t i, std::size_t local_degree_i) const {
        return static_cast<double>(local_degree_i) - degree[i] * subgraph_degree_sum / two_m;
    }

    // y = B^(g) v.
    std::vector<double> apply(const std::vector<double>& v) const {
        const std::size_t n = size();
        double weighted = 0.0;
        for (std::size_t i = 0; i < n; ++i) weighted += degree[i] * v[i];
        std::vector<double> y(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j : adj[i]) acc += v[j];
            y[i] = acc - degree[i] * weighted / two_m -
                   diag_correction(i, adj[i].size()) * v[i];
        }
        return y;
    }
};

inline SplitProblem make_split_problem(const UndirectedGraph& g,
                                       const std::vector<std::size_t>& members) {
    SplitProblem p;
    p.members = members;
    p.two_m = 2.0 * static_cast<double>(g.edge_count());
    const std::size_t n = members.size();
    std::vector<std::size_t> local(g.vertex_count(), static_cast<std::size_t>(-1));
    for (std::size_t i = 0; i < n; ++i) local[members[i]] = i;
    p.adj.resize(n);
    p.degree.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        p.degree[i] = static_cast<double>(g.degree(members[i]));
        p.subgraph_degree_sum += p.degree[i];
        for (std::size_t w : g.neighbors(members[i]))
            if (local[w] != static_cast<std::size_t>(-1)) p.adj[i].push_back(local[w]);
    }
    return p;
}

// Leading (most positive) eigenvector of B^(g) restricted to the complement
// of the all-ones direction, by shifted power iteration. Deterministic ramp
// start, 1e-10 convergence.
inline std::vector<double> leading_eigenvector(const SplitProblem& p) {
    const std::size_t n = p.size();
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = static_cast<double>(i) - 0.5 * static_cast<double>(n - 1);

    auto project_and_normalize = [n](std::vector<double>& x) {
        double mean = 0.0;
        for (double e : x) mean += e;
        mean /= static_cast<double>(n);
        double norm = 0.0;
        for (double& e : x) {
            e -= mean;
            norm += e * e;
        }
        norm = std::sqrt(norm);
        if (norm > 0.0)
            for (double& e : x) e /= norm;
        return norm;
    };
    if (project_and_normalize(v) == 0.0) return v;

    auto run_power = [&](double shift, std::vector<double> x) {
        double lambda = 0.0;
        for (int iter = 0; iter < 20000; ++iter) {
            std::vector<double> y = p.apply(x);
            for (std::size_t i = 0; i < n; ++i) y[i] += shift * x[i];
            if (project_and_normalize(y) == 0.0) return std::pair{0.0, x};
            double diff_same = 0.0, diff_flip = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                diff_same = std::max(diff_same, std::abs(y[i] - x[i]));
                diff_flip = std::max(diff_flip, std::abs(y[i] + x[i]));
            }
            x = std::move(y);
            if (std::min(diff_same, diff_flip) < 1e-10) break;
        }
        std::vector<double> bx = p.apply(x);
        for (std::size_t i = 0; i < n; ++i) lambda += x[i] * bx[i];
        return std::pair{lambda, x};
    };

    auto [lambda_big, v1] = run_power(0.0, v);
    if (lambda_big > 0.0) return v1;
    // Dominant eigenvalue is negative: shift spectrum up and rerun.
    auto [lambda2, v2] = run_power(std::abs(lambda_big), v);
    (void)lambda2;
    return v2;
}

// Kernighan-Lin style fine-tuning of s in {-1, +1}^n maximizing s^T B^(g) s.
// Each round moves every vertex once, greedily by best gain, then rewinds to
// the best prefix. Ties break toward the lowest vertex index.
inline void kl_refine(const SplitProblem& p, std::vector<int>& s) {
    const std::size_t n = p.size();
    std::vector<double> adj_sum(n), diagcorr(n), bii(n);

    for (std::size_t round = 0; round < 64; ++round) {
        // (B s)_i pieces: adjacency part, degree-weighted scalar, diagonal.
        double weighted = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            weighted += p.degree[i] * s[i];
            diagcorr[i] = p.diag_correction(i, p.adj[i].size());
            bii[i] = -p.degree[i] * p.degree[i] / p.two_m - diagcorr[i];
        }
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j : p.adj[i]) acc += s[j];
            adj_sum[i] = acc;
        }

        auto bs = [&](std::size_t i) {
            return adj_sum[i] - p.degree[i] * weighted / p.two_m - diagcorr[i] * s[i];
        };

        std::vector<bool> moved(n, false);
        std::vector<std::size_t> move_order;
        move_order.reserve(n);
        double gain = 0.0, best_gain = 0.0;
        std::size_t best_prefix = 0;

        for (std::size_t step = 0; step < n; ++step) {
            double best_delta = 0.0;
            std::size_t pick = n;
            for (std::size_t i = 0; i < n; ++i) {
                if (moved[i]) continue;
                const double delta = -4.0 * s[i] * bs(i) + 4.0 * bii[i];
                if (pick == n || delta > best_delta) {
                    best_delta = delta;
                    pick = i;
                }
            }
            if (pick == n) break;
            moved[pick] = true;
            move_order.push_back(pick);
            gain += best_delta;
            const double ds = -2.0 * s[pick];
            for (std::size_t j : p.adj[pick]) adj_sum[j] += ds;
            weighted += p.degree[pick] * ds;
            s[pick] = -s[pick];
            if (gain > best_gain + 1e-12) {
                best_gain = gain;
                best_prefix = step + 1;
            }
        }

        // Undo moves past the best prefix.
        for (std::size_t step = move_order.size(); step > best_prefix; --step) {
            const std::size_t i = move_order[step - 1];
            const double ds = -2.0 * s[i];
            for (std::size_t j : p.adj[i]) adj_sum[j] += ds;
            weighted += p.degree[i] * ds;
            s[i] = -s[i];
        }
        if (best_gain <= 1e-12) break;
    }
}

inline double split_quality(const SplitProblem& p, const std::vector<int>& s) {
    std::vector<double> v(s.begin(), s.end());
    const std::vector<double> bs = p.apply(v);
    double f = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) f += v[i] * bs[i];
    return f / (2.0 * p.two_m);  // = s^T B s / 4m
}

inline void recurse_split(const UndirectedGraph& g, std::vector<std::size_t> members,
                          std::vector<std::size_t>& label, std::size_t& next_id) {
    if (members.size() < 2) {
        for (std::size_t v : members) label[v] = next_id;
        ++next_id;
        return;
    }
    SplitProblem p = make_split_problem(g, members);
    std::vector<double> eig = leading_eigenvector(p);
    std::vector<int> s(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) s[i] = (eig[i] < 0.0) ? -1 : 1;
    kl_refine(p, s);

    const double delta_q = split_quality(p, s);
    std::vector<std::size_t> left, right;
    for (std::size_t i = 0; i < p.size(); ++i)
        (s[i] > 0 ? left : right).push_back(members[i]);

    if (delta_q <= 1e-12 || left.empty() || right.empty()) {
        for (std::size_t v : members) label[v] = next_id;
        ++next_id;
        return;
    }
    recurse_split(g, std::move(left), label, next_id);
    recurse_split(g, std::move(right), label, next_id);
}

} // namespace detail

/// Recursive modularity maximization: connected components are split first,
/// then each part is bisected by the leading eigenvector of the generalized
/// modularity matrix (plus Kernighan-Lin fine-tuning) until no bisection
/// increases Q. Deterministic for a fixed graph.
inline Partition detect_communities(const UndirectedGraph& g) {
    if (g.edge_count() == 0) throw UsageError("detect_communities: graph has no edges");
    const Partition comps = connected_components(g);
    std::vector<std::vector<std::size_t>> groups(comps.count);
    for (std::size_t v = 0; v < g.vertex_count(); ++v) groups[comps.community[v]].push_back(v);

    std::vector<std::size_t> label(g.vertex_count(), 0);
    std::size_t next_id = 0;
    for (auto& group : groups) detail::recurse_split(g, std::move(group), label, next_id);
    return Partition::normalized(std::move(label));
}

} // namespace balancelab
