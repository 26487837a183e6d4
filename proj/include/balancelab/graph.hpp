#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "balancelab/errors.hpp"

namespace balancelab {

/// Directed graph with +1/-1 edge signs. No self-loops, at most one edge per
/// ordered pair. Immutable once populated; adjacency is kept sorted for
/// binary-search lookups.
class SignedDiGraph {
public:
    struct Edge {
        std::size_t u, v;
        int sign;
    };

    explicit SignedDiGraph(std::size_t vertex_count)
        : n_(vertex_count), out_(vertex_count), in_(vertex_count), und_(vertex_count),
          pos_out_(vertex_count, 0), neg_out_(vertex_count, 0), pos_in_(vertex_count, 0),
          neg_in_(vertex_count, 0) {}

    std::size_t vertex_count() const { return n_; }
    std::size_t edge_count() const { return edges_.size(); }
    const std::vector<Edge>& edges() const { return edges_; }

    void add_edge(std::size_t u, std::size_t v, int sign) {
        check_vertex(u);
        check_vertex(v);
        if (u == v) throw UsageError("SignedDiGraph: self-loops are not allowed");
        if (sign != 1 && sign != -1) throw UsageError("SignedDiGraph: sign must be +1 or -1");
        if (sign_of(u, v)) throw UsageError("SignedDiGraph: duplicate edge (" + std::to_string(u) +
                                            ", " + std::to_string(v) + ")");
        insert_sorted(out_[u], {v, sign});
        insert_sorted(in_[v], {u, sign});
        insert_unique(und_[u], v);
        insert_unique(und_[v], u);
        (sign > 0 ? pos_out_ : neg_out_)[u] += 1;
        (sign > 0 ? pos_in_ : neg_in_)[v] += 1;
        edges_.push_back({u, v, sign});
    }

    std::optional<int> sign_of(std::size_t u, std::size_t v) const {
        const auto& adj = out_[u];
        auto it = std::lower_bound(adj.begin(), adj.end(), v,
                                   [](const Arc& a, std::size_t key) { return a.to < key; });
        if (it != adj.end() && it->to == v) return it->sign;
        return std::nullopt;
    }

    /// Vertices adjacent to both u and v, ignoring direction and sign.
    std::vector<std::size_t> common_neighbors(std::size_t u, std::size_t v) const {
        check_vertex(u);
        check_vertex(v);
        std::vector<std::size_t> out;
        std::set_intersection(und_[u].begin(), und_[u].end(), und_[v].begin(), und_[v].end(),
                              std::back_inserter(out));
        return out;
    }

    const std::vector<std::size_t>& undirected_neighbors(std::size_t u) const { return und_[u]; }

    std::size_t positive_out_degree(std::size_t u) const { return pos_out_[u]; }
    std::size_t negative_out_degree(std::size_t u) const { return neg_out_[u]; }
    std::size_t positive_in_degree(std::size_t v) const { return pos_in_[v]; }
    std::size_t negative_in_degree(std::size_t v) const { return neg_in_[v]; }

    void check_vertex(std::size_t u) const {
        if (u >= n_) throw UsageError("SignedDiGraph: vertex " + std::to_string(u) + " out of range");
    }

private:
    struct Arc {
        std::size_t to;
        int sign;
    };

    static void insert_sorted(std::vector<Arc>& adj, Arc a) {
        auto it = std::lower_bound(adj.begin(), adj.end(), a.to,
                                   [](const Arc& x, std::size_t key) { return x.to < key; });
        adj.insert(it, a);
    }

    static void insert_unique(std::vector<std::size_t>& v, std::size_t x) {
        auto it = std::lower_bound(v.begin(), v.end(), x);
        if (it == v.end() || *it != x) v.insert(it, x);
    }

    std::size_t n_;
    std::vector<std::vector<Arc>> out_, in_;
    std::vector<std::vector<std::size_t>> und_;
    std::vector<std::size_t> pos_out_, neg_out_, pos_in_, neg_in_;
    std::vector<Edge> edges_;
};

/// Per-edge triad census. For every common neighbor w of (u, v) each edge on
/// the u/w side pairs with each edge on the w/v side; the pair's type index
/// is 4*a + b with
///   a: 0 = u->w positive, 1 = u->w negative, 2 = w->u positive, 3 = w->u negative
///   b: 0 = w->v positive, 1 = w->v negative, 2 = v->w positive, 3 = v->w negative.
/// The edge (u, v) itself never participates, so held-out edges are safe.
inline std::array<std::int64_t, 16> triad_census_for_edge(const SignedDiGraph& g, std::size_t u,
                                                          std::size_t v) {
    g.check_vertex(u);
    g.check_vertex(v);
    if (u == v) throw UsageError("triad_census_for_edge: u and v must differ");

    std::array<std::int64_t, 16> census{};
    for (std::size_t w : g.common_neighbors(u, v)) {
        int u_side[2];
        int u_count = 0;
        if (auto s = g.sign_of(u, w)) u_side[u_count++] = (*s > 0) ? 0 : 1;
        if (auto s = g.sign_of(w, u)) u_side[u_count++] = (*s > 0) ? 2 : 3;
        int v_side[2];
        int v_count = 0;
        if (auto s = g.sign_of(w, v)) v_side[v_count++] = (*s > 0) ? 0 : 1;
        if (auto s = g.sign_of(v, w)) v_side[v_count++] = (*s > 0) ? 2 : 3;
        for (int a = 0; a < u_count; ++a)
            for (int b = 0; b < v_count; ++b) census[4 * u_side[a] + v_side[b]] += 1;
    }
    return census;
}

/// The five degree features of an edge (u, v): positive/negative out-degree
/// of u, positive/negative in-degree of v, and the number of common
/// undirected neighbors. A present (u, v) edge is held out of all counts.
inline std::array<std::int64_t, 5> degree_features(const SignedDiGraph& g, std::size_t u,
                                                   std::size_t v) {
    g.check_vertex(u);
    g.check_vertex(v);
    if (u == v) throw UsageError("degree_features: u and v must differ");

    std::int64_t pos_out = static_cast<std::int64_t>(g.positive_out_degree(u));
    std::int64_t neg_out = static_cast<std::int64_t>(g.negative_out_degree(u));
    std::int64_t pos_in = static_cast<std::int64_t>(g.positive_in_degree(v));
    std::int64_t neg_in = static_cast<std::int64_t>(g.negative_in_degree(v));
    if (auto s = g.sign_of(u, v)) {
        if (*s > 0) {
            pos_out -= 1;
            pos_in -= 1;
        } else {
            neg_out -= 1;
            neg_in -= 1;
        }
    }
    const std::int64_t common = static_cast<std::int64_t>(g.common_neighbors(u, v).size());
    return {pos_out, neg_out, pos_in, neg_in, common};
}

/// Simple undirected graph. No self-loops, no parallel edges.
class UndirectedGraph {
public:
    struct Edge {
        std::size_t u, v;
    };

    explicit UndirectedGraph(std::size_t vertex_count) : n_(vertex_count), adj_(vertex_count) {}

    std::size_t vertex_count() const { return n_; }
    std::size_t edge_count() const { return edges_.size(); }
    const std::vector<Edge>& edges() const { return edges_; }

    void add_edge(std::size_t u, std::size_t v) {
        if (!try_add_edge(u, v))
            throw UsageError("UndirectedGraph: duplicate edge (" + std::to_string(u) + ", " +
                             std::to_string(v) + ")");
    }

    /// Returns false (and leaves the graph unchanged) if the edge exists.
    bool try_add_edge(std::size_t u, std::size_t v) {
        check_vertex(u);
        check_vertex(v);
        if (u == v) throw UsageError("UndirectedGraph: self-loops are not allowed");
        if (has_edge(u, v)) return false;
        insert_unique(adj_[u], v);
        insert_unique(adj_[v], u);
        edges_.push_back({std::min(u, v), std::max(u, v)});
        return true;
    }

    bool has_edge(std::size_t u, std::size_t v) const {
        const auto& a = adj_[u];
        return std::binary_search(a.begin(), a.end(), v);
    }

    const std::vector<std::size_t>& neighbors(std::size_t u) const { return adj_[u]; }
    std::size_t degree(std::size_t u) const { return adj_[u].size(); }

    void check_vertex(std::size_t u) const {
        if (u >= n_) throw UsageError("UndirectedGraph: vertex " + std::to_string(u) + " out of range");
    }

private:
    static void insert_unique(std::vector<std::size_t>& v, std::size_t x) {
        auto it = std::lower_bound(v.begin(), v.end(), x);
        v.insert(it, x);
    }

    std::size_t n_;
    std::vector<std::vector<std::size_t>> adj_;
    std::vector<Edge> edges_;
};

/// Vertex -> community id, ids contiguous from 0.
struct Partition {
    std::vector<std::size_t> community;
    std::size_t count = 0;

    /// Relabels ids to be contiguous in order of first appearance.
    static Partition normalized(std::vector<std::size_t> raw) {
        Partition p;
        p.community.assign(raw.size(), 0);
        std::vector<std::size_t> seen;
        for (std::size_t i = 0; i < raw.size(); ++i) {
            auto it = std::find(seen.begin(), seen.end(), raw[i]);
            std::size_t id;
            if (it == seen.end()) {
                id = seen.size();
                seen.push_back(raw[i]);
            } else {
                id = static_cast<std::size_t>(it - seen.begin());
            }
            p.community[i] = id;
        }
        p.count = seen.size();
        return p;
    }
};

/// k-shell index per vertex plus the maximum shell.
struct ShellIndex {
    std::vector<std::size_t> shell;
    std::size_t k_max = 0;

    std::vector<std::size_t> max_shell_vertices() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < shell.size(); ++i)
            if (shell[i] == k_max) out.push_back(i);
        return out;
    }
};

/// Iterative peeling: for j = 0, 1, 2, ... repeatedly remove every vertex of
/// (current) degree <= j; removed vertices get shell index j. Isolated
/// vertices land in shell 0.
inline ShellIndex kshell_decompose(const UndirectedGraph& g) {
    const std::size_t n = g.vertex_count();
    ShellIndex out;
    out.shell.assign(n, 0);
    std::vector<std::size_t> deg(n);
    for (std::size_t i = 0; i < n; ++i) deg[i] = g.degree(i);
    std::vector<bool> removed(n, false);
    std::size_t remaining = n;

    std::size_t j = 0;
    std::vector<std::size_t> stack;
    while (remaining > 0) {
        stack.clear();
        for (std::size_t v = 0; v < n; ++v)
            if (!removed[v] && deg[v] <= j) stack.push_back(v);
        while (!stack.empty()) {
            const std::size_t v = stack.back();
            stack.pop_back();
            if (removed[v]) continue;
            removed[v] = true;
            out.shell[v] = j;
            --remaining;
            for (std::size_t w : g.neighbors(v)) {
                if (removed[w]) continue;
                if (--deg[w] <= j) stack.push_back(w);
            }
        }
        ++j;
    }
    out.k_max = 0;
    for (std::size_t v = 0; v < n; ++v) out.k_max = std::max(out.k_max, out.shell[v]);
    return out;
}

/// Newman modularity of a partition. For two communities this equals
/// s^T B s / 4m with B_ij = A_ij - k_i k_j / 2m; the grouped form below is
/// the standard multi-community generalization.
inline double modularity(const UndirectedGraph& g, const Partition& p) {
    const std::size_t m = g.edge_count();
    if (m == 0) throw UsageError("modularity: undefined for a graph with no edges");
    if (p.community.size() != g.vertex_count())
        throw UsageError("modularity: partition size does not match vertex count");

    std::vector<double> intra(p.count, 0.0);
    std::vector<double> total_degree(p.count, 0.0);
    for (const auto& e : g.edges())
        if (p.community[e.u] == p.community[e.v]) intra[p.community[e.u]] += 1.0;
    for (std::size_t v = 0; v < g.vertex_count(); ++v)
        total_degree[p.community[v]] += static_cast<double>(g.degree(v));

    const double two_m = 2.0 * static_cast<double>(m);
    double q = 0.0;
    for (std::size_t c = 0; c < p.count; ++c) {
        q += intra[c] / static_cast<double>(m);
        const double frac = total_degree[c] / two_m;
        q -= frac * frac;
    }
    return q;
}

/// Connected components, labeled in order of smallest contained vertex.
inline Partition connected_components(const UndirectedGraph& g) {
    const std::size_t n = g.vertex_count();
    std::vector<std::size_t> label(n, static_cast<std::size_t>(-1));
    std::size_t next = 0;
    std::vector<std::size_t> queue;
    for (std::size_t s = 0; s < n; ++s) {
        if (label[s] != static_cast<std::size_t>(-1)) continue;
        label[s] = next;
        queue.assign(1, s);
        while (!queue.empty()) {
            const std::size_t v = queue.back();
            queue.pop_back();
            for (std::size_t w : g.neighbors(v)) {
                if (label[w] == static_cast<std::size_t>(-1)) {
                    label[w] = next;
                    queue.push_back(w);
                }
            }
        }
        ++next;
    }
    Partition p;
    p.community = std::move(label);
    p.count = next;
    return p;
}

/// Watts-Strogatz mean local clustering coefficient; vertices of degree < 2
/// contribute zero.
inline double mean_clustering(const UndirectedGraph& g) {
    const std::size_t n = g.vertex_count();
    if (n == 0) return 0.0;
    double sum = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
        const auto& nb = g.neighbors(v);
        const std::size_t k = nb.size();
        if (k < 2) continue;
        std::size_t closed = 0;
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = i + 1; j < k; ++j)
                if (g.has_edge(nb[i], nb[j])) ++closed;
        sum += 2.0 * static_cast<double>(closed) / (static_cast<double>(k) * (k - 1));
    }
    return sum / static_cast<double>(n);
}

/// Sample skewness of the degree sequence.
inline double degree_skewness(const UndirectedGraph& g) {
    const std::size_t n = g.vertex_count();
    if (n == 0) return 0.0;
    double mean = 0.0;
    for (std::size_t v = 0; v < n; ++v) mean += static_cast<double>(g.degree(v));
    mean /= static_cast<double>(n);
    double m2 = 0.0, m3 = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
        const double d = static_cast<double>(g.degree(v)) - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= static_cast<double>(n);
    m3 /= static_cast<double>(n);
    if (m2 <= 0.0) return 0.0;
    return m3 / std::pow(m2, 1.5);
}

} // namespace balancelab
