#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "balancelab/errors.hpp"
#include "balancelab/graph.hpp"
#include "balancelab/matrix.hpp"
#include "balancelab/random.hpp"
#include "balancelab/sparse.hpp"

namespace balancelab {

inline constexpr std::size_t kTriadFeatureCount = 16;
inline constexpr std::size_t kEdgeFeatureCount = 21;

/// Balance-theory polarity per feature index: +1, -1 or 0 (unlabeled).
/// The standard seeding marks the four both-sides-positive triad features
/// positive and the eight exactly-one-side-positive features negative; the
/// four both-negative triad features and the five degree features stay
/// unlabeled.
struct PolaritySeed {
    std::array<int, kEdgeFeatureCount> polarity{};

    explicit PolaritySeed(const std::array<int, kEdgeFeatureCount>& values) : polarity(values) {
        std::size_t pos = 0, neg = 0;
        for (std::size_t j = 0; j < kEdgeFeatureCount; ++j) {
            if (polarity[j] == 1)
                ++pos;
            else if (polarity[j] == -1)
                ++neg;
            else if (polarity[j] != 0)
                throw UsageError("PolaritySeed: values must be -1, 0 or +1");
            if (j >= kTriadFeatureCount && polarity[j] != 0)
                throw UsageError("PolaritySeed: degree features must stay unlabeled");
        }
        if (pos != 4 || neg != 8)
            throw UsageError("PolaritySeed: expected exactly 4 positive and 8 negative features");
    }

    static PolaritySeed standard() {
        std::array<int, kEdgeFeatureCount> values{};
        for (int a = 0; a < 4; ++a) {
            const bool a_positive = (a == 0 || a == 2);
            for (int b = 0; b < 4; ++b) {
                const bool b_positive = (b == 0 || b == 2);
                if (a_positive && b_positive)
                    values[4 * a + b] = 1;
                else if (a_positive != b_positive)
                    values[4 * a + b] = -1;
            }
        }
        return PolaritySeed(values);
    }
};

/// n feature rows of which the first labels.size() are labeled.
struct LabeledEdgeSet {
    Matrix features;          // n x 21, entries >= 0
    std::vector<int> labels;  // size n_l <= n, each +1 or -1

    LabeledEdgeSet(Matrix x, std::vector<int> d) : features(std::move(x)), labels(std::move(d)) {
        if (features.cols() != kEdgeFeatureCount)
            throw UsageError("LabeledEdgeSet: feature matrix must have 21 columns");
        if (labels.size() > features.rows())
            throw UsageError("LabeledEdgeSet: more labels than rows");
        for (int d_i : labels)
            if (d_i != 1 && d_i != -1) throw UsageError("LabeledEdgeSet: labels must be +1 or -1");
    }

    std::size_t size() const { return features.rows(); }
    std::size_t labeled_count() const { return labels.size(); }
};

struct EspOptions {
    double beta1 = 0.1;
    double beta2 = 0.5;
    double cg_tol = 1e-8;
    std::size_t cg_max_iter = 0;  // 0 means 10 * (n + 21)
    bool log1p_features = false;  // log(1 + x) transform of bipartite weights
};

struct EspModel {
    std::array<double, kEdgeFeatureCount> classifier{};
    std::vector<double> edge_estimates;
    // Component of the augmented solution along the all-ones direction, the
    // smoothness term's null space. Uninformative for signs; subtracted at
    // prediction time.
    double constant_mode = 0.0;
    EspOptions options;
};

struct EspSystem {
    SparseSymMatrix matrix;
    std::vector<double> rhs;
    // Position j of the feature block holds original feature feature_order[j].
    std::vector<std::size_t> feature_order;
};

/// Feature matrix for a list of (u, v) pairs: triad census then degree
/// features per row. Each pair's own edge is held out by construction of the
/// underlying feature extractors.
inline Matrix build_feature_matrix(const SignedDiGraph& g,
                                   std::span<const std::pair<std::size_t, std::size_t>> edges) {
    Matrix x(edges.size(), kEdgeFeatureCount);
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const auto [u, v] = edges[i];
        const auto census = triad_census_for_edge(g, u, v);
        const auto degrees = degree_features(g, u, v);
        for (std::size_t j = 0; j < kTriadFeatureCount; ++j)
            x(i, j) = static_cast<double>(census[j]);
        for (std::size_t j = 0; j < 5; ++j)
            x(i, kTriadFeatureCount + j) = static_cast<double>(degrees[j]);
    }
    return x;
}

/// Builds the linear system whose solution is the augmented classifier: the
/// graph Laplacian of the bipartite instance/feature graph, with a beta1
/// shift on labeled-instance diagonal entries and a beta2 shift on seeded
/// feature diagonal entries. Block order: labeled edges, unlabeled edges,
/// seeded features, unlabeled features. Right-hand side (beta1*d, 0,
/// beta2*w, 0).
inline EspSystem assemble_system(const Matrix& x, std::span<const int> labels,
                                 std::span<const int> feature_polarity, double beta1, double beta2) {
    const std::size_t n = x.rows();
    const std::size_t f = x.cols();
    if (labels.size() > n) throw UsageError("assemble_system: more labels than instances");
    if (feature_polarity.size() != f)
        throw UsageError("assemble_system: polarity vector length must match feature count");
    if (beta1 <= 0.0 || beta2 <= 0.0)
        throw UsageError("assemble_system: beta1 and beta2 must be positive");
    for (double v : x.raw())
        if (v < 0.0 || !std::isfinite(v))
            throw UsageError("assemble_system: graph weights must be non-negative and finite");

    EspSystem sys{SparseSymMatrix(n + f), {}, {}};
    sys.feature_order.reserve(f);
    for (std::size_t j = 0; j < f; ++j)
        if (feature_polarity[j] != 0) sys.feature_order.push_back(j);
    const std::size_t seeded_count = sys.feature_order.size();
    for (std::size_t j = 0; j < f; ++j)
        if (feature_polarity[j] == 0) sys.feature_order.push_back(j);

    std::vector<std::size_t> feature_pos(f);
    for (std::size_t p = 0; p < f; ++p) feature_pos[sys.feature_order[p]] = p;

    const std::size_t dim = n + f;
    std::vector<double> degree(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < f; ++j) {
            const double w = x(i, j);
            if (w == 0.0) continue;
            const std::size_t fj = n + feature_pos[j];
            sys.matrix.add(i, fj, -w);
            degree[i] += w;
            degree[fj] += w;
        }
    }
    for (std::size_t k = 0; k < dim; ++k)
        if (degree[k] != 0.0) sys.matrix.add(k, k, degree[k]);
    for (std::size_t i = 0; i < labels.size(); ++i) sys.matrix.add(i, i, beta1);
    for (std::size_t p = 0; p < seeded_count; ++p) sys.matrix.add(n + p, n + p, beta2);

    sys.rhs.assign(dim, 0.0);
    for (std::size_t i = 0; i < labels.size(); ++i)
        sys.rhs[i] = beta1 * static_cast<double>(labels[i]);
    for (std::size_t p = 0; p < seeded_count; ++p)
        sys.rhs[n + p] = beta2 * static_cast<double>(feature_polarity[sys.feature_order[p]]);
    return sys;
}

/// The optimization objective the linear system solves: the bipartite-graph
/// smoothness term plus the label and seed penalty terms.
inline double esp_objective(const Matrix& x, std::span<const int> labels,
                            std::span<const int> feature_polarity, double beta1, double beta2,
                            std::span<const double> edge_estimates,
                            std::span<const double> classifier) {
    double obj = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) {
            const double d = edge_estimates[i] - classifier[j];
            obj += x(i, j) * d * d;
        }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double d = edge_estimates[i] - static_cast<double>(labels[i]);
        obj += beta1 * d * d;
    }
    for (std::size_t j = 0; j < x.cols(); ++j) {
        if (feature_polarity[j] == 0) continue;
        const double d = classifier[j] - static_cast<double>(feature_polarity[j]);
        obj += beta2 * d * d;
    }
    return obj;
}

namespace detail {

inline Matrix maybe_log1p(const Matrix& x, bool enabled) {
    if (!enabled) return x;
    Matrix out = x;
    for (double& v : out.raw()) v = std::log1p(v);
    return out;
}

} // namespace detail

inline EspModel esp_train(const LabeledEdgeSet& data, const PolaritySeed& seed,
                          const EspOptions& options = {}) {
    const Matrix x = detail::maybe_log1p(data.features, options.log1p_features);
    EspSystem sys = assemble_system(x, data.labels, seed.polarity, options.beta1, options.beta2);
    const std::size_t n = data.size();
    const std::size_t max_iter =
        options.cg_max_iter ? options.cg_max_iter : 10 * (n + kEdgeFeatureCount);
    const std::vector<double> solution = cg_solve(sys.matrix, sys.rhs, options.cg_tol, max_iter);

    EspModel model;
    model.options = options;
    model.edge_estimates.assign(solution.begin(), solution.begin() + static_cast<long>(n));
    for (std::size_t p = 0; p < kEdgeFeatureCount; ++p)
        model.classifier[sys.feature_order[p]] = solution[n + p];
    double mean = 0.0;
    for (double v : solution) mean += v;
    model.constant_mode = mean / static_cast<double>(solution.size());
    return model;
}

/// sign(c . x) with the documented tie-break: an exact zero maps to +1, the
/// majority class. The constant component of the solved classifier is the
/// smoothness term's null direction and carries no relational information
/// (with few labels it is just the seed average), so the threshold is taken
/// on the centered classifier.
inline int esp_predict(const EspModel& model, std::span<const double> features) {
    if (features.size() != kEdgeFeatureCount)
        throw UsageError("esp_predict: feature vector must have 21 entries");
    double dot = 0.0;
    for (std::size_t j = 0; j < kEdgeFeatureCount; ++j) {
        const double v = model.options.log1p_features ? std::log1p(features[j]) : features[j];
        dot += (model.classifier[j] - model.constant_mode) * v;
    }
    return dot < 0.0 ? -1 : 1;
}

/// Uniform per-class sample of directed edges, without replacement.
struct BalancedEdgeSample {
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    std::vector<int> signs;

    std::size_t size() const { return edges.size(); }
};

inline BalancedEdgeSample make_balanced_edge_sample(const SignedDiGraph& g, std::size_t n_pos,
                                                    std::size_t n_neg, RandomSource& rng) {
    std::vector<std::size_t> pos, neg;
    const auto& edges = g.edges();
    for (std::size_t i = 0; i < edges.size(); ++i)
        (edges[i].sign > 0 ? pos : neg).push_back(i);
    if (pos.size() < n_pos || neg.size() < n_neg)
        throw UsageError("make_balanced_edge_sample: not enough edges of the requested signs (have " +
                         std::to_string(pos.size()) + " positive, " + std::to_string(neg.size()) +
                         " negative)");

    BalancedEdgeSample out;
    out.edges.reserve(n_pos + n_neg);
    out.signs.reserve(n_pos + n_neg);
    for (std::size_t k : rng.sample_without_replacement(pos.size(), n_pos)) {
        out.edges.emplace_back(edges[pos[k]].u, edges[pos[k]].v);
        out.signs.push_back(1);
    }
    for (std::size_t k : rng.sample_without_replacement(neg.size(), n_neg)) {
        out.edges.emplace_back(edges[neg[k]].u, edges[neg[k]].v);
        out.signs.push_back(-1);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Gold-standard baseline: L2-regularized logistic regression on the same 21
// features, trained on the labeled edges only.
// ---------------------------------------------------------------------------

struct LogisticModel {
    std::vector<double> weights;  // per standardized feature
    double bias = 0.0;
    std::vector<double> mean, scale;
    bool trained = false;  // untrained models predict the majority class (+1)
};

inline LogisticModel logistic_train(const Matrix& x, std::span<const int> labels,
                                    double l2 = 0.1, std::size_t iterations = 500) {
    LogisticModel m;
    const std::size_t n = x.rows(), f = x.cols();
    if (n == 0) return m;
    m.mean.assign(f, 0.0);
    m.scale.assign(f, 1.0);
    for (std::size_t j = 0; j < f; ++j) {
        double mu = 0.0;
        for (std::size_t i = 0; i < n; ++i) mu += x(i, j);
        mu /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) var += (x(i, j) - mu) * (x(i, j) - mu);
        var /= static_cast<double>(n);
        m.mean[j] = mu;
        if (var > 1e-12) m.scale[j] = std::sqrt(var);
    }

    Matrix z(n, f);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < f; ++j) z(i, j) = (x(i, j) - m.mean[j]) / m.scale[j];

    m.weights.assign(f, 0.0);
    const double lr = 0.5;
    std::vector<double> grad(f);
    for (std::size_t it = 0; it < iterations; ++it) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double grad_bias = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double margin = m.bias;
            for (std::size_t j = 0; j < f; ++j) margin += m.weights[j] * z(i, j);
            const double y = static_cast<double>(labels[i]);
            // d/dm of log(1 + exp(-y m)) = -y sigma(-y m)
            const double s = 1.0 / (1.0 + std::exp(y * margin));
            for (std::size_t j = 0; j < f; ++j) grad[j] += -y * s * z(i, j);
            grad_bias += -y * s;
        }
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t j = 0; j < f; ++j) {
            grad[j] = grad[j] * inv_n + l2 * m.weights[j];
            m.weights[j] -= lr * grad[j];
        }
        m.bias -= lr * grad_bias * inv_n;
    }
    m.trained = true;
    return m;
}

inline int logistic_predict(const LogisticModel& m, std::span<const double> features) {
    if (!m.trained) return 1;
    double margin = m.bias;
    for (std::size_t j = 0; j < features.size(); ++j)
        margin += m.weights[j] * (features[j] - m.mean[j]) / m.scale[j];
    return margin < 0.0 ? -1 : 1;
}

// ---------------------------------------------------------------------------
// Evaluation protocol: random 50/50 train/test splits, n_l labeled training
// edges revealed per trial, accuracy averaged over trials.
// ---------------------------------------------------------------------------

struct EspEvalRow {
    std::size_t n_l = 0;
    double mean_accuracy = 0.0;
    double stddev = 0.0;
    std::size_t trials = 0;
};

struct EspEvaluation {
    std::vector<EspEvalRow> esp;
    std::vector<EspEvalRow> baseline;  // filled when requested
};

inline EspEvaluation evaluate_esp(const SignedDiGraph& g, const BalancedEdgeSample& sample,
                                  std::span<const std::size_t> n_l_schedule, std::size_t trials,
                                  RandomSource& rng, const EspOptions& options = {},
                                  bool with_baseline = false) {
    const std::size_t total = sample.size();
    if (total < 2) throw UsageError("evaluate_esp: need at least two sampled edges");
    const std::size_t train_size = total / 2;
    for (std::size_t n_l : n_l_schedule)
        if (n_l > train_size)
            throw UsageError("evaluate_esp: n_l = " + std::to_string(n_l) +
                             " exceeds the training half (" + std::to_string(train_size) + ")");
    if (trials == 0) throw UsageError("evaluate_esp: trials must be positive");

    const Matrix x = build_feature_matrix(g, sample.edges);
    const PolaritySeed seed = PolaritySeed::standard();

    // accuracy[schedule index][trial]
    std::vector<std::vector<double>> esp_acc(n_l_schedule.size(), std::vector<double>(trials));
    std::vector<std::vector<double>> base_acc(n_l_schedule.size(), std::vector<double>(trials));

    for (std::size_t trial = 0; trial < trials; ++trial) {
        RandomSource trial_rng = rng.child(trial);
        std::vector<std::size_t> order(total);
        for (std::size_t i = 0; i < total; ++i) order[i] = i;
        trial_rng.shuffle(order);

        const std::size_t test_size = total - train_size;
        for (std::size_t si = 0; si < n_l_schedule.size(); ++si) {
            const std::size_t n_l = n_l_schedule[si];

            Matrix x_train(train_size, kEdgeFeatureCount);
            std::vector<int> labels(n_l);
            for (std::size_t t = 0; t < train_size; ++t) {
                const std::size_t src = order[t];
                for (std::size_t j = 0; j < kEdgeFeatureCount; ++j) x_train(t, j) = x(src, j);
                if (t < n_l) labels[t] = sample.signs[src];
            }

            const EspModel model = esp_train(LabeledEdgeSet(x_train, labels), seed, options);
            std::size_t correct = 0;
            for (std::size_t t = train_size; t < total; ++t) {
                const std::size_t src = order[t];
                if (esp_predict(model, x.row(src)) == sample.signs[src]) ++correct;
            }
            esp_acc[si][trial] = static_cast<double>(correct) / static_cast<double>(test_size);

            if (with_baseline) {
                Matrix x_labeled(n_l, kEdgeFeatureCount);
                for (std::size_t t = 0; t < n_l; ++t)
                    for (std::size_t j = 0; j < kEdgeFeatureCount; ++j)
                        x_labeled(t, j) = x(order[t], j);
                const LogisticModel lm = logistic_train(x_labeled, labels);
                std::size_t base_correct = 0;
                for (std::size_t t = train_size; t < total; ++t) {
                    const std::size_t src = order[t];
                    if (logistic_predict(lm, x.row(src)) == sample.signs[src]) ++base_correct;
                }
                base_acc[si][trial] = static_cast<double>(base_correct) / static_cast<double>(test_size);
            }
        }
    }

    auto summarize = [&](const std::vector<std::vector<double>>& acc) {
        std::vector<EspEvalRow> rows;
        for (std::size_t si = 0; si < n_l_schedule.size(); ++si) {
            EspEvalRow row;
            row.n_l = n_l_schedule[si];
            row.trials = trials;
            double mean = 0.0;
            for (double a : acc[si]) mean += a;
            mean /= static_cast<double>(trials);
            double var = 0.0;
            for (double a : acc[si]) var += (a - mean) * (a - mean);
            row.mean_accuracy = mean;
            row.stddev = trials > 1 ? std::sqrt(var / static_cast<double>(trials - 1)) : 0.0;
            rows.push_back(row);
        }
        return rows;
    };

    EspEvaluation out;
    out.esp = summarize(esp_acc);
    if (with_baseline) out.baseline = summarize(base_acc);
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic family: two planted all-positive groups joined by negative
// edges, with a sign-noise rate. Desk-scale stand-in for the balanced-sample
// studies on real signed networks.
// ---------------------------------------------------------------------------

struct PlantedSignConfig {
    std::size_t vertex_count = 500;
    double edge_probability = 0.08;  // per ordered vertex pair
    double sign_noise = 0.10;        // probability a true sign is flipped
};

inline SignedDiGraph make_planted_signed_digraph(const PlantedSignConfig& cfg, RandomSource& rng,
                                                 std::vector<int>* planted_groups = nullptr) {
    if (cfg.edge_probability < 0.0 || cfg.edge_probability > 1.0 ||
        cfg.sign_noise < 0.0 || cfg.sign_noise > 1.0)
        throw UsageError("make_planted_signed_digraph: probabilities must lie in [0, 1]");
    const std::size_t n = cfg.vertex_count;
    SignedDiGraph g(n);
    if (planted_groups) {
        planted_groups->resize(n);
        for (std::size_t v = 0; v < n; ++v) (*planted_groups)[v] = v < n / 2 ? 0 : 1;
    }
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = 0; v < n; ++v) {
            if (u == v) continue;
            if (!rng.bernoulli(cfg.edge_probability)) continue;
            const bool same_group = (u < n / 2) == (v < n / 2);
            int sign = same_group ? 1 : -1;
            if (rng.bernoulli(cfg.sign_noise)) sign = -sign;
            g.add_edge(u, v, sign);
        }
    }
    return g;
}

} // namespace balancelab
