#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <vector>

#include "balancelab/signs.hpp"

#include "support/graph_oracles.hpp"
#include "support/oracles.hpp"

using namespace balancelab;

namespace {

// Dense construction of the shifted-Laplacian system straight from the
// definitions; used to cross-check the sparse assembly and CG solution.
Matrix dense_esp_system(const Matrix& x, std::size_t n_l, std::span<const int> polarity,
                        const std::vector<std::size_t>& feature_order, double beta1, double beta2) {
    const std::size_t n = x.rows(), f = x.cols();
    const std::size_t dim = n + f;
    Matrix a(dim, dim);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < f; ++p) {
            const double w = x(i, feature_order[p]);
            a(i, n + p) = w;
            a(n + p, i) = w;
        }
    Matrix l(dim, dim);
    for (std::size_t i = 0; i < dim; ++i) {
        double deg = 0.0;
        for (std::size_t j = 0; j < dim; ++j) deg += a(i, j);
        for (std::size_t j = 0; j < dim; ++j) l(i, j) = (i == j ? deg : 0.0) - a(i, j);
    }
    for (std::size_t i = 0; i < n_l; ++i) l(i, i) += beta1;
    for (std::size_t p = 0; p < f; ++p)
        if (polarity[feature_order[p]] != 0) l(n + p, n + p) += beta2;
    return l;
}

LabeledEdgeSet random_instance(std::size_t n, std::size_t n_l, RandomSource& rng) {
    Matrix x(n, kEdgeFeatureCount);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < kEdgeFeatureCount; ++j)
            x(i, j) = rng.bernoulli(0.4) ? static_cast<double>(rng.index_below(6)) : 0.0;
    std::vector<int> labels(n_l);
    for (int& d : labels) d = rng.bernoulli(0.5) ? 1 : -1;
    return LabeledEdgeSet(std::move(x), std::move(labels));
}

} // namespace

TEST_CASE("standard polarity seeding marks 4 positive and 8 negative features", "[signs][seed]") {
    const PolaritySeed seed = PolaritySeed::standard();
    int pos = 0, neg = 0, unl = 0;
    for (int v : seed.polarity) (v > 0 ? pos : v < 0 ? neg : unl) += 1;
    CHECK(pos == 4);
    CHECK(neg == 8);
    CHECK(unl == 9);
    // Both-sides-positive triads are the positive set.
    CHECK(seed.polarity[0] == 1);
    CHECK(seed.polarity[2] == 1);
    CHECK(seed.polarity[8] == 1);
    CHECK(seed.polarity[10] == 1);
    // Both-sides-negative triads stay unlabeled, as do all degree features.
    for (int idx : {5, 7, 13, 15}) CHECK(seed.polarity[static_cast<std::size_t>(idx)] == 0);
    for (std::size_t j = kTriadFeatureCount; j < kEdgeFeatureCount; ++j)
        CHECK(seed.polarity[j] == 0);

    std::array<int, kEdgeFeatureCount> bad{};
    CHECK_THROWS_AS(PolaritySeed(bad), UsageError);
}

TEST_CASE("feature matrix rows match per-edge extraction", "[signs][features]") {
    SignedDiGraph isolated(2);
    std::vector<std::pair<std::size_t, std::size_t>> one{{0, 1}};
    Matrix row = build_feature_matrix(isolated, one);
    for (std::size_t j = 0; j < kEdgeFeatureCount; ++j) CHECK(row(0, j) == 0.0);

    RandomSource rng(21);
    SignedDiGraph g(4);
    g.add_edge(0, 1, 1);
    g.add_edge(0, 2, 1);
    g.add_edge(2, 1, -1);
    g.add_edge(3, 0, -1);
    g.add_edge(1, 3, 1);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t u = 0; u < 4; ++u)
        for (std::size_t v = 0; v < 4; ++v)
            if (u != v) pairs.emplace_back(u, v);
    Matrix x = build_feature_matrix(g, pairs);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto census = oracles::triad_census_brute(g, pairs[i].first, pairs[i].second);
        const auto degs = oracles::degree_features_brute(g, pairs[i].first, pairs[i].second);
        for (std::size_t j = 0; j < kTriadFeatureCount; ++j)
            REQUIRE(x(i, j) == static_cast<double>(census[j]));
        for (std::size_t j = 0; j < 5; ++j)
            REQUIRE(x(i, kTriadFeatureCount + j) == static_cast<double>(degs[j]));
        for (std::size_t j = 0; j < kEdgeFeatureCount; ++j) {
            REQUIRE(x(i, j) >= 0.0);
            REQUIRE(x(i, j) == std::floor(x(i, j)));  // counts
        }
    }
}

TEST_CASE("assemble_system reproduces the one-feature hand computation", "[signs][system]") {
    Matrix x(1, 1);
    x(0, 0) = 1.0;
    std::vector<int> labels{1};
    std::vector<int> polarity{1};
    EspSystem sys = assemble_system(x, labels, polarity, 1.0, 1.0);

    // Expect [[2, -1], [-1, 2]] c = (1, 1), so c = (1, 1).
    std::vector<double> probe0{1.0, 0.0}, probe1{0.0, 1.0};
    auto col0 = sys.matrix.multiply(probe0);
    auto col1 = sys.matrix.multiply(probe1);
    CHECK(col0[0] == Catch::Approx(2.0));
    CHECK(col0[1] == Catch::Approx(-1.0));
    CHECK(col1[0] == Catch::Approx(-1.0));
    CHECK(col1[1] == Catch::Approx(2.0));
    CHECK(sys.rhs == std::vector<double>{1.0, 1.0});

    auto solution = cg_solve(sys.matrix, sys.rhs, 1e-12, 50);
    CHECK(solution[0] == Catch::Approx(1.0));
    CHECK(solution[1] == Catch::Approx(1.0));
}

TEST_CASE("homogeneous system gives the zero solution", "[signs][system]") {
    Matrix x(3, 2);
    x(0, 0) = 1.0;
    x(1, 1) = 2.0;
    x(2, 0) = 0.5;
    std::vector<int> no_labels;
    std::vector<int> no_seeds{0, 0};
    EspSystem sys = assemble_system(x, no_labels, no_seeds, 1.0, 1.0);
    for (double v : sys.rhs) CHECK(v == 0.0);
    auto solution = cg_solve(sys.matrix, sys.rhs, 1e-12, 100);
    for (double v : solution) CHECK(v == 0.0);
}

TEST_CASE("assembled system equals the dense definitional build", "[signs][system][oracle]") {
    RandomSource rng(515);
    for (int trial = 0; trial < 5; ++trial) {
        const std::size_t n = 6 + rng.index_below(10);
        const std::size_t n_l = rng.index_below(n);
        auto data = random_instance(n, n_l, rng);
        const PolaritySeed seed = PolaritySeed::standard();
        EspSystem sys = assemble_system(data.features, data.labels, seed.polarity, 0.1, 0.5);
        Matrix dense = dense_esp_system(data.features, n_l, seed.polarity, sys.feature_order, 0.1, 0.5);

        const std::size_t dim = n + kEdgeFeatureCount;
        for (std::size_t j = 0; j < dim; ++j) {
            std::vector<double> e(dim, 0.0);
            e[j] = 1.0;
            auto col = sys.matrix.multiply(e);
            for (std::size_t i = 0; i < dim; ++i)
                REQUIRE(col[i] == Catch::Approx(dense(i, j)).margin(1e-12));
        }
    }
}

TEST_CASE("negative feature values are rejected", "[signs][system]") {
    Matrix x(1, 2);
    x(0, 0) = -1.0;
    std::vector<int> labels{1};
    std::vector<int> polarity{0, 0};
    CHECK_THROWS_AS(assemble_system(x, labels, polarity, 1.0, 1.0), UsageError);
}

TEST_CASE("clamping limits of the trained model", "[signs][train]") {
    RandomSource rng(2222);
    auto data = random_instance(12, 12, rng);
    const PolaritySeed seed = PolaritySeed::standard();

    EspOptions strong_labels;
    strong_labels.beta1 = 1e6;
    strong_labels.beta2 = 0.5;
    EspModel m1 = esp_train(data, seed, strong_labels);
    for (std::size_t i = 0; i < data.labels.size(); ++i)
        CHECK(std::abs(m1.edge_estimates[i] - data.labels[i]) <= 1e-3);

    auto unlabeled = LabeledEdgeSet(data.features, {});
    EspOptions strong_seeds;
    strong_seeds.beta1 = 0.1;
    strong_seeds.beta2 = 1e6;
    EspModel m2 = esp_train(unlabeled, seed, strong_seeds);
    for (std::size_t j = 0; j < kEdgeFeatureCount; ++j)
        if (seed.polarity[j] != 0)
            CHECK(std::abs(m2.classifier[j] - seed.polarity[j]) <= 1e-3);
}

TEST_CASE("trained solution matches a dense direct solve", "[signs][train][oracle]") {
    RandomSource rng(31337);
    for (int trial = 0; trial < 8; ++trial) {
        const std::size_t n = 5 + rng.index_below(46);  // up to 50 edges
        const std::size_t n_l = rng.index_below(n + 1);
        auto data = random_instance(n, n_l, rng);
        const PolaritySeed seed = PolaritySeed::standard();
        EspOptions options;  // defaults: beta1 = 0.1, beta2 = 0.5, tol 1e-8

        EspModel model = esp_train(data, seed, options);

        EspSystem sys = assemble_system(data.features, data.labels, seed.polarity, options.beta1,
                                        options.beta2);
        Matrix dense = dense_esp_system(data.features, n_l, seed.polarity, sys.feature_order,
                                        options.beta1, options.beta2);
        auto want = oracles::dense_solve(dense, sys.rhs);

        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            num += (model.edge_estimates[i] - want[i]) * (model.edge_estimates[i] - want[i]);
            den += want[i] * want[i];
        }
        for (std::size_t p = 0; p < kEdgeFeatureCount; ++p) {
            const double got = model.classifier[sys.feature_order[p]];
            num += (got - want[n + p]) * (got - want[n + p]);
            den += want[n + p] * want[n + p];
        }
        CHECK(std::sqrt(num) <= 1e-8 * std::sqrt(den) + 1e-12);
    }
}

TEST_CASE("solution is the minimizer of the objective", "[signs][train][property]") {
    RandomSource rng(606);
    auto data = random_instance(20, 8, rng);
    const PolaritySeed seed = PolaritySeed::standard();
    EspOptions options;
    options.cg_tol = 1e-12;
    EspModel model = esp_train(data, seed, options);

    auto objective = [&](std::span<const double> d_est, std::span<const double> c) {
        return esp_objective(data.features, data.labels, seed.polarity, options.beta1,
                             options.beta2, d_est, c);
    };
    std::vector<double> c(model.classifier.begin(), model.classifier.end());
    const double at_solution = objective(model.edge_estimates, c);

    // Finite-difference gradient vanishes (relative to the objective scale).
    const double h = 1e-5;
    const double tol = 1e-4 * std::max(1.0, std::abs(at_solution));
    for (std::size_t i = 0; i < model.edge_estimates.size(); ++i) {
        auto d_plus = model.edge_estimates;
        auto d_minus = model.edge_estimates;
        d_plus[i] += h;
        d_minus[i] -= h;
        const double g = (objective(d_plus, c) - objective(d_minus, c)) / (2 * h);
        REQUIRE(std::abs(g) <= tol);
    }
    for (std::size_t j = 0; j < kEdgeFeatureCount; ++j) {
        auto c_plus = c;
        auto c_minus = c;
        c_plus[j] += h;
        c_minus[j] -= h;
        const double g =
            (objective(model.edge_estimates, c_plus) - objective(model.edge_estimates, c_minus)) /
            (2 * h);
        REQUIRE(std::abs(g) <= tol);
    }

    // Random perturbations only increase the objective.
    RandomSource prng(607);
    for (int k = 0; k < 100; ++k) {
        auto d_pert = model.edge_estimates;
        auto c_pert = c;
        for (double& v : d_pert) v += prng.uniform(-0.1, 0.1);
        for (double& v : c_pert) v += prng.uniform(-0.1, 0.1);
        REQUIRE(objective(d_pert, c_pert) >= at_solution - 1e-10);
    }

    // Cheaper than the zero vector and the label/seed padding.
    std::vector<double> zero_d(data.size(), 0.0), zero_c(kEdgeFeatureCount, 0.0);
    CHECK(at_solution <= objective(zero_d, zero_c) + 1e-10);
    std::vector<double> pad_d(data.size(), 0.0);
    for (std::size_t i = 0; i < data.labels.size(); ++i) pad_d[i] = data.labels[i];
    std::vector<double> pad_c(kEdgeFeatureCount, 0.0);
    for (std::size_t j = 0; j < kEdgeFeatureCount; ++j) pad_c[j] = seed.polarity[j];
    CHECK(at_solution <= objective(pad_d, pad_c) + 1e-10);
}

TEST_CASE("prediction basics and scale invariance", "[signs][predict]") {
    EspModel model;
    model.classifier[0] = 1.0;
    std::vector<double> x(kEdgeFeatureCount, 0.0);
    x[0] = 3.0;
    CHECK(esp_predict(model, x) == 1);
    model.classifier[0] = -1.0;
    CHECK(esp_predict(model, x) == -1);
    model.classifier[0] = 0.0;
    CHECK(esp_predict(model, x) == 1);  // exact-zero tie-break

    RandomSource rng(99);
    EspModel scaled;
    for (std::size_t j = 0; j < kEdgeFeatureCount; ++j) scaled.classifier[j] = rng.normal();
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> features(kEdgeFeatureCount);
        for (double& v : features) v = rng.uniform(0.0, 5.0);
        const int before = esp_predict(scaled, features);
        EspModel stretched = scaled;
        const double alpha = rng.uniform(0.01, 100.0);
        for (double& c : stretched.classifier) c *= alpha;
        CHECK(esp_predict(stretched, features) == before);
    }
}

TEST_CASE("balanced sampling is exact, guarded, deterministic", "[signs][sample]") {
    RandomSource build(5);
    SignedDiGraph g(30);
    for (int k = 0; k < 60; ++k) {
        std::size_t u = build.index_below(30), v = build.index_below(30);
        if (u == v || g.sign_of(u, v)) continue;
        g.add_edge(u, v, build.bernoulli(0.5) ? 1 : -1);
    }
    std::size_t pos = 0, neg = 0;
    for (const auto& e : g.edges()) (e.sign > 0 ? pos : neg) += 1;

    RandomSource rng(77);
    auto all = make_balanced_edge_sample(g, pos, neg, rng);
    CHECK(all.size() == pos + neg);

    CHECK_THROWS_AS(make_balanced_edge_sample(g, pos + 1, neg, rng), UsageError);

    RandomSource r1(123), r2(123);
    auto s1 = make_balanced_edge_sample(g, 5, 5, r1);
    auto s2 = make_balanced_edge_sample(g, 5, 5, r2);
    CHECK(s1.edges == s2.edges);
    CHECK(s1.signs == s2.signs);
}

TEST_CASE("untrained logistic model predicts the majority class", "[signs][baseline]") {
    LogisticModel lm;
    std::vector<double> x(kEdgeFeatureCount, 1.0);
    CHECK(logistic_predict(lm, x) == 1);
}

TEST_CASE("logistic baseline separates easy data", "[signs][baseline]") {
    RandomSource rng(404);
    const std::size_t n = 60;
    Matrix x(n, kEdgeFeatureCount);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        labels[i] = i % 2 == 0 ? 1 : -1;
        for (std::size_t j = 0; j < kEdgeFeatureCount; ++j) x(i, j) = rng.uniform(0.0, 1.0);
        x(i, 3) += labels[i] > 0 ? 3.0 : 0.0;  // separating feature
    }
    auto lm = logistic_train(x, labels);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (logistic_predict(lm, x.row(i)) == labels[i]) ++correct;
    CHECK(correct == n);
}

TEST_CASE("evaluation protocol on a small planted family", "[signs][evaluate]") {
    RandomSource gen(808);
    PlantedSignConfig cfg;
    cfg.vertex_count = 120;
    cfg.edge_probability = 0.08;
    cfg.sign_noise = 0.10;
    SignedDiGraph g = make_planted_signed_digraph(cfg, gen);

    RandomSource sampler(809);
    auto sample = make_balanced_edge_sample(g, 200, 200, sampler);

    const std::vector<std::size_t> schedule{0, 50};
    RandomSource eval_rng(810);
    auto eval = evaluate_esp(g, sample, schedule, 3, eval_rng, {}, true);

    REQUIRE(eval.esp.size() == 2);
    CHECK(eval.esp[0].n_l == 0);
    CHECK(eval.esp[0].trials == 3);
    CHECK(eval.esp[0].mean_accuracy >= 0.75);  // seeded zero-label prediction works
    CHECK(eval.esp[1].mean_accuracy >= 0.75);

    // With no labels the logistic baseline degenerates to always-positive,
    // which is chance on a balanced sample.
    CHECK(eval.baseline[0].mean_accuracy == Catch::Approx(0.5).margin(0.06));

    // Determinism: same seed, same numbers.
    RandomSource eval_rng2(810);
    auto eval2 = evaluate_esp(g, sample, schedule, 3, eval_rng2, {}, true);
    CHECK(eval.esp[0].mean_accuracy == eval2.esp[0].mean_accuracy);
    CHECK(eval.esp[1].stddev == eval2.esp[1].stddev);

    CHECK_THROWS_AS(evaluate_esp(g, sample, std::vector<std::size_t>{500}, 3, eval_rng), UsageError);
}
