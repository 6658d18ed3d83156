#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "seqclf/baselines.hpp"
#include "support.hpp"

using namespace seqclf;
using namespace seqclf::baselines;

namespace {

data::TabularDataset labelled(std::size_t n, std::vector<double> values, std::vector<std::size_t> labels,
                              std::size_t classes) {
    std::vector<std::string> names;
    for (std::size_t k = 0; k < classes; ++k)
        names.push_back(std::to_string(k));
    return data::TabularDataset(n, std::move(values), std::move(labels), std::move(names));
}

// Labels from a noisy sparse linear rule so the fits have something to find.
data::TabularDataset planted(testutil::Rng& rng, std::size_t rows, std::size_t n) {
    auto d = testutil::random_dataset(rng, rows, n, 2);
    std::vector<std::size_t> labels(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        const auto x = d.row(i);
        const double s = 3 * x[0] - 2 * x[1] + 0.5 * testutil::uniform(rng);
        labels[i] = s > 0.5 ? 1 : 0;
    }
    return labelled(n, d.values(), labels, 2);
}

double accuracy(const L1LinearModel& m, const data::TabularDataset& d) {
    std::size_t hit = 0;
    for (std::size_t i = 0; i < d.rows(); ++i)
        hit += m.predict(d.row(i)) == d.label(i) ? 1 : 0;
    return static_cast<double>(hit) / static_cast<double>(d.rows());
}

} // namespace

TEST_SUITE("baselines") {

TEST_CASE("soft threshold") {
    CHECK(soft_threshold(0.7, 0.2) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(soft_threshold(-0.1, 0.2) == 0.0);
    CHECK(soft_threshold(-0.7, 0.2) == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(soft_threshold(0.2, 0.2) == 0.0);
}

TEST_CASE("a dominating penalty zeroes every weight") {
    testutil::Rng rng(1);
    const auto d = planted(rng, 60, 5);
    const auto m = train_l1(d, 1e6);
    CHECK(m.weights.isZero(0.0));
    CHECK(model_sparsity(m) == 1.0);
    const std::size_t first = m.predict(d.row(0));
    for (std::size_t i = 1; i < d.rows(); ++i)
        CHECK(m.predict(d.row(i)) == first);

    const double lmax = l1_strength_max(d);
    CHECK(train_l1(d, lmax * 1.0001).weights.isZero(0.0));
    CHECK_FALSE(train_l1(d, lmax * 0.5).weights.isZero(0.0));
}

TEST_CASE("unpenalized fit separates two points") {
    const auto d = labelled(2, {0, 1, 1, 0}, {0, 1}, 2);
    const auto m = train_l1(d, 0.0, 20000, 1e-9);
    CHECK(accuracy(m, d) == 1.0);
}

TEST_CASE("sparsity counts unused feature columns") {
    L1LinearModel m;
    m.weights = Eigen::MatrixXd::Zero(2, 3);
    m.bias = Eigen::VectorXd::Zero(2);
    CHECK(model_sparsity(m) == 1.0);
    m.weights << 1, 0, 0, 0, 2, 0;
    CHECK(model_sparsity(m) == doctest::Approx(1.0 / 3).epsilon(1e-15));
    m.weights << 1, 1, 1, 1, 1, 1;
    CHECK(model_sparsity(m) == 0.0);
    CHECK(m.support() == std::vector<bool>{true, true, true});
}

TEST_CASE("majority baseline") {
    CHECK(majority_baseline(labelled(1, {0, 0, 0}, {0, 0, 1}, 2)).label == 0);
    CHECK(majority_baseline(labelled(1, {0, 0}, {0, 1}, 2)).label == 0);
    CHECK(majority_baseline(labelled(1, {0, 0, 0}, {2, 1, 1}, 3)).label == 1);
    testutil::Rng rng(2);
    for (int trial = 0; trial < 30; ++trial) {
        const auto d = testutil::random_dataset(rng, 5 + testutil::index(rng, 30), 2, 1 + testutil::index(rng, 4));
        const auto m = majority_baseline(d);
        std::vector<std::size_t> counts(d.num_classes(), 0);
        for (auto y : d.labels())
            ++counts[y];
        std::size_t hit = 0;
        for (std::size_t i = 0; i < d.rows(); ++i)
            hit += m.predict(d.row(i)) == d.label(i) ? 1 : 0;
        CHECK(hit == *std::max_element(counts.begin(), counts.end()));
    }
    const data::TabularDataset empty(1, {}, {}, {"a"});
    CHECK_THROWS_AS(majority_baseline(empty), Error);
}

TEST_CASE("accepted proximal steps never increase the objective") {
    testutil::Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const auto d = testutil::random_dataset(rng, 40, 6, 3);
        const double l1 = testutil::uniform(rng, 0.0, 0.05);
        const auto fit = fit_l1_logistic(d, l1, 300, 1e-8);
        for (const auto& trace : fit.objective_trace)
            for (std::size_t s = 1; s < trace.size(); ++s)
                CHECK(trace[s] <= trace[s - 1] + 1e-10);
    }
}

TEST_CASE("converged fits satisfy the l1 optimality conditions") {
    testutil::Rng rng(4);
    const auto d = planted(rng, 80, 6);
    const double l1 = 0.02;
    const auto fit = fit_l1_logistic(d, l1, 20000, 1e-9);
    REQUIRE(fit.converged[1]);
    // Gradient of the mean logistic loss for "class 1 vs rest", written out
    // directly.
    const auto& m = fit.model;
    std::vector<double> g(6, 0.0);
    double gb = 0.0;
    for (std::size_t i = 0; i < d.rows(); ++i) {
        const double y = d.label(i) == 1 ? 1.0 : -1.0;
        double margin = m.bias(1);
        for (std::size_t j = 0; j < 6; ++j)
            margin += m.weights(1, static_cast<Eigen::Index>(j)) * d.row(i)[j];
        const double coef = -y / (1.0 + std::exp(y * margin)) / static_cast<double>(d.rows());
        for (std::size_t j = 0; j < 6; ++j)
            g[j] += coef * d.row(i)[j];
        gb += coef;
    }
    CHECK(std::abs(gb) < 1e-6);
    for (std::size_t j = 0; j < 6; ++j) {
        const double w = m.weights(1, static_cast<Eigen::Index>(j));
        if (w != 0.0)
            CHECK(std::abs(g[j] + l1 * (w > 0 ? 1.0 : -1.0)) < 1e-6);
        else
            CHECK(std::abs(g[j]) <= l1 + 1e-6);
    }
    CHECK(m.weights(1, 0) > 0.0);
    CHECK(m.weights(1, 1) < 0.0);
}

TEST_CASE("sparsity grows with the penalty") {
    testutil::Rng rng(5);
    for (int trial = 0; trial < 5; ++trial) {
        const auto d = planted(rng, 100, 8);
        const double lmax = l1_strength_max(d);
        double last = -1.0;
        for (double frac : {0.001, 0.01, 0.1, 0.5, 1.01}) {
            const double s = model_sparsity(train_l1(d, frac * lmax, 3000, 1e-7));
            CHECK(s >= last);
            last = s;
        }
        CHECK(last == 1.0);
    }
}

TEST_CASE("invalid arguments") {
    const auto d = labelled(1, {0, 1}, {0, 1}, 2);
    CHECK_THROWS_AS(train_l1(d, -1.0), Error);
    const data::TabularDataset empty(1, {}, {}, {"a"});
    CHECK_THROWS_AS(train_l1(empty, 0.1), Error);
    L1LinearModel m;
    m.weights = Eigen::MatrixXd::Zero(2, 3);
    m.bias = Eigen::VectorXd::Zero(2);
    CHECK_THROWS_AS((void)m.predict(std::vector<double>{1, 2}), Error);
}

}
