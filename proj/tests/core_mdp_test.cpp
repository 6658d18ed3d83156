#include <doctest.h>

#include <numeric>

#include "seqclf/core_mdp.hpp"
#include "seqclf/dwsc_mdp.hpp"
#include "support.hpp"

using namespace seqclf;

namespace {

FeaturizedAction dense_action(std::size_t id, const std::vector<double>& phi_sa) {
    return {ActionId{id}, pack_block(phi_sa, 0, phi_sa.size())};
}

// Tiny chain problem: at each of `length` positions the agent may advance
// (reward +1) or quit (reward -1); the walk ends after `length` advances.
struct Walk {
    using State = std::size_t;
    std::size_t length = 3;

    State start() const { return 0; }
    std::vector<ActionId> actions(const State& s) const {
        if (s >= length)
            return {};
        return {ActionId{0}, ActionId{1}};
    }
    Transition<State> step(const State& s, ActionId a) const {
        if (a.index == 0)
            return {s + 1, 1.0};
        return {length + 1, -1.0};
    }
    BlockFeature featurize(const State&, ActionId a) const {
        const std::vector<double> phi{1.0};
        return pack_block(phi, a.index, 2);
    }
};

} // namespace

TEST_SUITE("core_mdp") {

TEST_CASE("block_vector places phi at the action offset") {
    const std::vector<double> phi{1, 2};
    CHECK(block_vector(phi, ActionId{1}, 3) == std::vector<double>{0, 0, 1, 2, 0, 0});
    CHECK(block_vector(phi, ActionId{0}, 3) == std::vector<double>{1, 2, 0, 0, 0, 0});
}

TEST_CASE("block_vector rejects bad input") {
    const std::vector<double> phi{1, 2};
    CHECK_THROWS_AS(block_vector(phi, ActionId{3}, 3), Error);
    try {
        block_vector(phi, ActionId{3}, 3);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::invalid_action);
    }
    CHECK_THROWS_AS(block_vector(std::vector<double>{}, ActionId{0}, 3), Error);
}

TEST_CASE("block vectors of distinct actions have disjoint support and slice-local scores") {
    testutil::Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t m = 1 + testutil::index(rng, 6);
        const std::size_t num_actions = 2 + testutil::index(rng, 5);
        auto phi = testutil::random_vector(rng, m);
        phi[0] = 1.0;
        const std::size_t a = testutil::index(rng, num_actions);
        std::size_t b = testutil::index(rng, num_actions - 1);
        if (b >= a)
            ++b;
        const auto va = block_vector(phi, ActionId{a}, num_actions);
        const auto vb = block_vector(phi, ActionId{b}, num_actions);
        for (std::size_t i = 0; i < va.size(); ++i)
            CHECK((va[i] == 0.0 || vb[i] == 0.0));

        Eigen::VectorXd theta = testutil::random_theta(rng, m * num_actions);
        const LinearPolicy p(theta, m, num_actions);
        double slice_dot = 0.0;
        for (std::size_t k = 0; k < m; ++k)
            slice_dot += theta(static_cast<Eigen::Index>(a * m + k)) * phi[k];
        CHECK(score(p, va) == doctest::Approx(slice_dot).epsilon(1e-14));

        // Perturbing any other slice leaves the score untouched.
        Eigen::VectorXd perturbed = theta;
        for (std::size_t k = 0; k < m; ++k)
            perturbed(static_cast<Eigen::Index>(b * m + k)) += testutil::uniform(rng, -5, 5);
        CHECK(score(LinearPolicy(perturbed, m, num_actions), va) == score(p, va));
    }
}

TEST_CASE("score examples") {
    const std::vector<double> phi{3, 0, 1};
    CHECK(score(LinearPolicy::zeros(3, 3, 1), phi) == 0.0);
    Eigen::VectorXd e(3);
    e << 0, 1, 0;
    CHECK(score(LinearPolicy(e, 3, 1), std::vector<double>{4, 7.5, 2}) == 7.5);
    Eigen::VectorXd t(3);
    t << 1, -1, 2;
    CHECK(score(LinearPolicy(t, 3, 1), phi) == 5.0);
    CHECK_THROWS_AS(score(LinearPolicy(t, 3, 1), std::vector<double>{1, 2}), Error);
}

TEST_CASE("sparse and dense scores agree") {
    testutil::Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t m = 1 + testutil::index(rng, 8);
        const std::size_t na = 1 + testutil::index(rng, 4);
        auto phi = testutil::random_vector(rng, m);
        for (auto& v : phi)
            if (rng() % 3 == 0)
                v = 0.0;
        const ActionId a{testutil::index(rng, na)};
        const LinearPolicy p(testutil::random_theta(rng, m * na), m, na);
        const auto dense = block_vector(phi, a, na);
        const auto sparse = pack_block(phi, a.index * m, m * na);
        CHECK(sparse.to_dense() == dense);
        CHECK(score(p, sparse) == doctest::Approx(score(p, dense)).epsilon(1e-14));
    }
}

TEST_CASE("greedy_action picks the strict maximum and breaks ties by index") {
    Eigen::VectorXd t(2);
    t << 1, 1;
    const LinearPolicy p(t, 2, 1);
    {
        const std::vector<FeaturizedAction> one{dense_action(4, {0.1, 0.0})};
        CHECK(greedy_action(p, one).index == 4);
    }
    {
        const std::vector<FeaturizedAction> two{dense_action(0, {0.2, 0.0}), dense_action(1, {0.0, 0.7})};
        CHECK(greedy_action(p, two).index == 1);
    }
    {
        const std::vector<FeaturizedAction> tie{dense_action(5, {0.5, 0.0}), dense_action(3, {0.0, 0.5})};
        CHECK(greedy_action(p, tie).index == 3);
    }
    CHECK_THROWS_AS(greedy_action(p, std::vector<FeaturizedAction>{}), Error);
}

TEST_CASE("run_episode from a terminal state is empty") {
    const Walk w{3};
    Eigen::VectorXd t(2);
    t << 1, 0;
    const auto trace = run_episode(w, LinearPolicy(t, 1, 2), std::size_t{3}, 10);
    CHECK(trace.actions.empty());
    CHECK(trace.cumulative_reward == 0.0);
    CHECK_FALSE(trace.truncated);
}

TEST_CASE("run_episode accumulates rewards and flags truncation") {
    const Walk w{4};
    Eigen::VectorXd t(2);
    t << 1, 0;
    const LinearPolicy advance(t, 1, 2);
    const auto full = run_episode(w, advance, w.start(), 10);
    CHECK(full.actions.size() == 4);
    CHECK(full.cumulative_reward == 4.0);
    CHECK(std::accumulate(full.rewards.begin(), full.rewards.end(), 0.0) == full.cumulative_reward);

    const auto cut = run_episode(w, advance, w.start(), 2);
    CHECK(cut.truncated);
    CHECK(cut.actions.size() == 2);

    // An injected selector overrides the greedy choice.
    const auto quit = run_episode(w, advance, w.start(), 10,
                                  [](std::span<const FeaturizedAction>) { return ActionId{1}; });
    CHECK(quit.actions.size() == 1);
    CHECK(quit.cumulative_reward == -1.0);
    CHECK_THROWS_AS(run_episode(w, advance, w.start(), 0), Error);
}

TEST_CASE("dwsc episode with two acquisitions then a correct label earns -2 lambda") {
    const dwsc::DwscLayout layout(3, 2, dwsc::Featurization::unconstrained);
    Eigen::VectorXd t = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.theta_dim()));
    // f0 first (intercept 3), then f1 (boosted by z0), then label 1 once z1 is set.
    testutil::set_weight(t, layout, 0, testutil::intercept_position(layout, 0), 3.0);
    testutil::set_weight(t, layout, 1, testutil::intercept_position(layout, 1), 2.0);
    testutil::set_weight(t, layout, 1, 0, 10.0);
    testutil::set_weight(t, layout, 2, testutil::intercept_position(layout, 2), -10.0);
    testutil::set_weight(t, layout, 4, testutil::intercept_position(layout, 4), 1.0);
    testutil::set_weight(t, layout, 4, 1, 20.0);
    const LinearPolicy p(t, layout.block_dim(), layout.num_actions());

    const std::vector<double> x{0.3, 0.6, 0.9};
    const dwsc::RewardParams params{0.01};
    const dwsc::DatumEpisode episode(x, 1, layout, params);
    const auto trace = run_episode(episode, p, episode.start(), episode.horizon_cap());
    REQUIRE(trace.actions.size() == 3);
    CHECK(trace.actions[0].index == 0);
    CHECK(trace.actions[1].index == 1);
    CHECK(trace.actions[2].index == 4);
    CHECK(trace.cumulative_reward == doctest::Approx(-2 * 0.01).epsilon(1e-15));
    CHECK(trace.final_state.predicted_label == 1);
}

TEST_CASE("dominating classification weights give a one-step episode") {
    testutil::Rng rng(3);
    const dwsc::DwscLayout layout(4, 3, dwsc::Featurization::unconstrained);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd t = testutil::random_theta(rng, layout.theta_dim(), 0.1);
        for (std::size_t y = 0; y < 3; ++y)
            testutil::set_weight(t, layout, 4 + y, testutil::intercept_position(layout, 4 + y),
                                 100.0 + static_cast<double>(y));
        const LinearPolicy p(t, layout.block_dim(), layout.num_actions());
        const auto x = testutil::random_vector(rng, 4, 0, 1);
        const std::size_t label = testutil::index(rng, 3);
        const dwsc::DatumEpisode episode(x, label, layout, {0.05});
        const auto trace = run_episode(episode, p, episode.start(), episode.horizon_cap());
        REQUIRE(trace.actions.size() == 1);
        CHECK(trace.actions[0].index == 6);
        CHECK(trace.cumulative_reward == (label == 2 ? 0.0 : -1.0));
    }
}

TEST_CASE("greedy episodes are reproducible") {
    testutil::Rng rng(8);
    const dwsc::DwscLayout layout(6, 3, dwsc::Featurization::unconstrained);
    const auto p = testutil::random_policy(rng, layout);
    const auto x = testutil::random_vector(rng, 6, 0, 1);
    const dwsc::DatumEpisode episode(x, 0, layout, {0.01});
    const auto a = run_episode(episode, p, episode.start(), episode.horizon_cap());
    const auto b = run_episode(episode, p, episode.start(), episode.horizon_cap());
    CHECK(a.actions == b.actions);
    CHECK(a.rewards == b.rewards);
}

}
