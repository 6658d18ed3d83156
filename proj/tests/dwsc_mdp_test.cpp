#include <doctest.h>

#include <algorithm>

#include "seqclf/dwsc_mdp.hpp"
#include "support.hpp"

using namespace seqclf;
using namespace seqclf::dwsc;

namespace {

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::io;
}

DatumState state_with(std::span<const double> x, const char* bits) {
    return {x, FeatureMask::parse(bits), std::nullopt};
}

// Score of every action recomputed from its full block. Acquired features
// keep a well-defined block even though they are no longer available.
std::vector<double> full_scores(const LinearPolicy& p, std::span<const double> x, const FeatureMask& z,
                                const DwscLayout& layout) {
    std::vector<double> out;
    for (std::size_t a = 0; a < layout.num_actions(); ++a) {
        const ActionId id{a};
        const auto act = layout.action(id);
        std::vector<double> block;
        if (!act.is_feature()) {
            block = featurize(x, z, act, layout).block();
        } else if (layout.featurization() == Featurization::unconstrained) {
            block = datum_phi(x, z, layout.intercept());
        } else {
            for (std::size_t j = 0; j < z.size(); ++j)
                block.push_back(z.test(j) ? 1.0 : 0.0);
            if (layout.intercept())
                block.push_back(1.0);
        }
        out.push_back(score(p, pack_block(block, layout.block_offset(id), layout.theta_dim())));
    }
    return out;
}

} // namespace

TEST_SUITE("dwsc_mdp") {

TEST_CASE("FeatureMask parsing and counting") {
    const auto z = FeatureMask::parse("101");
    CHECK(z.size() == 3);
    CHECK(z.count() == 2);
    CHECK(z.test(0));
    CHECK_FALSE(z.test(1));
    CHECK(z.to_string() == "101");
    CHECK(z.with(1).all());
    CHECK(z.count() == 2);
    CHECK(kind_of([&] { (void)z.with(0); }) == ErrorKind::invalid_action);
    CHECK(kind_of([] { (void)FeatureMask::parse("12"); }) == ErrorKind::parse);
}

TEST_CASE("available actions follow the fixed enumeration") {
    const std::vector<double> x{1, 2, 3};
    using A = DwscAction;
    CHECK(available_actions(state_with(x, "000"), 2) ==
          std::vector<A>{A::select(0), A::select(1), A::select(2), A::classify(0), A::classify(1)});
    CHECK(available_actions(state_with(x, "101"), 2) == std::vector<A>{A::select(1), A::classify(0), A::classify(1)});
    CHECK(available_actions(state_with(x, "111"), 2) == std::vector<A>{A::classify(0), A::classify(1)});
    auto done = state_with(x, "000");
    done.predicted_label = 1;
    CHECK(kind_of([&] { (void)available_actions(done, 2); }) == ErrorKind::terminal_state);
}

TEST_CASE("transition examples") {
    const std::vector<double> x{1, 2, 3};
    const auto s = state_with(x, "010");
    const auto t = transition(s, DwscAction::select(2));
    CHECK(t.z.to_string() == "011");
    CHECK_FALSE(t.terminal());
    CHECK(t.x.data() == x.data());

    const auto c = transition(s, DwscAction::classify(1));
    CHECK(c.terminal());
    CHECK(c.predicted_label == 1);
    CHECK(c.z.to_string() == "010");

    CHECK(kind_of([&] { (void)transition(s, DwscAction::select(1)); }) == ErrorKind::invalid_action);
    CHECK(kind_of([&] { (void)transition(c, DwscAction::classify(0)); }) == ErrorKind::terminal_state);
}

TEST_CASE("reward table") {
    const std::vector<double> x{1, 2, 3};
    const auto s = state_with(x, "000");
    const RewardParams params{0.01};
    CHECK(reward(s, DwscAction::select(0), 1, params) == -0.01);
    CHECK(reward(s, DwscAction::classify(1), 1, params) == 0.0);
    CHECK(reward(s, DwscAction::classify(0), 1, params) == -1.0);
}

TEST_CASE("lambda validation") {
    CHECK_NOTHROW(RewardParams{0.0}.validate());
    CHECK(kind_of([] { RewardParams{1.0}.validate(); }) == ErrorKind::invalid_argument);
    CHECK(kind_of([] { RewardParams{-0.1}.validate(); }) == ErrorKind::invalid_argument);
}

TEST_CASE("masked_restrict examples") {
    const std::vector<double> x{3, -2, 5};
    CHECK(masked_restrict(x, FeatureMask::parse("111")) == x);
    CHECK(masked_restrict(x, FeatureMask::parse("000")) == std::vector<double>{0, 0, 0});
    CHECK(masked_restrict(x, FeatureMask::parse("101")) == std::vector<double>{3, 0, 5});
    CHECK(kind_of([&] { (void)masked_restrict(x, FeatureMask::parse("10")); }) == ErrorKind::dimension);
}

TEST_CASE("unconstrained featurization") {
    const std::vector<double> x{3, 4};
    const DwscLayout plain(2, 1, Featurization::unconstrained, false);
    CHECK(plain.theta_dim() == 12);
    const auto f = featurize_unconstrained(x, FeatureMask::parse("10"), DwscAction::select(1), plain);
    CHECK(f.to_dense() == std::vector<double>{0, 0, 0, 0, 1, 0, 3, 0, 0, 0, 0, 0});

    const auto empty = featurize_unconstrained(x, FeatureMask::parse("00"), DwscAction::select(0), plain);
    CHECK(empty.nnz() == 0);

    // A known zero differs from an unknown feature.
    const std::vector<double> zero_first{0, 4};
    CHECK(datum_phi(zero_first, FeatureMask::parse("10"), false) == std::vector<double>{1, 0, 0, 0});
    CHECK(datum_phi(zero_first, FeatureMask::parse("00"), false) == std::vector<double>{0, 0, 0, 0});

    const DwscLayout with_bias(2, 1, Featurization::unconstrained, true);
    CHECK(with_bias.theta_dim() == 15);
    const auto g = featurize_unconstrained(x, FeatureMask::parse("10"), DwscAction::select(1), with_bias);
    CHECK(g.block() == std::vector<double>{1, 0, 3, 0, 1});
    CHECK(g.offset == 5);
}

TEST_CASE("constrained featurization") {
    const std::vector<double> x{3, 4};
    const DwscLayout plain(2, 1, Featurization::constrained, false);
    CHECK(plain.theta_dim() == 2 * 2 + 1 * 6);
    const auto f = featurize_constrained(x, FeatureMask::parse("10"), DwscAction::select(1), plain);
    CHECK(f.to_dense() == std::vector<double>{0, 0, 1, 0, 0, 0, 0, 0, 0, 0});
    const auto y = featurize_constrained(x, FeatureMask::parse("10"), DwscAction::classify(0), plain);
    CHECK(y.to_dense() == std::vector<double>{0, 0, 0, 0, 1, 0, 1, 0, 3, 0});

    const DwscLayout biased(2, 1, Featurization::constrained, true);
    CHECK(biased.theta_dim() == 2 * 3 + 7);
    CHECK(featurize_constrained(x, FeatureMask::parse("10"), DwscAction::classify(0), biased).block() ==
          std::vector<double>{1, 0, 1, 0, 3, 0, 1});
}

TEST_CASE("constrained feature-action features never depend on x") {
    testutil::Rng rng(21);
    for (bool bias : {false, true}) {
        const DwscLayout layout(7, 3, Featurization::constrained, bias);
        for (int trial = 0; trial < 100; ++trial) {
            const auto x = testutil::random_vector(rng, 7);
            const auto x2 = testutil::random_vector(rng, 7, -9, 9);
            auto z = testutil::random_mask(rng, 7);
            if (z.all())
                continue;
            std::size_t j = testutil::index(rng, 7);
            while (z.test(j))
                j = (j + 1) % 7;
            const auto a = featurize_constrained(x, z, DwscAction::select(j), layout);
            const auto b = featurize_constrained(x2, z, DwscAction::select(j), layout);
            CHECK(a.to_dense() == b.to_dense());
        }
    }
}

TEST_CASE("featurize rejects the wrong layout and dimensions") {
    const std::vector<double> x{1, 2};
    const DwscLayout un(2, 1, Featurization::unconstrained);
    const DwscLayout con(2, 1, Featurization::constrained);
    const auto z = FeatureMask::parse("00");
    CHECK(kind_of([&] { (void)featurize_constrained(x, z, DwscAction::select(0), un); }) == ErrorKind::dimension);
    CHECK(kind_of([&] { (void)featurize_unconstrained(x, z, DwscAction::select(0), con); }) == ErrorKind::dimension);
    const std::vector<double> longer{1, 2, 3};
    CHECK(kind_of([&] { (void)featurize(longer, FeatureMask(3), DwscAction::select(0), un); }) ==
          ErrorKind::dimension);
}

TEST_CASE("layout ids round-trip") {
    for (auto f : {Featurization::unconstrained, Featurization::constrained}) {
        const DwscLayout layout(5, 3, f);
        std::size_t total = 0;
        for (std::size_t a = 0; a < layout.num_actions(); ++a) {
            CHECK(layout.id(layout.action(ActionId{a})).index == a);
            CHECK(layout.block_offset(ActionId{a}) == total);
            total += layout.block_length(ActionId{a});
        }
        CHECK(total == layout.theta_dim());
    }
}

TEST_CASE("classify with dominating classification weights stops at once") {
    const DwscLayout layout(4, 2, Featurization::unconstrained);
    Eigen::VectorXd t = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.theta_dim()));
    testutil::set_weight(t, layout, 5, testutil::intercept_position(layout, 5), 1.0);
    const LinearPolicy p(t, layout.block_dim(), layout.num_actions());
    const std::vector<double> x{0.1, 0.2, 0.3, 0.4};
    const auto r = classify(p, x, layout);
    CHECK(r.label == 1);
    CHECK(r.steps == 1);
    CHECK(r.z.count() == 0);
}

TEST_CASE("classify with dominating feature weights acquires everything") {
    for (auto f : {Featurization::unconstrained, Featurization::constrained}) {
        const DwscLayout layout(4, 2, f);
        Eigen::VectorXd t = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.theta_dim()));
        for (std::size_t j = 0; j < 4; ++j)
            testutil::set_weight(t, layout, j, testutil::intercept_position(layout, j), 5.0 - static_cast<double>(j));
        const LinearPolicy p(t, layout.block_dim(), layout.num_actions());
        const std::vector<double> x{0.1, 0.2, 0.3, 0.4};
        const auto r = classify(p, x, layout);
        CHECK(r.z.all());
        CHECK(r.steps == 5);
        CHECK(r.features == std::vector<std::size_t>{0, 1, 2, 3});
        if (f == Featurization::constrained) {
            const auto chain = feature_chain(p, layout);
            const auto viachain = classify(p, x, layout, &chain);
            CHECK(viachain.features == r.features);
            CHECK(viachain.label == r.label);
        }
    }
}

TEST_CASE("incremental scores match full recomputation along greedy paths") {
    testutil::Rng rng(99);
    for (auto f : {Featurization::unconstrained, Featurization::constrained})
        for (bool bias : {false, true}) {
            const DwscLayout layout(9, 4, f, bias);
            for (int trial = 0; trial < 50; ++trial) {
                const auto p = testutil::random_policy(rng, layout);
                const auto x = testutil::random_vector(rng, 9, 0, 1);
                FeatureMask z(9);
                auto table = incremental_action_scores(x, z, nullptr, std::nullopt, p, layout);
                CHECK(table.scores == full_scores(p, x, z, layout));
                for (std::size_t step = 0; step < 9; ++step) {
                    std::size_t j = testutil::index(rng, 9);
                    while (z.test(j))
                        j = (j + 1) % 9;
                    z.set(j);
                    table = incremental_action_scores(x, z, &table, j, p, layout);
                    const auto full = full_scores(p, x, z, layout);
                    for (std::size_t a = 0; a < full.size(); ++a)
                        CHECK(std::abs(table.scores[a] - full[a]) <= 1e-12);
                }
            }
        }
}

TEST_CASE("incremental scorer rejects inconsistent caches") {
    testutil::Rng rng(2);
    const DwscLayout layout(4, 2, Featurization::unconstrained);
    const auto p = testutil::random_policy(rng, layout);
    const std::vector<double> x{0.1, 0.2, 0.3, 0.4};
    const auto base = incremental_action_scores(x, FeatureMask(4), nullptr, std::nullopt, p, layout);
    const auto z1 = FeatureMask(4).with(1);
    CHECK(kind_of([&] { (void)incremental_action_scores(x, z1, &base, std::nullopt, p, layout); }) ==
          ErrorKind::cache_invalid);
    CHECK(kind_of([&] { (void)incremental_action_scores(x, z1, &base, 2, p, layout); }) ==
          ErrorKind::cache_invalid);
    CHECK(kind_of([&] { (void)incremental_action_scores(x, z1, nullptr, 1, p, layout); }) ==
          ErrorKind::cache_invalid);
    CHECK_NOTHROW((void)incremental_action_scores(x, z1, &base, 1, p, layout));
}

TEST_CASE("classify agrees with the generic greedy engine") {
    testutil::Rng rng(17);
    for (auto f : {Featurization::unconstrained, Featurization::constrained}) {
        const DwscLayout layout(6, 3, f);
        for (int trial = 0; trial < 200; ++trial) {
            const auto p = testutil::random_policy(rng, layout);
            const auto x = testutil::random_vector(rng, 6, 0, 1);
            const DatumEpisode episode(x, 0, layout, {0.01});
            const auto trace = run_episode(episode, p, episode.start(), episode.horizon_cap());
            CHECK_FALSE(trace.truncated);
            const auto r = classify(p, x, layout);
            std::vector<std::size_t> acquired;
            for (std::size_t k = 0; k + 1 < trace.actions.size(); ++k)
                acquired.push_back(trace.actions[k].index);
            CHECK(r.features == acquired);
            CHECK(r.label == trace.actions.back().index - 6);
            CHECK(r.steps == r.z.count() + 1);
            if (f == Featurization::constrained) {
                const auto chain = feature_chain(p, layout);
                const auto c = classify(p, x, layout, &chain);
                CHECK(c.features == r.features);
                CHECK(c.label == r.label);
            }
        }
    }
}

TEST_CASE("episode reward equals minus loss minus lambda times features") {
    testutil::Rng rng(4);
    const DwscLayout layout(5, 3, Featurization::unconstrained);
    for (int trial = 0; trial < 300; ++trial) {
        const auto p = testutil::random_policy(rng, layout);
        const auto x = testutil::random_vector(rng, 5, 0, 1);
        const std::size_t label = testutil::index(rng, 3);
        const double lambda = testutil::uniform(rng, 0.0, 0.3);
        const DatumEpisode episode(x, label, layout, {lambda});
        const auto trace = run_episode(episode, p, episode.start(), episode.horizon_cap());
        const auto& final = trace.final_state;
        REQUIRE(final.terminal());
        const double loss = *final.predicted_label == label ? 0.0 : 1.0;
        CHECK(std::abs(trace.cumulative_reward - (-loss - lambda * static_cast<double>(final.z.count()))) <= 1e-12);
        // Masks only grow, one bit per feature action.
        DatumState s = episode.start();
        for (ActionId a : trace.actions) {
            const auto next = episode.step(s, a).next;
            if (layout.action(a).is_feature())
                CHECK(next.z.count() == s.z.count() + 1);
            for (std::size_t j = 0; j < 5; ++j)
                if (s.z.test(j))
                    CHECK(next.z.test(j));
            s = next;
        }
    }
}

TEST_CASE("constrained policies acquire features in one global order") {
    testutil::Rng rng(31);
    const DwscLayout layout(6, 2, Featurization::constrained);
    for (int trial = 0; trial < 30; ++trial) {
        const auto p = testutil::random_policy(rng, layout);
        const auto chain = feature_chain(p, layout);
        for (int d = 0; d < 40; ++d) {
            const auto x = testutil::random_vector(rng, 6, 0, 1);
            const auto r = classify(p, x, layout);
            REQUIRE(r.features.size() <= chain.order.size());
            CHECK(std::equal(r.features.begin(), r.features.end(), chain.order.begin()));
        }
    }
}

}
