#pragma once

// Approximate Policy Iteration with rollouts. Each iteration samples states
// from the training set, estimates the return of every available action by
// rolling out the current behaviour policy, and regresses a new linear
// Q-function on those estimates.

#include <chrono>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iostream>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "seqclf/core_mdp.hpp"
#include "seqclf/data_io.hpp"
#include "seqclf/dwsc_mdp.hpp"
#include "seqclf/parallel.hpp"
#include "seqclf/textseq_mdp.hpp"

namespace seqclf::api {

struct RolloutConfig {
    std::size_t num_states = 2000;
    std::size_t iterations = 10;
    double alpha = 0.9;
    std::size_t rollouts_per_action = 1;
    double ridge = 1e-6;
    /// Share of sampled feature-acquisition states forced to z = 0.
    double zero_mask_fraction = 0.25;
    std::uint64_t seed = 1;
    /// 0 selects the hardware concurrency. Results do not depend on it.
    std::size_t threads = 0;

    void validate() const;
};

struct RolloutSample {
    BlockFeature phi_sa;
    double estimated_return = 0.0;
    std::size_t item = 0;
    ActionId action;
    /// Acquired features, or reading position, of the sampled state.
    std::size_t depth = 0;
};

struct IterationDiagnostics {
    std::size_t iteration = 0;
    double mean_training_reward = 0.0;
    double mean_features_used = 0.0;
    double wall_ms = 0.0;
    std::size_t samples = 0;

    std::string to_json() const;
};

struct TrainResult {
    LinearPolicy policy;
    std::vector<IterationDiagnostics> diagnostics;
};

/// SplitMix64 finaliser over (seed, a, b); used to give every rollout state
/// its own generator so results do not depend on scheduling.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

/// Greedy with respect to `policy`, or uniform over the candidates when it
/// is null.
struct BehaviorPolicy {
    const LinearPolicy* policy = nullptr;

    ActionId select(std::span<const FeaturizedAction> actions, std::mt19937_64& rng) const;
};

/// Per-step Bernoulli(alpha) choice between the new and the previous
/// behaviour.
ActionId mixture_select(const BehaviorPolicy& previous, const BehaviorPolicy& next, double alpha,
                        std::mt19937_64& rng, std::span<const FeaturizedAction> actions);

ActionId alpha_mixture_select(const LinearPolicy& previous, const LinearPolicy& next, double alpha,
                              std::mt19937_64& rng, std::span<const FeaturizedAction> actions);

struct Behavior {
    BehaviorPolicy previous;
    BehaviorPolicy next;
    double alpha = 1.0;

    static Behavior uniform() { return {{}, {}, 1.0}; }
    ActionSelector selector(std::mt19937_64& rng) const;
};

/// Ridge least squares  min Σ (<θ,Φ> - R)² + ridge ||θ||². The Gram matrix
/// is block-diagonal by action block, so each block is solved on its own,
/// in the primal or the dual depending on which system is smaller. Blocks
/// without samples stay at zero.
Eigen::VectorXd fit_weights(std::span<const RolloutSample> samples, std::size_t theta_dim, double ridge);

LinearPolicy fit_policy(std::span<const RolloutSample> samples, std::size_t theta_dim, std::size_t block_dim,
                        std::size_t num_actions, double ridge);

/// Training problem: a set of items, each of which yields an MDP instance.
template <class T>
concept RolloutTask =
    requires(const T& t, std::size_t i, std::mt19937_64& rng, const typename T::Episode::State& s) {
        requires EpisodicProblem<typename T::Episode>;
        { t.size() } -> std::convertible_to<std::size_t>;
        { t.episode(i) } -> std::same_as<typename T::Episode>;
        { t.sample_state(i, rng) } -> std::same_as<typename T::Episode::State>;
        { t.depth(s) } -> std::convertible_to<std::size_t>;
        { t.theta_dim() } -> std::convertible_to<std::size_t>;
        { t.block_dim() } -> std::convertible_to<std::size_t>;
        { t.num_actions() } -> std::convertible_to<std::size_t>;
    };

class DwscTask {
public:
    using Episode = dwsc::DatumEpisode;

    DwscTask(const data::TabularDataset& train, dwsc::DwscLayout layout, dwsc::RewardParams params,
             double zero_mask_fraction);

    std::size_t size() const { return data_->rows(); }
    Episode episode(std::size_t i) const;
    /// z bits i.i.d. Bernoulli(0.5), or z = 0 with probability zero_mask_fraction.
    dwsc::DatumState sample_state(std::size_t i, std::mt19937_64& rng) const;
    std::size_t depth(const dwsc::DatumState& s) const { return s.z.count(); }

    std::size_t theta_dim() const { return layout_.theta_dim(); }
    std::size_t block_dim() const { return layout_.block_dim(); }
    std::size_t num_actions() const { return layout_.num_actions(); }
    const dwsc::DwscLayout& layout() const { return layout_; }

private:
    const data::TabularDataset* data_;
    dwsc::DwscLayout layout_;
    dwsc::RewardParams params_;
    double zero_mask_fraction_;
};

class TextTask {
public:
    using Episode = text::DocumentEpisode;

    TextTask(const data::Corpus& train, text::TextLayout layout, text::LabelMode mode);

    std::size_t size() const { return corpus_->docs.size(); }
    Episode episode(std::size_t i) const;
    /// p uniform in [1, |d|]; y_hat = 0 in mono mode, otherwise Bernoulli(0.5)
    /// bits with the all-ones vector excluded.
    text::ReadingState sample_state(std::size_t i, std::mt19937_64& rng) const;
    std::size_t depth(const text::ReadingState& s) const { return s.p; }

    std::size_t theta_dim() const { return layout_.theta_dim(); }
    std::size_t block_dim() const { return layout_.block_dim(); }
    std::size_t num_actions() const { return layout_.num_actions(); }
    const text::TextLayout& layout() const { return layout_; }

private:
    const data::Corpus* corpus_;
    text::TextLayout layout_;
    text::LabelMode mode_;
};

template <RolloutTask Task>
struct SampledState {
    std::size_t item;
    typename Task::Episode::State state;
};

/// Datum drawn uniformly with replacement, then the task's state sampler.
template <RolloutTask Task>
std::vector<SampledState<Task>> sample_states(const Task& task, std::size_t count, std::mt19937_64& rng) {
    if (task.size() == 0)
        raise(ErrorKind::invalid_dataset, "sample_states: empty training set");
    std::uniform_int_distribution<std::size_t> pick(0, task.size() - 1);
    std::vector<SampledState<Task>> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t i = pick(rng);
        out.push_back({i, task.sample_state(i, rng)});
    }
    return out;
}

/// One sample per available action: immediate reward of the action plus the
/// mean return of `rollouts` continuations under the behaviour policy.
template <EpisodicProblem P>
std::vector<RolloutSample> evaluate_actions(const P& problem, const typename P::State& state,
                                            const Behavior& behavior, std::size_t rollouts,
                                            std::size_t horizon_cap, std::mt19937_64& rng) {
    const auto actions = problem.actions(state);
    if (actions.empty())
        raise(ErrorKind::terminal_state, "evaluate_actions: state is terminal");
    if (rollouts == 0)
        raise(ErrorKind::invalid_argument, "evaluate_actions: need at least one rollout per action");

    const LinearPolicy unused;
    const ActionSelector select = behavior.selector(rng);
    std::vector<RolloutSample> out;
    out.reserve(actions.size());
    for (ActionId a : actions) {
        auto step = problem.step(state, a);
        double continuation = 0.0;
        if (!problem.actions(step.next).empty()) {
            for (std::size_t k = 0; k < rollouts; ++k) {
                auto trace = run_episode(problem, unused, step.next, horizon_cap, select);
                if (trace.truncated)
                    raise(ErrorKind::numerical_failure, "evaluate_actions: rollout did not terminate");
                continuation += trace.cumulative_reward;
            }
            continuation /= static_cast<double>(rollouts);
        }
        out.push_back({problem.featurize(state, a), step.reward + continuation, 0, a, 0});
    }
    return out;
}

/// Mean greedy return and mean depth of the final state over all items.
template <RolloutTask Task>
std::pair<double, double> training_reward(const Task& task, const LinearPolicy& policy, std::size_t threads) {
    std::vector<double> rewards(task.size()), depths(task.size());
    parallel_for(task.size(), threads, [&](std::size_t i) {
        const auto episode = task.episode(i);
        auto trace = run_episode(episode, policy, episode.start(), episode.horizon_cap());
        if (trace.truncated)
            raise(ErrorKind::numerical_failure, "greedy episode did not terminate");
        rewards[i] = trace.cumulative_reward;
        depths[i] = static_cast<double>(task.depth(trace.final_state));
    });
    double r = 0.0, d = 0.0;
    for (std::size_t i = 0; i < rewards.size(); ++i) {
        r += rewards[i];
        d += depths[i];
    }
    const double n = static_cast<double>(task.size());
    return {r / n, d / n};
}

using IterationCallback = std::function<void(const IterationDiagnostics&)>;

/// Iteration 0 rolls out a uniform random policy; iteration 1 mixes the first
/// fitted policy with it; later iterations mix the last two fitted policies.
template <RolloutTask Task>
TrainResult train(const Task& task, const RolloutConfig& config, const IterationCallback& on_iteration = {}) {
    config.validate();
    if (task.size() == 0)
        raise(ErrorKind::invalid_dataset, "train: empty training set");

    TrainResult result{LinearPolicy::zeros(task.theta_dim(), task.block_dim(), task.num_actions()), {}};
    LinearPolicy previous;
    bool have_previous = false;

    for (std::size_t it = 0; it < config.iterations; ++it) {
        const auto t0 = std::chrono::steady_clock::now();
        Behavior behavior = Behavior::uniform();
        if (it >= 1) {
            behavior.next.policy = &result.policy;
            behavior.previous.policy = have_previous ? &previous : nullptr;
            behavior.alpha = config.alpha;
        }

        std::mt19937_64 state_rng(derive_seed(config.seed, it, 0));
        const auto states = sample_states(task, config.num_states, state_rng);

        std::vector<std::vector<RolloutSample>> per_state(states.size());
        parallel_for(states.size(), config.threads, [&](std::size_t k) {
            std::mt19937_64 rng(derive_seed(config.seed, it, k + 1));
            const auto episode = task.episode(states[k].item);
            per_state[k] = evaluate_actions(episode, states[k].state, behavior, config.rollouts_per_action,
                                            episode.horizon_cap(), rng);
            for (auto& s : per_state[k]) {
                s.item = states[k].item;
                s.depth = task.depth(states[k].state);
            }
        });

        std::vector<RolloutSample> samples;
        for (auto& v : per_state)
            for (auto& s : v)
                samples.push_back(std::move(s));

        LinearPolicy fitted =
            fit_policy(samples, task.theta_dim(), task.block_dim(), task.num_actions(), config.ridge);
        if (it >= 1) {
            previous = std::move(result.policy);
            have_previous = true;
        }
        result.policy = std::move(fitted);

        const auto [reward, depth] = training_reward(task, result.policy, config.threads);
        IterationDiagnostics diag;
        diag.iteration = it;
        diag.mean_training_reward = reward;
        diag.mean_features_used = depth;
        diag.samples = samples.size();
        diag.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        result.diagnostics.push_back(diag);
        if (on_iteration)
            on_iteration(diag);
    }
    return result;
}

TrainResult train_dwsc(const data::TabularDataset& train, const RolloutConfig& config,
                       dwsc::Featurization featurization, dwsc::RewardParams params, bool intercept = true,
                       const IterationCallback& on_iteration = {});

TrainResult train_text(const data::Corpus& train, const RolloutConfig& config, text::LabelMode mode,
                       bool intercept = true, const IterationCallback& on_iteration = {});

} // namespace seqclf::api
