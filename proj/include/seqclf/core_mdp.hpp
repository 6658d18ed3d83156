#pragma once

// Deterministic finite-horizon MDP engine shared by the feature-acquisition
// and the sentence-reading problems: block-vector featurization, linear
// scoring, greedy action choice and the episode runner.

#include <compare>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "seqclf/error.hpp"

namespace seqclf {

/// Position of an action in the fixed global enumeration of a problem.
struct ActionId {
    std::size_t index = 0;

    friend auto operator<=>(const ActionId&, const ActionId&) = default;
};

/// Sparse representation of a block vector Φ(s,a): the non-zero entries of
/// the per-action block φ(s) placed at [offset, offset + length) inside a
/// vector of size total_dim. `index` is relative to offset and strictly
/// increasing.
struct BlockFeature {
    std::size_t total_dim = 0;
    std::size_t offset = 0;
    std::size_t length = 0;
    std::vector<std::uint32_t> index;
    std::vector<double> value;

    std::size_t nnz() const { return index.size(); }
    std::vector<double> to_dense() const;
    /// Dense copy of the block itself (length entries).
    std::vector<double> block() const;
};

/// Packs a dense φ into a block placed at `offset`. Zero entries are dropped.
BlockFeature pack_block(std::span<const double> phi, std::size_t offset, std::size_t total_dim);

/// Dense Φ: zero everywhere except phi at action.index * len(phi).
std::vector<double> block_vector(std::span<const double> phi, ActionId action, std::size_t num_actions);

class LinearPolicy {
public:
    LinearPolicy() = default;
    LinearPolicy(Eigen::VectorXd theta, std::size_t block_dim, std::size_t num_actions);

    static LinearPolicy zeros(std::size_t dim, std::size_t block_dim, std::size_t num_actions);

    const Eigen::VectorXd& theta() const { return theta_; }
    std::size_t dim() const { return static_cast<std::size_t>(theta_.size()); }
    std::size_t block_dim() const { return block_dim_; }
    std::size_t num_actions() const { return num_actions_; }

    /// Weights of one block, used by incremental scorers.
    std::span<const double> slice(std::size_t offset, std::size_t length) const;

    friend bool operator==(const LinearPolicy& a, const LinearPolicy& b) {
        return a.block_dim_ == b.block_dim_ && a.num_actions_ == b.num_actions_ && a.theta_ == b.theta_;
    }

private:
    Eigen::VectorXd theta_;
    std::size_t block_dim_ = 0;
    std::size_t num_actions_ = 0;
};

/// <θ, Φ(s,a)>.
double score(const LinearPolicy& policy, std::span<const double> phi_sa);
double score(const LinearPolicy& policy, const BlockFeature& phi_sa);

struct FeaturizedAction {
    ActionId action;
    BlockFeature phi;
};

/// Highest-scoring action; ties go to the smallest ActionId. Throws
/// terminal_state on an empty action set.
ActionId greedy_action(const LinearPolicy& policy, std::span<const FeaturizedAction> actions);

/// Behaviour-policy hook for run_episode. The default (empty) selector is
/// greedy with respect to the policy being run.
using ActionSelector = std::function<ActionId(std::span<const FeaturizedAction>)>;

template <class State>
struct Transition {
    State next;
    double reward = 0.0;
};

template <class State>
struct EpisodeTrace {
    std::vector<ActionId> actions;
    std::vector<double> rewards;
    double cumulative_reward = 0.0;
    State final_state;
    bool truncated = false;
};

/// A single MDP instance (one datum or document with its ground truth).
template <class P>
concept EpisodicProblem = requires(const P& p, const typename P::State& s, ActionId a) {
    { p.actions(s) } -> std::same_as<std::vector<ActionId>>;
    { p.step(s, a) } -> std::same_as<Transition<typename P::State>>;
    { p.featurize(s, a) } -> std::same_as<BlockFeature>;
    { p.start() } -> std::same_as<typename P::State>;
};

template <EpisodicProblem P>
std::vector<FeaturizedAction> featurize_all(const P& problem, const typename P::State& state) {
    std::vector<FeaturizedAction> out;
    for (ActionId a : problem.actions(state))
        out.push_back({a, problem.featurize(state, a)});
    return out;
}

/// Runs the process from `start` until a state with no available action, or
/// until horizon_cap steps have been taken (then the trace is flagged
/// truncated).
template <EpisodicProblem P>
EpisodeTrace<typename P::State> run_episode(const P& problem, const LinearPolicy& policy,
                                            typename P::State start, std::size_t horizon_cap,
                                            const ActionSelector& behavior = {}) {
    if (horizon_cap == 0)
        raise(ErrorKind::invalid_argument, "run_episode: horizon_cap must be >= 1");

    EpisodeTrace<typename P::State> trace{{}, {}, 0.0, std::move(start), false};
    auto& state = trace.final_state;
    for (;;) {
        auto candidates = featurize_all(problem, state);
        if (candidates.empty())
            return trace;
        if (trace.actions.size() == horizon_cap) {
            trace.truncated = true;
            return trace;
        }
        const ActionId chosen = behavior ? behavior(candidates) : greedy_action(policy, candidates);
        auto step = problem.step(state, chosen);
        trace.actions.push_back(chosen);
        trace.rewards.push_back(step.reward);
        trace.cumulative_reward += step.reward;
        state = std::move(step.next);
    }
}

} // namespace seqclf
