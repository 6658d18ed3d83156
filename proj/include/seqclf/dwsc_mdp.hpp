#pragma once

// Datum-wise sparse classification as a deterministic MDP. A state is a datum
// x together with the mask z of acquired features; actions either acquire one
// more feature (reward -lambda) or emit a label and stop (reward 0 or -1).

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seqclf/core_mdp.hpp"

namespace seqclf::dwsc {

class FeatureMask {
public:
    FeatureMask() = default;
    explicit FeatureMask(std::size_t n) : bits_(n, false) {}

    /// "101" -> bits 0 and 2 set.
    static FeatureMask parse(std::string_view bits);

    std::size_t size() const { return bits_.size(); }
    std::size_t count() const { return count_; }
    bool test(std::size_t j) const { return bits_.at(j); }
    bool all() const { return count_ == bits_.size(); }

    /// Copy of this mask with bit j set; j must currently be clear.
    FeatureMask with(std::size_t j) const;
    void set(std::size_t j);

    std::string to_string() const;

    friend bool operator==(const FeatureMask& a, const FeatureMask& b) { return a.bits_ == b.bits_; }

private:
    std::vector<bool> bits_;
    std::size_t count_ = 0;
};

struct DwscAction {
    enum class Kind : unsigned char { select_feature, classify };

    Kind kind = Kind::classify;
    std::size_t index = 0;

    static DwscAction select(std::size_t j) { return {Kind::select_feature, j}; }
    static DwscAction classify(std::size_t y) { return {Kind::classify, y}; }

    bool is_feature() const { return kind == Kind::select_feature; }

    friend bool operator==(const DwscAction&, const DwscAction&) = default;
};

/// x is a view into data owned by the caller (usually a TabularDataset row).
struct DatumState {
    std::span<const double> x;
    FeatureMask z;
    std::optional<std::size_t> predicted_label;

    bool terminal() const { return predicted_label.has_value(); }

    static DatumState initial(std::span<const double> x) { return {x, FeatureMask(x.size()), std::nullopt}; }
};

struct RewardParams {
    double lambda = 0.01;

    /// Rejects lambda outside [0, 1); warns on stderr above 0.5.
    void validate() const;
};

enum class Featurization { unconstrained, constrained };

/// Geometry of θ for a (n, c, featurization) triple.
///
/// Unconstrained: n + c uniform blocks, each holding φ(x,z) = (z, μ(x,z)[, 1]).
/// Constrained: n feature blocks holding (z[, 1]) followed by c classification
/// blocks holding (z, z, μ(x,z)[, 1]).
///
/// The optional trailing 1 is a per-action intercept. Without it every action
/// scores 0 in the initial state z = 0 and a policy can never classify before
/// acquiring a feature.
class DwscLayout {
public:
    DwscLayout(std::size_t n, std::size_t c, Featurization featurization, bool intercept = true);

    std::size_t n() const { return n_; }
    std::size_t c() const { return c_; }
    Featurization featurization() const { return featurization_; }
    bool intercept() const { return intercept_; }

    std::size_t num_actions() const { return n_ + c_; }
    std::size_t theta_dim() const;
    /// Length of φ(x,z) = (z, μ[, 1]).
    std::size_t phi_dim() const { return 2 * n_ + (intercept_ ? 1 : 0); }
    /// Per-action block length in the uniform layout; the classification block
    /// length in the constrained one.
    std::size_t block_dim() const;

    std::size_t block_offset(ActionId a) const;
    std::size_t block_length(ActionId a) const;

    ActionId id(DwscAction a) const;
    DwscAction action(ActionId id) const;

    LinearPolicy zero_policy() const;
    /// Throws dimension if the policy was not built for this layout.
    void check(const LinearPolicy& policy) const;

private:
    std::size_t n_;
    std::size_t c_;
    Featurization featurization_;
    bool intercept_;
};

/// Unselected features by ascending j, then every label by ascending y.
std::vector<DwscAction> available_actions(const DatumState& state, std::size_t num_classes);

DatumState transition(const DatumState& state, DwscAction action);

double reward(const DatumState& state, DwscAction action, std::size_t true_label, const RewardParams& params);

/// μ(x,z): x where z is set, 0 elsewhere.
std::vector<double> masked_restrict(std::span<const double> x, const FeatureMask& z);

/// φ(x,z) = (z, μ(x,z)) with an optional trailing 1.
std::vector<double> datum_phi(std::span<const double> x, const FeatureMask& z, bool intercept);

BlockFeature featurize_unconstrained(std::span<const double> x, const FeatureMask& z, DwscAction action,
                                     const DwscLayout& layout);
BlockFeature featurize_constrained(std::span<const double> x, const FeatureMask& z, DwscAction action,
                                   const DwscLayout& layout);
/// Dispatches on layout.featurization().
BlockFeature featurize(std::span<const double> x, const FeatureMask& z, DwscAction action,
                       const DwscLayout& layout);

/// One labelled datum seen as an MDP instance.
class DatumEpisode {
public:
    using State = DatumState;

    DatumEpisode(std::span<const double> x, std::size_t label, const DwscLayout& layout, RewardParams params);

    State start() const { return DatumState::initial(x_); }
    std::vector<ActionId> actions(const State& s) const;
    Transition<State> step(const State& s, ActionId a) const;
    BlockFeature featurize(const State& s, ActionId a) const;

    std::size_t horizon_cap() const { return layout_->n() + 1; }
    const DwscLayout& layout() const { return *layout_; }
    std::size_t label() const { return label_; }

private:
    std::span<const double> x_;
    std::size_t label_;
    const DwscLayout* layout_;
    RewardParams params_;
};

/// Per-action scores for one state, indexed by ActionId. Entries of already
/// acquired features are kept up to date but are not available actions.
struct ScoreTable {
    FeatureMask z;
    std::vector<double> scores;
};

/// Scores of every action in (x, z). With a previous table and the feature
/// just added, only that feature's contribution is added to each action,
/// which costs O(n + c) instead of O(n (n + c)).
ScoreTable incremental_action_scores(std::span<const double> x, const FeatureMask& z,
                                     const ScoreTable* previous, std::optional<std::size_t> newly_added,
                                     const LinearPolicy& policy, const DwscLayout& layout);

/// In-place variant of the incremental update: adds feature j to table.z.
void add_feature(ScoreTable& table, std::span<const double> x, std::size_t j, const LinearPolicy& policy,
                 const DwscLayout& layout);

/// Constrained model only: the feature order a policy follows from z = 0,
/// together with the score of each feature action along that chain. Feature
/// scores depend on z alone, so inference only compares this precomputed
/// score to the c classification scores at each step.
struct FeatureChain {
    std::vector<std::size_t> order;
    std::vector<double> scores;
};
FeatureChain feature_chain(const LinearPolicy& policy, const DwscLayout& layout);

struct ClassifyResult {
    std::size_t label = 0;
    FeatureMask z;
    std::size_t steps = 0;
    /// Acquired features in acquisition order.
    std::vector<std::size_t> features;
};

/// Greedy inference from (x, 0). Uses the incremental scorer, and the
/// precomputed chain for the constrained layout when one is supplied.
ClassifyResult classify(const LinearPolicy& policy, std::span<const double> x, const DwscLayout& layout,
                        const FeatureChain* chain = nullptr);

} // namespace seqclf::dwsc
