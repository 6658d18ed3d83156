#include "seqclf/dwsc_mdp.hpp"

#include <cmath>
#include <iostream>

namespace seqclf::dwsc {

FeatureMask FeatureMask::parse(std::string_view bits) {
    FeatureMask m(bits.size());
    for (std::size_t j = 0; j < bits.size(); ++j) {
        if (bits[j] == '1')
            m.set(j);
        else if (bits[j] != '0')
            raise(ErrorKind::parse, "FeatureMask::parse: expected 0/1, got '" + std::string(bits) + "'");
    }
    return m;
}

FeatureMask FeatureMask::with(std::size_t j) const {
    FeatureMask out = *this;
    out.set(j);
    return out;
}

void FeatureMask::set(std::size_t j) {
    if (j >= bits_.size())
        raise(ErrorKind::invalid_action, "feature index " + std::to_string(j) + " out of range");
    if (bits_[j])
        raise(ErrorKind::invalid_action, "feature " + std::to_string(j) + " already acquired");
    bits_[j] = true;
    ++count_;
}

std::string FeatureMask::to_string() const {
    std::string s(bits_.size(), '0');
    for (std::size_t j = 0; j < bits_.size(); ++j)
        if (bits_[j])
            s[j] = '1';
    return s;
}

void RewardParams::validate() const {
    if (!std::isfinite(lambda) || lambda < 0.0 || lambda >= 1.0)
        raise(ErrorKind::invalid_argument, "lambda must lie in [0, 1), got " + std::to_string(lambda));
    if (lambda > 0.5)
        std::cerr << "warning: lambda = " << lambda
                  << " is large; misclassifying may become cheaper than acquiring features\n";
}

DwscLayout::DwscLayout(std::size_t n, std::size_t c, Featurization featurization, bool intercept)
    : n_(n), c_(c), featurization_(featurization), intercept_(intercept) {
    if (n_ == 0 || c_ == 0)
        raise(ErrorKind::invalid_argument, "DwscLayout: need at least one feature and one class");
}

std::size_t DwscLayout::theta_dim() const {
    const std::size_t ic = intercept_ ? 1 : 0;
    if (featurization_ == Featurization::unconstrained)
        return num_actions() * phi_dim();
    return n_ * (n_ + ic) + c_ * (3 * n_ + ic);
}

std::size_t DwscLayout::block_dim() const {
    return featurization_ == Featurization::unconstrained ? phi_dim() : 3 * n_ + (intercept_ ? 1 : 0);
}

std::size_t DwscLayout::block_offset(ActionId a) const {
    if (a.index >= num_actions())
        raise(ErrorKind::invalid_action, "action id " + std::to_string(a.index) + " out of range");
    if (featurization_ == Featurization::unconstrained)
        return a.index * phi_dim();
    const std::size_t ic = intercept_ ? 1 : 0;
    if (a.index < n_)
        return a.index * (n_ + ic);
    return n_ * (n_ + ic) + (a.index - n_) * (3 * n_ + ic);
}

std::size_t DwscLayout::block_length(ActionId a) const {
    if (a.index >= num_actions())
        raise(ErrorKind::invalid_action, "action id " + std::to_string(a.index) + " out of range");
    if (featurization_ == Featurization::unconstrained)
        return phi_dim();
    const std::size_t ic = intercept_ ? 1 : 0;
    return a.index < n_ ? n_ + ic : 3 * n_ + ic;
}

ActionId DwscLayout::id(DwscAction a) const {
    if (a.is_feature()) {
        if (a.index >= n_)
            raise(ErrorKind::invalid_action, "feature action " + std::to_string(a.index) + " out of range");
        return {a.index};
    }
    if (a.index >= c_)
        raise(ErrorKind::invalid_action, "label " + std::to_string(a.index) + " out of range");
    return {n_ + a.index};
}

DwscAction DwscLayout::action(ActionId id) const {
    if (id.index >= num_actions())
        raise(ErrorKind::invalid_action, "action id " + std::to_string(id.index) + " out of range");
    return id.index < n_ ? DwscAction::select(id.index) : DwscAction::classify(id.index - n_);
}

LinearPolicy DwscLayout::zero_policy() const {
    return LinearPolicy::zeros(theta_dim(), block_dim(), num_actions());
}

void DwscLayout::check(const LinearPolicy& policy) const {
    if (policy.dim() != theta_dim() || policy.num_actions() != num_actions() || policy.block_dim() != block_dim())
        raise(ErrorKind::dimension, "policy dimension " + std::to_string(policy.dim()) +
                                        " does not match layout dimension " + std::to_string(theta_dim()));
}

std::vector<DwscAction> available_actions(const DatumState& state, std::size_t num_classes) {
    if (state.terminal())
        raise(ErrorKind::terminal_state, "available_actions: state is terminal");
    std::vector<DwscAction> out;
    out.reserve(state.z.size() - state.z.count() + num_classes);
    for (std::size_t j = 0; j < state.z.size(); ++j)
        if (!state.z.test(j))
            out.push_back(DwscAction::select(j));
    for (std::size_t y = 0; y < num_classes; ++y)
        out.push_back(DwscAction::classify(y));
    return out;
}

namespace {

void require_available(const DatumState& state, DwscAction action) {
    if (state.terminal())
        raise(ErrorKind::terminal_state, "state is terminal");
    if (action.is_feature()) {
        if (action.index >= state.z.size())
            raise(ErrorKind::invalid_action, "feature " + std::to_string(action.index) + " out of range");
        if (state.z.test(action.index))
            raise(ErrorKind::invalid_action, "feature " + std::to_string(action.index) + " already acquired");
    }
}

} // namespace

DatumState transition(const DatumState& state, DwscAction action) {
    require_available(state, action);
    if (action.is_feature())
        return {state.x, state.z.with(action.index), std::nullopt};
    return {state.x, state.z, action.index};
}

double reward(const DatumState& state, DwscAction action, std::size_t true_label, const RewardParams& params) {
    require_available(state, action);
    if (action.is_feature())
        return -params.lambda;
    return action.index == true_label ? 0.0 : -1.0;
}

std::vector<double> masked_restrict(std::span<const double> x, const FeatureMask& z) {
    if (x.size() != z.size())
        raise(ErrorKind::dimension, "masked_restrict: x has " + std::to_string(x.size()) + " entries, z has " +
                                        std::to_string(z.size()));
    std::vector<double> out(x.size(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i)
        if (z.test(i))
            out[i] = x[i];
    return out;
}

std::vector<double> datum_phi(std::span<const double> x, const FeatureMask& z, bool intercept) {
    const auto mu = masked_restrict(x, z);
    const std::size_t n = x.size();
    std::vector<double> phi(2 * n + (intercept ? 1 : 0), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        phi[i] = z.test(i) ? 1.0 : 0.0;
        phi[n + i] = mu[i];
    }
    if (intercept)
        phi[2 * n] = 1.0;
    return phi;
}

namespace {

void check_dims(std::span<const double> x, const FeatureMask& z, const DwscLayout& layout) {
    if (x.size() != layout.n() || z.size() != layout.n())
        raise(ErrorKind::dimension, "featurize: datum has " + std::to_string(x.size()) +
                                        " features, layout expects " + std::to_string(layout.n()));
}

BlockFeature empty_block(const DwscLayout& layout, ActionId id) {
    BlockFeature out;
    out.total_dim = layout.theta_dim();
    out.offset = layout.block_offset(id);
    out.length = layout.block_length(id);
    return out;
}

void push(BlockFeature& f, std::size_t i, double v) {
    if (v != 0.0) {
        f.index.push_back(static_cast<std::uint32_t>(i));
        f.value.push_back(v);
    }
}

// Appends `copies` copies of z, then μ(x,z), then the intercept.
void append_state(BlockFeature& f, std::span<const double> x, const FeatureMask& z, std::size_t copies,
                  bool with_mu, bool intercept) {
    const std::size_t n = x.size();
    std::size_t base = 0;
    for (std::size_t k = 0; k < copies; ++k, base += n)
        for (std::size_t i = 0; i < n; ++i)
            if (z.test(i))
                push(f, base + i, 1.0);
    if (with_mu) {
        for (std::size_t i = 0; i < n; ++i)
            if (z.test(i))
                push(f, base + i, x[i]);
        base += n;
    }
    if (intercept)
        push(f, base, 1.0);
}

} // namespace

BlockFeature featurize_unconstrained(std::span<const double> x, const FeatureMask& z, DwscAction action,
                                     const DwscLayout& layout) {
    check_dims(x, z, layout);
    require_available({x, z, std::nullopt}, action);
    if (layout.featurization() != Featurization::unconstrained)
        raise(ErrorKind::dimension, "featurize_unconstrained: layout is constrained");
    const ActionId id = layout.id(action);
    BlockFeature f = empty_block(layout, id);
    append_state(f, x, z, 1, true, layout.intercept());
    return f;
}

BlockFeature featurize_constrained(std::span<const double> x, const FeatureMask& z, DwscAction action,
                                   const DwscLayout& layout) {
    check_dims(x, z, layout);
    require_available({x, z, std::nullopt}, action);
    if (layout.featurization() != Featurization::constrained)
        raise(ErrorKind::dimension, "featurize_constrained: layout is unconstrained");
    const ActionId id = layout.id(action);
    BlockFeature f = empty_block(layout, id);
    if (action.is_feature())
        append_state(f, x, z, 1, false, layout.intercept());
    else
        append_state(f, x, z, 2, true, layout.intercept());
    return f;
}

BlockFeature featurize(std::span<const double> x, const FeatureMask& z, DwscAction action,
                       const DwscLayout& layout) {
    return layout.featurization() == Featurization::unconstrained ? featurize_unconstrained(x, z, action, layout)
                                                                  : featurize_constrained(x, z, action, layout);
}

DatumEpisode::DatumEpisode(std::span<const double> x, std::size_t label, const DwscLayout& layout,
                           RewardParams params)
    : x_(x), label_(label), layout_(&layout), params_(params) {
    if (x.size() != layout.n())
        raise(ErrorKind::dimension, "DatumEpisode: datum length does not match layout");
    if (label >= layout.c())
        raise(ErrorKind::invalid_dataset, "DatumEpisode: label " + std::to_string(label) + " out of range");
}

std::vector<ActionId> DatumEpisode::actions(const State& s) const {
    if (s.terminal())
        return {};
    std::vector<ActionId> out;
    for (DwscAction a : available_actions(s, layout_->c()))
        out.push_back(layout_->id(a));
    return out;
}

Transition<DatumState> DatumEpisode::step(const State& s, ActionId a) const {
    const DwscAction action = layout_->action(a);
    const double r = reward(s, action, label_, params_);
    return {transition(s, action), r};
}

BlockFeature DatumEpisode::featurize(const State& s, ActionId a) const {
    return dwsc::featurize(s.x, s.z, layout_->action(a), *layout_);
}

namespace {

// Contribution of acquiring feature j to the score of every action.
void accumulate_feature(std::vector<double>& scores, std::span<const double> x, std::size_t j,
                        const LinearPolicy& policy, const DwscLayout& layout) {
    const std::size_t n = layout.n();
    const double* w = policy.theta().data();
    const double xj = x[j];
    if (layout.featurization() == Featurization::unconstrained) {
        const std::size_t stride = layout.phi_dim();
        for (std::size_t a = 0, off = 0; a < scores.size(); ++a, off += stride)
            scores[a] += w[off + j] + w[off + n + j] * xj;
        return;
    }
    const std::size_t ic = layout.intercept() ? 1 : 0;
    for (std::size_t a = 0, off = 0; a < n; ++a, off += n + ic)
        scores[a] += w[off + j];
    const std::size_t cls_stride = 3 * n + ic;
    for (std::size_t y = 0, off = n * (n + ic); y < layout.c(); ++y, off += cls_stride)
        scores[n + y] += w[off + j] + w[off + n + j] + w[off + 2 * n + j] * xj;
}

std::vector<double> intercepts(const LinearPolicy& policy, const DwscLayout& layout) {
    std::vector<double> scores(layout.num_actions(), 0.0);
    if (!layout.intercept())
        return scores;
    const double* w = policy.theta().data();
    for (std::size_t a = 0; a < scores.size(); ++a) {
        const ActionId id{a};
        scores[a] = w[layout.block_offset(id) + layout.block_length(id) - 1];
    }
    return scores;
}

} // namespace

ScoreTable incremental_action_scores(std::span<const double> x, const FeatureMask& z, const ScoreTable* previous,
                                     std::optional<std::size_t> newly_added, const LinearPolicy& policy,
                                     const DwscLayout& layout) {
    layout.check(policy);
    if (x.size() != layout.n() || z.size() != layout.n())
        raise(ErrorKind::dimension, "incremental_action_scores: datum length does not match layout");

    if (previous == nullptr) {
        if (newly_added)
            raise(ErrorKind::cache_invalid, "incremental_action_scores: added feature given without a cache");
        ScoreTable table{FeatureMask(layout.n()), intercepts(policy, layout)};
        for (std::size_t j = 0; j < layout.n(); ++j)
            if (z.test(j))
                add_feature(table, x, j, policy, layout);
        return table;
    }

    if (!newly_added || previous->scores.size() != layout.num_actions() || previous->z.size() != layout.n() ||
        *newly_added >= layout.n() || previous->z.test(*newly_added) || !(previous->z.with(*newly_added) == z))
        raise(ErrorKind::cache_invalid, "incremental_action_scores: cached table is not consistent with z");
    ScoreTable table = *previous;
    add_feature(table, x, *newly_added, policy, layout);
    return table;
}

void add_feature(ScoreTable& table, std::span<const double> x, std::size_t j, const LinearPolicy& policy,
                 const DwscLayout& layout) {
    table.z.set(j);
    accumulate_feature(table.scores, x, j, policy, layout);
}

FeatureChain feature_chain(const LinearPolicy& policy, const DwscLayout& layout) {
    layout.check(policy);
    if (layout.featurization() != Featurization::constrained)
        raise(ErrorKind::invalid_argument, "feature_chain: only defined for the constrained layout");
    const std::size_t n = layout.n();
    const std::size_t stride = n + (layout.intercept() ? 1 : 0);
    const double* w = policy.theta().data();

    std::vector<double> feat = intercepts(policy, layout);
    feat.resize(n);
    std::vector<bool> taken(n, false);
    FeatureChain chain;
    for (std::size_t t = 0; t < n; ++t) {
        std::size_t best = n;
        for (std::size_t j = 0; j < n; ++j)
            if (!taken[j] && (best == n || feat[j] > feat[best]))
                best = j;
        chain.order.push_back(best);
        chain.scores.push_back(feat[best]);
        taken[best] = true;
        for (std::size_t j = 0; j < n; ++j)
            feat[j] += w[j * stride + best];
    }
    return chain;
}

namespace {

ClassifyResult classify_with_chain(const LinearPolicy& policy, std::span<const double> x, const DwscLayout& layout,
                                   const FeatureChain& chain) {
    const std::size_t n = layout.n();
    const std::size_t c = layout.c();
    const std::size_t ic = layout.intercept() ? 1 : 0;
    const std::size_t cls_stride = 3 * n + ic;
    const double* w = policy.theta().data() + n * (n + ic);

    std::vector<double> cls(c, 0.0);
    if (ic)
        for (std::size_t y = 0; y < c; ++y)
            cls[y] = w[y * cls_stride + cls_stride - 1];

    ClassifyResult result{0, FeatureMask(n), 0, {}};
    for (std::size_t t = 0;; ++t) {
        std::size_t best_y = 0;
        for (std::size_t y = 1; y < c; ++y)
            if (cls[y] > cls[best_y])
                best_y = y;
        ++result.steps;
        if (t == n || cls[best_y] > chain.scores[t]) {
            result.label = best_y;
            return result;
        }
        const std::size_t j = chain.order[t];
        result.z.set(j);
        result.features.push_back(j);
        for (std::size_t y = 0; y < c; ++y) {
            const double* wy = w + y * cls_stride;
            cls[y] += wy[j] + wy[n + j] + wy[2 * n + j] * x[j];
        }
    }
}

} // namespace

ClassifyResult classify(const LinearPolicy& policy, std::span<const double> x, const DwscLayout& layout,
                        const FeatureChain* chain) {
    layout.check(policy);
    if (x.size() != layout.n())
        raise(ErrorKind::dimension, "classify: datum length does not match layout");
    if (chain != nullptr) {
        if (layout.featurization() != Featurization::constrained || chain->order.size() != layout.n())
            raise(ErrorKind::invalid_argument, "classify: feature chain does not match layout");
        return classify_with_chain(policy, x, layout, *chain);
    }

    const std::size_t n = layout.n();
    ScoreTable table = incremental_action_scores(x, FeatureMask(n), nullptr, std::nullopt, policy, layout);
    ClassifyResult result{0, FeatureMask(n), 0, {}};
    for (;;) {
        std::size_t best = layout.num_actions();
        for (std::size_t a = 0; a < layout.num_actions(); ++a) {
            if (a < n && table.z.test(a))
                continue;
            if (best == layout.num_actions() || table.scores[a] > table.scores[best])
                best = a;
        }
        ++result.steps;
        if (best >= n) {
            result.label = best - n;
            result.z = table.z;
            return result;
        }
        add_feature(table, x, best, policy, layout);
        result.features.push_back(best);
    }
}

} // namespace seqclf::dwsc
