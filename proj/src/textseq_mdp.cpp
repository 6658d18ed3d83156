#include "seqclf/textseq_mdp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace seqclf::text {

double SparseVec::norm() const {
    double s = 0.0;
    for (double v : value)
        s += v * v;
    return std::sqrt(s);
}

std::vector<double> SparseVec::to_dense() const {
    std::vector<double> out(dim, 0.0);
    for (std::size_t k = 0; k < index.size(); ++k)
        out[index[k]] = value[k];
    return out;
}

SparseVec SparseVec::from_dense(const std::vector<double>& dense) {
    SparseVec v;
    v.dim = dense.size();
    for (std::size_t i = 0; i < dense.size(); ++i)
        if (dense[i] != 0.0) {
            v.index.push_back(static_cast<std::uint32_t>(i));
            v.value.push_back(dense[i]);
        }
    return v;
}

LabelMode parse_label_mode(const std::string& s) {
    if (s == "mono")
        return LabelMode::mono;
    if (s == "multi")
        return LabelMode::multi;
    raise(ErrorKind::invalid_argument, "label mode must be 'mono' or 'multi', got '" + s + "'");
}

const char* to_string(LabelMode mode) { return mode == LabelMode::mono ? "mono" : "multi"; }

TextLayout::TextLayout(std::size_t vocabulary, std::size_t num_classes, bool intercept)
    : v_(vocabulary), c_(num_classes), intercept_(intercept) {
    if (v_ == 0 || c_ == 0)
        raise(ErrorKind::invalid_argument, "TextLayout: vocabulary and category count must be positive");
}

ActionId TextLayout::id(TextAction a) const {
    switch (a.kind) {
    case TextAction::Kind::classify:
        if (a.category >= c_)
            raise(ErrorKind::invalid_action, "category " + std::to_string(a.category) + " out of range");
        return {a.category};
    case TextAction::Kind::next: return {c_};
    case TextAction::Kind::stop: return {c_ + 1};
    }
    raise(ErrorKind::invalid_action, "unknown text action");
}

TextAction TextLayout::action(ActionId id) const {
    if (id.index < c_)
        return TextAction::classify(id.index);
    if (id.index == c_)
        return TextAction::next();
    if (id.index == c_ + 1)
        return TextAction::stop();
    raise(ErrorKind::invalid_action, "action id " + std::to_string(id.index) + " out of range");
}

LinearPolicy TextLayout::zero_policy() const { return LinearPolicy::zeros(theta_dim(), block_dim(), num_actions()); }

void TextLayout::check(const LinearPolicy& policy) const {
    if (policy.dim() != theta_dim() || policy.block_dim() != block_dim() || policy.num_actions() != num_actions())
        raise(ErrorKind::dimension, "policy dimension " + std::to_string(policy.dim()) +
                                        " does not match text layout dimension " + std::to_string(theta_dim()));
}

namespace {

bool any_assigned(const LabelVector& y_hat) {
    return std::any_of(y_hat.begin(), y_hat.end(), [](auto b) { return b != 0; });
}

void check_state(const ReadingState& state) {
    if (state.doc == nullptr || state.doc->length() == 0)
        raise(ErrorKind::invalid_dataset, "reading state without a non-empty document");
    if (state.p < 1 || state.p > state.doc->length())
        raise(ErrorKind::out_of_range, "reading position " + std::to_string(state.p) + " outside document");
}

} // namespace

std::vector<TextAction> text_available_actions(const ReadingState& state, LabelMode mode) {
    if (state.terminal)
        raise(ErrorKind::terminal_state, "text_available_actions: state is terminal");
    check_state(state);
    std::vector<TextAction> out;
    const bool has_next = state.p < state.doc->length();
    if (mode == LabelMode::mono) {
        if (any_assigned(state.y_hat))
            return {TextAction::stop()};
        for (std::size_t k = 0; k < state.y_hat.size(); ++k)
            out.push_back(TextAction::classify(k));
        if (has_next)
            out.push_back(TextAction::next());
        return out;
    }
    for (std::size_t k = 0; k < state.y_hat.size(); ++k)
        if (state.y_hat[k] == 0)
            out.push_back(TextAction::classify(k));
    if (has_next)
        out.push_back(TextAction::next());
    out.push_back(TextAction::stop());
    return out;
}

ReadingState text_transition(const ReadingState& state, TextAction action, LabelMode mode) {
    const auto available = text_available_actions(state, mode);
    if (std::find(available.begin(), available.end(), action) == available.end()) {
        if (action.kind == TextAction::Kind::next)
            raise(ErrorKind::invalid_action, "next is unavailable at the last sentence");
        raise(ErrorKind::invalid_action, "action not available in this reading state");
    }
    ReadingState out = state;
    switch (action.kind) {
    case TextAction::Kind::classify: out.y_hat[action.category] = 1; break;
    case TextAction::Kind::next: ++out.p; break;
    case TextAction::Kind::stop: out.terminal = true; break;
    }
    return out;
}

double f1_reward(const LabelVector& y, const LabelVector& y_hat) {
    if (y.size() != y_hat.size())
        raise(ErrorKind::dimension, "f1_reward: label vectors differ in length");
    std::size_t tp = 0, predicted = 0, actual = 0;
    for (std::size_t k = 0; k < y.size(); ++k) {
        tp += (y[k] && y_hat[k]) ? 1 : 0;
        predicted += y_hat[k] ? 1 : 0;
        actual += y[k] ? 1 : 0;
    }
    if (actual == 0)
        raise(ErrorKind::invalid_dataset, "f1_reward: document has no true category");
    if (predicted == 0 || tp == 0)
        return 0.0;
    const double precision = static_cast<double>(tp) / static_cast<double>(predicted);
    const double recall = static_cast<double>(tp) / static_cast<double>(actual);
    return 2.0 * precision * recall / (precision + recall);
}

double mono_reward(std::size_t y_index, std::size_t chosen) { return y_index == chosen ? 1.0 : 0.0; }

SparseVec text_phi(const ReadingState& state, const TextLayout& layout) {
    check_state(state);
    const std::size_t v = layout.vocabulary();
    const std::size_t c = layout.c();
    if (state.y_hat.size() != c)
        raise(ErrorKind::dimension, "text_phi: label vector length does not match layout");

    std::vector<std::pair<std::uint32_t, double>> read;
    for (std::size_t i = 0; i < state.p; ++i) {
        const SparseVec& s = state.doc->sentences[i];
        if (s.dim != v)
            raise(ErrorKind::dimension, "text_phi: sentence dimension " + std::to_string(s.dim) +
                                            " != vocabulary " + std::to_string(v));
        for (std::size_t k = 0; k < s.index.size(); ++k)
            read.emplace_back(s.index[k], s.value[k]);
    }
    std::stable_sort(read.begin(), read.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

    SparseVec phi;
    phi.dim = layout.block_dim();
    const double inv_p = 1.0 / static_cast<double>(state.p);
    for (std::size_t k = 0; k < read.size();) {
        const std::uint32_t idx = read[k].first;
        double sum = 0.0;
        for (; k < read.size() && read[k].first == idx; ++k)
            sum += read[k].second;
        if (sum * inv_p != 0.0) {
            phi.index.push_back(idx);
            phi.value.push_back(sum * inv_p);
        }
    }
    const SparseVec& last = state.doc->sentences[state.p - 1];
    for (std::size_t k = 0; k < last.index.size(); ++k)
        if (last.value[k] != 0.0) {
            phi.index.push_back(static_cast<std::uint32_t>(v + last.index[k]));
            phi.value.push_back(last.value[k]);
        }
    for (std::size_t k = 0; k < c; ++k)
        if (state.y_hat[k]) {
            phi.index.push_back(static_cast<std::uint32_t>(2 * v + k));
            phi.value.push_back(1.0);
        }
    if (layout.intercept()) {
        phi.index.push_back(static_cast<std::uint32_t>(2 * v + c));
        phi.value.push_back(1.0);
    }
    return phi;
}

BlockFeature text_featurize(const ReadingState& state, ActionId action, const TextLayout& layout) {
    if (action.index >= layout.num_actions())
        raise(ErrorKind::invalid_action, "text_featurize: action " + std::to_string(action.index) + " out of range");
    SparseVec phi = text_phi(state, layout);
    BlockFeature f;
    f.total_dim = layout.theta_dim();
    f.offset = action.index * layout.block_dim();
    f.length = layout.block_dim();
    f.index = std::move(phi.index);
    f.value = std::move(phi.value);
    return f;
}

DocumentEpisode::DocumentEpisode(const Document& doc, const LabelVector& labels, LabelMode mode,
                                 const TextLayout& layout)
    : doc_(&doc), labels_(&labels), mode_(mode), layout_(&layout) {
    if (doc.length() == 0)
        raise(ErrorKind::invalid_dataset, "document '" + doc.id + "' has no sentence");
    if (labels.size() != layout.c())
        raise(ErrorKind::dimension, "document '" + doc.id + "' label vector length does not match layout");
    const auto positives = std::count_if(labels.begin(), labels.end(), [](auto b) { return b != 0; });
    if (positives == 0 || (mode == LabelMode::mono && positives != 1))
        raise(ErrorKind::invalid_dataset, "document '" + doc.id + "' has " + std::to_string(positives) +
                                              " categories, incompatible with " + to_string(mode) + " mode");
}

std::vector<ActionId> DocumentEpisode::actions(const State& s) const {
    if (s.terminal)
        return {};
    std::vector<ActionId> out;
    for (TextAction a : text_available_actions(s, mode_))
        out.push_back(layout_->id(a));
    return out;
}

double DocumentEpisode::terminal_reward(const LabelVector& y_hat) const {
    if (mode_ == LabelMode::mono) {
        const auto truth = static_cast<std::size_t>(
            std::find(labels_->begin(), labels_->end(), std::uint8_t{1}) - labels_->begin());
        const auto chosen = static_cast<std::size_t>(
            std::find(y_hat.begin(), y_hat.end(), std::uint8_t{1}) - y_hat.begin());
        return chosen == y_hat.size() ? 0.0 : mono_reward(truth, chosen);
    }
    return f1_reward(*labels_, y_hat);
}

Transition<ReadingState> DocumentEpisode::step(const State& s, ActionId a) const {
    const TextAction action = layout_->action(a);
    ReadingState next = text_transition(s, action, mode_);
    const double r = action.kind == TextAction::Kind::stop ? terminal_reward(next.y_hat) : 0.0;
    return {std::move(next), r};
}

DocumentResult classify_document(const LinearPolicy& policy, const Document& doc, LabelMode mode,
                                 const TextLayout& layout) {
    layout.check(policy);
    ReadingState state = ReadingState::initial(doc, layout.c());
    DocumentResult result;
    const std::size_t cap = doc.length() + layout.c() + 1;
    while (!state.terminal) {
        if (result.trace.size() == cap)
            raise(ErrorKind::numerical_failure, "classify_document: horizon cap reached");
        std::vector<FeaturizedAction> candidates;
        for (TextAction a : text_available_actions(state, mode)) {
            const ActionId id = layout.id(a);
            candidates.push_back({id, text_featurize(state, id, layout)});
        }
        const TextAction chosen = layout.action(greedy_action(policy, candidates));
        result.trace.push_back(chosen);
        state = text_transition(state, chosen, mode);
    }
    result.y_hat = state.y_hat;
    result.sentences_read = state.p;
    return result;
}

} // namespace seqclf::text
