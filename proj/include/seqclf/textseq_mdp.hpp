#pragma once

// Sentence-by-sentence text classification as a deterministic MDP. A state is
// (document, current sentence p, labels assigned so far); the agent may assign
// a category, read the next sentence, or stop.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "seqclf/core_mdp.hpp"

namespace seqclf::text {

/// Sparse vector over the vocabulary; index strictly increasing.
struct SparseVec {
    std::size_t dim = 0;
    std::vector<std::uint32_t> index;
    std::vector<double> value;

    double norm() const;
    bool empty() const { return index.empty(); }
    std::vector<double> to_dense() const;
    static SparseVec from_dense(const std::vector<double>& dense);
};

struct Document {
    std::string id;
    std::vector<SparseVec> sentences;

    std::size_t length() const { return sentences.size(); }
};

/// 0/1 per category.
using LabelVector = std::vector<std::uint8_t>;

enum class LabelMode { mono, multi };

LabelMode parse_label_mode(const std::string& s);
const char* to_string(LabelMode mode);

/// p is 1-based: sentences 1..p have been read.
struct ReadingState {
    const Document* doc = nullptr;
    std::size_t p = 1;
    LabelVector y_hat;
    bool terminal = false;

    static ReadingState initial(const Document& doc, std::size_t num_classes) {
        return {&doc, 1, LabelVector(num_classes, 0), false};
    }
};

struct TextAction {
    enum class Kind : unsigned char { classify, next, stop };

    Kind kind = Kind::stop;
    std::size_t category = 0;

    static TextAction classify(std::size_t k) { return {Kind::classify, k}; }
    static TextAction next() { return {Kind::next, 0}; }
    static TextAction stop() { return {Kind::stop, 0}; }

    friend bool operator==(const TextAction&, const TextAction&) = default;
};

/// Action enumeration: classify-as-0..C-1, next, stop. Each action owns a
/// block of φ(s) = (mean of read sentences, last sentence, y_hat[, 1]).
class TextLayout {
public:
    TextLayout(std::size_t vocabulary, std::size_t num_classes, bool intercept = true);

    std::size_t vocabulary() const { return v_; }
    std::size_t c() const { return c_; }
    bool intercept() const { return intercept_; }
    std::size_t num_actions() const { return c_ + 2; }
    std::size_t block_dim() const { return 2 * v_ + c_ + (intercept_ ? 1 : 0); }
    std::size_t theta_dim() const { return block_dim() * num_actions(); }

    ActionId id(TextAction a) const;
    TextAction action(ActionId id) const;

    LinearPolicy zero_policy() const;
    void check(const LinearPolicy& policy) const;

private:
    std::size_t v_;
    std::size_t c_;
    bool intercept_;
};

std::vector<TextAction> text_available_actions(const ReadingState& state, LabelMode mode);

ReadingState text_transition(const ReadingState& state, TextAction action, LabelMode mode);

/// TP-based F1 of one document. 0 when nothing was predicted.
double f1_reward(const LabelVector& y, const LabelVector& y_hat);

double mono_reward(std::size_t y_index, std::size_t chosen);

/// φ(s) as a sparse vector of length layout.block_dim().
SparseVec text_phi(const ReadingState& state, const TextLayout& layout);

BlockFeature text_featurize(const ReadingState& state, ActionId action, const TextLayout& layout);

class DocumentEpisode {
public:
    using State = ReadingState;

    DocumentEpisode(const Document& doc, const LabelVector& labels, LabelMode mode, const TextLayout& layout);

    State start() const { return ReadingState::initial(*doc_, layout_->c()); }
    std::vector<ActionId> actions(const State& s) const;
    Transition<State> step(const State& s, ActionId a) const;
    BlockFeature featurize(const State& s, ActionId a) const { return text_featurize(s, a, *layout_); }

    std::size_t horizon_cap() const { return doc_->length() + layout_->c() + 1; }
    double terminal_reward(const LabelVector& y_hat) const;

private:
    const Document* doc_;
    const LabelVector* labels_;
    LabelMode mode_;
    const TextLayout* layout_;
};

struct DocumentResult {
    LabelVector y_hat;
    std::size_t sentences_read = 0;
    std::vector<TextAction> trace;
};

/// Greedy reading from (d, 1, 0).
DocumentResult classify_document(const LinearPolicy& policy, const Document& doc, LabelMode mode,
                                 const TextLayout& layout);

} // namespace seqclf::text
