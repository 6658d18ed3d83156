#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "seqclf/textseq_mdp.hpp"

namespace seqclf::data {

/// Dense row-major feature matrix with labels remapped to [0, C).
class TabularDataset {
public:
    TabularDataset() = default;
    TabularDataset(std::size_t n, std::vector<double> values, std::vector<std::size_t> labels,
                   std::vector<std::string> label_names);

    std::size_t rows() const { return labels_.size(); }
    std::size_t n() const { return n_; }
    std::size_t num_classes() const { return label_names_.size(); }

    std::span<const double> row(std::size_t i) const { return {values_.data() + i * n_, n_}; }
    std::span<double> mutable_row(std::size_t i) { return {values_.data() + i * n_, n_}; }
    std::size_t label(std::size_t i) const { return labels_[i]; }
    const std::vector<std::size_t>& labels() const { return labels_; }
    const std::vector<std::string>& label_names() const { return label_names_; }
    const std::vector<double>& values() const { return values_; }

    /// Rows in the given order; keeps the label space.
    TabularDataset subset(std::span<const std::size_t> indices) const;

    friend bool operator==(const TabularDataset&, const TabularDataset&) = default;

private:
    std::size_t n_ = 0;
    std::vector<double> values_;
    std::vector<std::size_t> labels_;
    std::vector<std::string> label_names_;
};

/// `<label> <idx>:<val> ...` with 1-based strictly increasing indices and
/// `#` comments. Labels are mapped to [0, C) by first appearance.
TabularDataset parse_sparse_rows(std::istream& in);
TabularDataset parse_sparse_rows(const std::filesystem::path& path);

/// Inverse of parse_sparse_rows: re-parsing the output yields an equal dataset.
void write_sparse_rows(std::ostream& out, const TabularDataset& data);

struct Split {
    TabularDataset train;
    TabularDataset test;
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
};

/// Seeded shuffle, then the first round(fraction * N) rows go to train.
std::vector<std::size_t> split_order(std::size_t rows, double train_fraction, std::uint64_t seed,
                                     std::size_t* train_size);
Split split(const TabularDataset& data, double train_fraction, std::uint64_t seed);

/// Per-feature min-max scaling to [0, 1] fitted on training rows.
struct MinMaxScaler {
    std::vector<double> min;
    std::vector<double> max;

    static MinMaxScaler fit(const TabularDataset& train);
    /// Constant features map to 0; values outside the fitted range are clipped.
    void apply(TabularDataset& data) const;

    friend bool operator==(const MinMaxScaler&, const MinMaxScaler&) = default;
};

/// Fits on `data` and scales it in place; returns the record for test rows.
MinMaxScaler normalize_features(TabularDataset& data);

struct Vocabulary {
    std::map<std::string, std::uint32_t> index;
    std::vector<std::string> tokens;
    std::vector<double> idf;

    std::size_t size() const { return tokens.size(); }
};

struct LabelledDocument {
    text::Document doc;
    text::LabelVector labels;
    /// Zero-based indices of sentences whose tf-idf vector is all zero.
    std::vector<std::size_t> zero_sentences;
};

struct Corpus {
    std::vector<LabelledDocument> docs;
    std::vector<std::string> categories;
    Vocabulary vocabulary;

    std::size_t num_classes() const { return categories.size(); }
    Corpus subset(std::span<const std::size_t> indices) const;
};

struct ManifestEntry {
    std::filesystem::path path;
    std::vector<std::string> categories;
};

/// `<doc-path>\t<comma-separated categories>` per line; relative paths are
/// resolved against the manifest's directory.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest);

/// Whitespace tokens, ASCII-lowercased. One sentence per non-blank line.
std::vector<std::vector<std::string>> read_sentences(const std::filesystem::path& doc);

/// Builds the vocabulary (first appearance order) and idf = ln(N / df) from
/// the corpus itself, then vectorizes every sentence.
Corpus tfidf_vectorize(const std::filesystem::path& manifest);

/// Vectorizes against a fixed vocabulary and category list; unseen tokens are
/// dropped and unseen categories rejected.
Corpus tfidf_transform(const std::filesystem::path& manifest, const Vocabulary& vocabulary,
                       const std::vector<std::string>& categories);

text::SparseVec vectorize_sentence(const std::vector<std::string>& tokens, const Vocabulary& vocabulary);

} // namespace seqclf::data
