#include "seqclf/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

namespace seqclf::data {

TabularDataset::TabularDataset(std::size_t n, std::vector<double> values, std::vector<std::size_t> labels,
                               std::vector<std::string> label_names)
    : n_(n), values_(std::move(values)), labels_(std::move(labels)), label_names_(std::move(label_names)) {
    if (values_.size() != n_ * labels_.size())
        raise(ErrorKind::dimension, "TabularDataset: value count does not match rows x features");
    for (std::size_t y : labels_)
        if (y >= label_names_.size())
            raise(ErrorKind::invalid_dataset, "TabularDataset: label " + std::to_string(y) + " out of range");
}

TabularDataset TabularDataset::subset(std::span<const std::size_t> indices) const {
    std::vector<double> values;
    values.reserve(indices.size() * n_);
    std::vector<std::size_t> labels;
    labels.reserve(indices.size());
    for (std::size_t i : indices) {
        if (i >= rows())
            raise(ErrorKind::out_of_range, "TabularDataset::subset: row " + std::to_string(i) + " out of range");
        const auto r = row(i);
        values.insert(values.end(), r.begin(), r.end());
        labels.push_back(labels_[i]);
    }
    return TabularDataset(n_, std::move(values), std::move(labels), label_names_);
}

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r'))
            ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r')
            ++j;
        if (j > i)
            out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
    raise(ErrorKind::parse, "line " + std::to_string(line) + ": " + what);
}

} // namespace

TabularDataset parse_sparse_rows(std::istream& in) {
    struct Row {
        std::size_t label;
        std::vector<std::pair<std::size_t, double>> entries;
    };
    std::vector<Row> rows;
    std::vector<std::string> label_names;
    std::unordered_map<std::string, std::size_t> label_ids;
    std::size_t n = 0;

    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto tokens = split_ws(line);
        const std::string label(tokens.front());
        auto [it, inserted] = label_ids.emplace(label, label_names.size());
        if (inserted)
            label_names.push_back(label);

        Row row{it->second, {}};
        std::size_t last = 0;
        for (std::size_t t = 1; t < tokens.size(); ++t) {
            const auto tok = tokens[t];
            const auto colon = tok.find(':');
            if (colon == std::string_view::npos || colon == 0 || colon + 1 == tok.size())
                parse_error(line_no, "expected <index>:<value>, got '" + std::string(tok) + "'");
            std::size_t idx = 0;
            auto r1 = std::from_chars(tok.data(), tok.data() + colon, idx);
            if (r1.ec != std::errc() || r1.ptr != tok.data() + colon || idx == 0)
                parse_error(line_no, "bad feature index in '" + std::string(tok) + "'");
            double val = 0.0;
            const char* vbeg = tok.data() + colon + 1;
            if (*vbeg == '+')
                ++vbeg;
            auto r2 = std::from_chars(vbeg, tok.data() + tok.size(), val);
            if (r2.ec != std::errc() || r2.ptr != tok.data() + tok.size() || !std::isfinite(val))
                parse_error(line_no, "bad feature value in '" + std::string(tok) + "'");
            if (idx <= last)
                parse_error(line_no, "feature indices must be strictly increasing");
            last = idx;
            row.entries.emplace_back(idx, val);
        }
        n = std::max(n, last);
        rows.push_back(std::move(row));
    }
    if (rows.empty())
        raise(ErrorKind::invalid_dataset, "dataset has no rows");
    if (n == 0)
        raise(ErrorKind::invalid_dataset, "dataset has no features");

    std::vector<double> values(rows.size() * n, 0.0);
    std::vector<std::size_t> labels;
    labels.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (auto [idx, val] : rows[i].entries)
            values[i * n + idx - 1] = val;
        labels.push_back(rows[i].label);
    }
    return TabularDataset(n, std::move(values), std::move(labels), std::move(label_names));
}

TabularDataset parse_sparse_rows(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        raise(ErrorKind::io, "cannot open dataset '" + path.string() + "'");
    return parse_sparse_rows(in);
}

void write_sparse_rows(std::ostream& out, const TabularDataset& data) {
    const std::size_t n = data.n();
    bool last_seen = false;
    for (std::size_t i = 0; i < data.rows() && !last_seen; ++i)
        last_seen = data.row(i)[n - 1] != 0.0;

    out << std::setprecision(17);
    for (std::size_t i = 0; i < data.rows(); ++i) {
        out << data.label_names()[data.label(i)];
        const auto r = data.row(i);
        for (std::size_t j = 0; j < n; ++j) {
            // The last column is written once explicitly so that n survives.
            const bool pin_width = i == 0 && j + 1 == n && !last_seen;
            if (r[j] != 0.0 || pin_width)
                out << ' ' << (j + 1) << ':' << r[j];
        }
        out << '\n';
    }
}

std::vector<std::size_t> split_order(std::size_t rows, double train_fraction, std::uint64_t seed,
                                     std::size_t* train_size) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        raise(ErrorKind::invalid_argument, "train fraction must lie in (0, 1)");
    const auto k = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(rows)));
    if (k == 0 || k >= rows)
        raise(ErrorKind::invalid_argument, "split of " + std::to_string(rows) + " rows at fraction " +
                                               std::to_string(train_fraction) + " leaves one side empty");
    std::vector<std::size_t> order(rows);
    for (std::size_t i = 0; i < rows; ++i)
        order[i] = i;
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    *train_size = k;
    return order;
}

Split split(const TabularDataset& data, double train_fraction, std::uint64_t seed) {
    std::size_t k = 0;
    const auto order = split_order(data.rows(), train_fraction, seed, &k);
    Split s;
    s.train_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    s.test_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(k), order.end());
    s.train = data.subset(s.train_rows);
    s.test = data.subset(s.test_rows);
    return s;
}

MinMaxScaler MinMaxScaler::fit(const TabularDataset& train) {
    if (train.n() == 0 || train.rows() == 0)
        raise(ErrorKind::invalid_dataset, "MinMaxScaler::fit: empty dataset");
    MinMaxScaler s;
    const auto first = train.row(0);
    s.min.assign(first.begin(), first.end());
    s.max = s.min;
    for (std::size_t i = 1; i < train.rows(); ++i) {
        const auto r = train.row(i);
        for (std::size_t j = 0; j < train.n(); ++j) {
            s.min[j] = std::min(s.min[j], r[j]);
            s.max[j] = std::max(s.max[j], r[j]);
        }
    }
    return s;
}

void MinMaxScaler::apply(TabularDataset& data) const {
    if (data.n() != min.size())
        raise(ErrorKind::dimension, "MinMaxScaler::apply: feature count mismatch");
    for (std::size_t i = 0; i < data.rows(); ++i) {
        auto r = data.mutable_row(i);
        for (std::size_t j = 0; j < r.size(); ++j) {
            const double range = max[j] - min[j];
            r[j] = range > 0.0 ? std::clamp((r[j] - min[j]) / range, 0.0, 1.0) : 0.0;
        }
    }
}

MinMaxScaler normalize_features(TabularDataset& data) {
    MinMaxScaler s = MinMaxScaler::fit(data);
    s.apply(data);
    return s;
}

Corpus Corpus::subset(std::span<const std::size_t> indices) const {
    Corpus out;
    out.categories = categories;
    out.vocabulary = vocabulary;
    for (std::size_t i : indices) {
        if (i >= docs.size())
            raise(ErrorKind::out_of_range, "Corpus::subset: document " + std::to_string(i) + " out of range");
        out.docs.push_back(docs[i]);
    }
    return out;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest) {
    std::ifstream in(manifest);
    if (!in)
        raise(ErrorKind::io, "cannot open manifest '" + manifest.string() + "'");
    const auto base = manifest.parent_path();
    std::vector<ManifestEntry> out;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = trim(raw);
        if (line.empty() || line.front() == '#')
            continue;
        const auto tab = line.find('\t');
        if (tab == std::string_view::npos)
            parse_error(line_no, "manifest line needs <path>\\t<categories>");
        ManifestEntry e;
        std::filesystem::path p(std::string(trim(line.substr(0, tab))));
        e.path = p.is_absolute() ? p : base / p;
        std::string_view cats = line.substr(tab + 1);
        while (!cats.empty()) {
            const auto comma = cats.find(',');
            const auto cat = trim(cats.substr(0, comma));
            if (!cat.empty())
                e.categories.emplace_back(cat);
            if (comma == std::string_view::npos)
                break;
            cats = cats.substr(comma + 1);
        }
        if (e.categories.empty())
            parse_error(line_no, "document without category");
        out.push_back(std::move(e));
    }
    if (out.empty())
        raise(ErrorKind::invalid_dataset, "manifest '" + manifest.string() + "' lists no document");
    return out;
}

std::vector<std::vector<std::string>> read_sentences(const std::filesystem::path& doc) {
    std::ifstream in(doc);
    if (!in)
        raise(ErrorKind::io, "cannot open document '" + doc.string() + "'");
    std::vector<std::vector<std::string>> sentences;
    std::string raw;
    while (std::getline(in, raw)) {
        std::vector<std::string> tokens;
        for (auto tok : split_ws(raw)) {
            std::string t(tok);
            std::transform(t.begin(), t.end(), t.begin(), [](unsigned char ch) {
                return ch < 128 ? static_cast<char>(std::tolower(ch)) : static_cast<char>(ch);
            });
            tokens.push_back(std::move(t));
        }
        if (!tokens.empty())
            sentences.push_back(std::move(tokens));
    }
    if (sentences.empty())
        raise(ErrorKind::invalid_dataset, "document '" + doc.string() + "' has no sentence");
    return sentences;
}

text::SparseVec vectorize_sentence(const std::vector<std::string>& tokens, const Vocabulary& vocabulary) {
    std::map<std::uint32_t, double> tf;
    for (const auto& t : tokens)
        if (auto it = vocabulary.index.find(t); it != vocabulary.index.end())
            tf[it->second] += 1.0;
    text::SparseVec v;
    v.dim = vocabulary.size();
    double norm2 = 0.0;
    for (auto [idx, count] : tf) {
        const double w = count * vocabulary.idf[idx];
        if (w != 0.0) {
            v.index.push_back(idx);
            v.value.push_back(w);
            norm2 += w * w;
        }
    }
    if (norm2 > 0.0) {
        const double inv = 1.0 / std::sqrt(norm2);
        for (double& w : v.value)
            w *= inv;
    }
    return v;
}

namespace {

Corpus assemble(const std::vector<ManifestEntry>& entries,
                const std::vector<std::vector<std::vector<std::string>>>& tokenized, Vocabulary vocabulary,
                std::vector<std::string> categories, bool extend_categories) {
    Corpus corpus;
    corpus.vocabulary = std::move(vocabulary);
    corpus.categories = std::move(categories);
    std::map<std::string, std::size_t> cat_ids;
    for (std::size_t k = 0; k < corpus.categories.size(); ++k)
        cat_ids.emplace(corpus.categories[k], k);
    for (const auto& e : entries)
        for (const auto& c : e.categories)
            if (!cat_ids.count(c)) {
                if (!extend_categories)
                    raise(ErrorKind::invalid_dataset, "unknown category '" + c + "'");
                cat_ids.emplace(c, corpus.categories.size());
                corpus.categories.push_back(c);
            }

    for (std::size_t d = 0; d < entries.size(); ++d) {
        LabelledDocument ld;
        ld.doc.id = entries[d].path.filename().string();
        ld.labels.assign(corpus.categories.size(), 0);
        for (const auto& c : entries[d].categories)
            ld.labels[cat_ids.at(c)] = 1;
        for (const auto& sentence : tokenized[d]) {
            ld.doc.sentences.push_back(vectorize_sentence(sentence, corpus.vocabulary));
            if (ld.doc.sentences.back().empty())
                ld.zero_sentences.push_back(ld.doc.sentences.size() - 1);
        }
        corpus.docs.push_back(std::move(ld));
    }
    return corpus;
}

std::vector<std::vector<std::vector<std::string>>> tokenize_all(const std::vector<ManifestEntry>& entries) {
    std::vector<std::vector<std::vector<std::string>>> out;
    out.reserve(entries.size());
    for (const auto& e : entries)
        out.push_back(read_sentences(e.path));
    return out;
}

} // namespace

Corpus tfidf_vectorize(const std::filesystem::path& manifest) {
    const auto entries = read_manifest(manifest);
    const auto tokenized = tokenize_all(entries);

    Vocabulary vocab;
    std::vector<std::size_t> df;
    for (const auto& doc : tokenized) {
        std::set<std::uint32_t> seen;
        for (const auto& sentence : doc)
            for (const auto& t : sentence) {
                auto [it, inserted] = vocab.index.emplace(t, static_cast<std::uint32_t>(vocab.tokens.size()));
                if (inserted) {
                    vocab.tokens.push_back(t);
                    df.push_back(0);
                }
                seen.insert(it->second);
            }
        for (auto idx : seen)
            ++df[idx];
    }
    if (vocab.tokens.empty())
        raise(ErrorKind::invalid_dataset, "corpus has an empty vocabulary");
    const double n_docs = static_cast<double>(tokenized.size());
    vocab.idf.resize(df.size());
    for (std::size_t t = 0; t < df.size(); ++t)
        vocab.idf[t] = std::log(n_docs / static_cast<double>(df[t]));
    return assemble(entries, tokenized, std::move(vocab), {}, true);
}

Corpus tfidf_transform(const std::filesystem::path& manifest, const Vocabulary& vocabulary,
                       const std::vector<std::string>& categories) {
    if (vocabulary.size() == 0)
        raise(ErrorKind::invalid_dataset, "empty vocabulary");
    const auto entries = read_manifest(manifest);
    return assemble(entries, tokenize_all(entries), vocabulary, categories, false);
}

} // namespace seqclf::data
