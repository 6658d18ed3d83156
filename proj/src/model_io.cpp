#include "seqclf/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace seqclf::model_io {

static_assert(std::endian::native == std::endian::little, "model files are stored little-endian");

namespace {

constexpr char kMagic[8] = {'S', 'Q', 'C', 'L', 'F', 'M', 'D', 'L'};

class Writer {
public:
    template <class T>
    void put(T v) {
        static_assert(std::is_trivially_copyable_v<T>);
        const auto* p = reinterpret_cast<const char*>(&v);
        buf_.append(p, sizeof v);
    }
    void u64(std::size_t v) { put<std::uint64_t>(v); }
    void str(const std::string& s) {
        u64(s.size());
        buf_ += s;
    }
    void doubles(const double* p, std::size_t count) {
        u64(count);
        buf_.append(reinterpret_cast<const char*>(p), count * sizeof(double));
    }
    void raw(const char* p, std::size_t count) { buf_.append(p, count); }
    std::string take() { return std::move(buf_); }

private:
    std::string buf_;
};

class Reader {
public:
    explicit Reader(std::string buf) : buf_(std::move(buf)) {}

    template <class T>
    T get() {
        T v;
        need(sizeof v);
        std::memcpy(&v, buf_.data() + pos_, sizeof v);
        pos_ += sizeof v;
        return v;
    }
    std::size_t u64() {
        const auto v = get<std::uint64_t>();
        if (v > buf_.size())
            raise(ErrorKind::parse, "model file: implausible length field");
        return static_cast<std::size_t>(v);
    }
    std::string str() {
        const std::size_t len = u64();
        need(len);
        std::string s = buf_.substr(pos_, len);
        pos_ += len;
        return s;
    }
    std::vector<double> doubles() {
        const std::size_t count = u64();
        need(count * sizeof(double));
        std::vector<double> out(count);
        std::memcpy(out.data(), buf_.data() + pos_, count * sizeof(double));
        pos_ += count * sizeof(double);
        return out;
    }
    void expect(const char* bytes, std::size_t count) {
        need(count);
        if (std::memcmp(buf_.data() + pos_, bytes, count) != 0)
            raise(ErrorKind::parse, "model file: bad magic");
        pos_ += count;
    }
    bool done() const { return pos_ == buf_.size(); }

private:
    void need(std::size_t count) const {
        if (buf_.size() - pos_ < count)
            raise(ErrorKind::parse, "model file: truncated");
    }

    std::string buf_;
    std::size_t pos_ = 0;
};

void put_strings(Writer& w, const std::vector<std::string>& v) {
    w.u64(v.size());
    for (const auto& s : v)
        w.str(s);
}

std::vector<std::string> get_strings(Reader& r) {
    std::vector<std::string> v(r.u64());
    for (auto& s : v)
        s = r.str();
    return v;
}

} // namespace

const char* to_string(ModelKind kind) {
    switch (kind) {
    case ModelKind::dwsc_unconstrained:
        return "dwsc-unconstrained";
    case ModelKind::dwsc_constrained:
        return "dwsc-constrained";
    case ModelKind::textseq:
        return "textseq";
    }
    return "unknown";
}

ModelFile ModelFile::from_dwsc(const LinearPolicy& policy, const dwsc::DwscLayout& layout,
                               std::optional<data::MinMaxScaler> scaler, std::vector<std::string> label_names) {
    layout.check(policy);
    ModelFile m;
    m.kind = layout.featurization() == dwsc::Featurization::constrained ? ModelKind::dwsc_constrained
                                                                         : ModelKind::dwsc_unconstrained;
    m.intercept = layout.intercept();
    m.n = layout.n();
    m.c = layout.c();
    m.policy = policy;
    m.scaler = std::move(scaler);
    m.label_names = std::move(label_names);
    return m;
}

ModelFile ModelFile::from_text(const LinearPolicy& policy, const text::TextLayout& layout, text::LabelMode mode,
                               data::Vocabulary vocabulary, std::vector<std::string> categories) {
    layout.check(policy);
    if (vocabulary.size() != layout.vocabulary())
        raise(ErrorKind::dimension, "ModelFile::from_text: vocabulary does not match layout");
    ModelFile m;
    m.kind = ModelKind::textseq;
    m.intercept = layout.intercept();
    m.mode = mode;
    m.n = layout.vocabulary();
    m.c = layout.c();
    m.policy = policy;
    m.label_names = std::move(categories);
    m.vocabulary = std::move(vocabulary);
    return m;
}

dwsc::DwscLayout ModelFile::dwsc_layout() const {
    if (is_text())
        raise(ErrorKind::invalid_argument, "model file holds a text model, not a tabular one");
    return dwsc::DwscLayout(n, c,
                            kind == ModelKind::dwsc_constrained ? dwsc::Featurization::constrained
                                                                : dwsc::Featurization::unconstrained,
                            intercept);
}

text::TextLayout ModelFile::text_layout() const {
    if (!is_text())
        raise(ErrorKind::invalid_argument, "model file holds a tabular model, not a text one");
    return text::TextLayout(n, c, intercept);
}

std::filesystem::path sidecar_path(const std::filesystem::path& model_path) {
    auto p = model_path;
    p += ".json";
    return p;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            raise(ErrorKind::io, "cannot open " + tmp.string() + " for writing");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out)
            raise(ErrorKind::io, "write to " + tmp.string() + " failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        raise(ErrorKind::io, "cannot rename " + tmp.string() + ": " + ec.message());
}

void save_model(const std::filesystem::path& path, const ModelFile& model, const std::string& config_json) {
    if (model.is_text())
        model.text_layout().check(model.policy);
    else
        model.dwsc_layout().check(model.policy);

    Writer w;
    w.raw(kMagic, sizeof kMagic);
    w.put<std::uint32_t>(kFormatVersion);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(model.kind));
    w.put<std::uint8_t>(model.intercept ? 1 : 0);
    w.put<std::uint8_t>(model.mode == text::LabelMode::multi ? 1 : 0);
    w.u64(model.n);
    w.u64(model.c);
    w.u64(model.policy.block_dim());
    w.u64(model.policy.num_actions());
    w.doubles(model.policy.theta().data(), model.policy.dim());
    w.put<std::uint8_t>(model.scaler ? 1 : 0);
    if (model.scaler) {
        w.doubles(model.scaler->min.data(), model.scaler->min.size());
        w.doubles(model.scaler->max.data(), model.scaler->max.size());
    }
    put_strings(w, model.label_names);
    w.put<std::uint8_t>(model.vocabulary ? 1 : 0);
    if (model.vocabulary) {
        put_strings(w, model.vocabulary->tokens);
        w.doubles(model.vocabulary->idf.data(), model.vocabulary->idf.size());
    }
    write_file_atomic(path, w.take());
    if (!config_json.empty())
        write_file_atomic(sidecar_path(path), config_json + "\n");
}

ModelFile load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        raise(ErrorKind::io, "cannot open model file " + path.string());
    Reader r(std::string(std::istreambuf_iterator<char>(in), {}));

    r.expect(kMagic, sizeof kMagic);
    const auto version = r.get<std::uint32_t>();
    if (version != kFormatVersion)
        raise(ErrorKind::parse, "model file: unsupported format version " + std::to_string(version));
    ModelFile m;
    const auto kind = r.get<std::uint8_t>();
    if (kind > 2)
        raise(ErrorKind::parse, "model file: unknown layout tag");
    m.kind = static_cast<ModelKind>(kind);
    m.intercept = r.get<std::uint8_t>() != 0;
    m.mode = r.get<std::uint8_t>() != 0 ? text::LabelMode::multi : text::LabelMode::mono;
    m.n = r.u64();
    m.c = r.u64();
    const std::size_t block_dim = r.u64();
    const std::size_t num_actions = r.u64();
    const auto theta = r.doubles();
    m.policy = LinearPolicy(Eigen::Map<const Eigen::VectorXd>(theta.data(), static_cast<Eigen::Index>(theta.size())),
                            block_dim, num_actions);
    if (r.get<std::uint8_t>() != 0) {
        data::MinMaxScaler s;
        s.min = r.doubles();
        s.max = r.doubles();
        if (s.min.size() != m.n || s.max.size() != m.n)
            raise(ErrorKind::parse, "model file: scaling record does not match feature count");
        m.scaler = std::move(s);
    }
    m.label_names = get_strings(r);
    if (r.get<std::uint8_t>() != 0) {
        data::Vocabulary v;
        v.tokens = get_strings(r);
        v.idf = r.doubles();
        if (v.idf.size() != v.tokens.size())
            raise(ErrorKind::parse, "model file: vocabulary and idf lengths differ");
        for (std::size_t i = 0; i < v.tokens.size(); ++i)
            v.index.emplace(v.tokens[i], static_cast<std::uint32_t>(i));
        m.vocabulary = std::move(v);
    }
    if (!r.done())
        raise(ErrorKind::parse, "model file: trailing bytes");
    if (m.is_text() != m.vocabulary.has_value())
        raise(ErrorKind::parse, "model file: vocabulary present iff the model is a text model");
    if (m.label_names.size() != m.c)
        raise(ErrorKind::parse, "model file: label name count does not match class count");
    try {
        if (m.is_text()) {
            m.text_layout().check(m.policy);
            if (m.vocabulary->size() != m.n)
                raise(ErrorKind::parse, "model file: vocabulary size does not match layout");
        } else {
            m.dwsc_layout().check(m.policy);
        }
    } catch (const Error& e) {
        raise(ErrorKind::parse, std::string("model file: ") + e.what());
    }
    return m;
}

} // namespace seqclf::model_io
