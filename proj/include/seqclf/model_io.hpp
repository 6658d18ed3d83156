#pragma once

// Versioned binary model container plus a JSON sidecar holding the training
// configuration.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "seqclf/core_mdp.hpp"
#include "seqclf/data_io.hpp"
#include "seqclf/dwsc_mdp.hpp"
#include "seqclf/textseq_mdp.hpp"

namespace seqclf::model_io {

inline constexpr std::uint32_t kFormatVersion = 1;

enum class ModelKind : std::uint8_t { dwsc_unconstrained = 0, dwsc_constrained = 1, textseq = 2 };

const char* to_string(ModelKind kind);

struct ModelFile {
    ModelKind kind = ModelKind::dwsc_unconstrained;
    bool intercept = true;
    text::LabelMode mode = text::LabelMode::mono;
    /// Feature count for tabular models, vocabulary size for text ones.
    std::size_t n = 0;
    std::size_t c = 0;
    LinearPolicy policy;
    std::optional<data::MinMaxScaler> scaler;
    std::vector<std::string> label_names;
    /// Text models only.
    std::optional<data::Vocabulary> vocabulary;

    static ModelFile from_dwsc(const LinearPolicy& policy, const dwsc::DwscLayout& layout,
                               std::optional<data::MinMaxScaler> scaler, std::vector<std::string> label_names);
    static ModelFile from_text(const LinearPolicy& policy, const text::TextLayout& layout, text::LabelMode mode,
                               data::Vocabulary vocabulary, std::vector<std::string> categories);

    bool is_text() const { return kind == ModelKind::textseq; }
    dwsc::DwscLayout dwsc_layout() const;
    text::TextLayout text_layout() const;
};

/// Writes `path` (binary) and, when config_json is non-empty, `path.json`.
/// Both files are written to a temporary name and renamed into place.
void save_model(const std::filesystem::path& path, const ModelFile& model, const std::string& config_json = {});

/// Throws parse on a bad magic, version or inconsistent dimensions and io
/// when the file cannot be read.
ModelFile load_model(const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& model_path);

/// Writes `contents` to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

} // namespace seqclf::model_io
