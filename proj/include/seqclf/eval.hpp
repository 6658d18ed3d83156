#pragma once

// Test-set metrics and sparsity/accuracy curves.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "seqclf/api_learner.hpp"
#include "seqclf/baselines.hpp"
#include "seqclf/data_io.hpp"
#include "seqclf/dwsc_mdp.hpp"
#include "seqclf/textseq_mdp.hpp"

namespace seqclf::eval {

struct EvalReport {
    std::size_t count = 0;
    std::size_t n = 0;
    double accuracy = 0.0;
    /// 1 - mean_features_used / n.
    double mean_sparsity = 0.0;
    double mean_features_used = 0.0;
    /// Share of evaluated data that acquired feature j.
    std::vector<double> feature_usage;
    /// Entry k counts the data classified with exactly k features.
    std::vector<std::size_t> features_used_histogram;
    std::optional<std::vector<double>> per_label_f1;

    std::string to_json() const;
};

/// Greedy classification of every test row. For the constrained layout the
/// precomputed feature chain is used.
EvalReport evaluate(const LinearPolicy& policy, const dwsc::DwscLayout& layout, const data::TabularDataset& test,
                    std::vector<dwsc::ClassifyResult>* traces = nullptr);

/// Every datum counts the model's global support as its acquired features.
EvalReport evaluate(const baselines::L1LinearModel& model, const data::TabularDataset& test);
EvalReport evaluate(const baselines::MajorityClassifier& model, const data::TabularDataset& test);

/// F1 of each label over a set of (truth, prediction) pairs; a label that is
/// neither present nor predicted scores 1.
std::vector<double> per_label_f1(const std::vector<text::LabelVector>& truth,
                                 const std::vector<text::LabelVector>& predicted);

struct TextEvalReport {
    std::size_t count = 0;
    /// Accuracy in mono mode, mean per-document F1 in multi mode.
    double accuracy = 0.0;
    double mean_sentences_read = 0.0;
    /// Mean of sentences_read / |d|.
    double mean_fraction_read = 0.0;
    std::vector<double> per_label_f1;

    std::string to_json() const;
};

TextEvalReport evaluate_text(const LinearPolicy& policy, const text::TextLayout& layout, const data::Corpus& test,
                             text::LabelMode mode, std::vector<text::DocumentResult>* traces = nullptr);

struct CurvePoint {
    double lambda = 0.0;
    double sparsity = 0.0;
    double accuracy = 0.0;

    friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

/// Points sorted by sparsity. Of several points sharing a sparsity value
/// only the most accurate is kept; the others are recorded as dropped.
class SparsityAccuracyCurve {
public:
    SparsityAccuracyCurve() = default;
    explicit SparsityAccuracyCurve(std::vector<CurvePoint> points);

    const std::vector<CurvePoint>& points() const { return points_; }
    const std::vector<CurvePoint>& dropped() const { return dropped_; }
    bool interpolable() const { return points_.size() >= 2; }

private:
    std::vector<CurvePoint> points_;
    std::vector<CurvePoint> dropped_;
};

/// Piecewise-linear interpolation; no extrapolation.
double accuracy_at_sparsity(const SparsityAccuracyCurve& curve, double target);

/// `lambda,sparsity,accuracy` with `#` comments for dropped points.
void write_curve_csv(std::ostream& out, const SparsityAccuracyCurve& curve);

struct Sweep {
    SparsityAccuracyCurve curve;
    std::vector<EvalReport> reports;
    std::vector<api::TrainResult> models;
};

/// One policy per lambda, each trained with its own seed derived from
/// config.seed and the grid position.
Sweep sweep_lambda(const data::TabularDataset& train, const data::TabularDataset& test,
                   const std::vector<double>& lambda_grid, const api::RolloutConfig& config,
                   dwsc::Featurization featurization, bool intercept = true);

struct L1Sweep {
    SparsityAccuracyCurve curve;
    std::vector<EvalReport> reports;
    std::vector<baselines::L1LinearModel> models;
};

L1Sweep sweep_l1(const data::TabularDataset& train, const data::TabularDataset& test,
                 const std::vector<double>& l1_grid, std::size_t max_iters = 5000, double tol = 1e-6);

/// Default train fractions and sparsity targets of the reporting protocol.
inline const std::vector<double> kReportFractions{0.05, 0.1, 0.25, 0.5};
inline const std::vector<double> kReportTargets{0.8, 0.6, 0.4};

struct ReportConfig {
    std::vector<double> train_fractions = kReportFractions;
    std::vector<double> targets = kReportTargets;
    std::vector<double> lambda_grid{0.0, 0.001, 0.01, 0.05, 0.1, 0.2};
    std::vector<double> l1_grid{0.001, 0.003, 0.01, 0.03, 0.1};
    std::size_t repeats = 3;
    api::RolloutConfig rollout;
};

/// One table row: a method at one train fraction, averaged over repeats in
/// one of two orders. Missing cells (target outside a curve) are NaN.
struct ReportRow {
    std::string method;
    double train_fraction = 0.0;
    std::string averaging;
    std::vector<double> cells;
};

struct Report {
    std::vector<double> targets;
    std::vector<ReportRow> rows;
};

/// For each fraction and repeat: split, normalize on the train side, sweep
/// lambda for both DWSM variants and the l1 grid for the baseline, then
/// interpolate at the targets. "interpolate-then-average" averages the per
/// repeat interpolated values over the repeats where they exist;
/// "average-then-interpolate" averages the (sparsity, accuracy) of each grid
/// point over repeats and interpolates the averaged curve.
Report run_report(const data::TabularDataset& data, const ReportConfig& config);

void write_report(std::ostream& out, const Report& report);

} // namespace seqclf::eval
