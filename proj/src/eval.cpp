#include "seqclf/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>

#include <nlohmann/json.hpp>

namespace seqclf::eval {

namespace {

std::string number(double v) {
    if (std::isnan(v))
        return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

/// Accumulates per-datum acquisition sets into an EvalReport.
class Tally {
public:
    explicit Tally(std::size_t n) : usage_(n, 0), histogram_(n + 1, 0) {}

    void add(const std::vector<bool>& used, bool correct) {
        std::size_t k = 0;
        for (std::size_t j = 0; j < used.size(); ++j)
            if (used[j]) {
                ++usage_[j];
                ++k;
            }
        ++histogram_[k];
        total_features_ += k;
        correct_ += correct ? 1 : 0;
        ++count_;
    }

    EvalReport finish() const {
        EvalReport r;
        r.count = count_;
        r.n = usage_.size();
        r.features_used_histogram = histogram_;
        r.feature_usage.resize(usage_.size(), 0.0);
        if (count_ == 0)
            return r;
        const double m = static_cast<double>(count_);
        r.accuracy = static_cast<double>(correct_) / m;
        r.mean_features_used = static_cast<double>(total_features_) / m;
        r.mean_sparsity = 1.0 - r.mean_features_used / static_cast<double>(r.n);
        for (std::size_t j = 0; j < usage_.size(); ++j)
            r.feature_usage[j] = static_cast<double>(usage_[j]) / m;
        return r;
    }

private:
    std::vector<std::size_t> usage_;
    std::vector<std::size_t> histogram_;
    std::size_t total_features_ = 0;
    std::size_t correct_ = 0;
    std::size_t count_ = 0;
};

std::vector<text::LabelVector> one_hot(const std::vector<std::size_t>& labels, std::size_t classes) {
    std::vector<text::LabelVector> out;
    out.reserve(labels.size());
    for (std::size_t y : labels) {
        text::LabelVector v(classes, 0);
        v[y] = 1;
        out.push_back(std::move(v));
    }
    return out;
}

template <class Predict>
EvalReport evaluate_constant_support(const std::vector<bool>& support, const data::TabularDataset& test,
                                     Predict&& predict) {
    Tally tally(test.n());
    std::vector<std::size_t> predicted(test.rows());
    for (std::size_t i = 0; i < test.rows(); ++i) {
        predicted[i] = predict(test.row(i));
        tally.add(support, predicted[i] == test.label(i));
    }
    EvalReport r = tally.finish();
    r.per_label_f1 = per_label_f1(one_hot(test.labels(), test.num_classes()),
                                  one_hot(predicted, test.num_classes()));
    return r;
}

} // namespace

std::string EvalReport::to_json() const {
    nlohmann::json j{{"count", count},
                     {"n", n},
                     {"accuracy", accuracy},
                     {"mean_sparsity", mean_sparsity},
                     {"mean_features_used", mean_features_used},
                     {"feature_usage", feature_usage},
                     {"features_used_histogram", features_used_histogram}};
    if (per_label_f1)
        j["per_label_f1"] = *per_label_f1;
    return j.dump();
}

std::string TextEvalReport::to_json() const {
    nlohmann::json j{{"count", count},
                     {"accuracy", accuracy},
                     {"mean_sentences_read", mean_sentences_read},
                     {"mean_fraction_read", mean_fraction_read},
                     {"per_label_f1", per_label_f1}};
    return j.dump();
}

EvalReport evaluate(const LinearPolicy& policy, const dwsc::DwscLayout& layout, const data::TabularDataset& test,
                    std::vector<dwsc::ClassifyResult>* traces) {
    layout.check(policy);
    if (test.n() != layout.n())
        raise(ErrorKind::dimension, "evaluate: test set has " + std::to_string(test.n()) +
                                        " features, model expects " + std::to_string(layout.n()));
    if (test.num_classes() > layout.c())
        raise(ErrorKind::dimension, "evaluate: test set has more labels than the model");

    std::optional<dwsc::FeatureChain> chain;
    if (layout.featurization() == dwsc::Featurization::constrained)
        chain = dwsc::feature_chain(policy, layout);

    Tally tally(test.n());
    std::vector<std::size_t> predicted(test.rows());
    if (traces)
        traces->clear();
    std::vector<bool> used(test.n());
    for (std::size_t i = 0; i < test.rows(); ++i) {
        auto result = dwsc::classify(policy, test.row(i), layout, chain ? &*chain : nullptr);
        for (std::size_t j = 0; j < used.size(); ++j)
            used[j] = result.z.test(j);
        predicted[i] = result.label;
        tally.add(used, result.label == test.label(i));
        if (traces)
            traces->push_back(std::move(result));
    }
    EvalReport r = tally.finish();
    r.per_label_f1 = per_label_f1(one_hot(test.labels(), layout.c()), one_hot(predicted, layout.c()));
    return r;
}

EvalReport evaluate(const baselines::L1LinearModel& model, const data::TabularDataset& test) {
    if (static_cast<std::size_t>(model.weights.cols()) != test.n())
        raise(ErrorKind::dimension, "evaluate: test set does not match the baseline's feature count");
    return evaluate_constant_support(model.support(), test, [&](auto x) { return model.predict(x); });
}

EvalReport evaluate(const baselines::MajorityClassifier& model, const data::TabularDataset& test) {
    return evaluate_constant_support(std::vector<bool>(test.n(), false), test,
                                     [&](auto x) { return model.predict(x); });
}

std::vector<double> per_label_f1(const std::vector<text::LabelVector>& truth,
                                 const std::vector<text::LabelVector>& predicted) {
    if (truth.size() != predicted.size())
        raise(ErrorKind::dimension, "per_label_f1: truth and prediction counts differ");
    if (truth.empty())
        return {};
    const std::size_t classes = truth.front().size();
    std::vector<std::size_t> tp(classes, 0), fp(classes, 0), fn(classes, 0);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i].size() != classes || predicted[i].size() != classes)
            raise(ErrorKind::dimension, "per_label_f1: label vectors differ in length");
        for (std::size_t k = 0; k < classes; ++k) {
            const bool t = truth[i][k] != 0, p = predicted[i][k] != 0;
            tp[k] += t && p;
            fp[k] += !t && p;
            fn[k] += t && !p;
        }
    }
    std::vector<double> f1(classes, 1.0);
    for (std::size_t k = 0; k < classes; ++k) {
        const std::size_t denom = 2 * tp[k] + fp[k] + fn[k];
        if (denom > 0)
            f1[k] = 2.0 * static_cast<double>(tp[k]) / static_cast<double>(denom);
    }
    return f1;
}

TextEvalReport evaluate_text(const LinearPolicy& policy, const text::TextLayout& layout, const data::Corpus& test,
                             text::LabelMode mode, std::vector<text::DocumentResult>* traces) {
    layout.check(policy);
    if (test.vocabulary.size() != layout.vocabulary() || test.num_classes() != layout.c())
        raise(ErrorKind::dimension, "evaluate_text: corpus does not match the model's vocabulary or categories");

    TextEvalReport r;
    r.count = test.docs.size();
    if (traces)
        traces->clear();
    std::vector<text::LabelVector> truth, predicted;
    double score = 0.0, read = 0.0, fraction = 0.0;
    for (const auto& d : test.docs) {
        auto result = text::classify_document(policy, d.doc, mode, layout);
        if (mode == text::LabelMode::multi)
            score += text::f1_reward(d.labels, result.y_hat);
        else
            score += result.y_hat == d.labels ? 1.0 : 0.0;
        read += static_cast<double>(result.sentences_read);
        fraction += static_cast<double>(result.sentences_read) / static_cast<double>(d.doc.length());
        truth.push_back(d.labels);
        predicted.push_back(result.y_hat);
        if (traces)
            traces->push_back(std::move(result));
    }
    if (r.count > 0) {
        const double m = static_cast<double>(r.count);
        r.accuracy = score / m;
        r.mean_sentences_read = read / m;
        r.mean_fraction_read = fraction / m;
    }
    r.per_label_f1 = per_label_f1(truth, predicted);
    return r;
}

SparsityAccuracyCurve::SparsityAccuracyCurve(std::vector<CurvePoint> points) {
    for (const auto& p : points)
        if (!(p.sparsity >= 0.0 && p.sparsity <= 1.0) || !std::isfinite(p.accuracy))
            raise(ErrorKind::invalid_argument, "curve point with sparsity outside [0, 1]");
    std::stable_sort(points.begin(), points.end(), [](const CurvePoint& a, const CurvePoint& b) {
        return a.sparsity < b.sparsity;
    });
    for (const auto& p : points) {
        if (!points_.empty() && points_.back().sparsity == p.sparsity) {
            if (p.accuracy > points_.back().accuracy) {
                dropped_.push_back(points_.back());
                points_.back() = p;
            } else {
                dropped_.push_back(p);
            }
            continue;
        }
        points_.push_back(p);
    }
}

double accuracy_at_sparsity(const SparsityAccuracyCurve& curve, double target) {
    if (!curve.interpolable())
        raise(ErrorKind::invalid_argument, "accuracy_at_sparsity: curve needs at least 2 points");
    const auto& pts = curve.points();
    if (!(target >= pts.front().sparsity && target <= pts.back().sparsity))
        raise(ErrorKind::out_of_range, "accuracy_at_sparsity: target " + number(target) + " outside [" +
                                           number(pts.front().sparsity) + ", " + number(pts.back().sparsity) +
                                           "]");
    const auto hi = std::lower_bound(pts.begin(), pts.end(), target,
                                     [](const CurvePoint& p, double t) { return p.sparsity < t; });
    if (hi->sparsity == target)
        return hi->accuracy;
    const auto lo = hi - 1;
    const double w = (target - lo->sparsity) / (hi->sparsity - lo->sparsity);
    return lo->accuracy + w * (hi->accuracy - lo->accuracy);
}

void write_curve_csv(std::ostream& out, const SparsityAccuracyCurve& curve) {
    if (!curve.interpolable())
        out << "# fewer than 2 distinct sparsity values; curve cannot be interpolated\n";
    for (const auto& p : curve.dropped())
        out << "# dropped duplicate sparsity: lambda=" << number(p.lambda) << " sparsity=" << number(p.sparsity)
            << " accuracy=" << number(p.accuracy) << '\n';
    out << "lambda,sparsity,accuracy\n";
    for (const auto& p : curve.points())
        out << number(p.lambda) << ',' << number(p.sparsity) << ',' << number(p.accuracy) << '\n';
}

Sweep sweep_lambda(const data::TabularDataset& train, const data::TabularDataset& test,
                   const std::vector<double>& lambda_grid, const api::RolloutConfig& config,
                   dwsc::Featurization featurization, bool intercept) {
    if (lambda_grid.empty())
        raise(ErrorKind::invalid_argument, "sweep_lambda: empty lambda grid");
    for (double l : lambda_grid)
        if (!(l >= 0.0))
            raise(ErrorKind::invalid_argument, "sweep_lambda: lambda values must be non-negative");

    Sweep sweep;
    std::vector<CurvePoint> points;
    const dwsc::DwscLayout layout(train.n(), train.num_classes(), featurization, intercept);
    for (std::size_t k = 0; k < lambda_grid.size(); ++k) {
        api::RolloutConfig cell = config;
        cell.seed = api::derive_seed(config.seed, k, 0x1a3bd);
        auto model = api::train_dwsc(train, cell, featurization, {lambda_grid[k]}, intercept);
        auto report = evaluate(model.policy, layout, test);
        points.push_back({lambda_grid[k], report.mean_sparsity, report.accuracy});
        sweep.reports.push_back(std::move(report));
        sweep.models.push_back(std::move(model));
    }
    sweep.curve = SparsityAccuracyCurve(std::move(points));
    return sweep;
}

L1Sweep sweep_l1(const data::TabularDataset& train, const data::TabularDataset& test,
                 const std::vector<double>& l1_grid, std::size_t max_iters, double tol) {
    if (l1_grid.empty())
        raise(ErrorKind::invalid_argument, "sweep_l1: empty l1 grid");
    L1Sweep sweep;
    std::vector<CurvePoint> points;
    for (double strength : l1_grid) {
        auto model = baselines::train_l1(train, strength, max_iters, tol);
        auto report = evaluate(model, test);
        points.push_back({strength, report.mean_sparsity, report.accuracy});
        sweep.reports.push_back(std::move(report));
        sweep.models.push_back(std::move(model));
    }
    sweep.curve = SparsityAccuracyCurve(std::move(points));
    return sweep;
}

namespace {

double interpolate_or_nan(const SparsityAccuracyCurve& curve, double target) {
    if (!curve.interpolable())
        return std::numeric_limits<double>::quiet_NaN();
    const auto& pts = curve.points();
    if (target < pts.front().sparsity || target > pts.back().sparsity)
        return std::numeric_limits<double>::quiet_NaN();
    return accuracy_at_sparsity(curve, target);
}

/// Raw per-grid-point values of one method across repeats.
struct MethodRuns {
    std::string name;
    std::vector<std::vector<CurvePoint>> raw;
    std::vector<SparsityAccuracyCurve> curves;
};

void append_rows(Report& report, const MethodRuns& runs, double fraction, const std::vector<double>& targets) {
    ReportRow after{runs.name, fraction, "interpolate-then-average", {}};
    for (double t : targets) {
        double sum = 0.0;
        std::size_t have = 0;
        for (const auto& c : runs.curves) {
            const double v = interpolate_or_nan(c, t);
            if (!std::isnan(v)) {
                sum += v;
                ++have;
            }
        }
        after.cells.push_back(have ? sum / static_cast<double>(have) : std::numeric_limits<double>::quiet_NaN());
    }

    std::vector<CurvePoint> mean(runs.raw.front().size());
    for (std::size_t k = 0; k < mean.size(); ++k) {
        mean[k].lambda = runs.raw.front()[k].lambda;
        for (const auto& r : runs.raw) {
            mean[k].sparsity += r[k].sparsity;
            mean[k].accuracy += r[k].accuracy;
        }
        mean[k].sparsity /= static_cast<double>(runs.raw.size());
        mean[k].accuracy /= static_cast<double>(runs.raw.size());
    }
    const SparsityAccuracyCurve averaged(std::move(mean));
    ReportRow before{runs.name, fraction, "average-then-interpolate", {}};
    for (double t : targets)
        before.cells.push_back(interpolate_or_nan(averaged, t));

    report.rows.push_back(std::move(after));
    report.rows.push_back(std::move(before));
}

} // namespace

Report run_report(const data::TabularDataset& data, const ReportConfig& config) {
    if (config.repeats == 0)
        raise(ErrorKind::invalid_argument, "run_report: need at least one repeat");
    if (config.train_fractions.empty() || config.targets.empty())
        raise(ErrorKind::invalid_argument, "run_report: empty fraction or target list");

    Report report;
    report.targets = config.targets;
    for (std::size_t f = 0; f < config.train_fractions.size(); ++f) {
        const double fraction = config.train_fractions[f];
        MethodRuns un{"dwsm-un", {}, {}}, con{"dwsm-con", {}, {}}, l1{"l1-logistic", {}, {}};
        for (std::size_t r = 0; r < config.repeats; ++r) {
            const std::uint64_t seed = api::derive_seed(config.rollout.seed, f + 1, r + 1);
            auto parts = data::split(data, fraction, seed);
            const auto scaler = data::normalize_features(parts.train);
            scaler.apply(parts.test);

            api::RolloutConfig rollout = config.rollout;
            rollout.seed = seed;
            for (auto* runs : {&un, &con}) {
                const auto featurization =
                    runs == &un ? dwsc::Featurization::unconstrained : dwsc::Featurization::constrained;
                auto sweep = sweep_lambda(parts.train, parts.test, config.lambda_grid, rollout, featurization);
                std::vector<CurvePoint> raw;
                for (std::size_t k = 0; k < sweep.reports.size(); ++k)
                    raw.push_back({config.lambda_grid[k], sweep.reports[k].mean_sparsity,
                                   sweep.reports[k].accuracy});
                runs->raw.push_back(std::move(raw));
                runs->curves.push_back(std::move(sweep.curve));
            }
            auto base = sweep_l1(parts.train, parts.test, config.l1_grid);
            std::vector<CurvePoint> raw;
            for (std::size_t k = 0; k < base.reports.size(); ++k)
                raw.push_back({config.l1_grid[k], base.reports[k].mean_sparsity, base.reports[k].accuracy});
            l1.raw.push_back(std::move(raw));
            l1.curves.push_back(std::move(base.curve));
        }
        for (const auto* runs : {&un, &con, &l1})
            append_rows(report, *runs, fraction, config.targets);
    }
    return report;
}

void write_report(std::ostream& out, const Report& report) {
    out << "method,train_fraction,averaging";
    for (double t : report.targets)
        out << ",sparsity=" << number(t);
    out << '\n';
    for (const auto& row : report.rows) {
        out << row.method << ',' << number(row.train_fraction) << ',' << row.averaging;
        for (double v : row.cells)
            out << ',' << (std::isnan(v) ? std::string("n/a") : number(v));
        out << '\n';
    }
}

} // namespace seqclf::eval
