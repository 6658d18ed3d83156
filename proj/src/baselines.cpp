#include "seqclf/baselines.hpp"

#include <algorithm>
#include <cmath>

namespace seqclf::baselines {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

RowMatrix as_matrix(const data::TabularDataset& d) {
    return Eigen::Map<const RowMatrix>(d.values().data(), static_cast<Eigen::Index>(d.rows()),
                                       static_cast<Eigen::Index>(d.n()));
}

double softplus(double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); }

double sigmoid(double v) {
    if (v >= 0.0)
        return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
}

struct Binary {
    const RowMatrix& x;
    const Eigen::VectorXd& sign; // +1 / -1

    double loss(const Eigen::VectorXd& w, double b) const {
        const Eigen::VectorXd margin = sign.cwiseProduct((x * w).array().matrix() + Eigen::VectorXd::Constant(x.rows(), b));
        double total = 0.0;
        for (Eigen::Index i = 0; i < margin.size(); ++i)
            total += softplus(-margin(i));
        const double l = total / static_cast<double>(x.rows());
        if (!std::isfinite(l))
            raise(ErrorKind::numerical_failure, "train_l1: non-finite loss");
        return l;
    }

    void gradient(const Eigen::VectorXd& w, double b, Eigen::VectorXd& gw, double& gb) const {
        const Eigen::VectorXd margin = sign.cwiseProduct(x * w + Eigen::VectorXd::Constant(x.rows(), b));
        Eigen::VectorXd coef(margin.size());
        for (Eigen::Index i = 0; i < margin.size(); ++i)
            coef(i) = -sign(i) * sigmoid(-margin(i));
        const double inv_n = 1.0 / static_cast<double>(x.rows());
        gw = x.transpose() * coef * inv_n;
        gb = coef.sum() * inv_n;
    }
};

double logit_of_mean(const Eigen::VectorXd& sign) {
    const double p = std::clamp((sign.array() > 0).cast<double>().mean(), 1e-6, 1.0 - 1e-6);
    return std::log(p / (1.0 - p));
}

Eigen::VectorXd one_vs_all(const data::TabularDataset& d, std::size_t k) {
    Eigen::VectorXd s(static_cast<Eigen::Index>(d.rows()));
    for (std::size_t i = 0; i < d.rows(); ++i)
        s(static_cast<Eigen::Index>(i)) = d.label(i) == k ? 1.0 : -1.0;
    return s;
}

} // namespace

double soft_threshold(double w, double threshold) {
    if (w > threshold)
        return w - threshold;
    if (w < -threshold)
        return w + threshold;
    return 0.0;
}

std::size_t L1LinearModel::predict(std::span<const double> x) const {
    if (static_cast<Eigen::Index>(x.size()) != weights.cols())
        raise(ErrorKind::dimension, "L1LinearModel::predict: feature count mismatch");
    const Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
    const Eigen::VectorXd scores = weights * v + bias;
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < scores.size(); ++k)
        if (scores(k) > scores(best))
            best = k;
    return static_cast<std::size_t>(best);
}

std::vector<bool> L1LinearModel::support() const {
    std::vector<bool> used(static_cast<std::size_t>(weights.cols()), false);
    for (Eigen::Index j = 0; j < weights.cols(); ++j)
        used[static_cast<std::size_t>(j)] = (weights.col(j).array() != 0.0).any();
    return used;
}

L1Fit fit_l1_logistic(const data::TabularDataset& train, double l1_strength, std::size_t max_iters, double tol) {
    if (train.rows() == 0)
        raise(ErrorKind::invalid_dataset, "train_l1: empty training set");
    if (!(l1_strength >= 0.0) || !std::isfinite(l1_strength))
        raise(ErrorKind::invalid_argument, "train_l1: l1_strength must be non-negative");

    const RowMatrix x = as_matrix(train);
    const auto n = static_cast<Eigen::Index>(train.n());
    const std::size_t classes = train.num_classes();

    L1Fit fit;
    fit.model.weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(classes), n);
    fit.model.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(classes));
    fit.model.l1_strength = l1_strength;

    for (std::size_t k = 0; k < classes; ++k) {
        const Eigen::VectorXd sign = one_vs_all(train, k);
        const Binary problem{x, sign};
        Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
        double b = logit_of_mean(sign);
        double f = problem.loss(w, b);
        std::vector<double> trace{f + l1_strength * w.lpNorm<1>()};

        double step = 1.0;
        Eigen::VectorXd gw;
        double gb = 0.0;
        std::size_t it = 0;
        bool converged = false;
        for (; it < max_iters; ++it) {
            problem.gradient(w, b, gw, gb);
            Eigen::VectorXd w_new(n);
            double b_new = 0.0, f_new = 0.0;
            for (int attempt = 0;; ++attempt) {
                for (Eigen::Index j = 0; j < n; ++j)
                    w_new(j) = soft_threshold(w(j) - step * gw(j), step * l1_strength);
                b_new = b - step * gb;
                f_new = problem.loss(w_new, b_new);
                const Eigen::VectorXd dw = w_new - w;
                const double db = b_new - b;
                const double model =
                    f + gw.dot(dw) + gb * db + (dw.squaredNorm() + db * db) / (2.0 * step);
                if (f_new <= model + 1e-15 || attempt > 60)
                    break;
                step *= 0.5;
            }
            const double move = std::sqrt((w_new - w).squaredNorm() + (b_new - b) * (b_new - b)) / step;
            w = std::move(w_new);
            b = b_new;
            f = f_new;
            trace.push_back(f + l1_strength * w.lpNorm<1>());
            if (move <= tol) {
                converged = true;
                ++it;
                break;
            }
            step *= 2.0;
        }
        fit.model.weights.row(static_cast<Eigen::Index>(k)) = w.transpose();
        fit.model.bias(static_cast<Eigen::Index>(k)) = b;
        fit.objective_trace.push_back(std::move(trace));
        fit.iterations.push_back(it);
        fit.converged.push_back(converged);
    }
    return fit;
}

L1LinearModel train_l1(const data::TabularDataset& train, double l1_strength, std::size_t max_iters, double tol) {
    return fit_l1_logistic(train, l1_strength, max_iters, tol).model;
}

double model_sparsity(const L1LinearModel& model) {
    const auto used = model.support();
    if (used.empty())
        return 1.0;
    const auto unused = std::count(used.begin(), used.end(), false);
    return static_cast<double>(unused) / static_cast<double>(used.size());
}

double l1_strength_max(const data::TabularDataset& train) {
    const RowMatrix x = as_matrix(train);
    double best = 0.0;
    for (std::size_t k = 0; k < train.num_classes(); ++k) {
        const Eigen::VectorXd sign = one_vs_all(train, k);
        const Binary problem{x, sign};
        Eigen::VectorXd gw;
        double gb = 0.0;
        problem.gradient(Eigen::VectorXd::Zero(x.cols()), logit_of_mean(sign), gw, gb);
        best = std::max(best, gw.cwiseAbs().maxCoeff());
    }
    return best;
}

MajorityClassifier majority_baseline(const data::TabularDataset& train) {
    if (train.rows() == 0)
        raise(ErrorKind::invalid_dataset, "majority_baseline: empty training set");
    std::vector<std::size_t> counts(train.num_classes(), 0);
    for (std::size_t y : train.labels())
        ++counts[y];
    const auto best = std::max_element(counts.begin(), counts.end()) - counts.begin();
    return {static_cast<std::size_t>(best)};
}

} // namespace seqclf::baselines
