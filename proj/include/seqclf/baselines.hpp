#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "seqclf/data_io.hpp"

namespace seqclf::baselines {

/// One-vs-all linear model; row k of `weights` scores class k.
struct L1LinearModel {
    Eigen::MatrixXd weights;
    Eigen::VectorXd bias;
    double l1_strength = 0.0;

    std::size_t predict(std::span<const double> x) const;
    /// Features with a non-zero weight in at least one class.
    std::vector<bool> support() const;
};

struct L1Fit {
    L1LinearModel model;
    /// Penalized objective after every accepted step, per class.
    std::vector<std::vector<double>> objective_trace;
    std::vector<std::size_t> iterations;
    std::vector<bool> converged;
};

/// sign(w) max(|w| - threshold, 0).
double soft_threshold(double w, double threshold);

/// Minimizes mean logistic loss + l1_strength ||w||_1 per class by proximal
/// gradient with backtracking, until the gradient-map norm drops below tol
/// or max_iters steps. The bias is not penalized.
L1Fit fit_l1_logistic(const data::TabularDataset& train, double l1_strength, std::size_t max_iters = 5000,
                      double tol = 1e-6);

L1LinearModel train_l1(const data::TabularDataset& train, double l1_strength, std::size_t max_iters = 5000,
                       double tol = 1e-6);

/// Fraction of features unused by every class.
double model_sparsity(const L1LinearModel& model);

/// Smallest l1 strength that zeroes every weight for this dataset.
double l1_strength_max(const data::TabularDataset& train);

struct MajorityClassifier {
    std::size_t label = 0;

    std::size_t predict(std::span<const double>) const { return label; }
};

/// Most frequent label, ties to the smallest index.
MajorityClassifier majority_baseline(const data::TabularDataset& train);

} // namespace seqclf::baselines
