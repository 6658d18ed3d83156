#pragma once

// Shared generators for the property tests. Everything is driven by an
// explicit seed so a failing case can be replayed.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "seqclf/core_mdp.hpp"
#include "seqclf/data_io.hpp"
#include "seqclf/dwsc_mdp.hpp"
#include "seqclf/textseq_mdp.hpp"

namespace testutil {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo = -1.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::size_t index(Rng& rng, std::size_t count) {
    return std::uniform_int_distribution<std::size_t>(0, count - 1)(rng);
}

inline std::vector<double> random_vector(Rng& rng, std::size_t len, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(len);
    for (auto& e : v)
        e = uniform(rng, lo, hi);
    return v;
}

inline Eigen::VectorXd random_theta(Rng& rng, std::size_t dim, double scale = 1.0) {
    Eigen::VectorXd t(static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < t.size(); ++i)
        t(i) = uniform(rng, -scale, scale);
    return t;
}

inline seqclf::LinearPolicy random_policy(Rng& rng, const seqclf::dwsc::DwscLayout& layout, double scale = 1.0) {
    return seqclf::LinearPolicy(random_theta(rng, layout.theta_dim(), scale), layout.block_dim(),
                                layout.num_actions());
}

inline seqclf::dwsc::FeatureMask random_mask(Rng& rng, std::size_t n) {
    seqclf::dwsc::FeatureMask z(n);
    for (std::size_t j = 0; j < n; ++j)
        if (rng() & 1U)
            z.set(j);
    return z;
}

/// Values in [0, 1), labels uniform in [0, c).
inline seqclf::data::TabularDataset random_dataset(Rng& rng, std::size_t rows, std::size_t n, std::size_t c) {
    std::vector<double> values(rows * n);
    for (auto& v : values)
        v = uniform(rng, 0.0, 1.0);
    std::vector<std::size_t> labels(rows);
    for (std::size_t i = 0; i < rows; ++i)
        labels[i] = i < c ? i : index(rng, c);
    std::vector<std::string> names;
    for (std::size_t k = 0; k < c; ++k)
        names.push_back(std::to_string(k));
    return seqclf::data::TabularDataset(n, std::move(values), std::move(labels), std::move(names));
}

/// Sets one coordinate of the block of `action`: positions follow the
/// layout of φ inside that block.
inline void set_weight(Eigen::VectorXd& theta, const seqclf::dwsc::DwscLayout& layout, std::size_t action,
                       std::size_t position, double value) {
    theta(static_cast<Eigen::Index>(layout.block_offset(seqclf::ActionId{action}) + position)) = value;
}

inline std::size_t intercept_position(const seqclf::dwsc::DwscLayout& layout, std::size_t action) {
    return layout.block_length(seqclf::ActionId{action}) - 1;
}

inline seqclf::text::SparseVec unit_sentence(std::size_t dim, std::vector<std::uint32_t> tokens) {
    std::vector<double> dense(dim, 0.0);
    for (auto t : tokens)
        dense[t] += 1.0;
    double norm = 0.0;
    for (double v : dense)
        norm += v * v;
    norm = std::sqrt(norm);
    if (norm > 0.0)
        for (double& v : dense)
            v /= norm;
    return seqclf::text::SparseVec::from_dense(dense);
}

} // namespace testutil
