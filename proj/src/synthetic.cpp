#include "seqclf/synthetic.hpp"

#include <random>
#include <string>
#include <vector>

namespace seqclf::synthetic {

data::TabularDataset two_subspace(const TwoSubspaceConfig& config) {
    if (config.rows == 0)
        raise(ErrorKind::invalid_argument, "two_subspace: need at least one row");
    std::mt19937_64 rng(config.seed);
    std::bernoulli_distribution coin(0.5);

    std::vector<double> values;
    std::vector<std::size_t> labels;
    values.reserve(config.rows * kFeatures);
    for (std::size_t i = 0; i < config.rows; ++i) {
        double x[kFeatures];
        for (double& v : x)
            v = coin(rng) ? 1.0 : 0.0;
        // Rows alternate subspaces so both halves are equally represented.
        const bool in_b = i % 2 == 1;
        x[kSubspaceFeature] = in_b ? 1.0 : 0.0;
        labels.push_back(x[in_b ? kFeatureB : kFeatureA] > 0.5 ? 1 : 0);
        values.insert(values.end(), x, x + kFeatures);
    }
    return data::TabularDataset(kFeatures, std::move(values), std::move(labels), {"0", "1"});
}

} // namespace seqclf::synthetic
