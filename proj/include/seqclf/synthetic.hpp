#pragma once

// Two-subspace benchmark over binary features. Feature 5 says which subspace
// a datum lives in; the label equals x0 in subspace A (x5 = 0) and x3 in
// subspace B (x5 = 1). Features 1, 2 and 4 are fair-coin noise. Each
// informative feature separates its own subspace perfectly, while the label
// as a whole is a multiplexer that no linear model fits.

#include <cstddef>
#include <cstdint>

#include "seqclf/data_io.hpp"

namespace seqclf::synthetic {

inline constexpr std::size_t kFeatures = 6;
inline constexpr std::size_t kFeatureA = 0;
inline constexpr std::size_t kFeatureB = 3;
inline constexpr std::size_t kSubspaceFeature = 5;

struct TwoSubspaceConfig {
    std::size_t rows = 400;
    std::uint64_t seed = 7;
};

data::TabularDataset two_subspace(const TwoSubspaceConfig& config = {});

} // namespace seqclf::synthetic
