#include "seqclf/core_mdp.hpp"

#include <cmath>
#include <string>

namespace seqclf {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::invalid_action: return "invalid-action";
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::terminal_state: return "terminal-state";
    case ErrorKind::invalid_dataset: return "invalid-dataset";
    case ErrorKind::parse: return "parse";
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::numerical_failure: return "numerical-failure";
    case ErrorKind::cache_invalid: return "cache-invalid";
    case ErrorKind::out_of_range: return "out-of-range";
    case ErrorKind::io: return "io";
    }
    return "unknown";
}

std::vector<double> BlockFeature::to_dense() const {
    std::vector<double> out(total_dim, 0.0);
    for (std::size_t k = 0; k < index.size(); ++k)
        out[offset + index[k]] = value[k];
    return out;
}

std::vector<double> BlockFeature::block() const {
    std::vector<double> out(length, 0.0);
    for (std::size_t k = 0; k < index.size(); ++k)
        out[index[k]] = value[k];
    return out;
}

BlockFeature pack_block(std::span<const double> phi, std::size_t offset, std::size_t total_dim) {
    if (offset + phi.size() > total_dim)
        raise(ErrorKind::dimension, "pack_block: block exceeds total dimension");
    BlockFeature out;
    out.total_dim = total_dim;
    out.offset = offset;
    out.length = phi.size();
    for (std::size_t i = 0; i < phi.size(); ++i) {
        if (phi[i] != 0.0) {
            out.index.push_back(static_cast<std::uint32_t>(i));
            out.value.push_back(phi[i]);
        }
    }
    return out;
}

std::vector<double> block_vector(std::span<const double> phi, ActionId action, std::size_t num_actions) {
    if (phi.empty())
        raise(ErrorKind::dimension, "block_vector: empty phi");
    if (action.index >= num_actions)
        raise(ErrorKind::invalid_action, "block_vector: action " + std::to_string(action.index) +
                                             " out of range for " + std::to_string(num_actions) + " actions");
    std::vector<double> out(phi.size() * num_actions, 0.0);
    std::copy(phi.begin(), phi.end(), out.begin() + static_cast<std::ptrdiff_t>(action.index * phi.size()));
    return out;
}

LinearPolicy::LinearPolicy(Eigen::VectorXd theta, std::size_t block_dim, std::size_t num_actions)
    : theta_(std::move(theta)), block_dim_(block_dim), num_actions_(num_actions) {
    if (block_dim_ == 0 || num_actions_ == 0)
        raise(ErrorKind::invalid_argument, "LinearPolicy: block_dim and num_actions must be positive");
    if (!theta_.allFinite())
        raise(ErrorKind::numerical_failure, "LinearPolicy: non-finite weights");
}

LinearPolicy LinearPolicy::zeros(std::size_t dim, std::size_t block_dim, std::size_t num_actions) {
    return LinearPolicy(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim)), block_dim, num_actions);
}

std::span<const double> LinearPolicy::slice(std::size_t offset, std::size_t length) const {
    if (offset + length > dim())
        raise(ErrorKind::dimension, "LinearPolicy::slice out of range");
    return {theta_.data() + offset, length};
}

double score(const LinearPolicy& policy, std::span<const double> phi_sa) {
    if (phi_sa.size() != policy.dim())
        raise(ErrorKind::dimension, "score: feature length " + std::to_string(phi_sa.size()) +
                                        " != policy dimension " + std::to_string(policy.dim()));
    double acc = 0.0;
    const double* w = policy.theta().data();
    for (std::size_t i = 0; i < phi_sa.size(); ++i)
        acc += w[i] * phi_sa[i];
    return acc;
}

double score(const LinearPolicy& policy, const BlockFeature& phi_sa) {
    if (phi_sa.total_dim != policy.dim() || phi_sa.offset + phi_sa.length > policy.dim())
        raise(ErrorKind::dimension, "score: block feature does not fit policy dimension " +
                                        std::to_string(policy.dim()));
    const double* w = policy.theta().data() + phi_sa.offset;
    double acc = 0.0;
    for (std::size_t k = 0; k < phi_sa.index.size(); ++k)
        acc += w[phi_sa.index[k]] * phi_sa.value[k];
    return acc;
}

ActionId greedy_action(const LinearPolicy& policy, std::span<const FeaturizedAction> actions) {
    if (actions.empty())
        raise(ErrorKind::terminal_state, "greedy_action: no available action");
    ActionId best = actions.front().action;
    double best_score = score(policy, actions.front().phi);
    for (std::size_t i = 1; i < actions.size(); ++i) {
        const double s = score(policy, actions[i].phi);
        if (s > best_score || (s == best_score && actions[i].action < best)) {
            best = actions[i].action;
            best_score = s;
        }
    }
    return best;
}

} // namespace seqclf
