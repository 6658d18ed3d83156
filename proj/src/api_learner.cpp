#include "seqclf/api_learner.hpp"

#include <cmath>
#include <map>

#include <Eigen/Cholesky>
#include <Eigen/SparseCore>
#include <nlohmann/json.hpp>

namespace seqclf::api {

void RolloutConfig::validate() const {
    if (num_states == 0)
        raise(ErrorKind::invalid_argument, "num_states must be positive");
    if (!(alpha >= 0.0 && alpha <= 1.0))
        raise(ErrorKind::invalid_argument, "alpha must lie in [0, 1]");
    if (rollouts_per_action == 0)
        raise(ErrorKind::invalid_argument, "rollouts_per_action must be positive");
    if (!(ridge >= 0.0) || !std::isfinite(ridge))
        raise(ErrorKind::invalid_argument, "ridge must be non-negative");
    if (!(zero_mask_fraction >= 0.0 && zero_mask_fraction <= 1.0))
        raise(ErrorKind::invalid_argument, "zero_mask_fraction must lie in [0, 1]");
}

std::string IterationDiagnostics::to_json() const {
    nlohmann::json j;
    j["iteration"] = iteration;
    j["mean_training_reward"] = mean_training_reward;
    j["mean_features_used"] = mean_features_used;
    j["wall_ms"] = wall_ms;
    return j.dump();
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(mix(mix(seed) ^ a) ^ (b * 0xd6e8feb86659fd93ULL));
}

ActionId BehaviorPolicy::select(std::span<const FeaturizedAction> actions, std::mt19937_64& rng) const {
    if (actions.empty())
        raise(ErrorKind::terminal_state, "no available action");
    if (policy != nullptr)
        return greedy_action(*policy, actions);
    std::uniform_int_distribution<std::size_t> pick(0, actions.size() - 1);
    return actions[pick(rng)].action;
}

ActionId mixture_select(const BehaviorPolicy& previous, const BehaviorPolicy& next, double alpha,
                        std::mt19937_64& rng, std::span<const FeaturizedAction> actions) {
    std::bernoulli_distribution follow_next(alpha);
    return follow_next(rng) ? next.select(actions, rng) : previous.select(actions, rng);
}

ActionId alpha_mixture_select(const LinearPolicy& previous, const LinearPolicy& next, double alpha,
                              std::mt19937_64& rng, std::span<const FeaturizedAction> actions) {
    if (previous.dim() != next.dim())
        raise(ErrorKind::dimension, "alpha_mixture_select: policies differ in dimension");
    return mixture_select(BehaviorPolicy{&previous}, BehaviorPolicy{&next}, alpha, rng, actions);
}

ActionSelector Behavior::selector(std::mt19937_64& rng) const {
    return [this, &rng](std::span<const FeaturizedAction> actions) {
        return mixture_select(previous, next, alpha, rng, actions);
    };
}

namespace {

using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

Eigen::VectorXd solve_spd(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (ldlt.info() != Eigen::Success)
        raise(ErrorKind::numerical_failure, "fit_policy: factorization failed");
    const Eigen::VectorXd d = ldlt.vectorD();
    const double dmax = d.cwiseAbs().maxCoeff();
    if (!(d.minCoeff() > 1e-13 * std::max(dmax, 1.0)))
        raise(ErrorKind::numerical_failure, "fit_policy: singular normal equations");
    Eigen::VectorXd x = ldlt.solve(b);
    if (!x.allFinite())
        raise(ErrorKind::numerical_failure, "fit_policy: non-finite solution");
    return x;
}

} // namespace

Eigen::VectorXd fit_weights(std::span<const RolloutSample> samples, std::size_t theta_dim, double ridge) {
    if (!(ridge >= 0.0))
        raise(ErrorKind::invalid_argument, "fit_policy: ridge must be non-negative");

    std::map<std::size_t, std::vector<std::size_t>> blocks;
    std::map<std::size_t, std::size_t> lengths;
    for (std::size_t s = 0; s < samples.size(); ++s) {
        const auto& f = samples[s].phi_sa;
        if (f.total_dim != theta_dim || f.offset + f.length > theta_dim)
            raise(ErrorKind::dimension, "fit_policy: sample does not match theta dimension");
        if (!std::isfinite(samples[s].estimated_return))
            raise(ErrorKind::numerical_failure, "fit_policy: non-finite target");
        auto [it, inserted] = lengths.emplace(f.offset, f.length);
        if (!inserted && it->second != f.length)
            raise(ErrorKind::dimension, "fit_policy: inconsistent block length");
        blocks[f.offset].push_back(s);
    }

    Eigen::VectorXd theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(theta_dim));
    for (const auto& [offset, rows] : blocks) {
        const auto m = static_cast<Eigen::Index>(rows.size());
        const auto d = static_cast<Eigen::Index>(lengths.at(offset));

        std::vector<Eigen::Triplet<double>> triplets;
        Eigen::VectorXd target(m);
        for (Eigen::Index r = 0; r < m; ++r) {
            const auto& sample = samples[rows[static_cast<std::size_t>(r)]];
            for (std::size_t k = 0; k < sample.phi_sa.index.size(); ++k)
                triplets.emplace_back(r, sample.phi_sa.index[k], sample.phi_sa.value[k]);
            target(r) = sample.estimated_return;
        }
        SparseRows x(m, d);
        x.setFromTriplets(triplets.begin(), triplets.end());

        Eigen::VectorXd block;
        if (m >= d) {
            Eigen::MatrixXd gram = Eigen::MatrixXd(SparseRows(x.transpose() * x));
            gram.diagonal().array() += ridge;
            block = solve_spd(gram, x.transpose() * target);
        } else {
            // Dual form: θ = Xᵀ (X Xᵀ + ridge I)⁻¹ R satisfies the same normal
            // equations and gives the minimum-norm solution as ridge -> 0.
            Eigen::MatrixXd kernel = Eigen::MatrixXd(SparseRows(x * x.transpose()));
            kernel.diagonal().array() += ridge;
            block = x.transpose() * solve_spd(kernel, target);
        }
        theta.segment(static_cast<Eigen::Index>(offset), d) = block;
    }
    return theta;
}

LinearPolicy fit_policy(std::span<const RolloutSample> samples, std::size_t theta_dim, std::size_t block_dim,
                        std::size_t num_actions, double ridge) {
    if (samples.size() * 10 < theta_dim)
        std::cerr << "warning: fitting " << theta_dim << " weights from only " << samples.size() << " samples\n";
    return LinearPolicy(fit_weights(samples, theta_dim, ridge), block_dim, num_actions);
}

DwscTask::DwscTask(const data::TabularDataset& train, dwsc::DwscLayout layout, dwsc::RewardParams params,
                   double zero_mask_fraction)
    : data_(&train), layout_(layout), params_(params), zero_mask_fraction_(zero_mask_fraction) {
    if (train.n() != layout_.n() || train.num_classes() > layout_.c())
        raise(ErrorKind::dimension, "DwscTask: dataset shape does not match layout");
}

dwsc::DatumEpisode DwscTask::episode(std::size_t i) const {
    return dwsc::DatumEpisode(data_->row(i), data_->label(i), layout_, params_);
}

dwsc::DatumState DwscTask::sample_state(std::size_t i, std::mt19937_64& rng) const {
    dwsc::DatumState s = dwsc::DatumState::initial(data_->row(i));
    std::bernoulli_distribution force_empty(zero_mask_fraction_);
    if (force_empty(rng))
        return s;
    std::bernoulli_distribution coin(0.5);
    for (std::size_t j = 0; j < layout_.n(); ++j)
        if (coin(rng))
            s.z.set(j);
    return s;
}

TextTask::TextTask(const data::Corpus& train, text::TextLayout layout, text::LabelMode mode)
    : corpus_(&train), layout_(layout), mode_(mode) {
    if (train.vocabulary.size() != layout_.vocabulary() || train.num_classes() != layout_.c())
        raise(ErrorKind::dimension, "TextTask: corpus shape does not match layout");
}

text::DocumentEpisode TextTask::episode(std::size_t i) const {
    const auto& d = corpus_->docs[i];
    return text::DocumentEpisode(d.doc, d.labels, mode_, layout_);
}

text::ReadingState TextTask::sample_state(std::size_t i, std::mt19937_64& rng) const {
    const auto& doc = corpus_->docs[i].doc;
    text::ReadingState s = text::ReadingState::initial(doc, layout_.c());
    std::uniform_int_distribution<std::size_t> position(1, doc.length());
    s.p = position(rng);
    if (mode_ == text::LabelMode::multi) {
        std::bernoulli_distribution coin(0.5);
        std::size_t ones = 0;
        for (auto& bit : s.y_hat) {
            bit = coin(rng) ? 1 : 0;
            ones += bit;
        }
        if (ones == s.y_hat.size()) {
            std::uniform_int_distribution<std::size_t> drop(0, s.y_hat.size() - 1);
            s.y_hat[drop(rng)] = 0;
        }
    }
    return s;
}

TrainResult train_dwsc(const data::TabularDataset& train, const RolloutConfig& config,
                       dwsc::Featurization featurization, dwsc::RewardParams params, bool intercept,
                       const IterationCallback& on_iteration) {
    params.validate();
    DwscTask task(train, dwsc::DwscLayout(train.n(), train.num_classes(), featurization, intercept), params,
                  config.zero_mask_fraction);
    return api::train(task, config, on_iteration);
}

TrainResult train_text(const data::Corpus& train, const RolloutConfig& config, text::LabelMode mode,
                       bool intercept, const IterationCallback& on_iteration) {
    TextTask task(train, text::TextLayout(train.vocabulary.size(), train.num_classes(), intercept), mode);
    return api::train(task, config, on_iteration);
}

} // namespace seqclf::api
