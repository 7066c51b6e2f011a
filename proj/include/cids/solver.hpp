#ifndef CIDS_SOLVER_HPP
#define CIDS_SOLVER_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <cids/envs.hpp>
#include <cids/policy.hpp>

namespace cids {

enum class Optimizer { Sgd, Adam };

struct VPGConfig {
    double tau = 0.2;  ///< temperature; 0 selects the reward-only ablation
    int batch_size = 64;
    double learning_rate = 0.01;
    int iterations = 1500;
    std::uint64_t seed = 0;
    bool baseline = false; ///< subtract the batch-mean weight
    std::optional<double> grad_clip = 10.0; ///< global L2 bound, nullopt disables
    int hidden_dim = 64;
    Optimizer optimizer = Optimizer::Sgd;
    int threads = 0; ///< 0 = CIDS_THREADS / hardware default

    std::vector<std::string> check() const;
};

struct TrainingCurve {
    std::vector<double> mean_return;
    std::vector<double> entropy_bits;
    std::vector<double> grad_norm;
    std::vector<double> kl_surrogate;

    std::size_t size() const { return mean_return.size(); }
};

/// log P(c | y) + R_c(y) / tau, the unnormalised log Gibbs target.
double gibbs_log_target(double return_c, double posterior_c, double tau);

/// log P_theta(y) - R_c(y) / tau, where log P_theta(y) is the policy log-
/// probability plus the prior-mixture observation log-likelihood. With
/// tau = 0 the weight is -R_c(y), the tau -> 0 limit of tau times the above.
double vpg_weight(double tau, const ContextPosterior& prior, const Vector& per_context_obs_loglik,
                  double policy_logprob, double return_c);

struct WeightedScore {
    double weight = 0.0;
    Vector score;
};

/// (1/M) sum_m w_m * score_m, with the batch-mean weight subtracted first when
/// `baseline` is set. This is a gradient of KL(P_theta || Q*): descend it.
Vector vpg_gradient(std::span<const WeightedScore> batch, bool baseline);

struct TrainResult {
    PolicyParams params;
    TrainingCurve curve;
};

using IterationCallback = std::function<void(int iteration, const TrainingCurve& curve)>;

/// Variational policy gradient under a fixed context prior. Each trajectory
/// draws its own context from `prior`. Starts from `warm` when given.
/// Throws DivergenceError on a non-finite gradient.
TrainResult train(const Environment& env, const ContextPosterior& prior, const VPGConfig& cfg,
                  std::optional<PolicyParams> warm = std::nullopt, const IterationCallback& on_iteration = {});

} // namespace cids

#endif
