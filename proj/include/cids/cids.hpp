#ifndef CIDS_CIDS_HPP
#define CIDS_CIDS_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <cids/envs.hpp>
#include <cids/solver.hpp>

namespace cids {

struct CIDSConfig {
    int num_episodes = 300;
    VPGConfig vpg = [] {
        VPGConfig v;
        v.iterations = 20;
        return v;
    }();
    int mc_samples = 64;
    std::uint64_t seed = 0;
    int oracle_budget = 300;            ///< inner-solver iterations per oracle policy
    std::optional<ContextId> true_context; ///< drawn from the initial prior when unset
    double info_floor_nats = 1e-6;       ///< below this the information ratio is undefined
    double info_clamp_bits = 0.01;       ///< lower clamp on reported information gain is -info_clamp_bits

    std::vector<std::string> check() const;
};

struct RegretReport {
    ContextId true_context;
    std::vector<EpisodeRecord> episodes;
    std::vector<double> cumulative_regret;
    double cumulative_info_gain_bits = 0.0;
    int tau_bound_violations = 0; ///< post-burn-in episodes with a defined ratio above tau
    std::vector<double> oracle_values; ///< per-context oracle value estimates
    Vector final_posterior;
};

/// Mean discounted return of fresh samplers from `policy` over n episodes in context c.
/// Episode i uses the stream make_rng(seed, {stream..., i}).
double policy_value(const Environment& env, const SamplerFactory& policy, ContextId c, int n, std::uint64_t seed,
                    std::initializer_list<std::uint64_t> stream = {}, int threads = 0);

struct InfoGainEstimate {
    double bits = 0.0;       ///< H(prior) minus the mean posterior entropy, unclamped
    double std_error = 0.0;  ///< standard error of the mean posterior entropy
    double prior_bits = 0.0; ///< H(prior)
};

/// Expected reduction in context entropy from one episode under `policy`,
/// with contexts drawn from `prior`.
InfoGainEstimate info_gain_estimate(const ContextPosterior& prior, const SamplerFactory& policy, const Environment& env,
                                    int n, std::uint64_t seed, std::initializer_list<std::uint64_t> stream = {},
                                    int threads = 0);

/// Clamps an estimate into [-slack, H(prior)].
double clamp_info_gain(const InfoGainEstimate& est, double slack);

struct RegretTerms {
    double delta = 0.0;
    double i1 = 0.0;
    double i2 = 0.0;

    double total() const { return delta + i1 + i2; }
};

/// delta = best posterior value - value of pi_k, i1 = oracle - best posterior
/// value, i2 = value of pi_k - realized return.
RegretTerms regret_decompose(double oracle_value_cstar, double vbar_star, double vbar_pik, double realized_return);

/// delta / info_gain_nats, undefined when the gain is at or below the floor.
std::optional<double> information_ratio(double delta, double info_gain_nats, double floor_nats = 1e-6);

struct OraclePolicy {
    PolicyParams params;
    double value = 0.0;
};

/// Trains a policy for a known context c with the reward-only weight and
/// estimates its value. A lower bound on the optimal value in c.
OraclePolicy oracle_policy(const Environment& env, ContextId c, const VPGConfig& base, int budget, int mc_samples,
                           std::uint64_t seed);

double oracle_value(const Environment& env, ContextId c, const VPGConfig& base, int budget, int mc_samples,
                    std::uint64_t seed);

using EpisodeCallback = std::function<void(const EpisodeRecord&, const ContextPosterior&)>;

/// Episodic loop against a fixed hidden context: solve under the current
/// posterior, act once in the true context, update the posterior.
/// DivergenceError from an inner solve is rethrown with the episode index.
RegretReport run_cids(const Environment& env, const ContextPosterior& initial_prior, const CIDSConfig& cfg,
                      const EpisodeCallback& on_episode = {});

// ---------------------------------------------------------------------------
// Policy invariance

struct HistoryPolicy {
    /// Observation history (o_0..o_t) to action, for every history reachable
    /// under either context.
    std::vector<std::pair<std::vector<int>, int>> rules;
};

struct InvarianceVerdict {
    bool invariant = false;
    double best_i = 0.0;        ///< max_pi V_ci(pi)
    double best_j = 0.0;        ///< max_pi V_cj(pi)
    double gap_i = 0.0;         ///< best_i - V_ci(pi_j*)
    double gap_j = 0.0;         ///< best_j - V_cj(pi_i*)
    HistoryPolicy optimal_i;    ///< pi_i*
    HistoryPolicy optimal_j;    ///< pi_j*
    std::size_t policies_checked = 0;
};

inline constexpr std::size_t kDefaultPolicyCap = 5'000'000;

/// Exhaustive check of epsilon-policy invariance between two contexts over
/// deterministic observation-history policies of length `horizon`, with
/// undiscounted values. Among optimal policies for one context the one
/// doing best in the other context is chosen, so a reported gap is the
/// smallest one any optimal choice admits.
/// Throws EnumerationCapExceeded when the policy count exceeds `cap`.
InvarianceVerdict epsilon_invariance_check(const DiscreteCPOMDP& m, ContextId ci, ContextId cj, double epsilon,
                                           int horizon, std::size_t cap = kDefaultPolicyCap);

} // namespace cids

#endif
