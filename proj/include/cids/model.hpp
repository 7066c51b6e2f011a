#ifndef CIDS_MODEL_HPP
#define CIDS_MODEL_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <cids/common.hpp>

namespace cids {

/// Zero-based index into the context set.
struct ContextId {
    std::size_t index = 0;

    constexpr ContextId() = default;
    constexpr explicit ContextId(std::size_t i) : index(i) {}
    friend constexpr bool operator==(ContextId, ContextId) = default;
};

/// A finite family of POMDPs sharing state, action and observation spaces.
///
/// transition[c][a](s, s') = P_c(s' | s, a), emission[c](s, o) = E_c(o | s),
/// reward[c](s, a) = r_c(s, a), init[c](s) = mu_c(s). All tensors are dense.
struct DiscreteCPOMDP {
    int num_states = 0;
    int num_actions = 0;
    int num_obs = 0;
    int num_contexts = 0;
    int horizon = 0;
    double r_max = 0.0;

    std::vector<std::vector<Matrix>> transition;
    std::vector<Matrix> emission;
    std::vector<Matrix> reward;
    std::vector<Vector> init;
};

/// One failed invariant. `index` addresses the offending row or entry.
struct Violation {
    std::string tensor;
    std::vector<int> index;
    double magnitude = 0.0;
    std::string message;
};

inline constexpr double kStochasticTol = 1e-12;

std::vector<Violation> validate_model(const DiscreteCPOMDP& m);
std::string to_string(const Violation& v);

/// Continuous one-dimensional Light-Dark world.
struct HalfLine {
    double threshold = 0.0;
    bool above = true; // strict: x > threshold when above, x < threshold otherwise

    bool contains(double x) const { return above ? x > threshold : x < threshold; }
};

enum class LightDarkAction : int { Left = 0, Right = 1, Observe = 2 };
inline constexpr int kLightDarkActions = 3;

struct LightDarkParams {
    double sigma_p2 = 0.1;
    double sigma_L2 = 1.0;
    double sigma_D2 = 8.0;
    double sigma_u2 = 0.09;
    double step = 1.0;
    int horizon = 20;
    double discount = 0.95;
    HalfLine reward_region[2] = {{1.0, true}, {-1.0, false}};
    HalfLine penalty_region[2] = {{1.0, false}, {0.0, true}};
    double r_plus = 1.0;
    double r_minus = -1.0;

    /// Empty when every invariant holds.
    std::vector<std::string> check() const;
};

/// Context-dependent observation variance. Context 0 is lit for x > 0,
/// context 1 for x < 0; the boundary x = 0 is dark in both.
double observation_variance(double x, ContextId c, const LightDarkParams& p);
double lightdark_reward(double x, ContextId c, const LightDarkParams& p);

/// A single observation slot: a discrete index stored as a double, or a
/// real measurement. `observed` is the mask bit.
struct Observation {
    double value = 0.0;
    bool observed = false;

    int index() const { return static_cast<int>(value); }
    friend bool operator==(const Observation&, const Observation&) = default;
};

/// Actions a_0..a_{T-1}; observations[t] is o_{t+1}, produced after a_t.
struct Trajectory {
    std::vector<int> actions;
    std::vector<Observation> observations;
    std::optional<int> initial_obs;

    std::size_t length() const { return actions.size(); }
    friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

class ContextPosterior {
public:
    /// Throws std::invalid_argument unless probs is a distribution.
    explicit ContextPosterior(Vector probs);

    static ContextPosterior uniform(std::size_t n);
    static ContextPosterior point_mass(std::size_t n, ContextId c);

    const Vector& probs() const { return probs_; }
    double operator[](std::size_t c) const { return probs_[static_cast<Eigen::Index>(c)]; }
    std::size_t size() const { return static_cast<std::size_t>(probs_.size()); }

    ContextId sample(Rng& rng) const;

private:
    Vector probs_;
};

/// prior[c] * exp(loglik[c]), renormalised in log space.
ContextPosterior posterior_update(const ContextPosterior& prior, const Vector& obs_loglik);

double posterior_entropy_nats(const ContextPosterior& p);
double posterior_entropy_bits(const ContextPosterior& p);

struct EpisodeRecord {
    int episode = 0;
    double realized_return = 0.0;
    double posterior_entropy_bits = 0.0;
    double info_gain_bits = 0.0;
    double delta_proxy = 0.0;
    double i1_proxy = 0.0;
    double i2_realized = 0.0;
    double value_cstar = 0.0; // Monte Carlo V_{c*}(pi_k), evaluation only
    double regret = 0.0;      // oracle value minus value_cstar
    std::optional<double> psi;
    double wall_time = 0.0;
};

} // namespace cids

#endif
