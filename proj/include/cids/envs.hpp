#ifndef CIDS_ENVS_HPP
#define CIDS_ENVS_HPP

#include <array>
#include <memory>
#include <string>
#include <vector>

#include <cids/inference.hpp>
#include <cids/model.hpp>
#include <cids/policy.hpp>

namespace cids {

// ---------------------------------------------------------------------------
// Line grid

enum class GridAction : int { Left = 0, Right = 1, Sense = 2 };
enum class GridObs : int { Null = 0, DetectorLeft = 1, DetectorRight = 2, None = 3 };

struct GridPlacement {
    int high = 0;
    int low = 0;
    int detector = 0;
};

/// Seven-cell corridor with a per-context high target, low target and
/// detector. Rewards fire when a move lands on a cell holding one of them.
struct LineGridConfig {
    int num_cells = 7;
    double high_reward = 50.0;
    double low_reward = 10.0;
    double detector_penalty = -50.0;
    double sense_accuracy = 1.0;
    int horizon = 8;
    int start_cell = 2;
    double discount = 0.95;
    std::vector<GridPlacement> placements = {{0, 4, 6}, {6, 2, 1}};

    std::vector<std::string> check() const;
};

/// States are (cell, mode) flattened as cell + num_cells * mode, where mode 1
/// means the last action was Sense. Only sensed states emit detector symbols;
/// moved states emit Null.
DiscreteCPOMDP linegrid_model(const LineGridConfig& cfg);

inline int grid_state(const LineGridConfig& cfg, int cell, bool sensed) { return cell + (sensed ? cfg.num_cells : 0); }

// ---------------------------------------------------------------------------
// Light-Dark

struct LightDarkState {
    double x = 0.0;
    int t = 0;
};

struct LightDarkStep {
    LightDarkState next;
    Observation obs;
    double reward = 0.0;
};

/// Moves by -step/+step/0 with N(0, sigma_p2) noise on moves only; emits
/// z ~ N(x', sigma^2(x', c)) on Observe; rewards the post-move position.
LightDarkStep lightdark_step(const LightDarkState& s, LightDarkAction a, ContextId c, const LightDarkParams& p,
                             Rng& rng);

// ---------------------------------------------------------------------------
// Simulators

struct RolloutResult {
    Trajectory trajectory;
    std::vector<double> states; // s_0..s_T; discrete states are stored as indices
    std::vector<double> rewards;
    double discounted_return = 0.0;
    ContextId true_context;
};

/// What a learner may see of a rollout.
struct LearnerView {
    Trajectory trajectory;
    double discounted_return = 0.0;
};

inline LearnerView learner_view(RolloutResult&& r) {
    return {std::move(r.trajectory), r.discounted_return};
}

class Environment {
public:
    virtual ~Environment() = default;

    virtual std::string tag() const = 0;
    virtual std::size_t num_contexts() const = 0;
    virtual int num_actions() const = 0;
    virtual int horizon() const = 0;
    virtual double discount() const = 0;
    virtual double r_max() const = 0;
    virtual InputEncoder encoder() const = 0;

    /// One full episode in context c. Deterministic given the RNG state.
    virtual RolloutResult rollout(ActionSampler& policy, ContextId c, Rng& rng) const = 0;

    /// Per-context observation log-likelihoods of a trajectory.
    virtual Vector obs_logliks(const Trajectory& y) const = 0;

    PolicyDims policy_dims(int hidden_dim) const { return {encoder().input_dim(), hidden_dim, num_actions()}; }
};

RolloutResult rollout(const Environment& env, ActionSampler& policy, ContextId c, std::uint64_t seed);

class LightDarkEnv final : public Environment {
public:
    explicit LightDarkEnv(LightDarkParams p);

    const LightDarkParams& params() const { return p_; }

    std::string tag() const override { return "lightdark"; }
    std::size_t num_contexts() const override { return 2; }
    int num_actions() const override { return kLightDarkActions; }
    int horizon() const override { return p_.horizon; }
    double discount() const override { return p_.discount; }
    double r_max() const override { return std::max(std::abs(p_.r_plus), std::abs(p_.r_minus)); }
    InputEncoder encoder() const override { return InputEncoder::lightdark(); }

    RolloutResult rollout(ActionSampler& policy, ContextId c, Rng& rng) const override;
    Vector obs_logliks(const Trajectory& y) const override;

private:
    LightDarkParams p_;
};

/// Generic simulator for a DiscreteCPOMDP. o_0 is always drawn from the
/// initial state's emission.
class DiscreteEnv final : public Environment {
public:
    DiscreteEnv(DiscreteCPOMDP m, double discount, std::string tag = "discrete");

    const DiscreteCPOMDP& model() const { return *model_; }

    std::string tag() const override { return tag_; }
    std::size_t num_contexts() const override { return static_cast<std::size_t>(model_->num_contexts); }
    int num_actions() const override { return model_->num_actions; }
    int horizon() const override { return model_->horizon; }
    double discount() const override { return discount_; }
    double r_max() const override { return model_->r_max; }
    InputEncoder encoder() const override { return InputEncoder::discrete(model_->num_obs, model_->num_actions); }

    RolloutResult rollout(ActionSampler& policy, ContextId c, Rng& rng) const override;
    Vector obs_logliks(const Trajectory& y) const override;

private:
    std::unique_ptr<DiscreteCPOMDP> model_; // stable address for the operator table
    OperatorTable table_;
    double discount_;
    std::string tag_;
};

std::unique_ptr<DiscreteEnv> make_linegrid_env(const LineGridConfig& cfg);

} // namespace cids

#endif
