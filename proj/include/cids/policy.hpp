#ifndef CIDS_POLICY_HPP
#define CIDS_POLICY_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>

#include <cids/model.hpp>

namespace cids {

/// How a trajectory prefix is turned into the network input for step t.
///
/// LightDark: (z or 0, mask, one-hot previous action).
/// Discrete:  (one-hot previous observation, one-hot previous action).
/// At t = 0 the previous action slot is all zero and the observation slot
/// holds the initial observation, if any.
class InputEncoder {
public:
    enum class Kind { LightDark, Discrete };

    static InputEncoder lightdark();
    static InputEncoder discrete(int num_obs, int num_actions);

    Kind kind() const { return kind_; }
    int input_dim() const;
    int num_actions() const { return num_actions_; }

    /// Input used to choose a_t given the first t actions and observations.
    Vector encode(const Trajectory& y, std::size_t t) const;

private:
    InputEncoder(Kind k, int num_obs, int num_actions) : kind_(k), num_obs_(num_obs), num_actions_(num_actions) {}

    Kind kind_;
    int num_obs_;
    int num_actions_;
};

struct PolicyDims {
    int input_dim = 0;
    int hidden_dim = 64;
    int num_actions = 0;

    Eigen::Index num_params() const;
    friend bool operator==(const PolicyDims&, const PolicyDims&) = default;
};

/// Single-layer tanh recurrent cell with a softmax head, stored as one flat
/// parameter vector laid out as [W_in | W_h | b_h | W_a | b_a], each block
/// column-major.
class PolicyParams {
public:
    PolicyParams(PolicyDims dims, Vector theta);

    const PolicyDims& dims() const { return dims_; }
    const Vector& theta() const { return theta_; }
    Vector& theta() { return theta_; }

    Eigen::Map<const Matrix> W_in() const;
    Eigen::Map<const Matrix> W_h() const;
    Eigen::Map<const Vector> b_h() const;
    Eigen::Map<const Matrix> W_a() const;
    Eigen::Map<const Vector> b_a() const;

private:
    PolicyDims dims_;
    Vector theta_;
};

/// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
PolicyParams init_policy(std::uint64_t seed, const PolicyDims& dims);

/// Next hidden state and action log-probabilities.
struct PolicyStep {
    Vector hidden;
    Vector log_probs;
};

PolicyStep policy_forward(const PolicyParams& params, const Vector& hidden, const Vector& input);

struct ActResult {
    int action = 0;
    double logprob = 0.0;
    Vector hidden;
};

ActResult act(const PolicyParams& params, const Vector& hidden, const Vector& input, Rng& rng);

/// Draws from a categorical given log-probabilities using one uniform.
int sample_categorical(const Vector& log_probs, Rng& rng);

struct ScoreGradient {
    Vector grad;
    double total_logprob = 0.0;
};

/// d/dtheta sum_t log pi(a_t | o_{0:t-1}) by backpropagation through time.
ScoreGradient score_gradient(const PolicyParams& params, const InputEncoder& enc, const Trajectory& y);

/// Per-episode action source used by rollouts.
class ActionSampler {
public:
    virtual ~ActionSampler() = default;
    virtual void reset() = 0;
    virtual int next(const Vector& input, Rng& rng) = 0;
};

class RecurrentSampler final : public ActionSampler {
public:
    explicit RecurrentSampler(const PolicyParams& params);

    void reset() override;
    int next(const Vector& input, Rng& rng) override;
    /// Sum of log-probabilities of the actions drawn since reset().
    double episode_logprob() const { return logprob_; }

private:
    const PolicyParams* params_;
    Vector hidden_;
    double logprob_ = 0.0;
};

/// Deterministic action as a function of the step index.
class ScriptedSampler final : public ActionSampler {
public:
    explicit ScriptedSampler(std::function<int(int)> script) : script_(std::move(script)) {}

    void reset() override { t_ = 0; }
    int next(const Vector&, Rng&) override { return script_(t_++); }

private:
    std::function<int(int)> script_;
    int t_ = 0;
};

using SamplerFactory = std::function<std::unique_ptr<ActionSampler>()>;

SamplerFactory recurrent_factory(const PolicyParams& params);

inline constexpr const char* kPolicyFormat = "policy-v1";

/// JSON header line followed by num_params little-endian float64 values.
void save_policy(const PolicyParams& params, const std::string& env_tag, const std::filesystem::path& path);

struct LoadedPolicy {
    PolicyParams params;
    std::string env_tag;
};

LoadedPolicy load_policy(const std::filesystem::path& path);

} // namespace cids

#endif
