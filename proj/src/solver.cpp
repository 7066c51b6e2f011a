#include <cids/solver.hpp>

#include <sstream>

#include <cids/parallel.hpp>

namespace cids {

std::vector<std::string> VPGConfig::check() const {
    std::vector<std::string> errs;
    if (!(tau >= 0.0) || !std::isfinite(tau))
        errs.emplace_back("tau must be finite and non-negative");
    if (batch_size < 1)
        errs.emplace_back("batch_size must be at least 1");
    if (!(learning_rate >= 0.0))
        errs.emplace_back("learning_rate must be non-negative");
    if (iterations < 0)
        errs.emplace_back("iterations must be non-negative");
    if (grad_clip && !(*grad_clip > 0.0))
        errs.emplace_back("grad_clip must be positive when set");
    if (hidden_dim < 1)
        errs.emplace_back("hidden_dim must be at least 1");
    return errs;
}

double gibbs_log_target(double return_c, double posterior_c, double tau) {
    if (!(tau > 0.0))
        throw std::invalid_argument("gibbs_log_target: tau must be positive");
    if (posterior_c <= 0.0)
        return kNegInf;
    return std::log(posterior_c) + return_c / tau;
}

double vpg_weight(double tau, const ContextPosterior& prior, const Vector& per_context_obs_loglik,
                  double policy_logprob, double return_c) {
    if (tau == 0.0)
        return -return_c;
    return policy_logprob + mixture_obs_loglik(prior, per_context_obs_loglik) - return_c / tau;
}

Vector vpg_gradient(std::span<const WeightedScore> batch, bool baseline) {
    if (batch.empty())
        throw std::invalid_argument("vpg_gradient: empty batch");
    double offset = 0.0;
    if (baseline) {
        for (const auto& b : batch)
            offset += b.weight;
        offset /= static_cast<double>(batch.size());
    }
    Vector g = Vector::Zero(batch.front().score.size());
    for (const auto& b : batch)
        g += (b.weight - offset) * b.score;
    return g / static_cast<double>(batch.size());
}

namespace {

struct Sample {
    WeightedScore ws;
    double ret = 0.0;
    double entropy_bits = 0.0;
};

class Adam {
public:
    explicit Adam(Eigen::Index n) : m_(Vector::Zero(n)), v_(Vector::Zero(n)) {}

    void step(Vector& theta, const Vector& g, double lr) {
        ++t_;
        m_ = beta1 * m_ + (1.0 - beta1) * g;
        v_ = beta2 * v_ + (1.0 - beta2) * g.cwiseAbs2();
        const double c1 = 1.0 - std::pow(beta1, t_);
        const double c2 = 1.0 - std::pow(beta2, t_);
        theta.array() -= lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps);
    }

private:
    static constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    Vector m_, v_;
    int t_ = 0;
};

std::string snapshot(int iter, const std::vector<Sample>& batch, double norm) {
    double wmin = batch.front().ws.weight, wmax = wmin, ret = 0.0;
    for (const auto& s : batch) {
        wmin = std::min(wmin, s.ws.weight);
        wmax = std::max(wmax, s.ws.weight);
        ret += s.ret;
    }
    std::ostringstream os;
    os << "non-finite policy gradient at iteration " << iter << " (grad norm " << norm << ", weights in [" << wmin
       << ", " << wmax << "], mean return " << ret / static_cast<double>(batch.size()) << ")";
    return os.str();
}

} // namespace

TrainResult train(const Environment& env, const ContextPosterior& prior, const VPGConfig& cfg,
                  std::optional<PolicyParams> warm, const IterationCallback& on_iteration) {
    if (const auto errs = cfg.check(); !errs.empty())
        throw std::invalid_argument("invalid VPG config: " + errs.front());
    if (prior.size() != env.num_contexts())
        throw std::invalid_argument("train: prior size differs from the context count");

    PolicyParams params = warm ? std::move(*warm) : init_policy(cfg.seed, env.policy_dims(cfg.hidden_dim));
    if (params.dims() != env.policy_dims(params.dims().hidden_dim))
        throw std::invalid_argument("train: warm-start parameters do not match the environment");

    const InputEncoder enc = env.encoder();
    const auto m = static_cast<std::size_t>(cfg.batch_size);
    TrainingCurve curve;
    Adam adam(params.theta().size());
    std::vector<Sample> batch(m);

    for (int it = 0; it < cfg.iterations; ++it) {
        parallel_for(
            m,
            [&](std::size_t i) {
                Rng rng = make_rng(cfg.seed, {static_cast<std::uint64_t>(it), i});
                const ContextId c = prior.sample(rng);
                RecurrentSampler sampler(params);
                LearnerView view = learner_view(env.rollout(sampler, c, rng));
                const Vector ll = env.obs_logliks(view.trajectory);
                ScoreGradient sg = score_gradient(params, enc, view.trajectory);
                Sample& s = batch[i];
                s.ret = view.discounted_return;
                s.ws.weight = vpg_weight(cfg.tau, prior, ll, sg.total_logprob, view.discounted_return);
                s.ws.score = std::move(sg.grad);
                s.entropy_bits = posterior_entropy_bits(posterior_update(prior, ll));
            },
            cfg.threads);

        std::vector<WeightedScore> scores;
        scores.reserve(m);
        double ret = 0.0, ent = 0.0, kl = 0.0;
        for (auto& s : batch) {
            ret += s.ret;
            ent += s.entropy_bits;
            kl += s.ws.weight;
            scores.push_back(std::move(s.ws));
        }
        Vector g = vpg_gradient(scores, cfg.baseline);
        const double norm = g.norm();
        if (!std::isfinite(norm)) {
            for (std::size_t i = 0; i < m; ++i)
                batch[i].ws = std::move(scores[i]);
            throw DivergenceError(snapshot(it, batch, norm));
        }
        if (cfg.grad_clip && norm > *cfg.grad_clip)
            g *= *cfg.grad_clip / norm;
        if (cfg.optimizer == Optimizer::Adam)
            adam.step(params.theta(), g, cfg.learning_rate);
        else
            params.theta() -= cfg.learning_rate * g;

        const double inv = 1.0 / static_cast<double>(m);
        curve.mean_return.push_back(ret * inv);
        curve.entropy_bits.push_back(ent * inv);
        curve.grad_norm.push_back(norm);
        curve.kl_surrogate.push_back(kl * inv);
        if (on_iteration)
            on_iteration(it, curve);
    }
    return {std::move(params), std::move(curve)};
}

} // namespace cids
