#include <cids/cids.hpp>

#include <algorithm>
#include <chrono>

#include <cids/parallel.hpp>

namespace cids {

namespace {

// Stream tags keep every random draw of a run on its own sequence.
enum Stream : std::uint64_t {
    kContextDraw = 1,
    kOracleTrain = 2,
    kOracleValue = 3,
    kCrossValue = 4,
    kInnerSolve = 5,
    kExecute = 6,
    kEpisodeValue = 7,
    kInfoGain = 8,
};

std::vector<std::uint64_t> with_index(std::initializer_list<std::uint64_t> stream, std::uint64_t i) {
    std::vector<std::uint64_t> out(stream);
    out.push_back(i);
    return out;
}

} // namespace

std::vector<std::string> CIDSConfig::check() const {
    std::vector<std::string> errs = vpg.check();
    if (num_episodes < 1)
        errs.emplace_back("num_episodes must be at least 1");
    if (mc_samples < 1)
        errs.emplace_back("mc_samples must be at least 1");
    if (oracle_budget < 0)
        errs.emplace_back("oracle_budget must be non-negative");
    if (!(info_floor_nats >= 0.0))
        errs.emplace_back("info_floor_nats must be non-negative");
    if (!(info_clamp_bits >= 0.0))
        errs.emplace_back("info_clamp_bits must be non-negative");
    return errs;
}

double policy_value(const Environment& env, const SamplerFactory& policy, ContextId c, int n, std::uint64_t seed,
                    std::initializer_list<std::uint64_t> stream, int threads) {
    if (n < 1)
        throw std::invalid_argument("policy_value: n must be at least 1");
    std::vector<double> returns(static_cast<std::size_t>(n));
    parallel_for(
        returns.size(),
        [&](std::size_t i) {
            const auto key = with_index(stream, i);
            Rng rng = make_rng(seed, key);
            auto sampler = policy();
            returns[i] = env.rollout(*sampler, c, rng).discounted_return;
        },
        threads);
    double sum = 0.0;
    for (double r : returns)
        sum += r;
    return sum / static_cast<double>(n);
}

InfoGainEstimate info_gain_estimate(const ContextPosterior& prior, const SamplerFactory& policy, const Environment& env,
                                    int n, std::uint64_t seed, std::initializer_list<std::uint64_t> stream,
                                    int threads) {
    if (n < 1)
        throw std::invalid_argument("info_gain_estimate: n must be at least 1");
    InfoGainEstimate est;
    est.prior_bits = posterior_entropy_bits(prior);
    if (est.prior_bits == 0.0)
        return est;

    std::vector<double> after(static_cast<std::size_t>(n));
    parallel_for(
        after.size(),
        [&](std::size_t i) {
            const auto key = with_index(stream, i);
            Rng rng = make_rng(seed, key);
            const ContextId c = prior.sample(rng);
            auto sampler = policy();
            const RolloutResult r = env.rollout(*sampler, c, rng);
            after[i] = posterior_entropy_bits(posterior_update(prior, env.obs_logliks(r.trajectory)));
        },
        threads);
    double mean = 0.0;
    for (double h : after)
        mean += h;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double h : after)
        var += (h - mean) * (h - mean);
    if (n > 1)
        est.std_error = std::sqrt(var / static_cast<double>(n - 1) / static_cast<double>(n));
    est.bits = est.prior_bits - mean;
    return est;
}

double clamp_info_gain(const InfoGainEstimate& est, double slack) {
    return std::clamp(est.bits, -slack, est.prior_bits);
}

RegretTerms regret_decompose(double oracle_value_cstar, double vbar_star, double vbar_pik, double realized_return) {
    return {vbar_star - vbar_pik, oracle_value_cstar - vbar_star, vbar_pik - realized_return};
}

std::optional<double> information_ratio(double delta, double info_gain_nats, double floor_nats) {
    if (!(info_gain_nats > floor_nats))
        return std::nullopt;
    return delta / info_gain_nats;
}

OraclePolicy oracle_policy(const Environment& env, ContextId c, const VPGConfig& base, int budget, int mc_samples,
                           std::uint64_t seed) {
    if (budget < 0)
        throw std::invalid_argument("oracle_policy: budget must be non-negative");
    VPGConfig cfg = base;
    cfg.tau = 0.0;
    cfg.iterations = budget;
    cfg.seed = derive_seed(seed, {kOracleTrain, c.index});
    const auto known = ContextPosterior::point_mass(env.num_contexts(), c);
    TrainResult res = train(env, known, cfg);
    OraclePolicy out{std::move(res.params), 0.0};
    out.value = policy_value(env, recurrent_factory(out.params), c, mc_samples, seed, {kOracleValue, c.index},
                             base.threads);
    return out;
}

double oracle_value(const Environment& env, ContextId c, const VPGConfig& base, int budget, int mc_samples,
                    std::uint64_t seed) {
    return oracle_policy(env, c, base, budget, mc_samples, seed).value;
}

RegretReport run_cids(const Environment& env, const ContextPosterior& initial_prior, const CIDSConfig& cfg,
                      const EpisodeCallback& on_episode) {
    if (const auto errs = cfg.check(); !errs.empty())
        throw std::invalid_argument("invalid C-IDS config: " + errs.front());
    const std::size_t nc = env.num_contexts();
    if (initial_prior.size() != nc)
        throw std::invalid_argument("run_cids: prior size differs from the context count");

    RegretReport report;
    if (cfg.true_context) {
        if (cfg.true_context->index >= nc)
            throw std::invalid_argument("run_cids: true context out of range");
        report.true_context = *cfg.true_context;
    } else {
        Rng rng = make_rng(cfg.seed, {kContextDraw});
        report.true_context = initial_prior.sample(rng);
    }
    const ContextId cstar = report.true_context;
    const int threads = cfg.vpg.threads;

    // cross(p, c): value in context c of the oracle policy trained for p.
    std::vector<PolicyParams> oracles;
    Matrix cross(static_cast<Eigen::Index>(nc), static_cast<Eigen::Index>(nc));
    for (std::size_t p = 0; p < nc; ++p) {
        OraclePolicy o = oracle_policy(env, ContextId{p}, cfg.vpg, cfg.oracle_budget, cfg.mc_samples, cfg.seed);
        report.oracle_values.push_back(o.value);
        oracles.push_back(std::move(o.params));
    }
    for (std::size_t p = 0; p < nc; ++p)
        for (std::size_t c = 0; c < nc; ++c)
            cross(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(c)) =
                p == c ? report.oracle_values[p]
                       : policy_value(env, recurrent_factory(oracles[p]), ContextId{c}, cfg.mc_samples, cfg.seed,
                                      {kCrossValue, p, c}, threads);
    const double oracle_cstar = report.oracle_values[cstar.index];

    ContextPosterior posterior = initial_prior;
    std::optional<PolicyParams> params;
    double br = 0.0;
    const int burn_in = cfg.num_episodes / 2;

    for (int k = 0; k < cfg.num_episodes; ++k) {
        const auto start = std::chrono::steady_clock::now();
        const auto ku = static_cast<std::uint64_t>(k);

        VPGConfig inner = cfg.vpg;
        inner.seed = derive_seed(cfg.seed, {kInnerSolve, ku});
        try {
            params = train(env, posterior, inner, std::move(params)).params;
        } catch (const DivergenceError& e) {
            throw DivergenceError("episode " + std::to_string(k + 1) + ": " + e.what());
        }
        const SamplerFactory policy = recurrent_factory(*params);

        RecurrentSampler sampler(*params);
        Rng exec_rng = make_rng(cfg.seed, {kExecute, ku});
        const RolloutResult episode = env.rollout(sampler, cstar, exec_rng);
        const ContextPosterior updated = posterior_update(posterior, env.obs_logliks(episode.trajectory));

        Vector values(static_cast<Eigen::Index>(nc));
        for (std::size_t c = 0; c < nc; ++c)
            values[static_cast<Eigen::Index>(c)] =
                policy_value(env, policy, ContextId{c}, cfg.mc_samples, cfg.seed, {kEpisodeValue, ku, c}, threads);
        const double vbar_pik = posterior.probs().dot(values);
        const double vbar_star = std::max(vbar_pik, (cross * posterior.probs()).maxCoeff());
        const RegretTerms terms = regret_decompose(oracle_cstar, vbar_star, vbar_pik, episode.discounted_return);

        const InfoGainEstimate ig =
            info_gain_estimate(posterior, policy, env, cfg.mc_samples, cfg.seed, {kInfoGain, ku}, threads);
        const double ig_bits = clamp_info_gain(ig, cfg.info_clamp_bits);

        EpisodeRecord rec;
        rec.episode = k + 1;
        rec.realized_return = episode.discounted_return;
        rec.posterior_entropy_bits = posterior_entropy_bits(updated);
        rec.info_gain_bits = ig_bits;
        rec.delta_proxy = terms.delta;
        rec.i1_proxy = terms.i1;
        rec.i2_realized = terms.i2;
        rec.value_cstar = values[static_cast<Eigen::Index>(cstar.index)];
        rec.regret = oracle_cstar - rec.value_cstar;
        rec.psi = information_ratio(terms.delta, ig_bits * kLn2, cfg.info_floor_nats);
        rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        br += rec.regret;
        report.cumulative_regret.push_back(br);
        report.cumulative_info_gain_bits += ig_bits;
        if (k >= burn_in && rec.psi && *rec.psi > cfg.vpg.tau)
            ++report.tau_bound_violations;
        posterior = updated;
        report.episodes.push_back(rec);
        if (on_episode)
            on_episode(rec, posterior);
    }
    report.final_posterior = posterior.probs();
    return report;
}

} // namespace cids
