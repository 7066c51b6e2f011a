#include <cids/envs.hpp>

#include <algorithm>

namespace cids {

namespace {

int sample_index(const Eigen::Ref<const Vector>& probs, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double r = u(rng);
    double acc = 0.0;
    int last = 0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
        if (probs[i] <= 0.0)
            continue;
        last = static_cast<int>(i);
        acc += probs[i];
        if (r < acc)
            return last;
    }
    return last;
}

GridObs truthful_symbol(int cell, int detector) {
    if (detector < cell)
        return GridObs::DetectorLeft;
    if (detector > cell)
        return GridObs::DetectorRight;
    return GridObs::None;
}

} // namespace

std::vector<std::string> LineGridConfig::check() const {
    std::vector<std::string> errs;
    if (num_cells < 2)
        errs.emplace_back("num_cells must be at least 2");
    if (!(sense_accuracy > 0.5 && sense_accuracy <= 1.0))
        errs.emplace_back("sense_accuracy must lie in (0.5, 1]");
    if (horizon < 0)
        errs.emplace_back("horizon must be non-negative");
    if (start_cell < 0 || start_cell >= num_cells)
        errs.emplace_back("start_cell out of range");
    if (!(discount > 0.0 && discount <= 1.0))
        errs.emplace_back("discount must lie in (0, 1]");
    if (placements.empty())
        errs.emplace_back("at least one context placement is required");
    auto in_range = [&](int c) { return c >= 0 && c < num_cells; };
    for (const auto& pl : placements)
        if (!in_range(pl.high) || !in_range(pl.low) || !in_range(pl.detector))
            errs.emplace_back("placement outside the grid");
    for (std::size_t i = 0; i < placements.size(); ++i)
        for (std::size_t j = i + 1; j < placements.size(); ++j) {
            const auto& a = placements[i];
            const auto& b = placements[j];
            if (a.high == b.high && a.low == b.low && a.detector == b.detector)
                errs.emplace_back("contexts " + std::to_string(i) + " and " + std::to_string(j) +
                                  " share a placement");
        }
    return errs;
}

DiscreteCPOMDP linegrid_model(const LineGridConfig& cfg) {
    if (const auto errs = cfg.check(); !errs.empty())
        throw std::invalid_argument("invalid line grid: " + errs.front());

    const int cells = cfg.num_cells;
    DiscreteCPOMDP m;
    m.num_states = 2 * cells;
    m.num_actions = 3;
    m.num_obs = 4;
    m.num_contexts = static_cast<int>(cfg.placements.size());
    m.horizon = cfg.horizon;
    m.r_max = std::max({std::abs(cfg.high_reward), std::abs(cfg.low_reward), std::abs(cfg.detector_penalty)});

    const double miss = (1.0 - cfg.sense_accuracy) / 2.0;
    for (const GridPlacement& pl : cfg.placements) {
        auto cell_value = [&](int cell) {
            if (cell == pl.detector)
                return cfg.detector_penalty;
            if (cell == pl.high)
                return cfg.high_reward;
            if (cell == pl.low)
                return cfg.low_reward;
            return 0.0;
        };

        std::vector<Matrix> trans(3, Matrix::Zero(m.num_states, m.num_states));
        Matrix emit = Matrix::Zero(m.num_states, m.num_obs);
        Matrix rew = Matrix::Zero(m.num_states, m.num_actions);
        for (int cell = 0; cell < cells; ++cell) {
            const int left = std::max(cell - 1, 0);
            const int right = std::min(cell + 1, cells - 1);
            for (bool sensed : {false, true}) {
                const int s = grid_state(cfg, cell, sensed);
                trans[0](s, grid_state(cfg, left, false)) = 1.0;
                trans[1](s, grid_state(cfg, right, false)) = 1.0;
                trans[2](s, grid_state(cfg, cell, true)) = 1.0;
                rew(s, 0) = left != cell ? cell_value(left) : 0.0;
                rew(s, 1) = right != cell ? cell_value(right) : 0.0;
            }
            emit(grid_state(cfg, cell, false), static_cast<int>(GridObs::Null)) = 1.0;
            const int sensed = grid_state(cfg, cell, true);
            const GridObs truth = truthful_symbol(cell, pl.detector);
            for (GridObs o : {GridObs::DetectorLeft, GridObs::DetectorRight, GridObs::None})
                emit(sensed, static_cast<int>(o)) = o == truth ? cfg.sense_accuracy : miss;
        }
        Vector mu = Vector::Zero(m.num_states);
        mu[grid_state(cfg, cfg.start_cell, false)] = 1.0;

        m.transition.push_back(std::move(trans));
        m.emission.push_back(std::move(emit));
        m.reward.push_back(std::move(rew));
        m.init.push_back(std::move(mu));
    }
    return m;
}

LightDarkStep lightdark_step(const LightDarkState& s, LightDarkAction a, ContextId c, const LightDarkParams& p,
                             Rng& rng) {
    if (s.t >= p.horizon)
        throw EpisodeExhausted("lightdark_step: episode already has " + std::to_string(p.horizon) + " steps");
    LightDarkStep out;
    out.next.t = s.t + 1;
    double x = s.x;
    if (a == LightDarkAction::Observe) {
        out.next.x = x;
        std::normal_distribution<double> noise(0.0, std::sqrt(observation_variance(x, c, p)));
        out.obs = {x + noise(rng), true};
    } else {
        x += a == LightDarkAction::Left ? -p.step : p.step;
        if (p.sigma_p2 > 0.0) {
            std::normal_distribution<double> noise(0.0, std::sqrt(p.sigma_p2));
            x += noise(rng);
        }
        out.next.x = x;
        out.obs = {0.0, false};
    }
    out.reward = lightdark_reward(out.next.x, c, p);
    return out;
}

RolloutResult rollout(const Environment& env, ActionSampler& policy, ContextId c, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    return env.rollout(policy, c, rng);
}

LightDarkEnv::LightDarkEnv(LightDarkParams p) : p_(p) {
    if (const auto errs = p_.check(); !errs.empty())
        throw std::invalid_argument("invalid Light-Dark parameters: " + errs.front());
}

RolloutResult LightDarkEnv::rollout(ActionSampler& policy, ContextId c, Rng& rng) const {
    if (c.index >= 2)
        throw std::out_of_range("Light-Dark has two contexts");
    const InputEncoder enc = encoder();
    RolloutResult r;
    r.true_context = c;
    policy.reset();
    std::normal_distribution<double> init(0.0, std::sqrt(p_.sigma_u2));
    LightDarkState s{init(rng), 0};
    r.states.push_back(s.x);
    double disc = 1.0;
    for (int t = 0; t < p_.horizon; ++t) {
        const int a = policy.next(enc.encode(r.trajectory, static_cast<std::size_t>(t)), rng);
        if (a < 0 || a >= kLightDarkActions)
            throw std::out_of_range("policy produced an invalid Light-Dark action");
        const LightDarkStep step = lightdark_step(s, static_cast<LightDarkAction>(a), c, p_, rng);
        r.trajectory.actions.push_back(a);
        r.trajectory.observations.push_back(step.obs);
        r.rewards.push_back(step.reward);
        r.discounted_return += disc * step.reward;
        disc *= p_.discount;
        s = step.next;
        r.states.push_back(s.x);
    }
    return r;
}

Vector LightDarkEnv::obs_logliks(const Trajectory& y) const {
    Vector ll(2);
    for (std::size_t c = 0; c < 2; ++c)
        ll[static_cast<Eigen::Index>(c)] = lightdark_obs_loglik(p_, ContextId(c), y);
    return ll;
}

DiscreteEnv::DiscreteEnv(DiscreteCPOMDP m, double discount, std::string tag)
    : model_(std::make_unique<DiscreteCPOMDP>(std::move(m))), table_(*model_), discount_(discount),
      tag_(std::move(tag)) {
    if (!(discount_ > 0.0 && discount_ <= 1.0))
        throw std::invalid_argument("discount must lie in (0, 1]");
}

RolloutResult DiscreteEnv::rollout(ActionSampler& policy, ContextId c, Rng& rng) const {
    const DiscreteCPOMDP& m = *model_;
    if (c.index >= static_cast<std::size_t>(m.num_contexts))
        throw std::out_of_range("context index out of range");
    const InputEncoder enc = encoder();
    RolloutResult r;
    r.true_context = c;
    policy.reset();
    int s = sample_index(m.init[c.index], rng);
    r.states.push_back(s);
    r.trajectory.initial_obs = sample_index(m.emission[c.index].row(s).transpose(), rng);
    double disc = 1.0;
    for (int t = 0; t < m.horizon; ++t) {
        const int a = policy.next(enc.encode(r.trajectory, static_cast<std::size_t>(t)), rng);
        if (a < 0 || a >= m.num_actions)
            throw std::out_of_range("policy produced an invalid action");
        const double rew = m.reward[c.index](s, a);
        s = sample_index(m.transition[c.index][static_cast<std::size_t>(a)].row(s).transpose(), rng);
        const int o = sample_index(m.emission[c.index].row(s).transpose(), rng);
        r.trajectory.actions.push_back(a);
        r.trajectory.observations.push_back({static_cast<double>(o), true});
        r.rewards.push_back(rew);
        r.discounted_return += disc * rew;
        disc *= discount_;
        r.states.push_back(s);
    }
    return r;
}

Vector DiscreteEnv::obs_logliks(const Trajectory& y) const {
    Vector ll(model_->num_contexts);
    for (int c = 0; c < model_->num_contexts; ++c)
        ll[c] = discrete_obs_loglik(table_, ContextId(static_cast<std::size_t>(c)), y);
    return ll;
}

std::unique_ptr<DiscreteEnv> make_linegrid_env(const LineGridConfig& cfg) {
    return std::make_unique<DiscreteEnv>(linegrid_model(cfg), cfg.discount, "linegrid");
}

} // namespace cids
