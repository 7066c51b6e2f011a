#ifndef CIDS_TESTS_SUPPORT_HPP
#define CIDS_TESTS_SUPPORT_HPP

#include <functional>
#include <random>
#include <vector>

#include <cids/model.hpp>

namespace cids::testing {

/// Random probability vector; with `sparse` some entries are forced to zero
/// (never all of them).
inline Vector random_distribution(int n, std::mt19937_64& rng, bool sparse = false) {
    std::exponential_distribution<double> ex(1.0);
    std::bernoulli_distribution drop(sparse ? 0.3 : 0.0);
    Vector v(n);
    for (int i = 0; i < n; ++i)
        v[i] = drop(rng) ? 0.0 : ex(rng);
    if (v.sum() == 0.0)
        v[std::uniform_int_distribution<int>(0, n - 1)(rng)] = 1.0;
    return v / v.sum();
}

inline DiscreteCPOMDP random_model(std::mt19937_64& rng, int max_states, int max_obs, int max_actions, int max_horizon,
                                   int contexts = 2, bool sparse = false) {
    std::uniform_int_distribution<int> ns(1, max_states), no(1, max_obs), na(1, max_actions), nt(1, max_horizon);
    std::uniform_real_distribution<double> reward(-1.0, 1.0);
    DiscreteCPOMDP m;
    m.num_states = ns(rng);
    m.num_obs = no(rng);
    m.num_actions = na(rng);
    m.num_contexts = contexts;
    m.horizon = nt(rng);
    m.r_max = 1.0;
    for (int c = 0; c < contexts; ++c) {
        std::vector<Matrix> per_action;
        for (int a = 0; a < m.num_actions; ++a) {
            Matrix P(m.num_states, m.num_states);
            for (int s = 0; s < m.num_states; ++s)
                P.row(s) = random_distribution(m.num_states, rng, sparse).transpose();
            per_action.push_back(P);
        }
        m.transition.push_back(per_action);
        Matrix E(m.num_states, m.num_obs);
        for (int s = 0; s < m.num_states; ++s)
            E.row(s) = random_distribution(m.num_obs, rng, sparse).transpose();
        m.emission.push_back(E);
        Matrix R(m.num_states, m.num_actions);
        for (int s = 0; s < m.num_states; ++s)
            for (int a = 0; a < m.num_actions; ++a)
                R(s, a) = reward(rng);
        m.reward.push_back(R);
        m.init.push_back(random_distribution(m.num_states, rng, sparse));
    }
    return m;
}

inline Trajectory random_trajectory(const DiscreteCPOMDP& m, int length, std::mt19937_64& rng, bool with_masks) {
    std::uniform_int_distribution<int> act(0, m.num_actions - 1), obs(0, m.num_obs - 1);
    std::bernoulli_distribution mask(with_masks ? 0.25 : 0.0);
    Trajectory y;
    y.initial_obs = obs(rng);
    for (int t = 0; t < length; ++t) {
        y.actions.push_back(act(rng));
        Observation o;
        o.observed = !mask(rng);
        o.value = o.observed ? obs(rng) : 0.0;
        y.observations.push_back(o);
    }
    return y;
}

/// Probability of the observations of y given its actions, by summing over
/// every hidden state path.
inline double path_sum_probability(const DiscreteCPOMDP& m, std::size_t c, const Trajectory& y) {
    const int T = static_cast<int>(y.actions.size());
    double total = 0.0;
    std::vector<int> path(static_cast<std::size_t>(T) + 1, 0);
    std::function<void(int, double)> walk = [&](int t, double p) {
        if (p == 0.0)
            return;
        if (t == T) {
            total += p;
            return;
        }
        const auto& P = m.transition[c][static_cast<std::size_t>(y.actions[static_cast<std::size_t>(t)])];
        const Observation& o = y.observations[static_cast<std::size_t>(t)];
        for (int s = 0; s < m.num_states; ++s) {
            double q = p * P(path[static_cast<std::size_t>(t)], s);
            if (o.observed)
                q *= m.emission[c](s, o.index());
            path[static_cast<std::size_t>(t) + 1] = s;
            walk(t + 1, q);
        }
    };
    for (int s0 = 0; s0 < m.num_states; ++s0) {
        double p = m.init[c][s0];
        if (y.initial_obs)
            p *= m.emission[c](s0, *y.initial_obs);
        path[0] = s0;
        walk(0, p);
    }
    return total;
}

/// Calls fn on every observation sequence (o_0, o_1..o_T) for fixed actions.
inline void for_each_observation_sequence(const DiscreteCPOMDP& m, const std::vector<int>& actions,
                                          const std::function<void(const Trajectory&)>& fn) {
    const std::size_t T = actions.size();
    Trajectory y;
    y.actions = actions;
    y.observations.assign(T, Observation{0.0, true});
    std::vector<int> digits(T + 1, 0);
    while (true) {
        y.initial_obs = digits[0];
        for (std::size_t t = 0; t < T; ++t)
            y.observations[t].value = digits[t + 1];
        fn(y);
        std::size_t k = 0;
        while (k < digits.size() && ++digits[k] == m.num_obs)
            digits[k++] = 0;
        if (k == digits.size())
            return;
    }
}

} // namespace cids::testing

#endif
