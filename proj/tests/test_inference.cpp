#include <doctest.h>

#include <cids/envs.hpp>
#include <cids/inference.hpp>

#include "support.hpp"

using namespace cids;

namespace {

/// Joint Gaussian density of the observed measurements of a linear
/// Light-Dark trajectory with a constant observation variance r.
double batch_gaussian_loglik(const LightDarkParams& p, const Trajectory& y, double r) {
    std::vector<double> mean_at, moves_at, z;
    double drift = 0.0, moves = 0.0;
    for (std::size_t t = 0; t < y.length(); ++t) {
        const auto a = static_cast<LightDarkAction>(y.actions[t]);
        if (a != LightDarkAction::Observe) {
            drift += a == LightDarkAction::Left ? -p.step : p.step;
            moves += 1.0;
        }
        if (y.observations[t].observed) {
            mean_at.push_back(drift);
            moves_at.push_back(moves);
            z.push_back(y.observations[t].value);
        }
    }
    const auto n = static_cast<Eigen::Index>(z.size());
    if (n == 0)
        return 0.0;
    Matrix S(n, n);
    Vector d(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        d[i] = z[static_cast<std::size_t>(i)] - mean_at[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < n; ++j)
            S(i, j) = p.sigma_u2 + p.sigma_p2 * std::min(moves_at[static_cast<std::size_t>(i)],
                                                         moves_at[static_cast<std::size_t>(j)]) +
                      (i == j ? r : 0.0);
    }
    Eigen::LLT<Matrix> llt(S);
    const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    return -0.5 * (static_cast<double>(n) * std::log(2.0 * M_PI) + logdet + d.dot(llt.solve(d)));
}

} // namespace

TEST_CASE("build_operator multiplies transition by the emission of the source state") {
    DiscreteCPOMDP m;
    m.num_states = 2;
    m.num_actions = 1;
    m.num_obs = 2;
    m.num_contexts = 1;
    m.horizon = 1;
    m.transition = {{Matrix::Identity(2, 2)}};
    m.emission = {Matrix(2, 2)};
    m.emission[0] << 0.9, 0.1, 0.2, 0.8;
    m.reward = {Matrix::Zero(2, 1)};
    m.init = {Vector::Constant(2, 0.5)};
    const auto op = build_operator(m, ContextId{0}, 0, 0);
    Matrix expected(2, 2);
    expected << 0.9, 0.0, 0.0, 0.2;
    CHECK(op.A.isApprox(expected, 1e-15));

    m.emission[0] << 1.0, 0.0, 1.0, 0.0;
    CHECK(build_operator(m, ContextId{0}, 0, 1).A.isZero());
}

TEST_CASE("build_operator entries equal direct tensor lookups") {
    std::mt19937_64 rng(21);
    DiscreteCPOMDP m;
    do
        m = testing::random_model(rng, 3, 3, 2, 3, 2);
    while (m.num_states != 3);
    for (int a = 0; a < m.num_actions; ++a)
        for (int o = 0; o < m.num_obs; ++o) {
            const auto op = build_operator(m, ContextId{1}, a, o);
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                    CHECK(op.A(i, j) == m.transition[1][a](j, i) * m.emission[1](j, o));
        }
    const OperatorTable table(m);
    CHECK(table.op(ContextId{1}, 0, 0) == build_operator(m, ContextId{1}, 0, 0).A);
}

TEST_CASE("discrete_obs_loglik closed-form cases") {
    DiscreteCPOMDP one;
    one.num_states = 1;
    one.num_actions = 2;
    one.num_obs = 2;
    one.num_contexts = 1;
    one.horizon = 3;
    one.transition = {{Matrix::Ones(1, 1), Matrix::Ones(1, 1)}};
    one.emission = {Matrix(1, 2)};
    one.emission[0] << 0.0, 1.0;
    one.reward = {Matrix::Zero(1, 2)};
    one.init = {Vector::Ones(1)};
    Trajectory y;
    y.initial_obs = 1;
    y.actions = {0, 1, 0};
    y.observations = {{1, true}, {1, true}, {0, false}};
    CHECK(discrete_obs_loglik(one, ContextId{0}, y) == 0.0);
    y.observations[1].value = 0;
    CHECK(discrete_obs_loglik(one, ContextId{0}, y) == kNegInf);

    std::mt19937_64 rng(3);
    DiscreteCPOMDP flat = testing::random_model(rng, 4, 3, 2, 3, 1);
    flat.num_obs = 3;
    flat.emission = {Matrix::Constant(flat.num_states, 3, 1.0 / 3.0)};
    Trajectory two;
    two.actions = {0, 0};
    two.observations = {{2, true}, {1, true}};
    CHECK(discrete_obs_loglik(flat, ContextId{0}, two) == doctest::Approx(2.0 * std::log(1.0 / 3.0)).epsilon(1e-14));
}

TEST_CASE("discrete_obs_loglik equals the exhaustive path sum") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 60; ++trial) {
        const DiscreteCPOMDP m = testing::random_model(rng, 3, 2, 2, 3, 2, trial % 2 == 0);
        const OperatorTable table(m);
        const Trajectory y = testing::random_trajectory(m, 3, rng, true);
        for (std::size_t c = 0; c < 2; ++c) {
            const double oracle = testing::path_sum_probability(m, c, y);
            const double ll = discrete_obs_loglik(table, ContextId{c}, y);
            if (oracle == 0.0)
                CHECK(ll == kNegInf);
            else
                CHECK(std::abs(std::exp(ll) - oracle) <= 1e-12);
        }
    }
}

TEST_CASE("observation sequence probabilities sum to one for fixed actions") {
    std::mt19937_64 rng(100);
    for (int trial = 0; trial < 20; ++trial) {
        const DiscreteCPOMDP m = testing::random_model(rng, 4, 3, 2, 3, 2);
        std::uniform_int_distribution<int> act(0, m.num_actions - 1);
        std::vector<int> actions(static_cast<std::size_t>(m.horizon));
        for (auto& a : actions)
            a = act(rng);
        double total = 0.0;
        testing::for_each_observation_sequence(
            m, actions, [&](const Trajectory& y) { total += std::exp(discrete_obs_loglik(m, ContextId{1}, y)); });
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("EKF prediction") {
    const LightDarkParams p;
    const GaussianBelief b0{0.0, 0.09};
    const auto right = ekf_predict(b0, LightDarkAction::Right, p);
    CHECK(right.mean == doctest::Approx(1.0));
    CHECK(right.var == doctest::Approx(0.19));

    const auto stay = ekf_predict(b0, LightDarkAction::Observe, p);
    CHECK(stay.mean == b0.mean);
    CHECK(stay.var == b0.var);

    CHECK(ekf_predict({2.0, 0.5}, LightDarkAction::Left, p).mean == doctest::Approx(1.0));
}

TEST_CASE("EKF measurement update") {
    const LightDarkParams p;
    const auto u = ekf_update({1.0, 0.19}, 1.5, ContextId{0}, p);
    const double k = 0.19 / 1.19;
    CHECK(k == doctest::Approx(0.159664).epsilon(1e-6));
    CHECK(u.belief.mean == doctest::Approx(1.079832).epsilon(1e-6));
    CHECK(u.belief.var == doctest::Approx(0.159664).epsilon(1e-6));
    CHECK(u.step_loglik == doctest::Approx(log_normal_pdf(1.5, 1.0, 1.19)).epsilon(1e-14));

    const auto same = ekf_update({1.0, 0.19}, 1.0, ContextId{0}, p);
    CHECK(same.belief.mean == 1.0);
    CHECK(same.belief.var == doctest::Approx((1.0 - k) * 0.19));

    LightDarkParams vague = p;
    vague.sigma_L2 = 1e12;
    vague.sigma_D2 = 2e12;
    const auto flat = ekf_update({1.0, 0.19}, 50.0, ContextId{0}, vague);
    CHECK(flat.belief.mean == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(flat.belief.var == doctest::Approx(0.19).epsilon(1e-9));
}

TEST_CASE("lightdark_obs_loglik simple cases") {
    const LightDarkParams p;
    Trajectory moves;
    moves.actions = {0, 1, 1};
    moves.observations.assign(3, Observation{});
    CHECK(lightdark_obs_loglik(p, ContextId{0}, moves) == 0.0);

    Trajectory one;
    one.actions = {2};
    one.observations = {{0.7, true}};
    CHECK(lightdark_obs_loglik(p, ContextId{1}, one) ==
          doctest::Approx(log_normal_pdf(0.7, 0.0, p.sigma_u2 + p.sigma_D2)).epsilon(1e-14));
}

TEST_CASE("lightdark_obs_loglik equals the batch Gaussian density when both variances agree") {
    LightDarkParams p;
    p.sigma_L2 = 2.5;
    p.sigma_D2 = 2.5;
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<int> act(0, 2);
    std::normal_distribution<double> z(0.0, 2.0);
    for (int trial = 0; trial < 30; ++trial) {
        Trajectory y;
        for (int t = 0; t < 12; ++t) {
            const int a = act(rng);
            y.actions.push_back(a);
            y.observations.push_back(a == 2 ? Observation{z(rng), true} : Observation{});
        }
        for (std::size_t c = 0; c < 2; ++c)
            CHECK(std::abs(lightdark_obs_loglik(p, ContextId{c}, y) - batch_gaussian_loglik(p, y, 2.5)) < 1e-8);
    }
}

TEST_CASE("mixture_obs_loglik examples") {
    Vector ll(2);
    ll << -1.7, -1.7;
    CHECK(mixture_obs_loglik(ContextPosterior::uniform(2), ll) == doctest::Approx(-1.7).epsilon(1e-14));
    ll << -0.4, 123.0;
    CHECK(mixture_obs_loglik(ContextPosterior::point_mass(2, ContextId{0}), ll) == doctest::Approx(-0.4));
    ll << std::log(0.4), std::log(0.2);
    CHECK(mixture_obs_loglik(ContextPosterior::uniform(2), ll) == doctest::Approx(std::log(0.3)).epsilon(1e-14));
    ll << kNegInf, kNegInf;
    CHECK_THROWS_AS(mixture_obs_loglik(ContextPosterior::uniform(2), ll), AllZeroPosterior);
}
