#include <cids/inference.hpp>

namespace cids {

namespace {

void check_indices(const DiscreteCPOMDP& m, ContextId c, int action, int obs) {
    if (c.index >= static_cast<std::size_t>(m.num_contexts))
        throw std::out_of_range("context index out of range");
    if (action < 0 || action >= m.num_actions)
        throw std::out_of_range("action index out of range");
    if (obs < 0 || obs >= m.num_obs)
        throw std::out_of_range("observation index out of range");
}

} // namespace

ObservableOperator build_operator(const DiscreteCPOMDP& m, ContextId c, int action, int obs) {
    check_indices(m, c, action, obs);
    const Matrix& p = m.transition[c.index][static_cast<std::size_t>(action)];
    const Vector e = m.emission[c.index].col(obs);
    return {p.transpose() * e.asDiagonal(), c, action, obs};
}

OperatorTable::OperatorTable(const DiscreteCPOMDP& m) : model_(&m) {
    const auto nc = static_cast<std::size_t>(m.num_contexts);
    ops_.reserve(nc * static_cast<std::size_t>(m.num_actions * m.num_obs));
    for (std::size_t c = 0; c < nc; ++c)
        for (int a = 0; a < m.num_actions; ++a) {
            trans_.push_back(m.transition[c][static_cast<std::size_t>(a)].transpose());
            for (int o = 0; o < m.num_obs; ++o)
                ops_.push_back(build_operator(m, ContextId(c), a, o).A);
        }
}

const Matrix& OperatorTable::op(ContextId c, int action, int obs) const {
    check_indices(*model_, c, action, obs);
    const auto idx = (c.index * static_cast<std::size_t>(model_->num_actions) + static_cast<std::size_t>(action)) *
                         static_cast<std::size_t>(model_->num_obs) +
                     static_cast<std::size_t>(obs);
    return ops_[idx];
}

const Matrix& OperatorTable::transposed_transition(ContextId c, int action) const {
    check_indices(*model_, c, action, 0);
    return trans_[c.index * static_cast<std::size_t>(model_->num_actions) + static_cast<std::size_t>(action)];
}

double discrete_obs_loglik(const OperatorTable& table, ContextId c, const Trajectory& y) {
    const DiscreteCPOMDP& m = table.model();
    if (c.index >= static_cast<std::size_t>(m.num_contexts))
        throw std::out_of_range("context index out of range");
    if (y.observations.size() != y.actions.size())
        throw std::invalid_argument("trajectory: actions and observations differ in length");

    // Forward vector kept normalised; the scale lives in loglik.
    Vector alpha = m.init[c.index];
    double loglik = 0.0;
    auto renormalise = [&](Vector& v) {
        const double s = v.sum();
        if (!(s > 0.0))
            return false;
        loglik += std::log(s);
        v /= s;
        return true;
    };

    // o_t is the observation emitted before a_t: the initial observation for
    // t = 0, otherwise the one produced by a_{t-1}.
    std::optional<int> pending = y.initial_obs;
    for (std::size_t t = 0; t < y.actions.size(); ++t) {
        const int a = y.actions[t];
        if (pending)
            alpha = table.op(c, a, *pending) * alpha;
        else
            alpha = table.transposed_transition(c, a) * alpha;
        if (!renormalise(alpha))
            return kNegInf;
        const Observation& o = y.observations[t];
        pending = o.observed ? std::optional<int>(o.index()) : std::nullopt;
    }
    if (pending) {
        if (*pending < 0 || *pending >= m.num_obs)
            throw std::out_of_range("observation index out of range");
        alpha = alpha.cwiseProduct(m.emission[c.index].col(*pending));
        if (!renormalise(alpha))
            return kNegInf;
    }
    return loglik;
}

double discrete_obs_loglik(const DiscreteCPOMDP& m, ContextId c, const Trajectory& y) {
    const OperatorTable table(m);
    return discrete_obs_loglik(table, c, y);
}

GaussianBelief ekf_predict(const GaussianBelief& b, LightDarkAction a, const LightDarkParams& p) {
    switch (a) {
    case LightDarkAction::Left:
        return {b.mean - p.step, b.var + p.sigma_p2};
    case LightDarkAction::Right:
        return {b.mean + p.step, b.var + p.sigma_p2};
    case LightDarkAction::Observe:
        break;
    }
    return b;
}

EkfUpdate ekf_update(const GaussianBelief& b, double z, ContextId c, const LightDarkParams& p) {
    const double r = observation_variance(b.mean, c, p);
    const double s = b.var + r;
    const double gain = b.var / s;
    EkfUpdate out;
    out.belief.mean = b.mean + gain * (z - b.mean);
    out.belief.var = (1.0 - gain) * b.var;
    out.step_loglik = log_normal_pdf(z, b.mean, s);
    return out;
}

double lightdark_obs_loglik(const LightDarkParams& p, ContextId c, const Trajectory& y) {
    if (y.observations.size() != y.actions.size())
        throw std::invalid_argument("trajectory: actions and observations differ in length");
    GaussianBelief b{0.0, p.sigma_u2};
    double loglik = 0.0;
    for (std::size_t t = 0; t < y.actions.size(); ++t) {
        b = ekf_predict(b, static_cast<LightDarkAction>(y.actions[t]), p);
        const Observation& o = y.observations[t];
        if (!o.observed)
            continue;
        const EkfUpdate u = ekf_update(b, o.value, c, p);
        b = u.belief;
        loglik += u.step_loglik;
    }
    return loglik;
}

double mixture_obs_loglik(const ContextPosterior& prior, const Vector& per_context) {
    if (per_context.size() != static_cast<Eigen::Index>(prior.size()))
        throw std::invalid_argument("mixture_obs_loglik: length mismatch");
    Vector terms(per_context.size());
    for (Eigen::Index c = 0; c < terms.size(); ++c) {
        const double pc = prior.probs()[c];
        terms[c] = (pc > 0.0 && per_context[c] != kNegInf) ? std::log(pc) + per_context[c] : kNegInf;
    }
    const double l = log_sum_exp(terms);
    if (!std::isfinite(l))
        throw AllZeroPosterior("mixture_obs_loglik: mixture has zero mass");
    return l;
}

} // namespace cids
