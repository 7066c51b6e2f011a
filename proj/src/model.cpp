#include <cids/model.hpp>

#include <sstream>

namespace cids {

namespace {

void check_distribution(std::vector<Violation>& out, const std::string& tensor,
                        std::vector<int> index, const Eigen::Ref<const Vector>& row) {
    const double mn = row.size() ? row.minCoeff() : 0.0;
    if (mn < 0.0) {
        out.push_back({tensor, index, -mn, "negative probability"});
    }
    const double sum = row.sum();
    if (std::abs(sum - 1.0) > kStochasticTol || !std::isfinite(sum)) {
        std::ostringstream msg;
        msg << "row sums to " << sum << (sum < 1.0 ? " (deficit " : " (excess ")
            << std::abs(1.0 - sum) << ")";
        out.push_back({tensor, std::move(index), std::abs(1.0 - sum), msg.str()});
    }
}

bool has_shape(const Matrix& m, int rows, int cols) { return m.rows() == rows && m.cols() == cols; }

} // namespace

std::vector<Violation> validate_model(const DiscreteCPOMDP& m) {
    std::vector<Violation> out;
    const auto nc = static_cast<std::size_t>(m.num_contexts);
    if (m.num_states <= 0 || m.num_actions <= 0 || m.num_obs <= 0 || m.num_contexts <= 0)
        out.push_back({"dims", {}, 0.0, "every dimension must be positive"});
    if (m.horizon < 0)
        out.push_back({"horizon", {}, static_cast<double>(-m.horizon), "negative horizon"});
    if (!(m.r_max >= 0.0) || !std::isfinite(m.r_max))
        out.push_back({"r_max", {}, m.r_max, "r_max must be finite and non-negative"});
    if (m.transition.size() != nc || m.emission.size() != nc || m.reward.size() != nc || m.init.size() != nc) {
        out.push_back({"contexts", {}, 0.0, "per-context tensor count differs from num_contexts"});
        return out;
    }

    for (std::size_t c = 0; c < nc; ++c) {
        const int ci = static_cast<int>(c);
        if (m.transition[c].size() != static_cast<std::size_t>(m.num_actions)) {
            out.push_back({"P", {ci}, 0.0, "action count mismatch"});
        } else {
            for (int a = 0; a < m.num_actions; ++a) {
                const Matrix& p = m.transition[c][static_cast<std::size_t>(a)];
                if (!has_shape(p, m.num_states, m.num_states)) {
                    out.push_back({"P", {ci, a}, 0.0, "shape mismatch"});
                    continue;
                }
                for (int s = 0; s < m.num_states; ++s)
                    check_distribution(out, "P", {ci, a, s}, p.row(s).transpose());
            }
        }

        const Matrix& e = m.emission[c];
        if (!has_shape(e, m.num_states, m.num_obs)) {
            out.push_back({"E", {ci}, 0.0, "shape mismatch"});
        } else {
            for (int s = 0; s < m.num_states; ++s)
                check_distribution(out, "E", {ci, s}, e.row(s).transpose());
        }

        if (m.init[c].size() != m.num_states)
            out.push_back({"mu", {ci}, 0.0, "shape mismatch"});
        else
            check_distribution(out, "mu", {ci}, m.init[c]);

        const Matrix& r = m.reward[c];
        if (!has_shape(r, m.num_states, m.num_actions)) {
            out.push_back({"r", {ci}, 0.0, "shape mismatch"});
        } else {
            for (int s = 0; s < m.num_states; ++s)
                for (int a = 0; a < m.num_actions; ++a) {
                    const double v = r(s, a);
                    if (!std::isfinite(v) || std::abs(v) > m.r_max)
                        out.push_back({"r", {ci, s, a}, std::abs(v) - m.r_max, "reward exceeds r_max"});
                }
        }
    }
    return out;
}

std::string to_string(const Violation& v) {
    std::ostringstream os;
    os << v.tensor;
    if (!v.index.empty()) {
        for (int i : v.index)
            os << '[' << i << ']';
    }
    os << ": " << v.message << " (magnitude " << v.magnitude << ")";
    return os.str();
}

std::vector<std::string> LightDarkParams::check() const {
    std::vector<std::string> errs;
    if (!(sigma_L2 > 0.0))
        errs.emplace_back("sigma_L2 must be positive");
    if (!(sigma_D2 > sigma_L2))
        errs.emplace_back("sigma_D2 must exceed sigma_L2");
    if (!(sigma_p2 >= 0.0))
        errs.emplace_back("sigma_p2 must be non-negative");
    if (!(sigma_u2 > 0.0))
        errs.emplace_back("sigma_u2 must be positive");
    if (!(step > 0.0))
        errs.emplace_back("step must be positive");
    if (horizon < 1)
        errs.emplace_back("horizon must be at least 1");
    if (!(discount > 0.0 && discount <= 1.0))
        errs.emplace_back("discount must lie in (0, 1]");
    return errs;
}

double observation_variance(double x, ContextId c, const LightDarkParams& p) {
    const bool light = c.index == 0 ? x > 0.0 : x < 0.0;
    return light ? p.sigma_L2 : p.sigma_D2;
}

double lightdark_reward(double x, ContextId c, const LightDarkParams& p) {
    if (p.reward_region[c.index].contains(x))
        return p.r_plus;
    if (p.penalty_region[c.index].contains(x))
        return p.r_minus;
    return 0.0;
}

ContextPosterior::ContextPosterior(Vector probs) : probs_(std::move(probs)) {
    if (probs_.size() == 0)
        throw std::invalid_argument("posterior must have at least one context");
    if (!probs_.allFinite() || probs_.minCoeff() < 0.0)
        throw std::invalid_argument("posterior entries must be finite and non-negative");
    if (std::abs(probs_.sum() - 1.0) > kStochasticTol)
        throw std::invalid_argument("posterior must sum to one");
}

ContextPosterior ContextPosterior::uniform(std::size_t n) {
    return ContextPosterior(Vector::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n)));
}

ContextPosterior ContextPosterior::point_mass(std::size_t n, ContextId c) {
    Vector p = Vector::Zero(static_cast<Eigen::Index>(n));
    p[static_cast<Eigen::Index>(c.index)] = 1.0;
    return ContextPosterior(std::move(p));
}

ContextId ContextPosterior::sample(Rng& rng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double r = u(rng);
    double acc = 0.0;
    std::size_t last = 0;
    for (Eigen::Index c = 0; c < probs_.size(); ++c) {
        if (probs_[c] <= 0.0)
            continue;
        last = static_cast<std::size_t>(c);
        acc += probs_[c];
        if (r < acc)
            return ContextId(last);
    }
    return ContextId(last);
}

ContextPosterior posterior_update(const ContextPosterior& prior, const Vector& obs_loglik) {
    if (obs_loglik.size() != static_cast<Eigen::Index>(prior.size()))
        throw std::invalid_argument("posterior_update: length mismatch");
    Vector logw(obs_loglik.size());
    for (Eigen::Index c = 0; c < logw.size(); ++c) {
        const double pc = prior.probs()[c];
        logw[c] = (pc > 0.0 && obs_loglik[c] != kNegInf) ? std::log(pc) + obs_loglik[c] : kNegInf;
        if (std::isnan(logw[c]))
            throw std::invalid_argument("posterior_update: NaN log-likelihood");
    }
    const double z = log_sum_exp(logw);
    if (!std::isfinite(z))
        throw AllZeroPosterior("posterior_update: every context has zero mass");
    Vector p = (logw.array() - z).unaryExpr([](double v) { return std::exp(v); }).matrix();
    p /= p.sum();
    return ContextPosterior(std::move(p));
}

double posterior_entropy_nats(const ContextPosterior& p) { return entropy_nats(p.probs()); }

double posterior_entropy_bits(const ContextPosterior& p) { return nats_to_bits(posterior_entropy_nats(p)); }

} // namespace cids
