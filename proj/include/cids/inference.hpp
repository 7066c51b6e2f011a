#ifndef CIDS_INFERENCE_HPP
#define CIDS_INFERENCE_HPP

#include <vector>

#include <cids/model.hpp>

namespace cids {

/// A(i, j) = P_c(i | j, a) * E_c(o | j): emit o from state j, then move j -> i.
struct ObservableOperator {
    Matrix A;
    ContextId context;
    int action = 0;
    int obs = 0;
};

ObservableOperator build_operator(const DiscreteCPOMDP& m, ContextId c, int action, int obs);

/// All operators of a model, built eagerly so concurrent readers need no
/// synchronisation.
class OperatorTable {
public:
    explicit OperatorTable(const DiscreteCPOMDP& m);

    const DiscreteCPOMDP& model() const { return *model_; }
    const Matrix& op(ContextId c, int action, int obs) const;
    /// T^a with T(i, j) = P(i | j, a), i.e. the operator without emission.
    const Matrix& transposed_transition(ContextId c, int action) const;

private:
    const DiscreteCPOMDP* model_;
    std::vector<Matrix> ops_;
    std::vector<Matrix> trans_;
};

/// Log of the forward product 1' diag(E_{o_T}) A_{o_{T-1}|a_{T-1}} ... A_{o_0|a_0} mu_c.
/// Without an initial observation the first factor is T^{a_0}. Policy action
/// probabilities are excluded; they do not depend on the context.
/// Returns -inf when the trajectory has probability zero.
double discrete_obs_loglik(const OperatorTable& table, ContextId c, const Trajectory& y);
double discrete_obs_loglik(const DiscreteCPOMDP& m, ContextId c, const Trajectory& y);

struct GaussianBelief {
    double mean = 0.0;
    double var = 1.0;
};

GaussianBelief ekf_predict(const GaussianBelief& b, LightDarkAction a, const LightDarkParams& p);

struct EkfUpdate {
    GaussianBelief belief;
    double step_loglik = 0.0;
};

/// Measurement update with R = sigma^2(mean of b, c), the observation variance
/// at the predicted mean.
EkfUpdate ekf_update(const GaussianBelief& b, double z, ContextId c, const LightDarkParams& p);

/// Sum of EKF innovation log-densities over the observed steps, starting
/// from N(0, sigma_u2).
double lightdark_obs_loglik(const LightDarkParams& p, ContextId c, const Trajectory& y);

/// log sum_c prior[c] exp(per_context[c]); throws AllZeroPosterior when the
/// mixture has no mass.
double mixture_obs_loglik(const ContextPosterior& prior, const Vector& per_context);

} // namespace cids

#endif
