#include <cids/policy.hpp>

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace cids {

InputEncoder InputEncoder::lightdark() { return {Kind::LightDark, 0, kLightDarkActions}; }

InputEncoder InputEncoder::discrete(int num_obs, int num_actions) {
    if (num_obs <= 0 || num_actions <= 0)
        throw std::invalid_argument("discrete encoder needs positive dimensions");
    return {Kind::Discrete, num_obs, num_actions};
}

int InputEncoder::input_dim() const { return kind_ == Kind::LightDark ? 2 + num_actions_ : num_obs_ + num_actions_; }

Vector InputEncoder::encode(const Trajectory& y, std::size_t t) const {
    Vector x = Vector::Zero(input_dim());
    const int obs_slots = kind_ == Kind::LightDark ? 2 : num_obs_;
    if (t > 0)
        x[obs_slots + y.actions[t - 1]] = 1.0;
    if (kind_ == Kind::LightDark) {
        if (t > 0 && y.observations[t - 1].observed) {
            x[0] = y.observations[t - 1].value;
            x[1] = 1.0;
        }
        return x;
    }
    std::optional<int> o;
    if (t == 0)
        o = y.initial_obs;
    else if (y.observations[t - 1].observed)
        o = y.observations[t - 1].index();
    if (o)
        x[*o] = 1.0;
    return x;
}

Eigen::Index PolicyDims::num_params() const {
    const Eigen::Index h = hidden_dim, i = input_dim, a = num_actions;
    return h * i + h * h + h + a * h + a;
}

PolicyParams::PolicyParams(PolicyDims dims, Vector theta) : dims_(dims), theta_(std::move(theta)) {
    if (dims_.input_dim <= 0 || dims_.hidden_dim <= 0 || dims_.num_actions <= 0)
        throw std::invalid_argument("policy dimensions must be positive");
    if (theta_.size() != dims_.num_params())
        throw std::invalid_argument("policy parameter vector has the wrong length");
}

namespace {

struct Offsets {
    Eigen::Index w_in, w_h, b_h, w_a, b_a;
};

Offsets offsets(const PolicyDims& d) {
    const Eigen::Index h = d.hidden_dim, i = d.input_dim, a = d.num_actions;
    Offsets o{};
    o.w_in = 0;
    o.w_h = o.w_in + h * i;
    o.b_h = o.w_h + h * h;
    o.w_a = o.b_h + h;
    o.b_a = o.w_a + a * h;
    return o;
}

Vector log_softmax(const Vector& logits) { return (logits.array() - log_sum_exp(logits)).matrix(); }

} // namespace

Eigen::Map<const Matrix> PolicyParams::W_in() const {
    return {theta_.data() + offsets(dims_).w_in, dims_.hidden_dim, dims_.input_dim};
}
Eigen::Map<const Matrix> PolicyParams::W_h() const {
    return {theta_.data() + offsets(dims_).w_h, dims_.hidden_dim, dims_.hidden_dim};
}
Eigen::Map<const Vector> PolicyParams::b_h() const { return {theta_.data() + offsets(dims_).b_h, dims_.hidden_dim}; }
Eigen::Map<const Matrix> PolicyParams::W_a() const {
    return {theta_.data() + offsets(dims_).w_a, dims_.num_actions, dims_.hidden_dim};
}
Eigen::Map<const Vector> PolicyParams::b_a() const { return {theta_.data() + offsets(dims_).b_a, dims_.num_actions}; }

PolicyParams init_policy(std::uint64_t seed, const PolicyDims& dims) {
    if (dims.input_dim <= 0 || dims.hidden_dim <= 0 || dims.num_actions <= 0)
        throw std::invalid_argument("init_policy: dimensions must be positive");
    Rng rng = make_rng(seed, {0x706f6c});
    Vector theta = Vector::Zero(dims.num_params());
    const Offsets o = offsets(dims);
    auto fill = [&](Eigen::Index begin, Eigen::Index count, int fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (Eigen::Index k = 0; k < count; ++k)
            theta[begin + k] = u(rng);
    };
    fill(o.w_in, Eigen::Index{dims.hidden_dim} * dims.input_dim, dims.input_dim);
    fill(o.w_h, Eigen::Index{dims.hidden_dim} * dims.hidden_dim, dims.hidden_dim);
    fill(o.w_a, Eigen::Index{dims.num_actions} * dims.hidden_dim, dims.hidden_dim);
    return PolicyParams(dims, std::move(theta));
}

PolicyStep policy_forward(const PolicyParams& params, const Vector& hidden, const Vector& input) {
    PolicyStep s;
    s.hidden = (params.W_in() * input + params.W_h() * hidden + params.b_h()).array().tanh().matrix();
    s.log_probs = log_softmax(params.W_a() * s.hidden + params.b_a());
    return s;
}

int sample_categorical(const Vector& log_probs, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double r = u(rng);
    double acc = 0.0;
    int last = 0;
    for (Eigen::Index a = 0; a < log_probs.size(); ++a) {
        const double p = std::exp(log_probs[a]);
        if (p <= 0.0)
            continue;
        last = static_cast<int>(a);
        acc += p;
        if (r < acc)
            return last;
    }
    return last;
}

ActResult act(const PolicyParams& params, const Vector& hidden, const Vector& input, Rng& rng) {
    PolicyStep s = policy_forward(params, hidden, input);
    ActResult out;
    out.action = sample_categorical(s.log_probs, rng);
    out.logprob = s.log_probs[out.action];
    out.hidden = std::move(s.hidden);
    return out;
}

ScoreGradient score_gradient(const PolicyParams& params, const InputEncoder& enc, const Trajectory& y) {
    const PolicyDims& d = params.dims();
    const std::size_t n = y.actions.size();
    ScoreGradient out;
    out.grad = Vector::Zero(d.num_params());
    if (n == 0)
        return out;
    if (enc.input_dim() != d.input_dim || enc.num_actions() != d.num_actions)
        throw std::invalid_argument("score_gradient: encoder and policy dimensions differ");

    std::vector<Vector> inputs(n), hs(n + 1), probs(n);
    hs[0] = Vector::Zero(d.hidden_dim);
    for (std::size_t t = 0; t < n; ++t) {
        inputs[t] = enc.encode(y, t);
        PolicyStep s = policy_forward(params, hs[t], inputs[t]);
        out.total_logprob += s.log_probs[y.actions[t]];
        probs[t] = s.log_probs.array().exp().matrix();
        hs[t + 1] = std::move(s.hidden);
    }

    const Offsets o = offsets(d);
    Eigen::Map<Matrix> g_w_in(out.grad.data() + o.w_in, d.hidden_dim, d.input_dim);
    Eigen::Map<Matrix> g_w_h(out.grad.data() + o.w_h, d.hidden_dim, d.hidden_dim);
    Eigen::Map<Vector> g_b_h(out.grad.data() + o.b_h, d.hidden_dim);
    Eigen::Map<Matrix> g_w_a(out.grad.data() + o.w_a, d.num_actions, d.hidden_dim);
    Eigen::Map<Vector> g_b_a(out.grad.data() + o.b_a, d.num_actions);

    const auto W_h = params.W_h();
    const auto W_a = params.W_a();
    Vector dh_next = Vector::Zero(d.hidden_dim);
    for (std::size_t t = n; t-- > 0;) {
        // d log softmax(a_t) / d logits = onehot(a_t) - p
        Vector dlogits = -probs[t];
        dlogits[y.actions[t]] += 1.0;
        g_w_a.noalias() += dlogits * hs[t + 1].transpose();
        g_b_a += dlogits;
        const Vector dh = W_a.transpose() * dlogits + dh_next;
        const Vector dpre = dh.cwiseProduct((1.0 - hs[t + 1].array().square()).matrix());
        g_w_in.noalias() += dpre * inputs[t].transpose();
        g_w_h.noalias() += dpre * hs[t].transpose();
        g_b_h += dpre;
        dh_next.noalias() = W_h.transpose() * dpre;
    }
    return out;
}

RecurrentSampler::RecurrentSampler(const PolicyParams& params)
    : params_(&params), hidden_(Vector::Zero(params.dims().hidden_dim)) {}

void RecurrentSampler::reset() {
    hidden_.setZero();
    logprob_ = 0.0;
}

int RecurrentSampler::next(const Vector& input, Rng& rng) {
    ActResult r = act(*params_, hidden_, input, rng);
    hidden_ = std::move(r.hidden);
    logprob_ += r.logprob;
    return r.action;
}

SamplerFactory recurrent_factory(const PolicyParams& params) {
    return [&params] { return std::make_unique<RecurrentSampler>(params); };
}

void save_policy(const PolicyParams& params, const std::string& env_tag, const std::filesystem::path& path) {
    static_assert(std::endian::native == std::endian::little, "policy blobs are little-endian");
    const PolicyDims& d = params.dims();
    nlohmann::json header = {{"format", kPolicyFormat},
                             {"env", env_tag},
                             {"input_dim", d.input_dim},
                             {"hidden_dim", d.hidden_dim},
                             {"num_actions", d.num_actions},
                             {"num_params", d.num_params()}};
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write " + path.string());
    out << header.dump() << '\n';
    out.write(reinterpret_cast<const char*>(params.theta().data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(params.theta().size())));
    if (!out)
        throw Error("write failed: " + path.string());
}

LoadedPolicy load_policy(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line))
        throw Error(path.string() + ": missing header");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw Error(path.string() + ": bad header: " + e.what());
    }
    if (header.value("format", "") != kPolicyFormat)
        throw Error(path.string() + ": expected format " + kPolicyFormat);
    PolicyDims d{header.at("input_dim").get<int>(), header.at("hidden_dim").get<int>(),
                 header.at("num_actions").get<int>()};
    if (header.at("num_params").get<Eigen::Index>() != d.num_params())
        throw Error(path.string() + ": parameter count does not match dimensions");
    Vector theta(d.num_params());
    in.read(reinterpret_cast<char*>(theta.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(theta.size())));
    if (in.gcount() != static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(theta.size())))
        throw Error(path.string() + ": truncated parameter blob");
    return {PolicyParams(d, std::move(theta)), header.value("env", "")};
}

} // namespace cids
