// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include <cids/cids.hpp>
#include <cids/csv.hpp>

#include "config.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace cids;

namespace {

const std::vector<std::uint64_t> kSeeds = {0, 1, 2, 3};

struct Verdict {
    std::string id;
    bool pass = false;
    std::string detail;
};

std::vector<Verdict> g_verdicts;

std::string fmt(double v, int digits = 4) {
    std::ostringstream os;
    os << std::setprecision(digits) << v;
    return os.str();
}

void report(const std::string& id, bool pass, const std::string& detail, std::chrono::steady_clock::time_point start) {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << id << ' ' << (pass ? "PASS" : "FAIL") << "  " << detail << " [" << fmt(secs, 3) << " s]"
              << std::endl;
    g_verdicts.push_back({id, pass, detail});
}

// ---------------------------------------------------------------------------
// A1

void likelihood_oracle() {
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20240601);
    double worst_abs = 0.0, worst_sum = 0.0;
    bool support_ok = true;
    for (int trial = 0; trial < 100; ++trial) {
        const DiscreteCPOMDP m = testing::random_model(rng, 4, 3, 2, 4, 2, trial % 3 == 0);
        const OperatorTable table(m);
        for (int rep = 0; rep < 3; ++rep) {
            const Trajectory y = testing::random_trajectory(m, m.horizon, rng, rep == 2);
            for (std::size_t c = 0; c < m.transition.size(); ++c) {
                const double oracle = testing::path_sum_probability(m, c, y);
                const double ll = discrete_obs_loglik(table, ContextId{c}, y);
                if (oracle == 0.0)
                    support_ok = support_ok && ll == kNegInf;
                else
                    worst_abs = std::max(worst_abs, std::abs(std::exp(ll) - oracle));
            }
        }
        std::uniform_int_distribution<int> act(0, m.num_actions - 1);
        std::vector<int> actions(static_cast<std::size_t>(m.horizon));
        for (auto& a : actions)
            a = act(rng);
        for (std::size_t c = 0; c < m.transition.size(); ++c) {
            double total = 0.0;
            testing::for_each_observation_sequence(
                m, actions, [&](const Trajectory& y) { total += std::exp(discrete_obs_loglik(table, ContextId{c}, y)); });
            worst_sum = std::max(worst_sum, std::abs(total - 1.0));
        }
    }
    const bool pass = support_ok && worst_abs <= 1e-10 && worst_sum <= 1e-9;
    report("A1", pass,
           "likelihood vs path sum: max abs error " + fmt(worst_abs) + " (tol 1e-10), max |sum - 1| " +
               fmt(worst_sum) + " (tol 1e-9)" + (support_ok ? "" : ", zero-probability support mismatch"),
           start);
}

// ---------------------------------------------------------------------------
// A2

double trajectory_logprob(const PolicyParams& params, const InputEncoder& enc, const Trajectory& y) {
    Vector h = Vector::Zero(params.dims().hidden_dim);
    double lp = 0.0;
    for (std::size_t t = 0; t < y.length(); ++t) {
        const PolicyStep s = policy_forward(params, h, enc.encode(y, t));
        lp += s.log_probs[y.actions[t]];
        h = s.hidden;
    }
    return lp;
}

double max_relative_fd_error(const PolicyParams& params, const InputEncoder& enc, const Trajectory& y) {
    const Vector g = score_gradient(params, enc, y).grad;
    const double eps = 1e-5;
    double worst = 0.0;
    PolicyParams probe = params;
    for (Eigen::Index k = 0; k < g.size(); ++k) {
        const double keep = probe.theta()[k];
        probe.theta()[k] = keep + eps;
        const double up = trajectory_logprob(probe, enc, y);
        probe.theta()[k] = keep - eps;
        const double down = trajectory_logprob(probe, enc, y);
        probe.theta()[k] = keep;
        const double fd = (up - down) / (2.0 * eps);
        worst = std::max(worst, std::abs(g[k] - fd) / std::max({std::abs(g[k]), std::abs(fd), 1e-6}));
    }
    return worst;
}

/// Exact E[sum_t gamma^t r | c, y] by enumerating state paths.
double conditional_return(const DiscreteCPOMDP& m, std::size_t c, const Trajectory& y, double gamma) {
    double mass = 0.0, weighted = 0.0;
    const std::size_t T = y.length();
    std::function<void(std::size_t, int, double, double)> walk = [&](std::size_t t, int s, double p, double ret) {
        if (p == 0.0)
            return;
        if (t == T) {
            mass += p;
            weighted += p * ret;
            return;
        }
        const int a = y.actions[t];
        const double r = ret + std::pow(gamma, static_cast<double>(t)) * m.reward[c](s, a);
        for (int s2 = 0; s2 < m.num_states; ++s2) {
            double q = p * m.transition[c][a](s, s2);
            if (y.observations[t].observed)
                q *= m.emission[c](s2, static_cast<int>(y.observations[t].value));
            walk(t + 1, s2, q, r);
        }
    };
    for (int s0 = 0; s0 < m.num_states; ++s0) {
        double p = m.init[c][s0];
        if (y.initial_obs)
            p *= m.emission[c](s0, *y.initial_obs);
        walk(0, s0, p, 0.0);
    }
    return mass > 0.0 ? weighted / mass : 0.0;
}

double free_energy(const Vector& q, const Vector& log_target) {
    double f = 0.0;
    for (Eigen::Index i = 0; i < q.size(); ++i)
        if (q[i] > 0.0)
            f += q[i] * (log_target[i] - std::log(q[i]));
    return f;
}

void gradient_and_gibbs() {
    const auto start = std::chrono::steady_clock::now();
    Rng rng = make_rng(7);
    double worst_fd = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const bool lightdark = trial % 2 == 0;
        const InputEncoder enc = lightdark ? InputEncoder::lightdark() : InputEncoder::discrete(3, 2);
        const int actions = lightdark ? 3 : 2;
        PolicyParams p = init_policy(static_cast<std::uint64_t>(100 + trial), {enc.input_dim(), 3 + trial % 5, actions});
        std::normal_distribution<double> jitter(0.0, 0.3);
        for (Eigen::Index k = 0; k < p.theta().size(); ++k)
            p.theta()[k] += jitter(rng);
        Trajectory y;
        std::uniform_int_distribution<int> act(0, actions - 1), obs(0, 2);
        std::normal_distribution<double> z(0.0, 2.0);
        if (!lightdark)
            y.initial_obs = obs(rng);
        for (int t = 0; t < 4 + trial % 4; ++t) {
            const int a = act(rng);
            y.actions.push_back(a);
            if (lightdark)
                y.observations.push_back(a == 2 ? Observation{z(rng), true} : Observation{});
            else
                y.observations.push_back(Observation{static_cast<double>(obs(rng)), true});
        }
        worst_fd = std::max(worst_fd, max_relative_fd_error(p, enc, y));
    }

    // Enumerable toy problem: every (context, trajectory) of a two-step model.
    std::mt19937_64 mrng(2024);
    DiscreteCPOMDP m;
    do
        m = testing::random_model(mrng, 2, 2, 2, 2, 2);
    while (m.num_states != 2 || m.num_obs != 2 || m.num_actions != 2);
    m.horizon = 2;
    const double tau = 0.2, gamma = 0.95;
    const ContextPosterior prior = ContextPosterior::uniform(2);
    std::vector<double> log_target;
    for (int code = 0; code < 4; ++code) {
        std::vector<int> acts = {code % 2, code / 2};
        testing::for_each_observation_sequence(m, acts, [&](const Trajectory& y) {
            Vector ll(2);
            for (std::size_t c = 0; c < 2; ++c)
                ll[static_cast<Eigen::Index>(c)] = discrete_obs_loglik(m, ContextId{c}, y);
            const ContextPosterior post = posterior_update(prior, ll);
            for (std::size_t c = 0; c < 2; ++c)
                log_target.push_back(gibbs_log_target(conditional_return(m, c, y, gamma), post[c], tau));
        });
    }
    const Vector lt = Eigen::Map<const Vector>(log_target.data(), static_cast<Eigen::Index>(log_target.size()));
    const double log_z = log_sum_exp(lt);
    const Vector gibbs = (lt.array() - log_z).unaryExpr([](double v) { return std::exp(v); }).matrix();
    const double best = free_energy(gibbs, lt);
    double worst_margin = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < 1000; ++trial) {
        const Vector q = testing::random_distribution(static_cast<int>(lt.size()), mrng, trial % 3 == 0);
        worst_margin = std::min(worst_margin, best - free_energy(q, lt));
    }
    const bool pass = worst_fd <= 1e-4 && worst_margin >= -1e-12;
    report("A2", pass,
           "score gradient max relative FD error " + fmt(worst_fd) + " over 20 instances (tol 1e-4); Gibbs margin over " +
               "1000 random distributions " + fmt(worst_margin) + " (tol >= -1e-12)",
           start);
}

// ---------------------------------------------------------------------------
// A3, A4

struct EvalStats {
    double mean_return = 0.0;
    double mean_entropy = 0.0;
};

EvalStats evaluate(const Environment& env, const PolicyParams& params, std::uint64_t seed, int episodes) {
    const ContextPosterior prior = ContextPosterior::uniform(env.num_contexts());
    EvalStats s;
    for (int i = 0; i < episodes; ++i) {
        Rng rng = make_rng(seed, {0x616363, static_cast<std::uint64_t>(i)});
        const ContextId c = prior.sample(rng);
        RecurrentSampler sampler(params);
        const RolloutResult r = env.rollout(sampler, c, rng);
        s.mean_return += r.discounted_return;
        s.mean_entropy += posterior_entropy_bits(posterior_update(prior, env.obs_logliks(r.trajectory)));
    }
    s.mean_return /= episodes;
    s.mean_entropy /= episodes;
    return s;
}

std::vector<EvalStats> train_and_evaluate(double tau) {
    const app::Config cfg = app::Config::defaults(app::Profile::Desk);
    const LightDarkEnv env(app::lightdark_params(cfg));
    std::vector<EvalStats> out;
    for (std::uint64_t seed : kSeeds) {
        VPGConfig v = app::vpg_config(cfg);
        v.tau = tau;
        v.seed = seed;
        const TrainResult r = train(env, ContextPosterior::uniform(2), v);
        out.push_back(evaluate(env, r.params, seed, 200));
    }
    return out;
}

std::string per_seed(const std::vector<EvalStats>& s) {
    std::string text;
    for (std::size_t i = 0; i < s.size(); ++i)
        text += (i ? " " : "") + std::string("(") + fmt(s[i].mean_return) + ", " + fmt(s[i].mean_entropy) + ")";
    return text;
}

void training_and_ablation() {
    auto start = std::chrono::steady_clock::now();
    const std::vector<EvalStats> learned = train_and_evaluate(0.2);
    int good = 0;
    for (const auto& s : learned)
        good += s.mean_return > 5.0 && s.mean_entropy < 0.2;
    report("A3", good >= 3,
           std::to_string(good) + "/4 seeds with return > 5 and entropy < 0.2 bits; (return, entropy) per seed: " +
               per_seed(learned),
           start);

    start = std::chrono::steady_clock::now();
    const std::vector<EvalStats> ablated = train_and_evaluate(0.0);
    EvalStats a, b;
    for (std::size_t i = 0; i < kSeeds.size(); ++i) {
        a.mean_return += learned[i].mean_return / kSeeds.size();
        a.mean_entropy += learned[i].mean_entropy / kSeeds.size();
        b.mean_return += ablated[i].mean_return / kSeeds.size();
        b.mean_entropy += ablated[i].mean_entropy / kSeeds.size();
    }
    const double return_gap = a.mean_return - b.mean_return;
    const double entropy_gap = b.mean_entropy - a.mean_entropy;
    report("A4", return_gap >= 5.0 && entropy_gap >= 0.3,
           "tau=0 return " + fmt(b.mean_return) + " vs " + fmt(a.mean_return) + " (gap " + fmt(return_gap) +
               ", need >= 5); entropy " + fmt(b.mean_entropy) + " vs " + fmt(a.mean_entropy) + " (gap " +
               fmt(entropy_gap) + ", need >= 0.3); per seed: " + per_seed(ablated),
           start);
}

// ---------------------------------------------------------------------------
// A5, A6

void information_and_regret() {
    auto start = std::chrono::steady_clock::now();
    const app::Config cfg = app::Config::defaults(app::Profile::Desk);
    const double tau = cfg.get_real("vpg.tau");
    const LightDarkEnv env(app::lightdark_params(cfg));
    std::vector<RegretReport> runs;
    for (std::uint64_t seed : kSeeds)
        runs.push_back(run_cids(env, ContextPosterior::uniform(2), app::cids_config(cfg, seed)));

    const std::size_t K = runs.front().episodes.size();
    std::vector<double> mean_regret(K, 0.0);
    int defined = 0, within = 0, early_defined = 0, early_within = 0;
    std::size_t last_defined = 0;
    for (const auto& r : runs)
        for (std::size_t k = 0; k < K; ++k) {
            mean_regret[k] += r.episodes[k].regret / static_cast<double>(runs.size());
            if (!r.episodes[k].psi)
                continue;
            last_defined = std::max(last_defined, k + 1);
            const bool ok = *r.episodes[k].psi <= 2.0 * tau;
            if (k >= K / 2) {
                ++defined;
                within += ok;
            } else {
                ++early_defined;
                early_within += ok;
            }
        }
    const std::size_t q = K / 4;
    double first = 0.0, last = 0.0;
    for (std::size_t k = 0; k < q; ++k) {
        first += mean_regret[k] / static_cast<double>(q);
        last += mean_regret[K - q + k] / static_cast<double>(q);
    }
    const double share = defined ? static_cast<double>(within) / defined : 0.0;
    const bool shape = last < 0.5 * first;
    const bool ratio = defined > 0 && share >= 0.8;
    report("A6", shape && ratio,
           "mean per-episode regret first quartile " + fmt(first) + ", last quartile " + fmt(last) +
               " (need last < 0.5 x first: " + (shape ? "yes" : "no") + "); psi <= 2 tau in " +
               std::to_string(within) + "/" + std::to_string(defined) + " defined post-burn-in episodes (" +
               fmt(100.0 * share, 3) + "%, need >= 80%); before burn-in " + std::to_string(early_within) + "/" +
               std::to_string(early_defined) + ", last defined at episode " + std::to_string(last_defined),
           start);

    start = std::chrono::steady_clock::now();
    const double budget = std::log2(2.0) + 0.05;
    double worst_sum = 0.0;
    int over = 0;
    std::string sums;
    for (const auto& r : runs) {
        worst_sum = std::max(worst_sum, r.cumulative_info_gain_bits);
        over += r.cumulative_info_gain_bits > budget;
        sums += (sums.empty() ? "" : " ") + fmt(r.cumulative_info_gain_bits);
    }
    app::Config grid_cfg = cfg;
    grid_cfg.set("env.name", "linegrid");
    grid_cfg.set("cids.episodes", 10);
    const auto grid = app::make_environment(grid_cfg);
    int identified = 0;
    for (std::uint64_t seed : kSeeds) {
        const RegretReport r = run_cids(*grid, ContextPosterior::uniform(2), app::cids_config(grid_cfg, seed));
        identified += std::min(r.episodes[0].posterior_entropy_bits, r.episodes[1].posterior_entropy_bits) == 0.0;
        worst_sum = std::max(worst_sum, r.cumulative_info_gain_bits);
        over += r.cumulative_info_gain_bits > budget;
        sums += " " + fmt(r.cumulative_info_gain_bits);
    }
    report("A5", over == 0 && identified == static_cast<int>(kSeeds.size()),
           "sum of information gains per run (Light-Dark x4, line grid x4): " + sums + "; max " + fmt(worst_sum) +
               " (bound " + fmt(budget) + "), " + std::to_string(over) + " runs over; line grid identified within 2 " +
               "episodes in " + std::to_string(identified) + "/4 runs",
           start);
}

// ---------------------------------------------------------------------------
// A7

std::string describe(const HistoryPolicy& pi) {
    std::string text;
    for (const auto& [history, action] : pi.rules) {
        if (history.size() > 2)
            continue;
        text += (text.empty() ? "" : " ");
        for (int o : history)
            text += std::to_string(o);
        text += "->" + std::to_string(action);
    }
    return text;
}

void invariance() {
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(5);
    DiscreteCPOMDP dup = testing::random_model(rng, 3, 2, 2, 3, 2);
    dup.transition[1] = dup.transition[0];
    dup.emission[1] = dup.emission[0];
    dup.reward[1] = dup.reward[0];
    dup.init[1] = dup.init[0];
    const InvarianceVerdict same = epsilon_invariance_check(dup, ContextId{0}, ContextId{1}, 0.0, dup.horizon);

    const DiscreteCPOMDP grid = linegrid_model(LineGridConfig{});
    const InvarianceVerdict v = epsilon_invariance_check(grid, ContextId{0}, ContextId{1}, 1.0, 4);
    const double gap = std::max(v.gap_i, v.gap_j);
    const bool pass = same.invariant && same.gap_i == 0.0 && same.gap_j == 0.0 && !v.invariant && gap > 1.0;
    report("A7", pass,
           std::string("duplicated contexts ") + (same.invariant ? "invariant" : "NOT invariant") +
               " at eps=0; line grid T=4 eps=1 " + (v.invariant ? "invariant" : "not invariant") + " over " +
               std::to_string(v.policies_checked) + " policies: V0* " + fmt(v.best_i) + ", V1* " + fmt(v.best_j) +
               ", gaps " + fmt(v.gap_i) + " / " + fmt(v.gap_j) + "; witness pi1* (history->action, first steps): " +
               describe(v.optimal_j),
           start);
}

// ---------------------------------------------------------------------------
// A8

int run_cli(const std::string& args, const std::string& env) {
    const std::string cmd = "env " + env + " '" CIDS_BIN "' " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void determinism() {
    const auto start = std::chrono::steady_clock::now();
    const fs::path root = fs::temp_directory_path() / ("cids_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(root);
    const std::string out = "--output.dir '" + root.string() + "' ";
    bool ok = true;
    std::string detail;

    ok &= run_cli("train " + out + "--output.run_name train_1 --output.seeds 0,1", "CIDS_THREADS=1") == 0;
    ok &= run_cli("train --replay '" + (root / "train_1/manifest.json").string() + "' --output.run_name train_4",
                  "CIDS_THREADS=4") == 0;
    ok &= run_cli("cids " + out + "--output.run_name cids_1 --cids.episodes 10 --output.seeds 0,1", "CIDS_THREADS=1") ==
          0;
    ok &= run_cli("cids --replay '" + (root / "cids_1/manifest.json").string() + "' --output.run_name cids_4",
                  "CIDS_THREADS=4") == 0;
    if (!ok)
        detail = "a CLI run failed; ";

    int compared = 0, identical = 0;
    for (const char* kind : {"train", "cids"})
        for (const auto& entry : fs::recursive_directory_iterator(root / (std::string(kind) + "_1"))) {
            if (entry.path().extension() != ".csv" && entry.path().extension() != ".bin")
                continue;
            const fs::path rel = fs::relative(entry.path(), root / (std::string(kind) + "_1"));
            ++compared;
            identical += slurp(entry.path()) == slurp(root / (std::string(kind) + "_4") / rel);
        }
    fs::remove_all(root);
    // train: curve and policy per seed; cids: regret per seed plus the aggregate.
    ok &= compared == 2 * 2 + 2 + 1 && identical == compared;
    report("A8", ok,
           detail + std::to_string(identical) + "/" + std::to_string(compared) +
               " CSV and policy files byte-identical between CIDS_THREADS=1 runs and CIDS_THREADS=4 manifest replays " +
               "(desk train, 2 seeds; cids K=10, 2 seeds)",
           start);
}

} // namespace

int main(int argc, char** argv) {
    std::vector<std::string> only(argv + 1, argv + argc);
    auto wanted = [&](const std::string& id) {
        return only.empty() || std::find(only.begin(), only.end(), id) != only.end();
    };
    if (wanted("A1"))
        likelihood_oracle();
    if (wanted("A2"))
        gradient_and_gibbs();
    if (wanted("A3") || wanted("A4"))
        training_and_ablation();
    if (wanted("A5") || wanted("A6"))
        information_and_regret();
    if (wanted("A7"))
        invariance();
    if (wanted("A8"))
        determinism();

    int failed = 0;
    for (const auto& v : g_verdicts)
        failed += !v.pass;
    std::cout << g_verdicts.size() - failed << "/" << g_verdicts.size() << " criteria passed" << std::endl;
    return failed ? 1 : 0;
}
