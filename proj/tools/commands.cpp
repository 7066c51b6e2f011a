#include "commands.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>

#include <cids/csv.hpp>
#include <cids/model_io.hpp>

#include "svg.hpp"

#ifndef CIDS_VERSION
#define CIDS_VERSION "0.0.0"
#endif

namespace cids::app {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string utc_stamp(const char* format) {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, format, &tm);
    return buf;
}

fs::path make_run_dir(const Config& cfg) {
    const fs::path root = output_root(cfg);
    std::string name = cfg.get_text("output.run_name");
    if (name.empty())
        name = utc_stamp("%Y%m%d-%H%M%S");
    fs::path dir = root / name;
    for (int n = 2; fs::exists(dir); ++n)
        dir = root / (name + "-" + std::to_string(n));
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write " + path.string());
    out << text;
    if (!out)
        throw Error("write failed: " + path.string());
}

class ManifestWriter {
public:
    ManifestWriter(const fs::path& dir, const std::string& command, const RunContext& ctx,
                   const std::vector<std::uint64_t>& seeds)
        : path_(dir / kManifestName) {
        doc_["tool"] = "cids";
        doc_["version"] = CIDS_VERSION;
        doc_["command"] = command;
        doc_["profile"] = to_string(ctx.profile);
        doc_["config"] = ctx.config.values();
        doc_["seeds"] = seeds;
        doc_["run_dir"] = dir.string();
        doc_["created_utc"] = utc_stamp("%Y-%m-%dT%H:%M:%SZ");
        doc_["status"] = "running";
        doc_["outputs"] = json::object();
        doc_["wall_time_s"] = json::object();
        flush();
    }

    void output(std::uint64_t seed, const std::string& role, const std::string& rel) {
        doc_["outputs"][std::to_string(seed)][role] = rel;
    }
    void extra(const std::string& key, const std::string& value) { doc_[key] = value; }
    void wall_time(std::uint64_t seed, double seconds) { doc_["wall_time_s"][std::to_string(seed)] = seconds; }
    void status(const std::string& s) {
        doc_["status"] = s;
        flush();
    }
    void flush() const { write_text(path_, doc_.dump(2) + "\n"); }

private:
    fs::path path_;
    json doc_;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::unique_ptr<ActionSampler> hand_sampler(const std::string& hand, const Environment& env) {
    int action = -1;
    if (env.tag() == "lightdark") {
        if (hand == "left")
            action = static_cast<int>(LightDarkAction::Left);
        else if (hand == "right")
            action = static_cast<int>(LightDarkAction::Right);
        else if (hand == "observe")
            action = static_cast<int>(LightDarkAction::Observe);
    }
    if (hand.rfind("action:", 0) == 0) {
        try {
            action = std::stoi(hand.substr(7));
        } catch (const std::exception&) {
            action = -1;
        }
    }
    if (action < 0 || action >= env.num_actions())
        throw ConfigError("unknown hand policy '" + hand + "' for environment " + env.tag());
    return std::make_unique<ScriptedSampler>([action](int) { return action; });
}

struct Moments {
    double mean = 0.0;
    double std = 0.0;
};

Moments moments(const std::vector<double>& v) {
    Moments m;
    if (v.empty())
        return m;
    for (double x : v)
        m.mean += x;
    m.mean /= static_cast<double>(v.size());
    if (v.size() > 1) {
        double s = 0.0;
        for (double x : v)
            s += (x - m.mean) * (x - m.mean);
        m.std = std::sqrt(s / static_cast<double>(v.size() - 1));
    }
    return m;
}

// Checks, then builds the environment; usage problems come back as messages.
std::unique_ptr<Environment> prepare(const RunContext& ctx) {
    const auto errs = check(ctx.config);
    if (!errs.empty()) {
        for (const auto& e : errs)
            *ctx.err << "config error: " << e << "\n";
        return nullptr;
    }
    try {
        return make_environment(ctx.config);
    } catch (const ModelParseError& e) {
        *ctx.err << "error: " << e.what() << "\n";
    } catch (const std::invalid_argument& e) {
        *ctx.err << "error: " << e.what() << "\n";
    }
    return nullptr;
}

enum EvalStream : std::uint64_t { kEvalEpisode = 0x6576616c };

} // namespace

int cmd_validate(const fs::path& model, std::ostream& out, std::ostream& err) {
    DiscreteCPOMDP m;
    try {
        m = load_model(model);
    } catch (const ModelParseError& e) {
        err << "error: " << e.what() << "\n";
        return kUsageError;
    }
    const auto violations = validate_model(m);
    for (const auto& v : violations)
        out << to_string(v) << "\n";
    if (!violations.empty()) {
        out << violations.size() << " violation(s)\n";
        return kValidationFailure;
    }
    out << "ok: " << m.num_contexts << " contexts, " << m.num_states << " states, " << m.num_actions << " actions, "
        << m.num_obs << " observations, horizon " << m.horizon << "\n";
    return kOk;
}

int cmd_train(const RunContext& ctx) {
    auto env = prepare(ctx);
    if (!env)
        return kUsageError;
    const ContextPosterior pri = prior(ctx.config, env->num_contexts());
    const VPGConfig base = vpg_config(ctx.config);
    const auto seed_list = seeds(ctx.config);

    const fs::path dir = make_run_dir(ctx.config);
    ManifestWriter manifest(dir, "train", ctx, seed_list);
    *ctx.out << "run directory: " << dir.string() << "\n";

    for (std::uint64_t seed : seed_list) {
        const std::string sub = "seed_" + std::to_string(seed);
        fs::create_directories(dir / sub);
        manifest.output(seed, "policy", sub + "/policy.bin");
        manifest.output(seed, "curve", sub + "/curve.csv");
        manifest.flush();

        VPGConfig cfg = base;
        cfg.seed = seed;
        TrainingCurve partial;
        const auto start = std::chrono::steady_clock::now();
        try {
            TrainResult res = train(*env, pri, cfg, std::nullopt,
                                    [&](int, const TrainingCurve& c) {
                                        partial.mean_return.push_back(c.mean_return.back());
                                        partial.entropy_bits.push_back(c.entropy_bits.back());
                                        partial.grad_norm.push_back(c.grad_norm.back());
                                        partial.kl_surrogate.push_back(c.kl_surrogate.back());
                                    });
            std::ofstream curve(dir / sub / "curve.csv", std::ios::binary);
            write_curve_csv(curve, res.curve);
            save_policy(res.params, env->tag(), dir / sub / "policy.bin");
            const double last = res.curve.size() ? res.curve.mean_return.back() : 0.0;
            *ctx.out << "seed " << seed << ": " << res.curve.size() << " iterations, final mean return "
                     << format_number(last) << "\n";
        } catch (const DivergenceError& e) {
            std::ofstream curve(dir / sub / "curve.csv", std::ios::binary);
            write_curve_csv(curve, partial);
            manifest.wall_time(seed, seconds_since(start));
            manifest.status("diverged");
            *ctx.err << "seed " << seed << ": " << e.what() << "\n";
            return kDiverged;
        }
        manifest.wall_time(seed, seconds_since(start));
        manifest.flush();
    }
    manifest.status("complete");
    return kOk;
}

int cmd_cids(const RunContext& ctx) {
    auto env = prepare(ctx);
    if (!env)
        return kUsageError;
    const ContextPosterior pri = prior(ctx.config, env->num_contexts());
    const auto seed_list = seeds(ctx.config);
    if (const long long tc = ctx.config.get_int("cids.true_context");
        tc >= static_cast<long long>(env->num_contexts())) {
        *ctx.err << "config error: cids.true_context out of range\n";
        return kUsageError;
    }

    const fs::path dir = make_run_dir(ctx.config);
    ManifestWriter manifest(dir, "cids", ctx, seed_list);
    *ctx.out << "run directory: " << dir.string() << "\n";

    std::vector<RegretReport> reports;
    json per_seed = json::array();
    for (std::uint64_t seed : seed_list) {
        const std::string sub = "seed_" + std::to_string(seed);
        fs::create_directories(dir / sub);
        manifest.output(seed, "regret", sub + "/regret.csv");
        manifest.output(seed, "summary", sub + "/summary.json");
        manifest.flush();

        const CIDSConfig cfg = cids_config(ctx.config, seed);
        RegretReport partial;
        const auto start = std::chrono::steady_clock::now();
        try {
            RegretReport rep = run_cids(*env, pri, cfg, [&](const EpisodeRecord& rec, const ContextPosterior& post) {
                const double prev = partial.cumulative_regret.empty() ? 0.0 : partial.cumulative_regret.back();
                partial.episodes.push_back(rec);
                partial.cumulative_regret.push_back(prev + rec.regret);
                partial.cumulative_info_gain_bits += rec.info_gain_bits;
                partial.final_posterior = post.probs();
            });
            std::ofstream csv(dir / sub / "regret.csv", std::ios::binary);
            write_regret_csv(csv, rep);
            const json summary = regret_summary(rep, cfg.vpg.tau);
            write_text(dir / sub / "summary.json", summary.dump(2) + "\n");
            per_seed.push_back(summary);
            *ctx.out << "seed " << seed << ": true context " << rep.true_context.index << ", cumulative regret "
                     << format_number(rep.cumulative_regret.back()) << ", final entropy "
                     << format_number(rep.episodes.back().posterior_entropy_bits) << " bits\n";
            reports.push_back(std::move(rep));
        } catch (const DivergenceError& e) {
            std::ofstream csv(dir / sub / "regret.csv", std::ios::binary);
            write_regret_csv(csv, partial);
            manifest.wall_time(seed, seconds_since(start));
            manifest.status("diverged");
            *ctx.err << "seed " << seed << ": " << e.what() << "\n";
            return kDiverged;
        }
        manifest.wall_time(seed, seconds_since(start));
        manifest.flush();
    }

    // Cross-seed means per episode; the ratio column averages defined values only.
    const std::size_t k_max = reports.front().episodes.size();
    std::ofstream agg(dir / "aggregate.csv", std::ios::binary);
    CsvWriter w(agg, kRegretColumns);
    for (std::size_t k = 0; k < k_max; ++k) {
        double v[8] = {};
        double psi = 0.0;
        int psi_n = 0;
        for (const auto& r : reports) {
            const EpisodeRecord& e = r.episodes[k];
            v[0] += e.realized_return;
            v[1] += e.posterior_entropy_bits;
            v[2] += e.info_gain_bits;
            v[3] += e.delta_proxy;
            v[4] += e.i1_proxy;
            v[5] += e.i2_realized;
            v[6] += r.cumulative_regret[k];
            if (e.psi) {
                psi += *e.psi;
                ++psi_n;
            }
        }
        const double n = static_cast<double>(reports.size());
        w.cell(k + 1);
        for (int i = 0; i < 7; ++i)
            w.cell(v[i] / n);
        if (psi_n)
            w.cell(psi / psi_n);
        else
            w.empty();
        w.end_row();
    }
    manifest.extra("aggregate", "aggregate.csv");
    write_text(dir / "aggregate.json", json{{"seeds", seed_list}, {"per_seed", per_seed}}.dump(2) + "\n");
    manifest.status("complete");
    return kOk;
}

int cmd_eval(const RunContext& ctx, const EvalOptions& opts) {
    if (opts.policy_path.empty() == opts.hand.empty()) {
        *ctx.err << "error: give exactly one of --policy or --hand\n";
        return kUsageError;
    }
    auto env = prepare(ctx);
    if (!env)
        return kUsageError;
    const ContextPosterior pri = prior(ctx.config, env->num_contexts());
    const int n = static_cast<int>(ctx.config.get_int("output.eval_episodes"));
    const std::uint64_t seed = seeds(ctx.config).front();

    std::optional<PolicyParams> params;
    if (!opts.policy_path.empty()) {
        try {
            LoadedPolicy loaded = load_policy(opts.policy_path);
            const PolicyDims want = env->policy_dims(loaded.params.dims().hidden_dim);
            if (loaded.params.dims() != want) {
                *ctx.err << "error: policy dimensions (input " << loaded.params.dims().input_dim << ", actions "
                         << loaded.params.dims().num_actions << ") do not match environment " << env->tag()
                         << " (input " << want.input_dim << ", actions " << want.num_actions << ")\n";
                return kUsageError;
            }
            if (!loaded.env_tag.empty() && loaded.env_tag != env->tag()) {
                *ctx.err << "error: policy was trained on " << loaded.env_tag << ", not " << env->tag() << "\n";
                return kUsageError;
            }
            params = std::move(loaded.params);
        } catch (const Error& e) {
            *ctx.err << "error: " << e.what() << "\n";
            return kUsageError;
        }
    }
    std::unique_ptr<ActionSampler> hand;
    if (!opts.hand.empty()) {
        try {
            hand = hand_sampler(opts.hand, *env);
        } catch (const ConfigError& e) {
            *ctx.err << "error: " << e.what() << "\n";
            return kUsageError;
        }
    }

    std::unique_ptr<std::ofstream> dump_file;
    std::unique_ptr<RolloutCsv> dump;
    const int dump_n = static_cast<int>(ctx.config.get_int("output.dump_episodes"));
    if (!opts.dump_path.empty()) {
        dump_file = std::make_unique<std::ofstream>(opts.dump_path, std::ios::binary);
        if (!*dump_file) {
            *ctx.err << "error: cannot write " << opts.dump_path << "\n";
            return kUsageError;
        }
        dump = std::make_unique<RolloutCsv>(*dump_file, ctx.config.get_bool("output.debug"));
    }

    const std::size_t nc = env->num_contexts();
    std::vector<double> returns, entropies;
    std::vector<std::vector<double>> by_ctx_ret(nc), by_ctx_ent(nc);
    for (int i = 0; i < n; ++i) {
        Rng rng = make_rng(seed, {kEvalEpisode, static_cast<std::uint64_t>(i)});
        const ContextId c = pri.sample(rng);
        std::unique_ptr<ActionSampler> sampler;
        if (params)
            sampler = std::make_unique<RecurrentSampler>(*params);
        ActionSampler& s = params ? *sampler : *hand;
        const RolloutResult r = env->rollout(s, c, rng);
        const double h = posterior_entropy_bits(posterior_update(pri, env->obs_logliks(r.trajectory)));
        returns.push_back(r.discounted_return);
        entropies.push_back(h);
        by_ctx_ret[c.index].push_back(r.discounted_return);
        by_ctx_ent[c.index].push_back(h);
        if (dump && i < dump_n)
            dump->add(i, r);
    }

    const Moments ret = moments(returns), ent = moments(entropies);
    json j;
    j["policy"] = params ? opts.policy_path : "hand:" + opts.hand;
    j["env"] = env->tag();
    j["episodes"] = n;
    j["seed"] = seed;
    j["return_mean"] = ret.mean;
    j["return_std"] = ret.std;
    j["entropy_bits_mean"] = ent.mean;
    j["entropy_bits_std"] = ent.std;
    j["per_context"] = json::array();
    for (std::size_t c = 0; c < nc; ++c)
        j["per_context"].push_back({{"context", c},
                                    {"episodes", by_ctx_ret[c].size()},
                                    {"return_mean", moments(by_ctx_ret[c]).mean},
                                    {"entropy_bits_mean", moments(by_ctx_ent[c]).mean}});
    *ctx.out << j.dump(2) << "\n";
    if (!opts.out_path.empty()) {
        try {
            write_text(opts.out_path, j.dump(2) + "\n");
        } catch (const Error& e) {
            *ctx.err << "error: " << e.what() << "\n";
            return kUsageError;
        }
    }
    return kOk;
}

int cmd_plot(const std::vector<fs::path>& csvs, const fs::path& out_svg, std::ostream& err) {
    if (csvs.empty()) {
        err << "error: no CSV files given\n";
        return kUsageError;
    }
    std::vector<std::pair<std::string, CsvTable>> tables;
    try {
        for (const auto& p : csvs) {
            std::ifstream in(p, std::ios::binary);
            if (!in) {
                err << "error: cannot open " << p.string() << "\n";
                return kUsageError;
            }
            tables.emplace_back(p.stem().string(), read_csv(in));
        }
        write_text(out_svg, render_svg(panels_from_tables(tables)));
    } catch (const CsvParseError& e) {
        err << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kUsageError;
    }
    return kOk;
}

Manifest read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open manifest " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    if (!j.contains("config") || !j.contains("command"))
        throw ConfigError(path.string() + ": not a run manifest");
    Manifest m;
    m.command = j.at("command").get<std::string>();
    m.profile = parse_profile(j.value("profile", "desk"));
    m.config = j.at("config");
    return m;
}

} // namespace cids::app
