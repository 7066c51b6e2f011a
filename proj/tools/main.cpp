#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "commands.hpp"

using namespace cids;
using namespace cids::app;

namespace {

struct ConfigOptions {
    std::string config_file;
    std::string profile;
    std::string replay;
    bool ablation = false;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
};

std::string show(const nlohmann::json& v) { return v.is_string() ? "\"" + v.get<std::string>() + "\"" : v.dump(); }

std::string key_listing() {
    std::ostringstream os;
    os << "Config keys (TOML [section] name = value, or --section.name VALUE on train/cids/eval):\n";
    for (const auto& k : config_keys())
        os << "  " << k.full_name() << "  " << k.help << " (desk " << show(k.desk) << ", paper " << show(k.paper)
           << ")\n";
    return os.str();
}

void add_config_options(CLI::App* sub, ConfigOptions& o, bool replayable) {
    sub->add_option("--config", o.config_file, "TOML file with [env], [vpg], [cids] and [output] sections")
        ->check(CLI::ExistingFile);
    sub->add_option("--profile", o.profile, "default set: desk or paper (desk when unset)")
        ->check(CLI::IsMember({"desk", "paper"}));
    if (replayable)
        sub->add_option("--replay", o.replay, "manifest.json of an earlier run whose config is reused")
            ->check(CLI::ExistingFile);
    sub->add_flag("--baseline", o.ablation, "reward-only ablation: forces vpg.tau = 0");
    for (const auto& k : config_keys()) {
        const char* kind = k.kind == KeyKind::Int    ? "INT"
                           : k.kind == KeyKind::Real ? "REAL"
                           : k.kind == KeyKind::Bool ? "BOOL"
                                                     : "TEXT";
        auto* opt = sub->add_option("--" + k.full_name(), o.values[k.full_name()],
                                    k.help + " (desk " + show(k.desk) + ", paper " + show(k.paper) + ")");
        opt->type_name(kind)->group("[" + k.section + "]");
        o.options[k.full_name()] = opt;
    }
}

// Defaults of the profile, then the replayed manifest, then the TOML file,
// then individual flags.
RunContext resolve(const ConfigOptions& o, const std::string& command) {
    std::optional<Manifest> manifest;
    if (!o.replay.empty()) {
        manifest = read_manifest(o.replay);
        if (manifest->command != command)
            throw ConfigError("manifest was written by '" + manifest->command + "', not '" + command + "'");
    }
    Profile profile = Profile::Desk;
    if (!o.profile.empty())
        profile = parse_profile(o.profile);
    else if (manifest)
        profile = manifest->profile;

    RunContext ctx{Config::defaults(profile), profile, &std::cout, &std::cerr};
    if (manifest)
        ctx.config.merge_json(manifest->config);
    if (!o.config_file.empty())
        ctx.config.merge_toml_file(o.config_file);
    for (const auto& [key, opt] : o.options)
        if (opt->count() > 0)
            ctx.config.set_from_string(key, o.values.at(key));
    if (o.ablation)
        ctx.config.set("vpg.tau", 0.0);
    return ctx;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Information-directed planning for context-indexed POMDPs"};
    app.require_subcommand(1);
    app.set_version_flag("--version", CIDS_VERSION);
    app.footer(key_listing());

    std::string model_path;
    auto* validate = app.add_subcommand("validate", "Check a cpomdp-v1 model file (exit 1 on violations)");
    validate->add_option("model", model_path, "model JSON file")->required();
    validate->footer(key_listing());

    ConfigOptions train_opts, cids_opts, eval_opts;
    auto* train = app.add_subcommand("train", "Train a policy per seed under the fixed prior");
    add_config_options(train, train_opts, true);
    auto* cids = app.add_subcommand("cids", "Run the episodic loop against a hidden context");
    add_config_options(cids, cids_opts, true);
    auto* eval = app.add_subcommand("eval", "Evaluate a trained or hand-written policy");
    add_config_options(eval, eval_opts, false);
    EvalOptions eval_extra;
    eval->add_option("--policy", eval_extra.policy_path, "policy-v1 file from train");
    eval->add_option("--hand", eval_extra.hand, "fixed action: observe, left, right (Light-Dark) or action:N");
    eval->add_option("--out", eval_extra.out_path, "also write the metrics JSON here");
    eval->add_option("--dump", eval_extra.dump_path, "rollout CSV of the first output.dump_episodes episodes");

    std::vector<std::string> plot_inputs;
    std::string plot_out;
    auto* plot = app.add_subcommand("plot", "Render curve or regret CSVs as an SVG");
    plot->add_option("csv", plot_inputs, "CSV files written by train or cids")->required();
    plot->add_option("-o,--out", plot_out, "output SVG path")->required();
    plot->footer(key_listing());

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsageError;
    }

    try {
        if (*validate)
            return cmd_validate(model_path, std::cout, std::cerr);
        if (*plot) {
            std::vector<std::filesystem::path> paths(plot_inputs.begin(), plot_inputs.end());
            return cmd_plot(paths, plot_out, std::cerr);
        }
        if (*train)
            return cmd_train(resolve(train_opts, "train"));
        if (*cids)
            return cmd_cids(resolve(cids_opts, "cids"));
        if (*eval)
            return cmd_eval(resolve(eval_opts, "eval"), eval_extra);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kUsageError;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsageError;
    }
    return kUsageError;
}
