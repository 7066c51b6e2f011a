#ifndef CIDS_TOOLS_COMMANDS_HPP
#define CIDS_TOOLS_COMMANDS_HPP

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"

namespace cids::app {

enum ExitCode : int { kOk = 0, kValidationFailure = 1, kUsageError = 2, kDiverged = 3 };

inline constexpr const char* kManifestName = "manifest.json";

struct RunContext {
    Config config;
    Profile profile = Profile::Desk;
    std::ostream* out;
    std::ostream* err;
};

int cmd_validate(const std::filesystem::path& model, std::ostream& out, std::ostream& err);

/// Trains one policy per seed into <root>/<run>/seed_<s>/{policy.bin,curve.csv}.
int cmd_train(const RunContext& ctx);

/// C-IDS per seed into seed_<s>/{regret.csv,summary.json}, plus
/// aggregate.csv and aggregate.json averaged over seeds.
int cmd_cids(const RunContext& ctx);

struct EvalOptions {
    std::string policy_path; ///< policy-v1 blob
    std::string hand;        ///< observe, left, right or action:<n>
    std::string out_path;    ///< metrics JSON copy; stdout always gets it
    std::string dump_path;   ///< rollout CSV of the first output.dump_episodes episodes
};

int cmd_eval(const RunContext& ctx, const EvalOptions& opts);

int cmd_plot(const std::vector<std::filesystem::path>& csvs, const std::filesystem::path& out_svg, std::ostream& err);

/// Resolved config stored in a manifest written by train or cids.
struct Manifest {
    std::string command;
    Profile profile = Profile::Desk;
    nlohmann::json config;
};

Manifest read_manifest(const std::filesystem::path& path);

} // namespace cids::app

#endif
