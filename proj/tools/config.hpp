#ifndef CIDS_TOOLS_CONFIG_HPP
#define CIDS_TOOLS_CONFIG_HPP

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include <cids/cids.hpp>

namespace cids::app {

enum class KeyKind { Int, Real, Bool, Text };

enum class Profile { Desk, Paper };

Profile parse_profile(const std::string& s);
std::string to_string(Profile p);

struct ConfigKey {
    std::string section;
    std::string name;
    KeyKind kind;
    nlohmann::json desk;
    nlohmann::json paper;
    std::string help;

    std::string full_name() const { return section + "." + name; }
};

/// Every recognised key, grouped by section in [env], [vpg], [cids], [output] order.
const std::vector<ConfigKey>& config_keys();
const ConfigKey* find_key(const std::string& full_name);

struct ConfigError : Error {
    using Error::Error;
};

/// Flat "section.name" -> value map, always holding every key.
class Config {
public:
    static Config defaults(Profile p);

    /// Overrides from a TOML document; unknown sections or keys and type
    /// mismatches throw ConfigError.
    void merge_toml_file(const std::filesystem::path& path);
    void merge_toml_string(const std::string& text);

    /// Override from a command-line string, parsed according to the key kind.
    void set_from_string(const std::string& full_name, const std::string& text);
    void set(const std::string& full_name, nlohmann::json value);

    /// Replaces every value with the manifest's resolved config.
    void merge_json(const nlohmann::json& values);

    const nlohmann::json& get(const std::string& full_name) const;
    long long get_int(const std::string& full_name) const { return get(full_name).get<long long>(); }
    double get_real(const std::string& full_name) const { return get(full_name).get<double>(); }
    bool get_bool(const std::string& full_name) const { return get(full_name).get<bool>(); }
    std::string get_text(const std::string& full_name) const { return get(full_name).get<std::string>(); }

    const nlohmann::json& values() const { return values_; }

private:
    nlohmann::json values_ = nlohmann::json::object();
};

LightDarkParams lightdark_params(const Config& c);
LineGridConfig linegrid_config(const Config& c);
VPGConfig vpg_config(const Config& c);
CIDSConfig cids_config(const Config& c, std::uint64_t seed);
std::vector<std::uint64_t> seeds(const Config& c);

/// Light-Dark, line grid, or a cpomdp-v1 model file, per env.name.
/// Model parse failures propagate as ModelParseError.
std::unique_ptr<Environment> make_environment(const Config& c);

/// env.prior as a distribution over `n` contexts; uniform when empty.
ContextPosterior prior(const Config& c, std::size_t n);

/// Range checks of every section; empty when the config is usable.
std::vector<std::string> check(const Config& c);

/// CIDS_OUT, else "runs", unless output.dir is set.
std::filesystem::path output_root(const Config& c);

} // namespace cids::app

#endif
