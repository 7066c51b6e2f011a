#include "config.hpp"

#include <cstdlib>
#include <sstream>

#include <toml.hpp>

#include <cids/model_io.hpp>

namespace cids::app {

using nlohmann::json;

Profile parse_profile(const std::string& s) {
    if (s == "desk")
        return Profile::Desk;
    if (s == "paper")
        return Profile::Paper;
    throw ConfigError("unknown profile '" + s + "' (expected desk or paper)");
}

std::string to_string(Profile p) { return p == Profile::Desk ? "desk" : "paper"; }

const std::vector<ConfigKey>& config_keys() {
    using K = KeyKind;
    static const std::vector<ConfigKey> keys = {
        {"env", "name", K::Text, "lightdark", "lightdark", "lightdark, linegrid, or a path to a cpomdp-v1 model file"},
        {"env", "discount", K::Real, 0.95, 0.95, "discount factor applied to returns"},
        {"env", "prior", K::Text, "", "", "comma-separated context prior; empty means uniform"},
        {"env", "horizon", K::Int, 20, 20, "Light-Dark episode length"},
        {"env", "sigma_p2", K::Real, 0.1, 0.1, "Light-Dark motion noise variance"},
        {"env", "sigma_light2", K::Real, 1.0, 1.0, "Light-Dark observation variance in the light"},
        {"env", "sigma_dark2", K::Real, 8.0, 8.0, "Light-Dark observation variance in the dark"},
        {"env", "sigma_u2", K::Real, 0.09, 0.09, "Light-Dark initial position variance"},
        {"env", "step", K::Real, 1.0, 1.0, "Light-Dark move length"},
        {"env", "r_plus", K::Real, 1.0, 1.0, "Light-Dark reward inside the goal region"},
        {"env", "r_minus", K::Real, -1.0, -1.0, "Light-Dark reward inside the penalty region"},
        {"env", "grid_cells", K::Int, 7, 7, "line grid corridor length"},
        {"env", "grid_horizon", K::Int, 8, 8, "line grid episode length"},
        {"env", "grid_start", K::Int, 2, 2, "line grid start cell"},
        {"env", "grid_high", K::Real, 50.0, 50.0, "line grid high target reward"},
        {"env", "grid_low", K::Real, 10.0, 10.0, "line grid low target reward"},
        {"env", "grid_detector", K::Real, -50.0, -50.0, "line grid detector reward"},
        {"env", "grid_sense_accuracy", K::Real, 1.0, 1.0, "probability that Sense reports the true detector direction"},
        {"vpg", "tau", K::Real, 0.2, 0.2, "temperature; 0 trains the reward-only ablation"},
        {"vpg", "batch_size", K::Int, 64, 200, "trajectories per gradient estimate"},
        {"vpg", "learning_rate", K::Real, 0.01, 0.001, "step size"},
        {"vpg", "iterations", K::Int, 1500, 10000, "gradient steps per training run"},
        {"vpg", "baseline_enabled", K::Bool, true, false, "subtract the batch-mean weight"},
        {"vpg", "grad_clip", K::Real, 10.0, 10.0, "global gradient norm bound; 0 disables"},
        {"vpg", "hidden_dim", K::Int, 64, 64, "recurrent state size"},
        {"vpg", "optimizer", K::Text, "sgd", "sgd", "sgd or adam"},
        {"cids", "episodes", K::Int, 300, 300, "episodes against the hidden context"},
        {"cids", "inner_iterations", K::Int, 20, 20, "warm-started solver iterations per episode"},
        {"cids", "mc_samples", K::Int, 64, 64, "rollouts per value and information estimate"},
        {"cids", "oracle_budget", K::Int, 300, 300, "solver iterations per known-context oracle policy"},
        {"cids", "true_context", K::Int, -1, -1, "hidden context index; -1 draws it from the prior"},
        {"cids", "info_floor_nats", K::Real, 1e-6, 1e-6, "information gain below which the ratio is undefined"},
        {"cids", "info_clamp_bits", K::Real, 0.01, 0.01, "negative slack allowed for information estimates"},
        {"output", "dir", K::Text, "", "", "output root; empty uses CIDS_OUT, else ./runs"},
        {"output", "run_name", K::Text, "", "", "run directory name; empty uses a UTC timestamp"},
        {"output", "seeds", K::Text, "0", "0", "comma-separated seeds, run in order"},
        {"output", "eval_episodes", K::Int, 200, 200, "episodes rolled by eval"},
        {"output", "dump_episodes", K::Int, 0, 0, "eval episodes written to rollouts.csv"},
        {"output", "debug", K::Bool, false, false, "add hidden position and context to rollout dumps"},
    };
    return keys;
}

const ConfigKey* find_key(const std::string& full_name) {
    for (const auto& k : config_keys())
        if (k.full_name() == full_name)
            return &k;
    return nullptr;
}

namespace {

const ConfigKey& require_key(const std::string& full_name) {
    const ConfigKey* k = find_key(full_name);
    if (!k)
        throw ConfigError("unknown config key '" + full_name + "'");
    return *k;
}

json coerce(const ConfigKey& key, const json& v) {
    switch (key.kind) {
    case KeyKind::Int:
        if (v.is_number_integer())
            return v.get<long long>();
        break;
    case KeyKind::Real:
        if (v.is_number())
            return v.get<double>();
        break;
    case KeyKind::Bool:
        if (v.is_boolean())
            return v;
        break;
    case KeyKind::Text:
        if (v.is_string())
            return v;
        break;
    }
    throw ConfigError("config key '" + key.full_name() + "' has the wrong type");
}

json from_toml(const toml::node& n) {
    if (auto v = n.value_exact<std::int64_t>())
        return static_cast<long long>(*v);
    if (auto v = n.value_exact<double>())
        return *v;
    if (auto v = n.value_exact<bool>())
        return *v;
    if (auto v = n.value_exact<std::string>())
        return *v;
    if (const auto* arr = n.as_array()) {
        std::string joined;
        for (std::size_t i = 0; i < arr->size(); ++i) {
            const json item = from_toml(*arr->get(i));
            joined += (i ? "," : "") + (item.is_string() ? item.get<std::string>() : item.dump());
        }
        return joined;
    }
    throw ConfigError("unsupported TOML value type");
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(s);
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        out.push_back(b == std::string::npos ? "" : item.substr(b, e - b + 1));
    }
    return out;
}

void merge_table(Config& cfg, const toml::table& root) {
    for (auto&& [section, node] : root) {
        const auto* tbl = node.as_table();
        if (!tbl)
            throw ConfigError("top-level key '" + std::string(section.str()) + "' must be a section");
        for (auto&& [name, value] : *tbl) {
            const std::string full = std::string(section.str()) + "." + std::string(name.str());
            cfg.set(full, from_toml(value));
        }
    }
}

} // namespace

Config Config::defaults(Profile p) {
    Config c;
    for (const auto& k : config_keys())
        c.values_[k.full_name()] = p == Profile::Desk ? k.desk : k.paper;
    return c;
}

void Config::merge_toml_file(const std::filesystem::path& path) {
    try {
        merge_table(*this, toml::parse_file(path.string()));
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << path.string() << ": " << e.description() << " (" << e.source().begin << ")";
        throw ConfigError(os.str());
    }
}

void Config::merge_toml_string(const std::string& text) {
    try {
        merge_table(*this, toml::parse(text));
    } catch (const toml::parse_error& e) {
        throw ConfigError(std::string(e.description()));
    }
}

void Config::set_from_string(const std::string& full_name, const std::string& text) {
    const ConfigKey& key = require_key(full_name);
    auto fail = [&] { throw ConfigError("cannot parse '" + text + "' for " + full_name); };
    switch (key.kind) {
    case KeyKind::Int: {
        std::size_t used = 0;
        long long v = 0;
        try {
            v = std::stoll(text, &used);
        } catch (const std::exception&) {
            fail();
        }
        if (used != text.size())
            fail();
        values_[full_name] = v;
        return;
    }
    case KeyKind::Real: {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(text, &used);
        } catch (const std::exception&) {
            fail();
        }
        if (used != text.size())
            fail();
        values_[full_name] = v;
        return;
    }
    case KeyKind::Bool:
        if (text == "true" || text == "1")
            values_[full_name] = true;
        else if (text == "false" || text == "0")
            values_[full_name] = false;
        else
            fail();
        return;
    case KeyKind::Text:
        values_[full_name] = text;
        return;
    }
}

void Config::set(const std::string& full_name, json value) {
    const ConfigKey& key = require_key(full_name);
    values_[full_name] = coerce(key, value);
}

void Config::merge_json(const json& values) {
    if (!values.is_object())
        throw ConfigError("manifest config must be an object");
    for (const auto& [k, v] : values.items())
        set(k, v);
}

const json& Config::get(const std::string& full_name) const {
    const auto it = values_.find(full_name);
    if (it == values_.end())
        throw ConfigError("unknown config key '" + full_name + "'");
    return *it;
}

LightDarkParams lightdark_params(const Config& c) {
    LightDarkParams p;
    p.horizon = static_cast<int>(c.get_int("env.horizon"));
    p.discount = c.get_real("env.discount");
    p.sigma_p2 = c.get_real("env.sigma_p2");
    p.sigma_L2 = c.get_real("env.sigma_light2");
    p.sigma_D2 = c.get_real("env.sigma_dark2");
    p.sigma_u2 = c.get_real("env.sigma_u2");
    p.step = c.get_real("env.step");
    p.r_plus = c.get_real("env.r_plus");
    p.r_minus = c.get_real("env.r_minus");
    return p;
}

LineGridConfig linegrid_config(const Config& c) {
    LineGridConfig g;
    g.num_cells = static_cast<int>(c.get_int("env.grid_cells"));
    g.horizon = static_cast<int>(c.get_int("env.grid_horizon"));
    g.start_cell = static_cast<int>(c.get_int("env.grid_start"));
    g.high_reward = c.get_real("env.grid_high");
    g.low_reward = c.get_real("env.grid_low");
    g.detector_penalty = c.get_real("env.grid_detector");
    g.sense_accuracy = c.get_real("env.grid_sense_accuracy");
    g.discount = c.get_real("env.discount");
    return g;
}

VPGConfig vpg_config(const Config& c) {
    VPGConfig v;
    v.tau = c.get_real("vpg.tau");
    v.batch_size = static_cast<int>(c.get_int("vpg.batch_size"));
    v.learning_rate = c.get_real("vpg.learning_rate");
    v.iterations = static_cast<int>(c.get_int("vpg.iterations"));
    v.baseline = c.get_bool("vpg.baseline_enabled");
    const double clip = c.get_real("vpg.grad_clip");
    v.grad_clip = clip > 0.0 ? std::optional<double>(clip) : std::nullopt;
    v.hidden_dim = static_cast<int>(c.get_int("vpg.hidden_dim"));
    const std::string opt = c.get_text("vpg.optimizer");
    if (opt == "sgd")
        v.optimizer = Optimizer::Sgd;
    else if (opt == "adam")
        v.optimizer = Optimizer::Adam;
    else
        throw ConfigError("vpg.optimizer must be sgd or adam");
    return v;
}

CIDSConfig cids_config(const Config& c, std::uint64_t seed) {
    CIDSConfig k;
    k.vpg = vpg_config(c);
    k.vpg.iterations = static_cast<int>(c.get_int("cids.inner_iterations"));
    k.num_episodes = static_cast<int>(c.get_int("cids.episodes"));
    k.mc_samples = static_cast<int>(c.get_int("cids.mc_samples"));
    k.oracle_budget = static_cast<int>(c.get_int("cids.oracle_budget"));
    const long long tc = c.get_int("cids.true_context");
    if (tc >= 0)
        k.true_context = ContextId{static_cast<std::size_t>(tc)};
    k.info_floor_nats = c.get_real("cids.info_floor_nats");
    k.info_clamp_bits = c.get_real("cids.info_clamp_bits");
    k.seed = seed;
    return k;
}

std::vector<std::uint64_t> seeds(const Config& c) {
    std::vector<std::uint64_t> out;
    for (const auto& s : split_list(c.get_text("output.seeds"))) {
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            if (s.empty() || s.front() == '-')
                throw std::invalid_argument(s);
            v = std::stoull(s, &used);
        } catch (const std::exception&) {
            throw ConfigError("output.seeds: '" + s + "' is not a non-negative integer");
        }
        if (used != s.size())
            throw ConfigError("output.seeds: '" + s + "' is not a non-negative integer");
        out.push_back(v);
    }
    if (out.empty())
        throw ConfigError("output.seeds must list at least one seed");
    return out;
}

std::unique_ptr<Environment> make_environment(const Config& c) {
    const std::string name = c.get_text("env.name");
    if (name == "lightdark")
        return std::make_unique<LightDarkEnv>(lightdark_params(c));
    if (name == "linegrid")
        return make_linegrid_env(linegrid_config(c));
    const std::filesystem::path path(name);
    return std::make_unique<DiscreteEnv>(load_model(path), c.get_real("env.discount"), path.stem().string());
}

ContextPosterior prior(const Config& c, std::size_t n) {
    const std::string text = c.get_text("env.prior");
    if (text.empty())
        return ContextPosterior::uniform(n);
    const auto items = split_list(text);
    if (items.size() != n)
        throw ConfigError("env.prior lists " + std::to_string(items.size()) + " probabilities for " +
                          std::to_string(n) + " contexts");
    Vector p(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        try {
            p[static_cast<Eigen::Index>(i)] = std::stod(items[i]);
        } catch (const std::exception&) {
            throw ConfigError("env.prior: '" + items[i] + "' is not a number");
        }
    }
    try {
        return ContextPosterior(p);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("env.prior: ") + e.what());
    }
}

std::vector<std::string> check(const Config& c) {
    std::vector<std::string> errs;
    auto add = [&](const std::string& prefix, const std::vector<std::string>& more) {
        for (const auto& m : more)
            errs.push_back(prefix + m);
    };
    try {
        const std::string name = c.get_text("env.name");
        if (name == "lightdark")
            add("env: ", lightdark_params(c).check());
        else if (name == "linegrid")
            add("env: ", linegrid_config(c).check());
        if (!(c.get_real("env.discount") > 0.0 && c.get_real("env.discount") <= 1.0))
            errs.emplace_back("env: discount must lie in (0, 1]");
        add("vpg: ", vpg_config(c).check());
        const CIDSConfig k = cids_config(c, 0);
        add("cids: ", k.check());
        if (c.get_int("output.eval_episodes") < 1)
            errs.emplace_back("output: eval_episodes must be at least 1");
        if (c.get_int("output.dump_episodes") < 0)
            errs.emplace_back("output: dump_episodes must be non-negative");
        seeds(c);
    } catch (const ConfigError& e) {
        errs.emplace_back(e.what());
    }
    return errs;
}

std::filesystem::path output_root(const Config& c) {
    const std::string dir = c.get_text("output.dir");
    if (!dir.empty())
        return dir;
    if (const char* env = std::getenv("CIDS_OUT"); env && *env)
        return env;
    return "runs";
}

} // namespace cids::app
