#include <cids/model_io.hpp>

#include <fstream>

namespace cids {

using nlohmann::json;

namespace {

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& j, int rows, int cols, const std::string& what) {
    if (!j.is_array() || j.size() != static_cast<std::size_t>(rows))
        throw ModelParseError(what + ": expected " + std::to_string(rows) + " rows");
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        const json& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || row.size() != static_cast<std::size_t>(cols))
            throw ModelParseError(what + ": row " + std::to_string(i) + " expected " + std::to_string(cols) +
                                  " entries");
        for (int k = 0; k < cols; ++k) {
            const json& v = row[static_cast<std::size_t>(k)];
            if (!v.is_number())
                throw ModelParseError(what + ": non-numeric entry");
            m(i, k) = v.get<double>();
        }
    }
    return m;
}

const json& per_context(const json& j, const char* key, int nc) {
    if (!j.contains(key) || !j.at(key).is_array() || j.at(key).size() != static_cast<std::size_t>(nc))
        throw ModelParseError(std::string(key) + ": expected one entry per context");
    return j.at(key);
}

int positive_int(const json& j, const char* key, bool allow_zero = false) {
    if (!j.contains(key) || !j.at(key).is_number_integer())
        throw ModelParseError(std::string("missing integer field ") + key);
    const int v = j.at(key).get<int>();
    if (v < 0 || (!allow_zero && v == 0))
        throw ModelParseError(std::string(key) + " out of range");
    return v;
}

} // namespace

json model_to_json(const DiscreteCPOMDP& m) {
    json j;
    j["schema"] = kModelSchema;
    j["num_states"] = m.num_states;
    j["num_actions"] = m.num_actions;
    j["num_obs"] = m.num_obs;
    j["num_contexts"] = m.num_contexts;
    j["horizon"] = m.horizon;
    j["r_max"] = m.r_max;
    json tr = json::array(), em = json::array(), rw = json::array(), in = json::array();
    for (std::size_t c = 0; c < m.transition.size(); ++c) {
        json per_action = json::array();
        for (const Matrix& p : m.transition[c])
            per_action.push_back(matrix_to_json(p));
        tr.push_back(std::move(per_action));
        em.push_back(matrix_to_json(m.emission[c]));
        rw.push_back(matrix_to_json(m.reward[c]));
        in.push_back(std::vector<double>(m.init[c].data(), m.init[c].data() + m.init[c].size()));
    }
    j["transition"] = std::move(tr);
    j["emission"] = std::move(em);
    j["reward"] = std::move(rw);
    j["init"] = std::move(in);
    return j;
}

DiscreteCPOMDP model_from_json(const json& j) {
    if (!j.is_object())
        throw ModelParseError("model document must be a JSON object");
    if (!j.contains("schema") || j.at("schema") != kModelSchema)
        throw ModelParseError(std::string("schema must be \"") + kModelSchema + "\"");

    DiscreteCPOMDP m;
    m.num_states = positive_int(j, "num_states");
    m.num_actions = positive_int(j, "num_actions");
    m.num_obs = positive_int(j, "num_obs");
    m.num_contexts = positive_int(j, "num_contexts");
    m.horizon = positive_int(j, "horizon", true);
    if (!j.contains("r_max") || !j.at("r_max").is_number())
        throw ModelParseError("missing numeric field r_max");
    m.r_max = j.at("r_max").get<double>();

    const int nc = m.num_contexts;
    const json& tr = per_context(j, "transition", nc);
    const json& em = per_context(j, "emission", nc);
    const json& rw = per_context(j, "reward", nc);
    const json& in = per_context(j, "init", nc);
    for (int c = 0; c < nc; ++c) {
        const auto cu = static_cast<std::size_t>(c);
        const std::string ctx = "[" + std::to_string(c) + "]";
        if (!tr[cu].is_array() || tr[cu].size() != static_cast<std::size_t>(m.num_actions))
            throw ModelParseError("transition" + ctx + ": expected one matrix per action");
        std::vector<Matrix> per_action;
        for (int a = 0; a < m.num_actions; ++a)
            per_action.push_back(matrix_from_json(tr[cu][static_cast<std::size_t>(a)], m.num_states, m.num_states,
                                                  "transition" + ctx + "[" + std::to_string(a) + "]"));
        m.transition.push_back(std::move(per_action));
        m.emission.push_back(matrix_from_json(em[cu], m.num_states, m.num_obs, "emission" + ctx));
        m.reward.push_back(matrix_from_json(rw[cu], m.num_states, m.num_actions, "reward" + ctx));
        const Matrix mu = matrix_from_json(json::array({in[cu]}), 1, m.num_states, "init" + ctx);
        m.init.push_back(mu.row(0).transpose());
    }
    return m;
}

DiscreteCPOMDP load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ModelParseError("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ModelParseError(path.string() + ": " + e.what());
    }
    return model_from_json(j);
}

void save_model(const DiscreteCPOMDP& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write " + path.string());
    out << model_to_json(m).dump(2) << '\n';
}

} // namespace cids
