#ifndef CIDS_MODEL_IO_HPP
#define CIDS_MODEL_IO_HPP

#include <filesystem>
#include <string>

#include <json.hpp>

#include <cids/model.hpp>

namespace cids {

inline constexpr const char* kModelSchema = "cpomdp-v1";

/// Malformed or schema-incompatible model document.
struct ModelParseError : Error {
    using Error::Error;
};

nlohmann::json model_to_json(const DiscreteCPOMDP& m);

/// Shapes are checked against the declared dimensions; stochasticity is not
/// (that is validate_model's job).
DiscreteCPOMDP model_from_json(const nlohmann::json& j);

DiscreteCPOMDP load_model(const std::filesystem::path& path);
void save_model(const DiscreteCPOMDP& m, const std::filesystem::path& path);

} // namespace cids

#endif
