#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "aptraj/ssgp.hpp"

namespace aptraj {

/// Model document layout (all matrices row-major, floats at round-trip precision):
///   { "format": "aptraj-ssgp", "version": 1, "input_dim", "num_offline",
///     "outputs": [ { "seed", "r", "sigma_f", "sigma_n", "lengthscales",
///                    "epsilon", "chol_a", "b", "w", "target_mean", "target_scale" } ] }
nlohmann::json model_to_json(const SSGPModel& model);
SSGPModel model_from_json(const nlohmann::json& doc);

void save_model(const SSGPModel& model, const std::filesystem::path& path);
SSGPModel load_model(const std::filesystem::path& path);

nlohmann::json matrix_to_json(const MatrixXd& m);
MatrixXd matrix_from_json(const nlohmann::json& j);
nlohmann::json vector_to_json(const VectorXd& v);
VectorXd vector_from_json(const nlohmann::json& j);

}  // namespace aptraj
