#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "ergnn/metrics.hpp"
#include "ergnn/types.hpp"

namespace ergnn {

nlohmann::json mat_to_json(const Mat& m);

/// Parses {"rows", "cols", "data"} and checks the expected shape.
Mat mat_from_json(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols,
                  const std::string& what);

/// NaN AUC (single-class input) serializes as null.
nlohmann::json metrics_to_json(const Metrics& m);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace ergnn
