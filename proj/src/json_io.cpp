#include "ergnn/json_io.hpp"

#include <fstream>
#include <sstream>

namespace ergnn {

nlohmann::json mat_to_json(const Mat& m) {
  nlohmann::json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) data.push_back(m(i, k));
  }
  j["data"] = data;
  return j;
}

Mat mat_from_json(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols,
                  const std::string& what) {
  const auto r = j.at("rows").get<Eigen::Index>();
  const auto c = j.at("cols").get<Eigen::Index>();
  if (r != rows || c != cols) {
    throw DimensionError(what + ": stored shape " + std::to_string(r) + "x" + std::to_string(c) +
                         " does not match expected " + std::to_string(rows) + "x" +
                         std::to_string(cols));
  }
  const auto& data = j.at("data");
  if (data.size() != static_cast<std::size_t>(r * c)) {
    throw DimensionError(what + ": data length does not match shape");
  }
  Mat m(rows, cols);
  std::size_t idx = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = data[idx++].get<double>();
  }
  return m;
}

nlohmann::json metrics_to_json(const Metrics& m) {
  nlohmann::json j;
  j["f1"] = m.f1;
  j["recall"] = m.recall;
  j["precision"] = m.precision;
  j["accuracy"] = m.accuracy;
  j["auc"] = m.auc;  // NaN dumps as null
  j["tp"] = m.tp;
  j["fp"] = m.fp;
  j["fn"] = m.fn;
  j["tn"] = m.tn;
  return j;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace ergnn
