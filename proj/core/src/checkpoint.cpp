#include "pinnmtl/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace pinnmtl::nn {

using nlohmann::json;

void save_checkpoint(const std::filesystem::path& path,
                     std::span<const ParamRef> params,
                     const std::map<std::string, std::string>& meta) {
  json j;
  j["format"] = 1;
  j["meta"] = meta;
  json blocks = json::object();
  for (const auto& p : params) {
    json b;
    b["rows"] = p.value->rows();
    b["cols"] = p.value->cols();
    // column-major, matching Eigen's storage
    std::vector<double> data(p.value->data(), p.value->data() + p.value->size());
    b["data"] = data;
    blocks[p.name] = std::move(b);
  }
  j["params"] = std::move(blocks);
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("save_checkpoint: cannot open " + path.string());
  }
  out << j.dump(1) << '\n';
}

std::map<std::string, std::string> load_checkpoint(
    const std::filesystem::path& path, std::span<const ParamRef> params) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("load_checkpoint: cannot open " + path.string());
  }
  json j = json::parse(in);
  if (!j.contains("params")) {
    throw std::runtime_error("load_checkpoint: no params object in " +
                             path.string());
  }
  const json& blocks = j["params"];
  for (const auto& p : params) {
    if (!blocks.contains(p.name)) {
      throw std::runtime_error("load_checkpoint: missing block '" + p.name +
                               "'");
    }
    const json& b = blocks[p.name];
    const auto rows = b.at("rows").get<Eigen::Index>();
    const auto cols = b.at("cols").get<Eigen::Index>();
    if (rows != p.value->rows() || cols != p.value->cols()) {
      throw std::runtime_error("load_checkpoint: shape mismatch for '" +
                               p.name + "'");
    }
    const auto data = b.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(data.size()) != p.value->size()) {
      throw std::runtime_error("load_checkpoint: element count mismatch for '" +
                               p.name + "'");
    }
    std::copy(data.begin(), data.end(), p.value->data());
  }
  std::map<std::string, std::string> meta;
  if (j.contains("meta")) {
    meta = j["meta"].get<std::map<std::string, std::string>>();
  }
  return meta;
}

}  // namespace pinnmtl::nn
