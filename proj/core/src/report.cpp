#include "pinnmtl/report.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace pinnmtl::report {

using nlohmann::json;

double median(std::vector<double> values) {
  if (values.empty()) {
    throw std::invalid_argument("median: empty input");
  }
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

RunReport make_report(const cfg::RunConfig& config,
                      std::vector<SeedResult> per_seed) {
  if (per_seed.empty()) {
    throw std::invalid_argument("make_report: no per-seed results");
  }
  RunReport r;
  r.config = config;
  r.per_seed = std::move(per_seed);
  std::vector<double> mae, mse, rel;
  for (const auto& s : r.per_seed) {
    mae.push_back(s.m.mae);
    mse.push_back(s.m.mse);
    rel.push_back(s.m.rel_l2);
  }
  r.aggregate.mae = median(mae);
  r.aggregate.mse = median(mse);
  r.aggregate.rel_l2 = median(rel);
  return r;
}

namespace {

json metrics_to_json(const metrics::Metrics& m) {
  return json{{"mae", m.mae}, {"mse", m.mse}, {"rel_l2", m.rel_l2}};
}

json report_to_json(const RunReport& r) {
  json config = json::object();
  for (const auto& [key, value] : cfg::to_key_values(r.config)) {
    config[key] = value;
  }
  json per_seed = json::array();
  for (const auto& s : r.per_seed) {
    json entry{{"seed", s.seed},
               {"metrics", metrics_to_json(s.m)},
               {"final_loss", s.final_loss},
               {"wall_seconds", s.wall_seconds}};
    if (s.y0) entry["y0"] = *s.y0;
    if (s.alpha) entry["alpha"] = *s.alpha;
    if (!s.log_variances.empty()) entry["log_variances"] = s.log_variances;
    per_seed.push_back(std::move(entry));
  }
  return json{{"schema", "pinnmtl-report-v1"},
              {"benchmark", cfg::to_string(r.config.benchmark)},
              {"config", std::move(config)},
              {"per_seed", std::move(per_seed)},
              {"aggregate", metrics_to_json(r.aggregate)}};
}

std::string type_name(const json& v) {
  if (v.is_object()) return "object";
  if (v.is_array()) return "array";
  if (v.is_string()) return "string";
  if (v.is_boolean()) return "boolean";
  if (v.is_number_integer() || v.is_number_unsigned()) return "integer";
  if (v.is_number()) return "number";
  return "null";
}

bool check_node(const json& schema, const json& doc, const std::string& where,
                std::string* error) {
  auto fail = [&](const std::string& msg) {
    if (error != nullptr) *error = where + ": " + msg;
    return false;
  };
  if (schema.contains("type")) {
    const std::string want = schema["type"].get<std::string>();
    const std::string have = type_name(doc);
    // any integer is also a valid number
    const bool ok = want == have || (want == "number" && have == "integer");
    if (!ok) return fail("expected " + want + ", found " + have);
  }
  if (schema.contains("enum")) {
    bool found = false;
    for (const auto& allowed : schema["enum"]) found = found || allowed == doc;
    if (!found) return fail("value not in enum");
  }
  if (schema.contains("required")) {
    for (const auto& name : schema["required"]) {
      const auto key = name.get<std::string>();
      if (!doc.is_object() || !doc.contains(key)) {
        return fail("missing required member '" + key + "'");
      }
    }
  }
  if (schema.contains("properties") && doc.is_object()) {
    for (const auto& [key, sub] : schema["properties"].items()) {
      if (doc.contains(key) &&
          !check_node(sub, doc.at(key), where + "." + key, error)) {
        return false;
      }
    }
  }
  if (schema.contains("items") && doc.is_array()) {
    for (std::size_t i = 0; i < doc.size(); ++i) {
      if (!check_node(schema["items"], doc[i],
                      where + "[" + std::to_string(i) + "]", error)) {
        return false;
      }
    }
  }
  if (schema.contains("minItems") && doc.is_array()) {
    if (doc.size() < schema["minItems"].get<std::size_t>()) {
      return fail("array shorter than minItems");
    }
  }
  return true;
}

}  // namespace

std::string to_json_string(const RunReport& r) {
  return report_to_json(r).dump(1);
}

void write_report(const std::filesystem::path& path, const RunReport& r) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("write_report: cannot open " + path.string());
  }
  out << to_json_string(r) << '\n';
}

bool validate_report_json(const std::string& doc_json,
                          const std::string& schema_json, std::string* error) {
  json doc, schema;
  try {
    doc = json::parse(doc_json);
  } catch (const std::exception& e) {
    if (error != nullptr) *error = std::string("document: ") + e.what();
    return false;
  }
  try {
    schema = json::parse(schema_json);
  } catch (const std::exception& e) {
    if (error != nullptr) *error = std::string("schema: ") + e.what();
    return false;
  }
  return check_node(schema, doc, "$", error);
}

}  // namespace pinnmtl::report
