#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pinnmtl/config.hpp"
#include "pinnmtl/metrics.hpp"

namespace pinnmtl::report {

struct SeedResult {
  std::uint64_t seed = 0;
  metrics::Metrics m;
  double final_loss = 0.0;
  double wall_seconds = 0.0;
  std::optional<double> y0;            // FBSDE value at t=0
  std::optional<double> alpha;         // after a coefficient search
  std::vector<double> log_variances;   // uncert strategy only
};

struct RunReport {
  cfg::RunConfig config;
  std::vector<SeedResult> per_seed;
  metrics::Metrics aggregate;  // medians over seeds
};

double median(std::vector<double> values);

/// Fills the aggregate from the per-seed metrics.
RunReport make_report(const cfg::RunConfig& config,
                      std::vector<SeedResult> per_seed);

std::string to_json_string(const RunReport& r);
void write_report(const std::filesystem::path& path, const RunReport& r);

/// Checks a report document against a schema covering the subset of JSON
/// Schema used by the committed schema file: type, required, properties,
/// items, enum. Both arguments are JSON text.
bool validate_report_json(const std::string& doc_json,
                          const std::string& schema_json, std::string* error);

}  // namespace pinnmtl::report
