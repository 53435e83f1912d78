#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pinnmtl/adversarial.hpp"
#include "pinnmtl/train.hpp"

namespace pinnmtl::cfg {

enum class Benchmark { Burgers, Poisson, FokkerPlanck, Laplace, Bsb, AllenCahn };

bool is_fbsde(Benchmark b);
std::string to_string(Benchmark b);
std::optional<Benchmark> benchmark_from_string(std::string_view s);

/// One experiment: benchmark, method variant, budget, seeds, outputs.
struct RunConfig {
  Benchmark benchmark = Benchmark::Laplace;
  train::Strategy strategy = train::Strategy::Unweighted;
  bool cross_stitch = false;
  bool adversarial = false;
  adv::AdvConfig adv;
  bool use_aux = false;   // train the auxiliary task jointly
  double alpha = 0.6;     // auxiliary coefficient scale
  int alpha_search = 0;   // grid-search trials; 0 keeps alpha as given
  int epochs = 1000;
  double lr = 1e-3;
  int n_interior = 1000;
  int n_boundary = 100;
  std::vector<int> hidden = {20, 20, 20};
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  double noise_std = 0.0;  // Gaussian noise on boundary targets
  std::string out_dir = "runs";
  double eval_step = 0.01;  // evaluation grid spacing (closed-form PDEs)
  std::string reference_csv = "data/burgers_reference.csv";
  // forward-backward SDE runs
  int dim = 2;
  int n_paths = 32;
  int n_steps = 20;
};

/// Cross-field invariants; throws std::invalid_argument with the reason.
void validate(const RunConfig& c);

/// Reduced budgets sized for a single CPU core.
RunConfig desk_preset(Benchmark b);
/// Full-scale settings of the original experiments.
RunConfig paper_preset(Benchmark b);

/// Flat serialization; keys are stable and exhaustive.
std::map<std::string, std::string> to_key_values(const RunConfig& c);
/// Applies one key. Unknown keys and malformed values throw.
void apply_key_value(RunConfig& c, const std::string& key,
                     const std::string& value);

/// key=value lines over a base config; '#' starts a comment.
RunConfig parse_config(std::istream& in, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});
void save_config(std::ostream& out, const RunConfig& c);
void save_config(const std::filesystem::path& path, const RunConfig& c);

/// When the override variable is set, its value replaces the seed list.
extern const char* const kSeedEnvVar;
void apply_env_seed(RunConfig& c);

}  // namespace pinnmtl::cfg
