#include "pinnmtl/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pinnmtl::cfg {

bool is_fbsde(Benchmark b) {
  return b == Benchmark::Bsb || b == Benchmark::AllenCahn;
}

std::string to_string(Benchmark b) {
  switch (b) {
    case Benchmark::Burgers: return "burgers";
    case Benchmark::Poisson: return "poisson";
    case Benchmark::FokkerPlanck: return "fokker_planck";
    case Benchmark::Laplace: return "laplace";
    case Benchmark::Bsb: return "bsb";
    case Benchmark::AllenCahn: return "allen_cahn";
  }
  return "laplace";
}

std::optional<Benchmark> benchmark_from_string(std::string_view s) {
  if (s == "burgers") return Benchmark::Burgers;
  if (s == "poisson") return Benchmark::Poisson;
  if (s == "fokker_planck") return Benchmark::FokkerPlanck;
  if (s == "laplace") return Benchmark::Laplace;
  if (s == "bsb") return Benchmark::Bsb;
  if (s == "allen_cahn") return Benchmark::AllenCahn;
  return std::nullopt;
}

void validate(const RunConfig& c) {
  if (c.epochs < 0) throw std::invalid_argument("config: epochs must be >= 0");
  if (!(c.lr > 0.0)) throw std::invalid_argument("config: lr must be positive");
  if (c.n_interior < 1)
    throw std::invalid_argument("config: n_interior must be >= 1");
  if (c.n_boundary < 0)
    throw std::invalid_argument("config: n_boundary must be >= 0");
  if (c.seeds.empty()) throw std::invalid_argument("config: seed list empty");
  if (!(c.alpha > 0.0))
    throw std::invalid_argument("config: alpha must be positive");
  if (c.alpha_search < 0)
    throw std::invalid_argument("config: alpha_search must be >= 0");
  if (!(c.eval_step > 0.0))
    throw std::invalid_argument("config: eval_step must be positive");
  if (c.noise_std < 0.0)
    throw std::invalid_argument("config: noise_std must be >= 0");
  if (c.hidden.empty())
    throw std::invalid_argument("config: hidden layer list empty");
  for (int h : c.hidden) {
    if (h < 1) throw std::invalid_argument("config: hidden sizes must be >= 1");
  }
  if (c.dim < 1) throw std::invalid_argument("config: dim must be >= 1");
  if (c.n_paths < 1) throw std::invalid_argument("config: n_paths must be >= 1");
  if (c.n_steps < 1) throw std::invalid_argument("config: n_steps must be >= 1");
  if (c.adversarial) {
    adv::validate(c.adv);
    if (is_fbsde(c.benchmark)) {
      throw std::invalid_argument(
          "config: adversarial resampling applies to forward PDE runs only");
    }
  }
  if (c.cross_stitch && !c.use_aux) {
    throw std::invalid_argument(
        "config: cross_stitch needs the auxiliary task (use_aux)");
  }
  if (c.strategy == train::Strategy::PcGrad && !c.use_aux) {
    throw std::invalid_argument("config: pcgrad needs the auxiliary task");
  }
}

RunConfig desk_preset(Benchmark b) {
  RunConfig c;
  c.benchmark = b;
  switch (b) {
    case Benchmark::Burgers:
      c.epochs = 15000;
      c.lr = 0.005;
      c.n_interior = 2500;
      c.n_boundary = 100;
      c.hidden = {20, 20, 20};
      c.alpha = 0.6;
      c.adv = {.refresh_every = 100, .limit_divisor = 2, .gen_steps = 10,
               .proportion = 0.1, .gen_hidden = 32, .gen_lr = 0.005};
      break;
    case Benchmark::Poisson:
      c.epochs = 10000;
      c.lr = 0.005;
      c.n_interior = 2000;
      c.n_boundary = 200;
      c.hidden = {20, 20, 20};
      c.adv = {.refresh_every = 100, .limit_divisor = 5, .gen_steps = 10,
               .proportion = 0.1, .gen_hidden = 32, .gen_lr = 0.005};
      c.eval_step = 0.01;
      break;
    case Benchmark::FokkerPlanck:
      c.epochs = 10000;
      c.lr = 0.01;
      c.n_interior = 441;  // the sampler uses its fixed grid
      c.n_boundary = 2;
      c.hidden = {20, 20, 20};
      c.adv = {.refresh_every = 100, .limit_divisor = 3, .gen_steps = 10,
               .proportion = 0.1, .gen_hidden = 32, .gen_lr = 0.01};
      c.eval_step = 0.005;
      break;
    case Benchmark::Laplace:
      c.epochs = 5000;
      c.lr = 0.01;
      c.n_interior = 100;
      c.n_boundary = 2;
      c.hidden = {16, 16};
      c.eval_step = 0.01;
      break;
    case Benchmark::Bsb:
      c.epochs = 2000;
      c.lr = 0.001;
      c.hidden = {32, 32, 32};
      c.dim = 2;
      c.n_paths = 32;
      c.n_steps = 20;
      break;
    case Benchmark::AllenCahn:
      c.epochs = 2000;
      c.lr = 0.001;
      c.hidden = {32, 32, 32};
      c.dim = 2;
      c.n_paths = 32;
      c.n_steps = 15;
      break;
  }
  return c;
}

RunConfig paper_preset(Benchmark b) {
  RunConfig c = desk_preset(b);
  switch (b) {
    case Benchmark::Burgers:
      c.epochs = 50000;
      c.n_interior = 10000;
      c.n_boundary = 100;
      c.hidden = {50, 50, 50, 50, 50};
      break;
    case Benchmark::Poisson:
      c.epochs = 50000;
      c.n_interior = 8000;
      c.n_boundary = 200;
      c.hidden = {50, 50, 50, 50, 50};
      c.eval_step = 0.005;
      break;
    case Benchmark::FokkerPlanck:
      c.epochs = 30000;
      c.hidden = {50, 50, 50, 50, 50};
      break;
    case Benchmark::Laplace:
      c.hidden = {50, 50, 50, 50, 50};
      break;
    case Benchmark::Bsb:
      c.epochs = 20000;
      c.hidden = {256, 256, 256, 256};
      c.dim = 100;
      c.n_paths = 100;
      c.n_steps = 50;
      break;
    case Benchmark::AllenCahn:
      c.epochs = 20000;
      c.hidden = {256, 256, 256, 256};
      c.dim = 20;
      c.n_paths = 100;
      c.n_steps = 15;
      break;
  }
  return c;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << ',';
    os << v[i];
  }
  return os.str();
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string item;
  while (std::getline(is, item, sep)) out.push_back(trim(item));
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config: bad boolean for " + key + ": '" + v +
                              "'");
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const int out = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return out;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad integer for " + key + ": '" + v +
                                "'");
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return out;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad number for " + key + ": '" + v +
                                "'");
  }
}

}  // namespace

std::map<std::string, std::string> to_key_values(const RunConfig& c) {
  std::map<std::string, std::string> kv;
  kv["benchmark"] = to_string(c.benchmark);
  kv["strategy"] = train::to_string(c.strategy);
  kv["cross_stitch"] = c.cross_stitch ? "true" : "false";
  kv["adversarial"] = c.adversarial ? "true" : "false";
  kv["use_aux"] = c.use_aux ? "true" : "false";
  kv["alpha"] = fmt(c.alpha);
  kv["alpha_search"] = std::to_string(c.alpha_search);
  kv["epochs"] = std::to_string(c.epochs);
  kv["lr"] = fmt(c.lr);
  kv["n_interior"] = std::to_string(c.n_interior);
  kv["n_boundary"] = std::to_string(c.n_boundary);
  kv["hidden"] = join(c.hidden);
  kv["seeds"] = join(c.seeds);
  kv["noise_std"] = fmt(c.noise_std);
  kv["out_dir"] = c.out_dir;
  kv["eval_step"] = fmt(c.eval_step);
  kv["reference_csv"] = c.reference_csv;
  kv["dim"] = std::to_string(c.dim);
  kv["n_paths"] = std::to_string(c.n_paths);
  kv["n_steps"] = std::to_string(c.n_steps);
  kv["adv_refresh_every"] = std::to_string(c.adv.refresh_every);
  kv["adv_limit_divisor"] = std::to_string(c.adv.limit_divisor);
  kv["adv_gen_steps"] = std::to_string(c.adv.gen_steps);
  kv["adv_proportion"] = fmt(c.adv.proportion);
  kv["adv_gen_hidden"] = std::to_string(c.adv.gen_hidden);
  kv["adv_gen_lr"] = fmt(c.adv.gen_lr);
  return kv;
}

void apply_key_value(RunConfig& c, const std::string& key,
                     const std::string& value) {
  if (key == "benchmark") {
    auto b = benchmark_from_string(value);
    if (!b) throw std::invalid_argument("config: unknown benchmark '" + value +
                                        "'");
    c.benchmark = *b;
  } else if (key == "strategy") {
    auto s = train::strategy_from_string(value);
    if (!s) throw std::invalid_argument("config: unknown strategy '" + value +
                                        "'");
    c.strategy = *s;
  } else if (key == "cross_stitch") {
    c.cross_stitch = parse_bool(key, value);
  } else if (key == "adversarial") {
    c.adversarial = parse_bool(key, value);
  } else if (key == "use_aux") {
    c.use_aux = parse_bool(key, value);
  } else if (key == "alpha") {
    c.alpha = parse_double(key, value);
  } else if (key == "alpha_search") {
    c.alpha_search = parse_int(key, value);
  } else if (key == "epochs") {
    c.epochs = parse_int(key, value);
  } else if (key == "lr") {
    c.lr = parse_double(key, value);
  } else if (key == "n_interior") {
    c.n_interior = parse_int(key, value);
  } else if (key == "n_boundary") {
    c.n_boundary = parse_int(key, value);
  } else if (key == "hidden") {
    c.hidden.clear();
    for (const auto& part : split(value, ',')) {
      c.hidden.push_back(parse_int(key, part));
    }
  } else if (key == "seeds") {
    c.seeds.clear();
    for (const auto& part : split(value, ',')) {
      c.seeds.push_back(
          static_cast<std::uint64_t>(std::stoull(part)));
    }
  } else if (key == "noise_std") {
    c.noise_std = parse_double(key, value);
  } else if (key == "out_dir") {
    c.out_dir = value;
  } else if (key == "eval_step") {
    c.eval_step = parse_double(key, value);
  } else if (key == "reference_csv") {
    c.reference_csv = value;
  } else if (key == "dim") {
    c.dim = parse_int(key, value);
  } else if (key == "n_paths") {
    c.n_paths = parse_int(key, value);
  } else if (key == "n_steps") {
    c.n_steps = parse_int(key, value);
  } else if (key == "adv_refresh_every") {
    c.adv.refresh_every = parse_int(key, value);
  } else if (key == "adv_limit_divisor") {
    c.adv.limit_divisor = parse_int(key, value);
  } else if (key == "adv_gen_steps") {
    c.adv.gen_steps = parse_int(key, value);
  } else if (key == "adv_proportion") {
    c.adv.proportion = parse_double(key, value);
  } else if (key == "adv_gen_hidden") {
    c.adv.gen_hidden = parse_int(key, value);
  } else if (key == "adv_gen_lr") {
    c.adv.gen_lr = parse_double(key, value);
  } else {
    throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

RunConfig parse_config(std::istream& in, RunConfig base) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                  " is not key=value: '" + line + "'");
    }
    apply_key_value(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("config: cannot open " + path.string());
  }
  return parse_config(in, std::move(base));
}

void save_config(std::ostream& out, const RunConfig& c) {
  for (const auto& [key, value] : to_key_values(c)) {
    out << key << " = " << value << '\n';
  }
}

void save_config(const std::filesystem::path& path, const RunConfig& c) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("config: cannot write " + path.string());
  }
  save_config(out, c);
}

const char* const kSeedEnvVar = "PINNMTL_SEED";

void apply_env_seed(RunConfig& c) {
  const char* value = std::getenv(kSeedEnvVar);
  if (value == nullptr || *value == '\0') return;
  try {
    std::size_t pos = 0;
    const auto seed = std::stoull(value, &pos);
    if (pos != std::string(value).size()) throw std::invalid_argument("trail");
    c.seeds = {static_cast<std::uint64_t>(seed)};
  } catch (const std::exception&) {
    throw std::invalid_argument(std::string("config: ") + kSeedEnvVar +
                                " must be an unsigned integer, got '" + value +
                                "'");
  }
}

}  // namespace pinnmtl::cfg
