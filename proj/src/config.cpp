#include "acpkan/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace acpkan {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw std::invalid_argument("config: '" + key + "' expects a number, got '" + v + "'");
  return d;
}

long long to_int(const std::string& key, const std::string& v) {
  long long x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw std::invalid_argument("config: '" + key + "' expects an integer, got '" + v + "'");
  }
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("config: '" + key + "' expects a boolean, got '" + v + "'");
}

}  // namespace

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

std::map<std::string, std::string> read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str());
}

void apply_config(TrainConfig& c, const std::map<std::string, std::string>& values) {
  for (const auto& [k, v] : values) {
    if (k == "problem") c.problem = v;
    else if (k == "model") c.model = v;
    else if (k == "epochs") c.epochs = static_cast<int>(to_int(k, v));
    else if (k == "seed") c.seed = static_cast<std::uint64_t>(to_int(k, v));
    else if (k == "lr") c.adam.lr = to_double(k, v);
    else if (k == "weight_decay") c.adam.weight_decay = to_double(k, v);
    else if (k == "rga") c.rga.enabled = to_bool(k, v);
    else if (k == "eta") c.rga.eta = to_double(k, v);
    else if (k == "beta_w") c.rga.beta_w = to_double(k, v);
    else if (k == "eps") c.rga.eps = to_double(k, v);
    else if (k == "lambda_r") c.rga.lambda_r = to_double(k, v);
    else if (k == "lambda_d") c.rga.lambda_d = to_double(k, v);
    else if (k == "use_log") c.rga.use_log = to_bool(k, v);
    else if (k == "gra_stride") c.rga.gra_stride = static_cast<int>(to_int(k, v));
    else if (k == "metrics_stride") c.metrics_stride = static_cast<int>(to_int(k, v));
    else if (k == "d_model") c.acpkan.d_model = static_cast<int>(to_int(k, v));
    else if (k == "d_hidden") c.acpkan.d_hidden = static_cast<int>(to_int(k, v));
    else if (k == "layers") c.acpkan.layers = static_cast<int>(to_int(k, v));
    else if (k == "degree") c.acpkan.degree = static_cast<int>(to_int(k, v));
    else if (k == "mlp_sizes") {
      std::vector<int> sizes;
      std::stringstream ss(v);
      std::string part;
      while (std::getline(ss, part, ',')) sizes.push_back(static_cast<int>(to_int(k, trim(part))));
      if (sizes.size() < 2) throw std::invalid_argument("config: mlp_sizes needs at least two entries");
      c.mlp_sizes = sizes;
    }
    else if (k == "grid") c.problem_options.grid = static_cast<int>(to_int(k, v));
    else if (k == "boundary") c.problem_options.boundary = static_cast<int>(to_int(k, v));
    else if (k == "eval_grid") c.problem_options.eval_grid = static_cast<int>(to_int(k, v));
    else if (k == "wave_coefficient") c.problem_options.wave_coefficient = to_double(k, v);
    else if (k == "parallel") c.parallel = to_bool(k, v);
    else if (k == "shard_size") c.shard_size = static_cast<std::size_t>(to_int(k, v));
    else throw std::invalid_argument("config: unknown key '" + k + "'");
  }
}

}  // namespace acpkan
