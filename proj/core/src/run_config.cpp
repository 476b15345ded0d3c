#include "sabrnet/run_config.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sabrnet/version.hpp"

namespace sabrnet {

namespace {

std::string trim(const std::string& s) {
  std::size_t lo = 0, hi = s.size();
  while (lo < hi && std::isspace(static_cast<unsigned char>(s[lo]))) ++lo;
  while (hi > lo && std::isspace(static_cast<unsigned char>(s[hi - 1]))) --hi;
  return s.substr(lo, hi - lo);
}

double to_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0')
    throw ConfigError("config key '" + key + "': not a number: '" + value + "'");
  return v;
}

long long to_int(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const long long v = std::strtoll(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0')
    throw ConfigError("config key '" + key + "': not an integer: '" + value + "'");
  return v;
}

std::uint64_t to_uint(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0' || value.find('-') != std::string::npos)
    throw ConfigError("config key '" + key + "': not a non-negative integer: '" + value + "'");
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config key '" + key + "': expected true/false: '" + value + "'");
}

template <typename T, typename Parse>
std::vector<T> to_list(const std::string& key, const std::string& value, Parse parse) {
  std::vector<T> out;
  std::stringstream stream(value);
  std::string item;
  while (std::getline(stream, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError("config key '" + key + "': empty list element");
    out.push_back(static_cast<T>(parse(key, item)));
  }
  if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>)
      out += fmt(values[i]);
    else
      out += std::to_string(values[i]);
  }
  return out;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "grid_m") hyper.m = static_cast<int>(to_int(key, value));
  else if (key == "grid_n") hyper.n = static_cast<int>(to_int(key, value));
  else if (key == "alpha0_min") hyper.alpha0_min = to_double(key, value);
  else if (key == "alpha0_max") hyper.alpha0_max = to_double(key, value);
  else if (key == "nu_min") hyper.nu_min = to_double(key, value);
  else if (key == "nu_max") hyper.nu_max = to_double(key, value);
  else if (key == "rho_min") hyper.rho_min = to_double(key, value);
  else if (key == "rho_max") hyper.rho_max = to_double(key, value);
  else if (key == "t_last") hyper.t_last = to_double(key, value);
  else if (key == "eta_min") hyper.eta_min = to_double(key, value);
  else if (key == "eta_max") hyper.eta_max = to_double(key, value);
  else if (key == "dt") hyper.dt = to_double(key, value);
  else if (key == "literal_k1_exponent") hyper.literal_k1_exponent = to_bool(key, value);
  else if (key == "literal_dk_divisor") hyper.literal_dk_divisor = to_bool(key, value);
  else if (key == "n_surfaces") n_surfaces = static_cast<std::size_t>(to_uint(key, value));
  else if (key == "n_paths") n_paths = to_uint(key, value);
  else if (key == "accurate_factor") accurate_factor = to_double(key, value);
  else if (key == "per_row_nu_tilde") per_row_nu_tilde = to_bool(key, value);
  else if (key == "master_seed") master_seed = to_uint(key, value);
  else if (key == "workers") workers = static_cast<int>(to_int(key, value));
  else if (key == "hidden_layers") net.hidden_layers = static_cast<int>(to_int(key, value));
  else if (key == "nodes_per_layer") net.nodes_per_layer = static_cast<int>(to_int(key, value));
  else if (key == "init_seed") net.init_seed = to_uint(key, value);
  else if (key == "batch_size") train.batch_size = static_cast<int>(to_int(key, value));
  else if (key == "lr_initial") train.lr_initial = to_double(key, value);
  else if (key == "lr_decay_factor") train.lr_decay_factor = to_double(key, value);
  else if (key == "lr_floor") train.lr_floor = to_double(key, value);
  else if (key == "patience") train.patience = static_cast<int>(to_int(key, value));
  else if (key == "max_epochs") train.max_epochs = static_cast<int>(to_int(key, value));
  else if (key == "shuffle_seed") train.shuffle_seed = to_uint(key, value);
  else if (key == "adam_beta1") train.adam_beta1 = to_double(key, value);
  else if (key == "adam_beta2") train.adam_beta2 = to_double(key, value);
  else if (key == "adam_eps") train.adam_eps = to_double(key, value);
  else if (key == "train_path") train_path = value;
  else if (key == "val_path") val_path = value;
  else if (key == "test_path") test_path = value;
  else if (key == "test_accurate_path") test_accurate_path = value;
  else if (key == "checkpoint_path") checkpoint_path = value;
  else if (key == "subset_fraction") subset_fraction = to_double(key, value);
  else if (key == "synth_delta") synth_delta = to_double(key, value);
  else if (key == "synth_beta") synth_beta = to_double(key, value);
  else if (key == "synth_length") synth_length = static_cast<std::size_t>(to_uint(key, value));
  else if (key == "synth_m1") synth_m1 = to_uint(key, value);
  else if (key == "synth_m2") synth_m2 = to_uint(key, value);
  else if (key == "synth_replications") synth_replications = static_cast<int>(to_int(key, value));
  else if (key == "hagan_alpha0") hagan_alpha0 = to_double(key, value);
  else if (key == "hagan_nu") hagan_nu = to_double(key, value);
  else if (key == "hagan_rho") hagan_rho = to_double(key, value);
  else if (key == "hagan_maturities") hagan_maturities = to_list<double>(key, value, to_double);
  else if (key == "hagan_n_paths") hagan_n_paths = to_uint(key, value);
  else if (key == "sweep_layers") sweep_layers = to_list<int>(key, value, to_int);
  else if (key == "sweep_nodes") sweep_nodes = to_list<int>(key, value, to_int);
  else if (key == "fig_surfaces") fig_surfaces = to_list<std::uint64_t>(key, value, to_uint);
  else throw ConfigError("unknown config key: '" + key + "'");
}

std::string RunConfig::resolved_text() const {
  std::ostringstream out;
  out << "accurate_factor=" << fmt(accurate_factor) << '\n'
      << "adam_beta1=" << fmt(train.adam_beta1) << '\n'
      << "adam_beta2=" << fmt(train.adam_beta2) << '\n'
      << "adam_eps=" << fmt(train.adam_eps) << '\n'
      << "alpha0_max=" << fmt(hyper.alpha0_max) << '\n'
      << "alpha0_min=" << fmt(hyper.alpha0_min) << '\n'
      << "batch_size=" << train.batch_size << '\n'
      << "checkpoint_path=" << checkpoint_path << '\n'
      << "dt=" << fmt(hyper.dt) << '\n'
      << "eta_max=" << fmt(hyper.eta_max) << '\n'
      << "eta_min=" << fmt(hyper.eta_min) << '\n'
      << "fig_surfaces=" << join(fig_surfaces) << '\n'
      << "grid_m=" << hyper.m << '\n'
      << "grid_n=" << hyper.n << '\n'
      << "hagan_alpha0=" << fmt(hagan_alpha0) << '\n'
      << "hagan_maturities=" << join(hagan_maturities) << '\n'
      << "hagan_n_paths=" << hagan_n_paths << '\n'
      << "hagan_nu=" << fmt(hagan_nu) << '\n'
      << "hagan_rho=" << fmt(hagan_rho) << '\n'
      << "hidden_layers=" << net.hidden_layers << '\n'
      << "init_seed=" << net.init_seed << '\n'
      << "literal_dk_divisor=" << (hyper.literal_dk_divisor ? "true" : "false") << '\n'
      << "literal_k1_exponent=" << (hyper.literal_k1_exponent ? "true" : "false") << '\n'
      << "lr_decay_factor=" << fmt(train.lr_decay_factor) << '\n'
      << "lr_floor=" << fmt(train.lr_floor) << '\n'
      << "lr_initial=" << fmt(train.lr_initial) << '\n'
      << "master_seed=" << master_seed << '\n'
      << "max_epochs=" << train.max_epochs << '\n'
      << "n_paths=" << n_paths << '\n'
      << "n_surfaces=" << n_surfaces << '\n'
      << "nodes_per_layer=" << net.nodes_per_layer << '\n'
      << "nu_max=" << fmt(hyper.nu_max) << '\n'
      << "nu_min=" << fmt(hyper.nu_min) << '\n'
      << "patience=" << train.patience << '\n'
      << "per_row_nu_tilde=" << (per_row_nu_tilde ? "true" : "false") << '\n'
      << "rho_max=" << fmt(hyper.rho_max) << '\n'
      << "rho_min=" << fmt(hyper.rho_min) << '\n'
      << "shuffle_seed=" << train.shuffle_seed << '\n'
      << "subset_fraction=" << fmt(subset_fraction) << '\n'
      << "sweep_layers=" << join(sweep_layers) << '\n'
      << "sweep_nodes=" << join(sweep_nodes) << '\n'
      << "synth_beta=" << fmt(synth_beta) << '\n'
      << "synth_delta=" << fmt(synth_delta) << '\n'
      << "synth_length=" << synth_length << '\n'
      << "synth_m1=" << synth_m1 << '\n'
      << "synth_m2=" << synth_m2 << '\n'
      << "synth_replications=" << synth_replications << '\n'
      << "t_last=" << fmt(hyper.t_last) << '\n'
      << "test_accurate_path=" << test_accurate_path << '\n'
      << "test_path=" << test_path << '\n'
      << "train_path=" << train_path << '\n'
      << "val_path=" << val_path << '\n'
      << "workers=" << workers << '\n';
  return out.str();
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const char c : text) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::uint64_t RunConfig::hash() const { return fnv1a(resolved_text()); }

std::string RunConfig::header_comment() const {
  char line[64];
  std::snprintf(line, sizeof(line), "# config_hash=%016llx\n",
                static_cast<unsigned long long>(hash()));
  std::string out = line;
  out += std::string("# tool_version=") + kToolVersion + "\n";
  std::istringstream text(resolved_text());
  std::string row;
  while (std::getline(text, row)) out += "# " + row + "\n";
  return out;
}

void RunConfig::validate() const {
  hyper.validate();
  net.validate();
  train.validate();
  if (n_surfaces == 0) throw ConfigError("n_surfaces must be >= 1");
  if (n_paths == 0) throw ConfigError("n_paths must be >= 1");
  if (!(accurate_factor > 1.0)) throw ConfigError("accurate_factor must be > 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (!(subset_fraction > 0.0 && subset_fraction <= 1.0))
    throw ConfigError("subset_fraction must be in (0, 1]");
  if (synth_replications < 2) throw ConfigError("synth_replications must be >= 2");
  if (synth_length == 0) throw ConfigError("synth_length must be >= 1");
  if (synth_m1 == synth_m2) throw ConfigError("synth_m1 and synth_m2 must differ");
  if (!(synth_beta > 0.0)) throw ConfigError("synth_beta must be > 0");
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  RunConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line.substr(0, line.find('#')));
    if (stripped.empty()) continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    cfg.set(key, value);
  }
  return cfg;
}

}  // namespace sabrnet
