#include "bipath/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace bipath {

void TrainerConfig::validate() const {
  if (!(lr > 0)) throw std::invalid_argument("lr must be positive");
  if (epochs < 1) throw std::invalid_argument("epochs must be at least 1");
  if (batch < 1) throw std::invalid_argument("batch must be at least 1");
  if (!(sigma > 0)) throw std::invalid_argument("sigma must be positive");
  if (!(tau >= 0)) throw std::invalid_argument("tau must be nonnegative");
  if (!(density_scale > 0)) throw std::invalid_argument("density_scale must be positive");
  if (val_count < 0) throw std::invalid_argument("val_count must be nonnegative");
}

void RunConfig::validate() const {
  augment.validate();
  dis.validate();
  model.validate();
  trainer.validate();
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

double to_double(const std::string& v) {
  double out = 0;
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size() || !std::isfinite(out)) {
    throw std::invalid_argument("expected a number, got '" + v + "'");
  }
  return out;
}

long long to_int(const std::string& v) {
  long long out = 0;
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size()) throw std::invalid_argument("expected an integer, got '" + v + "'");
  return out;
}

std::uint64_t to_u64(const std::string& v) {
  std::uint64_t out = 0;
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size()) {
    throw std::invalid_argument("expected an unsigned integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("expected a boolean, got '" + v + "'");
}

void to_range(const std::string& v, double& lo, double& hi) {
  const auto comma = v.find(',');
  if (comma == std::string::npos) throw std::invalid_argument("expected 'lo,hi', got '" + v + "'");
  lo = to_double(trim(v.substr(0, comma)));
  hi = to_double(trim(v.substr(comma + 1)));
}

std::string num(double v) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

using Setter = std::function<void(RunConfig&, const std::string&)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct Key {
  const char* name;
  Setter set;
  Getter get;
};

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      {"crop",
       [](RunConfig& c, const std::string& v) { c.augment.crop_size = c.model.crop_size = static_cast<int>(to_int(v)); },
       [](const RunConfig& c) { return std::to_string(c.augment.crop_size); }},
      {"hflip_prob", [](RunConfig& c, const std::string& v) { c.augment.hflip_prob = to_double(v); },
       [](const RunConfig& c) { return num(c.augment.hflip_prob); }},
      {"vflip_prob", [](RunConfig& c, const std::string& v) { c.augment.vflip_prob = to_double(v); },
       [](const RunConfig& c) { return num(c.augment.vflip_prob); }},
      {"gamma_prob", [](RunConfig& c, const std::string& v) { c.augment.gamma_prob = to_double(v); },
       [](const RunConfig& c) { return num(c.augment.gamma_prob); }},
      {"gamma_range", [](RunConfig& c, const std::string& v) { to_range(v, c.augment.gamma_lo, c.augment.gamma_hi); },
       [](const RunConfig& c) { return num(c.augment.gamma_lo) + "," + num(c.augment.gamma_hi); }},
      {"scale_range", [](RunConfig& c, const std::string& v) { to_range(v, c.augment.scale_lo, c.augment.scale_hi); },
       [](const RunConfig& c) { return num(c.augment.scale_lo) + "," + num(c.augment.scale_hi); }},
      {"augment_seed", [](RunConfig& c, const std::string& v) { c.augment.seed = to_u64(v); },
       [](const RunConfig& c) { return std::to_string(c.augment.seed); }},
      {"correct_flow", [](RunConfig& c, const std::string& v) { c.augment.correct_flow = to_bool(v); },
       [](const RunConfig& c) { return std::string(c.augment.correct_flow ? "true" : "false"); }},
      {"patch_size", [](RunConfig& c, const std::string& v) { c.dis.patch_size = static_cast<int>(to_int(v)); },
       [](const RunConfig& c) { return std::to_string(c.dis.patch_size); }},
      {"patch_stride", [](RunConfig& c, const std::string& v) { c.dis.patch_stride = static_cast<int>(to_int(v)); },
       [](const RunConfig& c) { return std::to_string(c.dis.patch_stride); }},
      {"iterations", [](RunConfig& c, const std::string& v) { c.dis.iterations = static_cast<int>(to_int(v)); },
       [](const RunConfig& c) { return std::to_string(c.dis.iterations); }},
      {"pyramid_factor", [](RunConfig& c, const std::string& v) { c.dis.pyramid_factor = static_cast<int>(to_int(v)); },
       [](const RunConfig& c) { return std::to_string(c.dis.pyramid_factor); }},
      {"min_level_dim", [](RunConfig& c, const std::string& v) { c.dis.min_level_dim = static_cast<int>(to_int(v)); },
       [](const RunConfig& c) { return std::to_string(c.dis.min_level_dim); }},
      {"densify_eps", [](RunConfig& c, const std::string& v) { c.dis.densify_eps = to_double(v); },
       [](const RunConfig& c) { return num(c.dis.densify_eps); }},
      {"width", [](RunConfig& c, const std::string& v) { c.model.width = to_double(v); },
       [](const RunConfig& c) { return num(c.model.width); }},
      {"flow_mode", [](RunConfig& c, const std::string& v) { c.model.flow_mode = parse_flow_encoding(v); },
       [](const RunConfig& c) { return to_string(c.model.flow_mode); }},
      {"flow_enabled", [](RunConfig& c, const std::string& v) { c.model.flow_enabled = to_bool(v); },
       [](const RunConfig& c) { return std::string(c.model.flow_enabled ? "true" : "false"); }},
      {"attention", [](RunConfig& c, const std::string& v) { c.model.attention = parse_attention_placement(v); },
       [](const RunConfig& c) { return to_string(c.model.attention); }},
      {"init_std", [](RunConfig& c, const std::string& v) { c.model.init_std = to_double(v); },
       [](const RunConfig& c) { return num(c.model.init_std); }},
      {"lr", [](RunConfig& c, const std::string& v) { c.trainer.lr = to_double(v); },
       [](const RunConfig& c) { return num(c.trainer.lr); }},
      {"epochs", [](RunConfig& c, const std::string& v) { c.trainer.epochs = static_cast<int>(to_int(v)); },
       [](const RunConfig& c) { return std::to_string(c.trainer.epochs); }},
      {"batch", [](RunConfig& c, const std::string& v) { c.trainer.batch = static_cast<int>(to_int(v)); },
       [](const RunConfig& c) { return std::to_string(c.trainer.batch); }},
      {"sigma", [](RunConfig& c, const std::string& v) { c.trainer.sigma = to_double(v); },
       [](const RunConfig& c) { return num(c.trainer.sigma); }},
      {"tau", [](RunConfig& c, const std::string& v) { c.trainer.tau = to_double(v); },
       [](const RunConfig& c) { return num(c.trainer.tau); }},
      {"night_threshold", [](RunConfig& c, const std::string& v) { c.trainer.night_threshold = to_double(v); },
       [](const RunConfig& c) { return num(c.trainer.night_threshold); }},
      {"seed", [](RunConfig& c, const std::string& v) { c.trainer.seed = to_u64(v); },
       [](const RunConfig& c) { return std::to_string(c.trainer.seed); }},
      {"density_scale", [](RunConfig& c, const std::string& v) { c.trainer.density_scale = to_double(v); },
       [](const RunConfig& c) { return num(c.trainer.density_scale); }},
      {"val_count", [](RunConfig& c, const std::string& v) { c.trainer.val_count = static_cast<int>(to_int(v)); },
       [](const RunConfig& c) { return std::to_string(c.trainer.val_count); }},
      {"augment", [](RunConfig& c, const std::string& v) { c.trainer.augment = to_bool(v); },
       [](const RunConfig& c) { return std::string(c.trainer.augment ? "true" : "false"); }},
      {"lr_cosine", [](RunConfig& c, const std::string& v) { c.trainer.lr_cosine = to_bool(v); },
       [](const RunConfig& c) { return std::string(c.trainer.lr_cosine ? "true" : "false"); }},
  };
  return table;
}

}  // namespace

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const Key& k : keys()) {
    if (key == k.name) {
      k.set(cfg, value);
      return;
    }
  }
  throw std::invalid_argument("unknown config key '" + key + "'");
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(number) + ": expected 'key = value'");
    }
    try {
      set_config_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(number) + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string format_config(const RunConfig& cfg) {
  std::string out;
  for (const Key& k : keys()) out += std::string(k.name) + " = " + k.get(cfg) + "\n";
  return out;
}

}  // namespace bipath
