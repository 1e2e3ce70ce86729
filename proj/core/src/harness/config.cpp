#include "srtg/harness/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace srtg::harness {

namespace {

namespace pt = boost::property_tree;

const std::vector<std::pair<std::string, std::string>>& defaults() {
  static const std::vector<std::pair<std::string, std::string>> d{
      {"data.family", "reversed"},
      {"data.num_classes", "2"},
      {"data.clip", "1x8x16x16"},
      {"data.noise", "0.05"},
      {"data.train_samples", "400"},
      {"data.val_samples", "100"},
      {"data.seed", "0"},
      {"network.in_channels", "1"},
      {"network.stem_channels", "8"},
      {"network.stem_kernel", "3x3x3"},
      {"network.stem_stride", "1x2x2"},
      {"network.stem_pool", "none"},
      {"network.pool_kernel", "1x3x3"},
      {"network.pool_stride", "1x2x2"},
      {"network.pool_padding", "0x1x1"},
      {"network.stage_blocks", "1,1"},
      {"network.stage_channels", "8,16"},
      {"network.stage_strides", "1x1x1,2x2x2"},
      {"network.depth_kind", "simple"},
      {"network.conv_kind", "full_3d"},
      {"network.placement", "final"},
      {"network.gate_active", "true"},
      {"network.fusion_mode", "multiplicative"},
      {"network.expansion", "4"},
      {"network.lstm_layers", "2"},
      {"network.num_classes", "2"},
      {"train.lr", "0.1"},
      {"train.momentum", "0.9"},
      {"train.weight_decay", "1e-6"},
      {"train.lr_gamma", "0.1"},
      {"train.milestones", "0.5,0.75"},
      {"train.batch_size", "16"},
      {"train.epochs", "30"},
      {"train.frames", "16"},
      {"train.seed", "0"},
  };
  return d;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& key, const std::string& v) {
  std::vector<std::string> out;
  std::string_view rest = v;
  while (true) {
    const auto comma = rest.find(',');
    out.push_back(trim(rest.substr(0, comma)));
    if (out.back().empty()) throw ConfigError(key + ": empty list element in '" + v + "'");
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

// Rethrows parse errors from the spec layer as ConfigError naming the key.
template <typename F>
auto parse_as(const std::string& key, const std::string& v, F&& f) {
  try {
    return f(v);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

}  // namespace

Config::Config() : entries_(defaults()) {}

Config Config::from_string(const std::string& text) {
  pt::ptree tree;
  std::istringstream is(text);
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  Config c;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("key '" + section + "' outside any section");
    for (const auto& [key, value] : body) {
      if (!value.empty()) throw ConfigError("nested key under " + section + "." + key);
      c.set(section + "." + key, value.data());
    }
  }
  return c;
}

Config Config::from_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return from_string(ss.str());
}

void Config::set(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("override '" + std::string(assignment) + "' is not section.key=value");
  }
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void Config::set(const std::string& key, std::string value) {
  auto it = std::find_if(entries_.begin(), entries_.end(),
                         [&](const auto& e) { return e.first == key; });
  if (it == entries_.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second = trim(value);
}

bool Config::has(const std::string& key) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const auto& e) { return e.first == key; });
}

const std::string& Config::get(const std::string& key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

std::string Config::to_ini() const {
  std::string out;
  std::string section;
  for (const auto& [key, value] : entries_) {
    const auto dot = key.find('.');
    const std::string s = key.substr(0, dot);
    if (s != section) {
      if (!section.empty()) out += '\n';
      out += "[" + s + "]\n";
      section = s;
    }
    out += key.substr(dot + 1) + " = " + value + "\n";
  }
  return out;
}

SyntheticSpec Config::data() const {
  SyntheticSpec s;
  const auto u = [&](const char* k) { return to_uint(k, get(k)); };
  s.family = parse_as("data.family", get("data.family"),
                      [](const std::string& v) { return motion_family_from_string(v); });
  s.num_classes = u("data.num_classes");
  s.clip = parse_as("data.clip", get("data.clip"),
                    [](const std::string& v) { return backbone::parse_clip_shape(v); });
  s.noise = to_double("data.noise", get("data.noise"));
  s.train_samples = u("data.train_samples");
  s.val_samples = u("data.val_samples");
  s.seed = u("data.seed");
  parse_as("data", "", [&](const std::string&) {
    s.validate();
    return 0;
  });
  return s;
}

backbone::NetworkSpec Config::network() const {
  using namespace backbone;
  const auto u = [&](const char* k) { return to_uint(k, get(k)); };
  const auto extent = [&](const std::string& k, const std::string& v) {
    return parse_as(k, v, [](const std::string& x) { return parse_extent(x); });
  };
  NetworkSpec n;
  n.in_channels = u("network.in_channels");
  n.stem.channels = u("network.stem_channels");
  n.stem.kernel = extent("network.stem_kernel", get("network.stem_kernel"));
  n.stem.stride = extent("network.stem_stride", get("network.stem_stride"));
  const std::string& pool = get("network.stem_pool");
  if (pool == "max") {
    n.stem.pool = PoolSpec{extent("network.pool_kernel", get("network.pool_kernel")),
                           extent("network.pool_stride", get("network.pool_stride")),
                           extent("network.pool_padding", get("network.pool_padding"))};
  } else if (pool != "none") {
    throw ConfigError("network.stem_pool: expected none or max, got '" + pool + "'");
  }
  const auto blocks = split_list("network.stage_blocks", get("network.stage_blocks"));
  const auto channels = split_list("network.stage_channels", get("network.stage_channels"));
  const auto strides = split_list("network.stage_strides", get("network.stage_strides"));
  if (blocks.size() != channels.size() || blocks.size() != strides.size()) {
    throw ConfigError("network.stage_blocks, stage_channels and stage_strides need one entry per "
                      "stage (got " + std::to_string(blocks.size()) + ", " +
                      std::to_string(channels.size()) + ", " + std::to_string(strides.size()) +
                      ")");
  }
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    n.stages.push_back({to_uint("network.stage_blocks", blocks[i]),
                        to_uint("network.stage_channels", channels[i]),
                        extent("network.stage_strides", strides[i])});
  }
  n.depth = parse_as("network.depth_kind", get("network.depth_kind"),
                     [](const std::string& v) { return depth_kind_from_string(v); });
  n.conv = parse_as("network.conv_kind", get("network.conv_kind"),
                    [](const std::string& v) { return conv_kind_from_string(v); });
  n.placement = parse_as("network.placement", get("network.placement"),
                         [](const std::string& v) { return placement_from_string(v); });
  n.gate_active = to_bool("network.gate_active", get("network.gate_active"));
  n.fusion = parse_as("network.fusion_mode", get("network.fusion_mode"),
                      [](const std::string& v) { return temporal::fusion_mode_from_string(v); });
  n.expansion = u("network.expansion");
  n.lstm_layers = u("network.lstm_layers");
  n.num_classes = u("network.num_classes");
  parse_as("network", "", [&](const std::string&) {
    n.validate();
    return 0;
  });
  return n;
}

TrainConfig Config::train() const {
  TrainConfig t;
  const auto d = [&](const char* k) { return to_double(k, get(k)); };
  t.lr0 = d("train.lr");
  t.momentum = d("train.momentum");
  t.weight_decay = d("train.weight_decay");
  t.lr_gamma = d("train.lr_gamma");
  t.milestones.clear();
  const std::string& ms = get("train.milestones");
  if (ms != "none") {
    for (const auto& m : split_list("train.milestones", ms)) {
      t.milestones.push_back(to_double("train.milestones", m));
    }
  }
  t.batch_size = to_uint("train.batch_size", get("train.batch_size"));
  t.epochs = to_uint("train.epochs", get("train.epochs"));
  t.frames = to_uint("train.frames", get("train.frames"));
  t.seed = to_uint("train.seed", get("train.seed"));
  parse_as("train", "", [&](const std::string&) {
    t.validate();
    return 0;
  });
  return t;
}

void Config::validate() const {
  const auto d = data();
  const auto n = network();
  train();
  if (d.num_classes != n.num_classes) {
    throw ConfigError("data.num_classes (" + std::to_string(d.num_classes) +
                      ") differs from network.num_classes (" + std::to_string(n.num_classes) +
                      ")");
  }
  if (d.clip.channels != n.in_channels) {
    throw ConfigError("data.clip has " + std::to_string(d.clip.channels) +
                      " channels but network.in_channels is " + std::to_string(n.in_channels));
  }
}

}  // namespace srtg::harness
