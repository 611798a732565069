// Copyright 2026 The qrsnap Authors
// SPDX-License-Identifier: Apache-2.0

#include "qrsnap/config.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <set>
#include <sstream>

#include "qrsnap/error.hpp"

namespace qrsnap {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = s.find(',', start);
    const auto item = trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <class T>
T number(std::string_view key, std::string_view text) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw ConfigError("config key '" + std::string(key) + "': cannot parse '" + std::string(text) + "'");
  }
  return value;
}

bool boolean(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("config key '" + std::string(key) + "': expected true or false, got '" + std::string(text) + "'");
}

std::vector<double> doubles(std::string_view key, std::string_view text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(number<double>(key, item));
  return out;
}

std::vector<int> ints(std::string_view key, std::string_view text) {
  std::vector<int> out;
  for (const auto& item : split_list(text)) out.push_back(number<int>(key, item));
  return out;
}

struct Parsed {
  RunConfig config;
  std::optional<std::string> architecture;
};

using Setter = std::function<void(Parsed&, std::string_view key, std::string_view value)>;

const std::vector<std::pair<std::string, Setter>>& setters() {
  static const std::vector<std::pair<std::string, Setter>> table = {
      {"seed", [](Parsed& p, auto k, auto v) { apply_seed(p.config, number<std::uint64_t>(k, v)); }},
      {"data", [](Parsed& p, auto, auto v) { p.config.data = std::string(v); }},
      {"test_fraction", [](Parsed& p, auto k, auto v) { p.config.test_fraction = number<double>(k, v); }},
      {"synth_classes",
       [](Parsed& p, auto, auto v) {
         p.config.synth.classes.clear();
         for (const auto& s : split_list(v)) p.config.synth.classes.push_back(parse_synth_shape(s));
       }},
      {"synth_per_class", [](Parsed& p, auto k, auto v) { p.config.synth.per_class = number<std::size_t>(k, v); }},
      {"synth_height", [](Parsed& p, auto k, auto v) { p.config.synth.height = number<std::size_t>(k, v); }},
      {"synth_width", [](Parsed& p, auto k, auto v) { p.config.synth.width = number<std::size_t>(k, v); }},
      {"synth_channels", [](Parsed& p, auto k, auto v) { p.config.synth.channels = number<std::size_t>(k, v); }},
      {"synth_position_jitter",
       [](Parsed& p, auto k, auto v) { p.config.synth.position_jitter = number<double>(k, v); }},
      {"synth_scale_jitter", [](Parsed& p, auto k, auto v) { p.config.synth.scale_jitter = number<double>(k, v); }},
      {"synth_rotation_jitter",
       [](Parsed& p, auto k, auto v) { p.config.synth.rotation_jitter = number<double>(k, v); }},
      {"synth_background_noise",
       [](Parsed& p, auto k, auto v) { p.config.synth.background_noise = number<double>(k, v); }},
      {"architecture", [](Parsed& p, auto, auto v) { p.architecture = std::string(v); }},
      {"batch_size", [](Parsed& p, auto k, auto v) { p.config.train.batch_size = number<std::size_t>(k, v); }},
      {"momentum", [](Parsed& p, auto k, auto v) { p.config.train.momentum = number<double>(k, v); }},
      {"alpha0", [](Parsed& p, auto k, auto v) { p.config.alpha0 = number<double>(k, v); }},
      {"epochs_per_cycle", [](Parsed& p, auto k, auto v) { p.config.epochs_per_cycle = number<int>(k, v); }},
      {"cycles", [](Parsed& p, auto, auto v) { p.config.cycle_names = split_list(v); }},
      {"noise_levels", [](Parsed& p, auto k, auto v) { p.config.noise_family.levels = doubles(k, v); }},
      {"blur_levels", [](Parsed& p, auto k, auto v) { p.config.blur_family.levels = doubles(k, v); }},
      {"mix_lambda", [](Parsed& p, auto, auto v) { p.config.train.mix_policy.lambda_law = parse_lambda_law(v); }},
      {"mix_pairing", [](Parsed& p, auto, auto v) { p.config.train.mix_policy.pairing = parse_pairing(v); }},
      {"mix_scope", [](Parsed& p, auto, auto v) { p.config.train.mix_policy.draw_scope = parse_draw_scope(v); }},
      {"sweep_noise_levels", [](Parsed& p, auto k, auto v) { p.config.grid.noise_levels = doubles(k, v); }},
      {"sweep_blur_levels", [](Parsed& p, auto k, auto v) { p.config.grid.blur_levels = ints(k, v); }},
      {"sweep_include_clean", [](Parsed& p, auto k, auto v) { p.config.grid.include_clean = boolean(k, v); }},
      {"top_k", [](Parsed& p, auto k, auto v) { p.config.top_k = number<std::size_t>(k, v); }},
  };
  return table;
}

std::string join(const std::vector<double>& v) {
  std::ostringstream out;
  for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << v[i];
  return out.str();
}

}  // namespace

CyclePlan RunConfig::plan(bool baseline) const {
  std::vector<std::optional<LevelFamily>> families;
  for (const std::string& name : cycle_names) {
    const Specialty s = parse_specialty(name);
    if (baseline || s == Specialty::kPristine) {
      families.emplace_back(std::nullopt);
    } else {
      families.emplace_back(s == Specialty::kGaussianNoise ? noise_family : blur_family);
    }
  }
  return make_cycle_plan(families, epochs_per_cycle, alpha0);
}

std::map<std::string, std::string> default_config_values() {
  const RunConfig d;
  std::ostringstream classes;
  for (std::size_t i = 0; i < d.synth.classes.size(); ++i) {
    classes << (i ? "," : "") << to_string(d.synth.classes[i]);
  }
  std::vector<double> sweep_blur(d.grid.blur_levels.begin(), d.grid.blur_levels.end());
  auto num = [](double v) {
    std::ostringstream o;
    o.precision(17);
    o << v;
    return o.str();
  };
  return {
      {"seed", std::to_string(d.seed)},
      {"data", ""},
      {"test_fraction", num(d.test_fraction)},
      {"synth_classes", classes.str()},
      {"synth_per_class", std::to_string(d.synth.per_class)},
      {"synth_height", std::to_string(d.synth.height)},
      {"synth_width", std::to_string(d.synth.width)},
      {"synth_channels", std::to_string(d.synth.channels)},
      {"synth_position_jitter", num(d.synth.position_jitter)},
      {"synth_scale_jitter", num(d.synth.scale_jitter)},
      {"synth_rotation_jitter", num(d.synth.rotation_jitter)},
      {"synth_background_noise", num(d.synth.background_noise)},
      {"architecture", d.train.architecture.to_string()},
      {"batch_size", std::to_string(d.train.batch_size)},
      {"momentum", num(d.train.momentum)},
      {"alpha0", num(d.alpha0)},
      {"epochs_per_cycle", std::to_string(d.epochs_per_cycle)},
      {"cycles", "noise,blur"},
      {"noise_levels", join(d.noise_family.levels)},
      {"blur_levels", join(d.blur_family.levels)},
      {"mix_lambda", to_string(d.train.mix_policy.lambda_law)},
      {"mix_pairing", std::string(to_string(d.train.mix_policy.pairing))},
      {"mix_scope", std::string(to_string(d.train.mix_policy.draw_scope))},
      {"sweep_noise_levels", join(d.grid.noise_levels)},
      {"sweep_blur_levels", join(sweep_blur)},
      {"sweep_include_clean", d.grid.include_clean ? "true" : "false"},
      {"top_k", std::to_string(d.top_k)},
  };
}

RunConfig parse_run_config(std::string_view text) {
  Parsed parsed;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    const auto& table = setters();
    const auto it = std::find_if(table.begin(), table.end(), [&](const auto& e) { return e.first == key; });
    if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError("duplicate config key '" + key + "'");
    try {
      it->second(parsed, key, value);
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    }
  }

  RunConfig& c = parsed.config;
  auto check = [](const char* key, auto&& fn) {
    try {
      fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
  };
  check("synth_*", [&] { c.synth.validate(); });
  check("architecture", [&] {
    c.train.architecture = parsed.architecture
                               ? Architecture::parse(*parsed.architecture)
                               : Architecture::default_cnn(c.synth.channels, c.synth.height, c.synth.width,
                                                           c.synth.classes.size());
  });
  if (!(c.test_fraction > 0.0 && c.test_fraction < 1.0)) {
    throw ConfigError("config key 'test_fraction': must lie in (0, 1)");
  }
  check("noise_levels", [&] { c.noise_family.validate(); });
  check("blur_levels", [&] { c.blur_family.validate(); });
  check("cycles", [&] {
    if (c.cycle_names.empty()) throw InvalidArgument("at least one cycle is required");
    c.train.plan = c.plan(false);
  });
  check("batch_size/momentum/mix_*", [&] { c.train.validate(); });
  check("sweep_*", [&] { c.grid.validate(); });
  if (c.top_k < 1) throw ConfigError("config key 'top_k': must be at least 1");
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_file(path);
  } catch (const Error& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  RunConfig config = parse_run_config(std::string(bytes.begin(), bytes.end()));
  if (!config.data.empty() && config.data.is_relative()) config.data = path.parent_path() / config.data;
  return config;
}

void apply_seed(RunConfig& config, std::uint64_t seed) {
  config.seed = seed;
  config.synth.seed = seed;
  config.train.seed = seed;
}

}  // namespace qrsnap
