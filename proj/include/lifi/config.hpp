#pragma once

// INI configuration for every module. Each key is registered once with a reader and a
// writer, so parsing, unknown-key diagnostics and the canonical dump share one table.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <algorithm>
#include <charconv>
#include <functional>
#include <sstream>
#include <type_traits>
#include <string>
#include <vector>

#include "lifi/dataset.hpp"
#include "lifi/error.hpp"
#include "lifi/harness.hpp"
#include "lifi/io.hpp"
#include "lifi/lstm.hpp"
#include "lifi/zf_ccp.hpp"

namespace lifi {

struct Config {
  GeneratorSetup setup;
  int ap_rows = 4;
  int ap_cols = 4;
  TrainConfig train;
  ScenarioConfig scenario;
  std::vector<SolverKind> solvers = {SolverKind::kCcp, SolverKind::kMultiStart};
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

inline long long parse_integer(const std::string& s, const std::string& key) {
  const std::string t = trim(s);
  long long v = 0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw ConfigError(key + ": expected an integer, got '" + s + "'");
  return v;
}

inline std::uint64_t parse_unsigned(const std::string& s, const std::string& key) {
  const std::string t = trim(s);
  std::uint64_t v = 0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw ConfigError(key + ": expected a non-negative integer, got '" + s + "'");
  return v;
}

inline double parse_real(const std::string& s, const std::string& key) {
  try {
    return io::parse_double(trim(s), key);
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  }
}

inline bool parse_bool(const std::string& s, const std::string& key) {
  const std::string t = trim(s);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(key + ": expected true or false, got '" + s + "'");
}

inline std::vector<std::string> split_words(const std::string& s) {
  std::string spaced = s;
  std::replace(spaced.begin(), spaced.end(), ',', ' ');
  std::vector<std::string> out;
  std::istringstream in(spaced);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

inline std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] != b[j - 1])});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

struct KeySpec {
  std::string name;  // "section.key"
  std::function<void(Config&, const std::string&)> read;
  std::function<std::string(const Config&)> write;
};

template <class Get>
KeySpec real_key(std::string name, Get get) {
  return {name,
          [get, name](Config& c, const std::string& v) { get(c) = parse_real(v, name); },
          [get](const Config& c) { return io::format_double(get(c)); }};
}

template <class Get>
KeySpec int_key(std::string name, Get get) {
  return {name,
          [get, name](Config& c, const std::string& v) {
            using T = std::remove_reference_t<decltype(get(c))>;
            const long long n = parse_integer(v, name);
            if (std::is_unsigned_v<T> && n < 0) throw ConfigError(name + ": must be >= 0");
            get(c) = static_cast<T>(n);
          },
          [get](const Config& c) { return std::to_string(get(c)); }};
}

template <class Get>
KeySpec bool_key(std::string name, Get get) {
  return {name, [get, name](Config& c, const std::string& v) { get(c) = parse_bool(v, name); },
          [get](const Config& c) { return std::string(get(c) ? "true" : "false"); }};
}

inline void add_link_keys(std::vector<KeySpec>& keys, const std::string& sec,
                          LinkParams RoomLayout::*link) {
  auto lp = [link](auto& c) -> auto& { return c.setup.room.*link; };
  keys.push_back(real_key(sec + ".half_power_angle", [lp](auto& c) -> auto& { return lp(c).half_power_angle_deg; }));
  keys.push_back(real_key(sec + ".pd_area", [lp](auto& c) -> auto& { return lp(c).pd_area; }));
  keys.push_back(real_key(sec + ".fov", [lp](auto& c) -> auto& { return lp(c).fov_deg; }));
  keys.push_back(real_key(sec + ".responsivity", [lp](auto& c) -> auto& { return lp(c).responsivity; }));
  keys.push_back(real_key(sec + ".filter_gain", [lp](auto& c) -> auto& { return lp(c).filter_gain; }));
  keys.push_back(real_key(sec + ".concentrator_gain", [lp](auto& c) -> auto& { return lp(c).concentrator_gain; }));
}

inline const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = [] {
    std::vector<KeySpec> k;
    // room
    k.push_back(real_key("room.length", [](auto& c) -> auto& { return c.setup.room.length; }));
    k.push_back(real_key("room.width", [](auto& c) -> auto& { return c.setup.room.width; }));
    k.push_back(real_key("room.height", [](auto& c) -> auto& { return c.setup.room.height; }));
    k.push_back(int_key("room.ap_rows", [](auto& c) -> auto& { return c.ap_rows; }));
    k.push_back(int_key("room.ap_cols", [](auto& c) -> auto& { return c.ap_cols; }));
    k.push_back(real_key("room.noise_psd", [](auto& c) -> auto& { return c.setup.room.noise_psd; }));
    k.push_back(real_key("room.bandwidth", [](auto& c) -> auto& { return c.setup.room.bandwidth; }));
    k.push_back(real_key("room.dc_bias", [](auto& c) -> auto& { return c.setup.room.dc_bias; }));
    k.push_back(real_key("room.wall_reflectance", [](auto& c) -> auto& { return c.setup.room.wall_reflectance; }));
    k.push_back(bool_key("room.nlos_enabled", [](auto& c) -> auto& { return c.setup.room.nlos_enabled; }));
    k.push_back(real_key("room.nlos_patch_size", [](auto& c) -> auto& { return c.setup.room.nlos_patch_size; }));
    add_link_keys(k, "downlink", &RoomLayout::downlink);
    add_link_keys(k, "uplink", &RoomLayout::uplink);
    // device
    k.push_back(real_key("device.offset_x", [](auto& c) -> auto& { return c.setup.device.offset.x(); }));
    k.push_back(real_key("device.offset_y", [](auto& c) -> auto& { return c.setup.device.offset.y(); }));
    k.push_back(real_key("device.offset_z", [](auto& c) -> auto& { return c.setup.device.offset.z(); }));
    // mobility
    auto mob = [](auto member) {
      return [member](auto& c) -> auto& { return c.setup.mobility.*member; };
    };
    k.push_back(real_key("mobility.speed", mob(&MobilityConfig::speed)));
    k.push_back(real_key("mobility.slot_duration", mob(&MobilityConfig::slot_duration)));
    k.push_back(real_key("mobility.ue_height", mob(&MobilityConfig::ue_height)));
    k.push_back(real_key("mobility.wall_margin", mob(&MobilityConfig::wall_margin)));
    k.push_back(real_key("mobility.yaw_jitter_std", mob(&MobilityConfig::yaw_jitter_std)));
    k.push_back(real_key("mobility.pitch_mean", mob(&MobilityConfig::pitch_mean)));
    k.push_back(real_key("mobility.pitch_std", mob(&MobilityConfig::pitch_std)));
    k.push_back(real_key("mobility.roll_mean", mob(&MobilityConfig::roll_mean)));
    k.push_back(real_key("mobility.roll_std", mob(&MobilityConfig::roll_std)));
    k.push_back(real_key("mobility.pause_probability", mob(&MobilityConfig::pause_probability)));
    // dataset
    k.push_back(int_key("dataset.prior_slots", [](auto& c) -> auto& { return c.setup.dataset.prior_slots; }));
    k.push_back(int_key("dataset.posterior_slots", [](auto& c) -> auto& { return c.setup.dataset.posterior_slots; }));
    k.push_back(int_key("dataset.size", [](auto& c) -> auto& { return c.setup.dataset.size; }));
    k.push_back(real_key("dataset.snr_floor_db", [](auto& c) -> auto& { return c.setup.dataset.snr_floor_db; }));
    k.push_back(real_key("dataset.train_fraction", [](auto& c) -> auto& { return c.setup.dataset.train_fraction; }));
    k.push_back(int_key("dataset.snr_users", [](auto& c) -> auto& { return c.setup.dataset.snr_users; }));
    k.push_back({"dataset.feature_scale",
                 [](Config& c, const std::string& v) { c.setup.dataset.feature_scale = parse_feature_scale(trim(v)); },
                 [](const Config& c) { return std::string(to_string(c.setup.dataset.feature_scale)); }});
    k.push_back(real_key("dataset.feature_noise_std", [](auto& c) -> auto& { return c.setup.dataset.feature_noise_std; }));
    // train
    k.push_back(int_key("train.hidden", [](auto& c) -> auto& { return c.train.hidden; }));
    k.push_back(real_key("train.learning_rate", [](auto& c) -> auto& { return c.train.learning_rate; }));
    k.push_back(int_key("train.batch_size", [](auto& c) -> auto& { return c.train.batch_size; }));
    k.push_back(int_key("train.epochs", [](auto& c) -> auto& { return c.train.epochs; }));
    k.push_back(real_key("train.beta1", [](auto& c) -> auto& { return c.train.beta1; }));
    k.push_back(real_key("train.beta2", [](auto& c) -> auto& { return c.train.beta2; }));
    k.push_back(real_key("train.epsilon", [](auto& c) -> auto& { return c.train.epsilon; }));
    k.push_back(real_key("train.validation_fraction", [](auto& c) -> auto& { return c.train.validation_fraction; }));
    k.push_back(real_key("train.clip_norm", [](auto& c) -> auto& { return c.train.clip_norm; }));
    // solver
    k.push_back(int_key("solver.max_iterations", [](auto& c) -> auto& { return c.scenario.solver.max_iterations; }));
    k.push_back(real_key("solver.tolerance", [](auto& c) -> auto& { return c.scenario.solver.tolerance; }));
    k.push_back(int_key("solver.starts", [](auto& c) -> auto& { return c.scenario.solver.starts; }));
    k.push_back(real_key("solver.barrier_gap", [](auto& c) -> auto& { return c.scenario.solver.barrier_gap; }));
    k.push_back(int_key("solver.max_newton_steps", [](auto& c) -> auto& { return c.scenario.solver.max_newton_steps; }));
    // scenario
    k.push_back(int_key("scenario.users", [](auto& c) -> auto& { return c.scenario.users; }));
    k.push_back(int_key("scenario.horizon", [](auto& c) -> auto& { return c.scenario.horizon; }));
    k.push_back(int_key("scenario.slots", [](auto& c) -> auto& { return c.scenario.slots; }));
    k.push_back(real_key("scenario.rate_threshold", [](auto& c) -> auto& { return c.scenario.rate_threshold; }));
    k.push_back(real_key("scenario.headroom", [](auto& c) -> auto& { return c.scenario.headroom; }));
    k.push_back(bool_key("scenario.change_gate", [](auto& c) -> auto& { return c.scenario.change_gate; }));
    k.push_back({"scenario.user_sweep",
                 [](Config& c, const std::string& v) {
                   c.scenario.user_sweep.clear();
                   for (const auto& w : split_words(v))
                     c.scenario.user_sweep.push_back(static_cast<int>(parse_integer(w, "scenario.user_sweep")));
                 },
                 [](const Config& c) {
                   std::string s;
                   for (int u : c.scenario.user_sweep) s += (s.empty() ? "" : " ") + std::to_string(u);
                   return s;
                 }});
    k.push_back({"scenario.threshold_sweep",
                 [](Config& c, const std::string& v) {
                   c.scenario.threshold_sweep.clear();
                   for (const auto& w : split_words(v))
                     c.scenario.threshold_sweep.push_back(parse_real(w, "scenario.threshold_sweep"));
                 },
                 [](const Config& c) { return io::join(c.scenario.threshold_sweep); }});
    k.push_back({"scenario.solvers",
                 [](Config& c, const std::string& v) {
                   c.solvers.clear();
                   for (const auto& w : split_words(v)) c.solvers.push_back(parse_solver(w));
                 },
                 [](const Config& c) {
                   std::string s;
                   for (auto k : c.solvers) s += (s.empty() ? "" : " ") + std::string(to_string(k));
                   return s;
                 }});
    // run
    k.push_back({"run.seed",
                 [](Config& c, const std::string& v) { c.seed = parse_unsigned(v, "run.seed"); },
                 [](const Config& c) { return std::to_string(c.seed); }});
    k.push_back(int_key("run.threads", [](auto& c) -> auto& { return c.threads; }));
    return k;
  }();
  return table;
}

inline std::string nearest_key(const std::string& key) {
  std::string best;
  std::size_t best_d = std::string::npos;
  for (const auto& spec : key_table()) {
    const std::size_t d = edit_distance(key, spec.name);
    if (d < best_d) best_d = d, best = spec.name;
  }
  return best;
}

}  // namespace detail

/// Applies derived settings (AP grid) and checks every module's invariants.
inline void finalize(Config& c) {
  if (c.ap_rows < 1 || c.ap_cols < 1) throw ConfigError("room.ap_rows and room.ap_cols must be >= 1");
  place_ap_grid(c.setup.room, c.ap_rows, c.ap_cols);
  validate(c.setup.room);
  validate(c.setup.mobility, c.setup.room);
  validate(c.setup.dataset);
  validate(c.train);
  if (c.solvers.empty()) throw ConfigError("scenario.solvers must name at least one solver");
  if (c.scenario.solver.starts < 1) throw ConfigError("solver.starts must be >= 1");
  if (c.scenario.solver.max_iterations < 1) throw ConfigError("solver.max_iterations must be >= 1");
  if (c.threads < 1) throw ConfigError("run.threads must be >= 1");
  for (int k : c.scenario.user_sweep)
    if (k < 1 || k > c.ap_rows * c.ap_cols)
      throw ConfigError("scenario.user_sweep entries must lie in [1, number of APs]");
  c.scenario.seed = c.seed;
  c.train.seed = c.seed;
}

/// Sets one "section.key" value; unknown keys name the closest valid key.
inline void set_key(Config& c, const std::string& key, const std::string& value) {
  for (const auto& spec : detail::key_table())
    if (spec.name == key) {
      spec.read(c, value);
      return;
    }
  throw ConfigError("unknown config key '" + key + "' (did you mean '" + detail::nearest_key(key) +
                    "'?)");
}

inline Config parse_config(std::istream& in, const std::string& source = "<config>") {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(source + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  Config c;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError(source + ": key '" + section + "' must live inside a [section]");
    for (const auto& [key, value] : body) {
      try {
        set_key(c, section + "." + key, value.data());
      } catch (const ConfigError& e) {
        throw ConfigError(source + ": " + e.what());
      }
    }
  }
  finalize(c);
  return c;
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, path);
}

inline Config default_config() {
  Config c;
  finalize(c);
  return c;
}

/// Canonical "[section] key = value" listing of every setting.
inline std::string dump_config(const Config& c) {
  std::ostringstream out;
  std::string current;
  for (const auto& spec : detail::key_table()) {
    const auto dot = spec.name.find('.');
    const std::string sec = spec.name.substr(0, dot);
    if (sec != current) {
      out << (current.empty() ? "" : "\n") << '[' << sec << "]\n";
      current = sec;
    }
    out << spec.name.substr(dot + 1) << " = " << spec.write(c) << '\n';
  }
  return out.str();
}

inline std::string config_fingerprint(const Config& c) { return io::hex64(io::fnv1a(dump_config(c))); }

}  // namespace lifi
