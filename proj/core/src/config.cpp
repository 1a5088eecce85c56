#include "lipmab/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"
#include "lipmab/errors.hpp"

namespace lipmab {

using nlohmann::json;

std::string_view to_string(Mode m) noexcept {
  switch (m) {
    case Mode::SingleShot: return "single-shot";
    case Mode::SingleShotAuto: return "single-shot-auto";
    case Mode::Epochic: return "epochic";
    case Mode::EpochicRestart: return "epochic-restart";
    case Mode::StratifiedEpochic: return "stratified-epochic";
  }
  return "single-shot";
}

std::string_view to_string(Sampling s) noexcept {
  return s == Sampling::Stratified ? "stratified" : "uniform";
}

Mode parse_mode(std::string_view s) {
  for (Mode m : {Mode::SingleShot, Mode::SingleShotAuto, Mode::Epochic, Mode::EpochicRestart,
                 Mode::StratifiedEpochic}) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError("unknown mode '" + std::string(s) + "'");
}

Sampling parse_sampling(std::string_view s) {
  if (s == "uniform") return Sampling::Uniform;
  if (s == "stratified") return Sampling::Stratified;
  throw ConfigError("unknown sampling '" + std::string(s) + "'");
}

Sampling ProtocolConfig::effective_sampling() const noexcept {
  return mode == Mode::StratifiedEpochic ? Sampling::Stratified : sampling;
}

bool ProtocolConfig::epochic() const noexcept {
  return mode == Mode::Epochic || mode == Mode::EpochicRestart || mode == Mode::StratifiedEpochic;
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

template <class T>
T get(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

Point parse_point(const json& j) {
  if (!j.is_array() || j.empty() || j.size() > static_cast<std::size_t>(kMaxDim)) {
    throw ConfigError("packing center must be an array of 1.." + std::to_string(kMaxDim) + " numbers");
  }
  Point p(static_cast<int>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number()) throw ConfigError("packing center coordinates must be numbers");
    p[static_cast<int>(k)] = j[k].get<double>();
  }
  return p;
}

InstanceSpec parse_instance(const json& j, bool& seed_fixed) {
  if (!j.is_object()) throw ConfigError("instance must be an object");
  InstanceSpec s;
  s.kind = get<std::string>(j, "kind", "instance");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (k == "kind") continue;
    if (k == "seed") {
      if (!it->is_number_unsigned()) throw ConfigError("instance.seed must be a non-negative integer");
      s.seed = it->get<std::uint64_t>();
      seed_fixed = true;
    } else if (k == "cells") {
      s.cells = get<std::vector<std::size_t>>(j, "cells", "instance");
    } else if (it->is_number()) {
      s.params[k] = it->get<double>();
    } else {
      throw ConfigError("instance." + k + " must be a number");
    }
  }
  return s;
}

}  // namespace

ProtocolConfig parse_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j,
                 {"players", "horizon", "d", "h", "packing", "instance", "delta_sys", "mode", "epsilon",
                  "epsilon0", "dither", "sampling", "seed", "alpha", "ucb_constant", "ledger_stride"},
                 "config");
  const std::string w = "config";
  ProtocolConfig c;
  c.n_players = get<std::size_t>(j, "players", w);
  c.horizon = get<std::uint64_t>(j, "horizon", w);
  if (j.contains("d")) c.d = get<int>(j, "d", w);
  if (j.contains("h")) c.h = get<double>(j, "h", w);
  if (j.contains("delta_sys")) c.delta_sys = get<double>(j, "delta_sys", w);
  if (j.contains("mode")) c.mode = parse_mode(get<std::string>(j, "mode", w));
  if (j.contains("epsilon")) c.epsilon = get<double>(j, "epsilon", w);
  if (j.contains("epsilon0")) c.epsilon0 = get<double>(j, "epsilon0", w);
  if (j.contains("dither")) c.dither = get<bool>(j, "dither", w);
  if (j.contains("sampling")) c.sampling = parse_sampling(get<std::string>(j, "sampling", w));
  if (j.contains("seed")) c.seed = get<std::uint64_t>(j, "seed", w);
  if (j.contains("alpha")) c.alpha = get<double>(j, "alpha", w);
  if (j.contains("ucb_constant")) c.ucb_constant = get<double>(j, "ucb_constant", w);
  if (j.contains("ledger_stride")) c.ledger_stride = get<std::uint64_t>(j, "ledger_stride", w);
  c.instance = parse_instance(j.at("instance"), c.instance_seed_fixed);

  if (j.contains("packing")) {
    const json& p = j["packing"];
    if (!p.is_object()) throw ConfigError("packing must be an object");
    reject_unknown(p, {"centers", "r", "rho", "sigma"}, "packing");
    PackingSpec ps;
    ps.r = get<double>(p, "r", "packing");
    ps.rho = get<double>(p, "rho", "packing");
    ps.sigma = get<double>(p, "sigma", "packing");
    const json& cs = p.at("centers");
    if (!cs.is_array()) throw ConfigError("packing.centers must be an array");
    for (const json& x : cs) ps.centers.push_back(parse_point(x));
    if (!ps.centers.empty()) c.d = ps.centers.front().dim();
    c.packing = std::move(ps);
  }

  if (c.n_players < 1) throw ConfigError("players must be at least 1");
  if (c.horizon < 1) throw ConfigError("horizon must be positive");
  if (c.d < 1 || c.d > kMaxDim) throw ConfigError("d must lie in 1.." + std::to_string(kMaxDim));
  if (!(c.h > 0.0 && c.h <= 1.0)) throw ConfigError("h must lie in (0, 1]");
  if (!(c.delta_sys > 0.0 && c.delta_sys < 0.25)) throw ConfigError("delta_sys must lie in (0, 1/4)");
  if (!(c.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (!(c.epsilon0 > 0.0 && c.epsilon0 <= 1.0)) throw ConfigError("epsilon0 must lie in (0, 1]");
  if (!(c.alpha > 0.0 && c.alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1]");
  if (!(c.ucb_constant > 0.0)) throw ConfigError("ucb_constant must be positive");
  if (c.ledger_stride < 1) throw ConfigError("ledger_stride must be at least 1");
  return c;
}

ProtocolConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const ProtocolConfig& c, int indent) {
  json j;
  j["players"] = c.n_players;
  j["horizon"] = c.horizon;
  j["d"] = c.d;
  j["h"] = c.h;
  j["delta_sys"] = c.delta_sys;
  j["mode"] = std::string(to_string(c.mode));
  j["epsilon"] = c.epsilon;
  j["epsilon0"] = c.epsilon0;
  j["dither"] = c.dither;
  j["sampling"] = std::string(to_string(c.sampling));
  j["seed"] = c.seed;
  j["alpha"] = c.alpha;
  j["ucb_constant"] = c.ucb_constant;
  j["ledger_stride"] = c.ledger_stride;
  json inst = json::object();
  inst["kind"] = c.instance.kind;
  for (const auto& [k, v] : c.instance.params) inst[k] = v;
  if (!c.instance.cells.empty()) inst["cells"] = c.instance.cells;
  if (c.instance_seed_fixed) inst["seed"] = c.instance.seed;
  j["instance"] = inst;
  if (c.packing) {
    json p;
    p["r"] = c.packing->r;
    p["rho"] = c.packing->rho;
    p["sigma"] = c.packing->sigma;
    json cs = json::array();
    for (const Point& x : c.packing->centers) cs.push_back(std::vector<double>(x.begin(), x.end()));
    p["centers"] = cs;
    j["packing"] = p;
  }
  return j.dump(indent);
}

}  // namespace lipmab
