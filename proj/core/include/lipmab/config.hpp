#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lipmab/geometry.hpp"
#include "lipmab/instance.hpp"

namespace lipmab {

enum class Mode { SingleShot, SingleShotAuto, Epochic, EpochicRestart, StratifiedEpochic };
enum class Sampling { Uniform, Stratified };

std::string_view to_string(Mode m) noexcept;
std::string_view to_string(Sampling s) noexcept;
Mode parse_mode(std::string_view s);
Sampling parse_sampling(std::string_view s);

struct PackingSpec {
  std::vector<Point> centers;
  double r = 0.0;
  double rho = 0.0;
  double sigma = 0.0;
};

struct ProtocolConfig {
  std::size_t n_players = 1;
  std::uint64_t horizon = 0;
  int d = 1;
  double h = 0.5;
  std::optional<PackingSpec> packing;
  InstanceSpec instance;
  // The instance seed is derived from the master seed unless given.
  bool instance_seed_fixed = false;
  double delta_sys = 0.1;
  Mode mode = Mode::SingleShot;
  double epsilon = 0.1;   // single-shot target
  double epsilon0 = 1.0;  // first-epoch target in epochic modes
  bool dither = true;
  Sampling sampling = Sampling::Uniform;
  std::uint64_t seed = 0;
  double alpha = 1.0;
  double ucb_constant = 2.0;
  std::uint64_t ledger_stride = 1;

  // Effective sampling: stratified-epochic forces the stratified schedule.
  Sampling effective_sampling() const noexcept;
  bool epochic() const noexcept;
};

// Strict JSON reader: unknown keys and wrong types raise ConfigError.
ProtocolConfig parse_config(std::string_view json_text);
ProtocolConfig load_config(const std::string& path);
std::string config_to_json(const ProtocolConfig& c, int indent = 2);

}  // namespace lipmab
