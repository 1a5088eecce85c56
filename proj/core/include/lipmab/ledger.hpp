#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lipmab/env.hpp"
#include "lipmab/geometry.hpp"

namespace lipmab {

// Global phase of a round, as seen by the observer.
enum class Stage : std::uint8_t { PhaseI = 0, PhaseII = 1, Seating = 2, PhaseIII = 3 };
inline constexpr std::size_t kStages = 4;
std::string_view to_string(Stage s) noexcept;

// What one player did in a round.
enum class Role : std::uint8_t { PhaseI = 0, PhaseII = 1, Chairs = 2, PhaseIII = 3 };
std::string_view to_string(Role r) noexcept;

struct LedgerPoint {
  std::uint64_t round = 0;  // rounds completed
  double regret = 0.0;
  double pseudo_regret = 0.0;
};

// Regret against T * OPT. "pseudo" uses mu at the played actions instead of
// the sampled rewards; collided players contribute zero either way.
struct RegretLedger {
  double opt = 0.0;
  std::uint64_t rounds = 0;
  double total_reward = 0.0;
  double total_pseudo_reward = 0.0;
  std::array<double, kStages> regret_by_stage{};
  std::array<double, kStages> pseudo_by_stage{};
  std::array<std::uint64_t, kStages> rounds_by_stage{};
  std::vector<LedgerPoint> series;

  double total_regret() const noexcept;
  double total_pseudo_regret() const noexcept;
  double decomposition_sum() const noexcept;
};

class LedgerBuilder {
 public:
  LedgerBuilder(double opt, std::uint64_t stride);
  void add(Stage stage, double reward, double pseudo_reward);
  // Many rounds at once; adds one series point if a stride boundary is crossed.
  void add_bulk(Stage stage, std::uint64_t rounds, double reward, double pseudo_reward);
  const RegretLedger& ledger() const noexcept { return ledger_; }
  RegretLedger finish();

 private:
  RegretLedger ledger_;
  std::uint64_t stride_;
  double regret_ = 0.0;
  double pseudo_ = 0.0;
};

struct RoundView {
  std::uint64_t round = 0;
  Stage stage = Stage::PhaseI;
  std::span<const Point> actions;
  std::span<const PlayerOutcome> outcomes;
  std::span<const Role> roles;
};

class TraceSink {
 public:
  virtual ~TraceSink() = default;
  virtual void on_round(const RoundView& view) = 0;
  virtual void on_marker(std::string_view name, std::uint64_t round) { (void)name; (void)round; }
};

struct PlayerRecord {
  Role role = Role::PhaseI;
  Point action;
  PlayerOutcome outcome;
};

struct RoundRecord {
  std::uint64_t round = 0;
  Stage stage = Stage::PhaseI;
  std::vector<PlayerRecord> players;
};

struct Marker {
  std::string name;
  std::uint64_t round = 0;
};

// In-memory trace; meant for short runs.
class RunTrace final : public TraceSink {
 public:
  void on_round(const RoundView& view) override;
  void on_marker(std::string_view name, std::uint64_t round) override;

  std::vector<RoundRecord> rounds;
  std::vector<Marker> markers;
};

// Streams "round,phase,player,role,x0..x{d-1},reward,collision" rows.
class CsvTraceWriter final : public TraceSink {
 public:
  CsvTraceWriter(std::ostream& out, int d);
  void on_round(const RoundView& view) override;

 private:
  std::ostream& out_;
  std::string line_;
};

// Rebuilds the realized-reward ledger from a recorded trace. Pseudo regret
// needs the instance; pass nullptr to skip it.
RegretLedger regret(const RunTrace& trace, double opt, const Instance* instance = nullptr,
                    std::uint64_t stride = 1);

// Shortest round-trip decimal for CSV/JSON.
std::string format_double(double v);

void write_ledger_csv(std::ostream& out, const RegretLedger& ledger);

}  // namespace lipmab
