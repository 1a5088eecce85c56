#include "lipmab/ledger.hpp"

#include <charconv>
#include <ostream>

#include "lipmab/errors.hpp"
#include "lipmab/instance.hpp"

namespace lipmab {

std::string_view to_string(Stage s) noexcept {
  switch (s) {
    case Stage::PhaseI: return "phase1";
    case Stage::PhaseII: return "phase2";
    case Stage::Seating: return "seating";
    case Stage::PhaseIII: return "phase3";
  }
  return "?";
}

std::string_view to_string(Role r) noexcept {
  switch (r) {
    case Role::PhaseI: return "I";
    case Role::PhaseII: return "II";
    case Role::Chairs: return "MC";
    case Role::PhaseIII: return "III";
  }
  return "?";
}

double RegretLedger::total_regret() const noexcept {
  return static_cast<double>(rounds) * opt - total_reward;
}

double RegretLedger::total_pseudo_regret() const noexcept {
  return static_cast<double>(rounds) * opt - total_pseudo_reward;
}

double RegretLedger::decomposition_sum() const noexcept {
  double s = 0.0;
  for (double v : regret_by_stage) s += v;
  return s;
}

LedgerBuilder::LedgerBuilder(double opt, std::uint64_t stride) : stride_(stride == 0 ? 1 : stride) {
  ledger_.opt = opt;
}

void LedgerBuilder::add(Stage stage, double reward, double pseudo_reward) {
  const auto i = static_cast<std::size_t>(stage);
  const double inc = ledger_.opt - reward;
  const double pinc = ledger_.opt - pseudo_reward;
  ledger_.regret_by_stage[i] += inc;
  ledger_.pseudo_by_stage[i] += pinc;
  ++ledger_.rounds_by_stage[i];
  ledger_.total_reward += reward;
  ledger_.total_pseudo_reward += pseudo_reward;
  regret_ += inc;
  pseudo_ += pinc;
  ++ledger_.rounds;
  if (ledger_.rounds % stride_ == 0) ledger_.series.push_back(LedgerPoint{ledger_.rounds, regret_, pseudo_});
}

void LedgerBuilder::add_bulk(Stage stage, std::uint64_t rounds, double reward, double pseudo_reward) {
  if (rounds == 0) return;
  const auto i = static_cast<std::size_t>(stage);
  const double n = static_cast<double>(rounds);
  const double inc = n * ledger_.opt - reward;
  const double pinc = n * ledger_.opt - pseudo_reward;
  ledger_.regret_by_stage[i] += inc;
  ledger_.pseudo_by_stage[i] += pinc;
  ledger_.rounds_by_stage[i] += rounds;
  ledger_.total_reward += reward;
  ledger_.total_pseudo_reward += pseudo_reward;
  regret_ += inc;
  pseudo_ += pinc;
  const std::uint64_t before = ledger_.rounds / stride_;
  ledger_.rounds += rounds;
  if (ledger_.rounds / stride_ != before) ledger_.series.push_back(LedgerPoint{ledger_.rounds, regret_, pseudo_});
}

RegretLedger LedgerBuilder::finish() {
  if (ledger_.series.empty() || ledger_.series.back().round != ledger_.rounds) {
    ledger_.series.push_back(LedgerPoint{ledger_.rounds, regret_, pseudo_});
  }
  return ledger_;
}

void RunTrace::on_round(const RoundView& view) {
  RoundRecord r;
  r.round = view.round;
  r.stage = view.stage;
  r.players.resize(view.actions.size());
  for (std::size_t j = 0; j < view.actions.size(); ++j) {
    r.players[j] = PlayerRecord{view.roles[j], view.actions[j], view.outcomes[j]};
  }
  rounds.push_back(std::move(r));
}

void RunTrace::on_marker(std::string_view name, std::uint64_t round) {
  markers.push_back(Marker{std::string(name), round});
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

CsvTraceWriter::CsvTraceWriter(std::ostream& out, int d) : out_(out) {
  out_ << "round,phase,player,role";
  for (int k = 0; k < d; ++k) out_ << ",x" << k;
  out_ << ",reward,collision\n";
}

void CsvTraceWriter::on_round(const RoundView& view) {
  char buf[64];
  for (std::size_t j = 0; j < view.actions.size(); ++j) {
    line_.clear();
    auto r = std::to_chars(buf, buf + sizeof buf, view.round);
    line_.append(buf, r.ptr);
    line_ += ',';
    line_ += to_string(view.stage);
    line_ += ',';
    r = std::to_chars(buf, buf + sizeof buf, j);
    line_.append(buf, r.ptr);
    line_ += ',';
    line_ += to_string(view.roles[j]);
    const Point& a = view.actions[j];
    for (int k = 0; k < a.dim(); ++k) {
      line_ += ',';
      r = std::to_chars(buf, buf + sizeof buf, a[k]);
      line_.append(buf, r.ptr);
    }
    const PlayerOutcome& o = view.outcomes[j];
    if (o.collided) {
      line_ += ",NA,1\n";
    } else {
      line_ += ',';
      r = std::to_chars(buf, buf + sizeof buf, o.reward);
      line_.append(buf, r.ptr);
      line_ += ",0\n";
    }
    out_ << line_;
  }
}

RegretLedger regret(const RunTrace& trace, double opt, const Instance* instance, std::uint64_t stride) {
  LedgerBuilder b(opt, stride);
  for (const RoundRecord& r : trace.rounds) {
    double reward = 0.0;
    double pseudo = 0.0;
    for (const PlayerRecord& p : r.players) {
      if (p.outcome.collided) continue;
      reward += p.outcome.reward;
      if (instance != nullptr) pseudo += instance->mean(p.action);
    }
    b.add(r.stage, reward, instance != nullptr ? pseudo : reward);
  }
  return b.finish();
}

void write_ledger_csv(std::ostream& out, const RegretLedger& ledger) {
  out << "round,cumulative_regret,cumulative_pseudo_regret\n";
  for (const LedgerPoint& p : ledger.series) {
    out << p.round << ',' << format_double(p.regret) << ',' << format_double(p.pseudo_regret) << '\n';
  }
}

}  // namespace lipmab
