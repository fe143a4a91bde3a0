#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ffem/allocators.hpp"
#include "ffem/amm.hpp"
#include "ffem/characterizer.hpp"
#include "ffem/core.hpp"
#include "ffem/data_io.hpp"
#include "ffem/reliability.hpp"

namespace ffem {

enum class Approach { fair_play, volume_max, revenue_max };

std::string to_string(Approach a);
Approach approach_from_string(const std::string& s);

/// Everything one market run needs, already on a common horizon grid.
struct MarketInputs {
  TimeGrid horizon;
  std::vector<double> total_supply_kw;  // S^T_t
  std::vector<double> essential_kw;     // aggregate C^B_t
  std::vector<Request> requests;
  std::map<std::string, HouseholdRecord> households;  // initial histories
  std::map<std::string, std::string> group_of_household;  // optional labels
};

struct InvariantChecks {
  bool capacity = true;
  bool budget_balance = true;
  bool individual_rationality = true;
  bool all() const { return capacity && budget_balance && individual_rationality; }
};

struct PriceSample {
  Minutes instance_start = 0;
  Minutes period_time = 0;
  double alpha = 0, bp = 0, sp = 0;
};

struct GroupTotals {
  double served_kwh = 0;
  double requested_kwh = 0;
  double share() const { return requested_kwh > 0 ? served_kwh / requested_kwh : 0.0; }
};

struct RunSummary {
  double gamma_actual = 0;
  double total_cost_gbp = 0;
  double served_kwh = 0;
  double requested_kwh = 0;
  InvariantChecks invariants;
  std::vector<AllocationOutcome> outcomes;
  std::map<std::string, HouseholdRecord> households;  // post-run histories
  std::vector<PriceSample> prices;
  std::map<std::string, GroupTotals> per_group;
  bool exact_solver = true;  // false when a benchmark fell back to the heuristic
};

struct EngineOptions {
  Approach approach = Approach::fair_play;
  FairnessPolicy fairness;
  PricingMode pricing_mode = PricingMode::per_period;
  std::uint64_t seed = 0;
  bool allow_heuristic = true;
};

/// Rolling market-instance loop over the horizon: advance, select relevant
/// requests, allocate, commit, roll reliability histories at instance close.
RunSummary run_market(const MarketInputs& inputs, const MarketConfig& config,
                      const EngineOptions& options);

/// Scenario description mirrored by the CLI config file.
struct ScenarioSpec {
  std::optional<std::string> consumption_csv;
  std::optional<std::string> supply_csv;
  std::optional<SynthSpec> synth;
  double upsilon = 1.0;
  double sigma_hours = 0.0;
  double bp_h_max = 1.0;
  CharacterizerParams characterizer;
  MarketConfig market;
  EngineOptions engine;
  std::optional<std::pair<Minutes, Minutes>> period;
};

/// Ingest (or synthesize) data, characterize and build run-ready inputs.
MarketInputs prepare_inputs(const ScenarioSpec& spec);

/// Full pipeline for one scenario.
RunSummary run(const ScenarioSpec& spec);

struct FlexSweepRow {
  double sigma_hours = 0;
  double p25 = 0, median = 0, p75 = 0;  // unit cost, £/kWh over served requests
  int served = 0, total = 0;
};

/// Re-runs the scenario at each flexibility level and reports unit-cost
/// percentiles across served requests.
std::vector<FlexSweepRow> sweep_flex(const ScenarioSpec& spec, const std::vector<double>& sigmas_hours);

struct ShortageGroupResult {
  double group1_share = 0;
  double group2_share = 0;
  double overall_share = 0;
};

/// Duplicated-request two-group shortage experiment; group 1 has full
/// historic success and a huge willingness to pay, group 2 the opposite.
std::map<Approach, ShortageGroupResult> shortage_experiment(const ScenarioSpec& spec,
                                                            double group1_bp_h_max = 1e6,
                                                            double group2_bp_h_max = 1.0);

/// Builds the duplicated two-group inputs used by shortage_experiment;
/// exposed so callers can inspect or reuse them.
MarketInputs build_shortage_inputs(const ScenarioSpec& spec, double group1_bp_h_max,
                                   double group2_bp_h_max);

struct SupplyMixRow {
  double mix = 0;           // fraction of essential energy from uncontrollable supply
  double excess_kwh = 0;
  std::map<std::string, double> cutoff_gbp_per_kwh;  // comparator -> break-even price
};

std::vector<SupplyMixRow> supply_mix_report(const std::vector<double>& essential_kw,
                                            const std::vector<double>& uncontrollable_kw,
                                            Minutes resolution, const std::vector<double>& mixes,
                                            const std::map<std::string, double>& comparator_costs);

struct AssessmentResult {
  ReliabilityReport report;
  std::vector<std::string> suggestions;  // levers, populated when gap < 0
  std::optional<double> gamma_with_sp_boost;
  std::optional<double> gamma_with_extra_sigma;
};

struct AssessmentOptions {
  std::vector<double> sigma_hours_choices = {0.0};
  bool try_levers = false;
  double sp_boost_factor = 2.0;
  double extra_sigma_hours = 3.0;
};

/// Simulates modelled inputs and reports how Gamma^actual compares with the
/// configured Gamma^target, optionally re-simulating the two levers.
AssessmentResult assess_target(const ScenarioSpec& spec, const AssessmentOptions& options);

/// Machine-readable run summary (summary.json payload).
std::string summary_to_json(const RunSummary& summary);

void write_outcomes_csv(const std::string& path, const RunSummary& summary, const TimeGrid& horizon);
void write_prices_csv(const std::string& path, const RunSummary& summary);

}  // namespace ffem
