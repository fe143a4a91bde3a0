#include "ffem/engine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"

namespace ffem {

std::string to_string(Approach a) {
  switch (a) {
    case Approach::fair_play: return "fair_play";
    case Approach::volume_max: return "volume_max";
    case Approach::revenue_max: return "revenue_max";
  }
  return "?";
}

Approach approach_from_string(const std::string& s) {
  if (s == "fair_play") return Approach::fair_play;
  if (s == "volume_max") return Approach::volume_max;
  if (s == "revenue_max") return Approach::revenue_max;
  throw InputError("unknown approach '" + s + "'");
}

namespace {

enum class Status { pending, served, failed };

constexpr double kTol = 1e-6;

}  // namespace

RunSummary run_market(const MarketInputs& inputs, const MarketConfig& config,
                      const EngineOptions& options) {
  config.validate();
  const TimeGrid& horizon = inputs.horizon;
  if (horizon.resolution() != config.resolution)
    throw InputError("run_market: horizon resolution differs from the market resolution");
  if (horizon.start() % config.spacing != 0)
    throw InputError("run_market: horizon start must align to the instance spacing");
  const int nh = horizon.n_periods();
  if (static_cast<int>(inputs.total_supply_kw.size()) != nh ||
      static_cast<int>(inputs.essential_kw.size()) != nh)
    throw InputError("run_market: supply/essential series do not cover the horizon");

  for (const auto& r : inputs.requests) r.validate();

  RunSummary summary;
  summary.households = inputs.households;
  for (const auto& r : inputs.requests)
    if (!summary.households.count(r.household_id))
      summary.households[r.household_id] = HouseholdRecord{r.household_id, 0, 0};

  std::vector<double> committed(nh, 0.0);
  std::map<std::string, Status> status;
  std::map<std::string, AllocationOutcome> outcome_by_id;
  std::map<std::string, const Request*> request_by_id;
  for (const auto& r : inputs.requests) {
    if (request_by_id.count(r.id)) throw InputError("run_market: duplicate request id " + r.id);
    request_by_id[r.id] = &r;
    status[r.id] = Status::pending;
    outcome_by_id[r.id] = AllocationOutcome{r.id, r.household_id, false, 0, std::nullopt};
  }

  Rng rng(options.seed);
  auto group_of = [&](const std::string& hid) -> std::string {
    auto it = inputs.group_of_household.find(hid);
    return it == inputs.group_of_household.end() ? std::string() : it->second;
  };

  for (Minutes clock = horizon.start(); clock < horizon.end(); clock += config.spacing) {
    const TimeGrid full = advance_instance(config, clock);
    const Minutes lo = std::max(full.start(), horizon.start());
    const Minutes hi = std::min(full.end(), horizon.end());
    if (hi <= lo) continue;
    const TimeGrid inst(lo, hi, config.resolution);
    const int offset = static_cast<int>((lo - horizon.start()) / config.resolution);

    std::vector<Request> pending;
    for (const auto& r : inputs.requests)
      if (status.at(r.id) == Status::pending) pending.push_back(r);
    std::vector<Request> relevant = relevant_requests(pending, inst);

    std::vector<double> flex(inst.n_periods());
    for (int i = 0; i < inst.n_periods(); ++i)
      flex[i] = inputs.total_supply_kw[offset + i] - inputs.essential_kw[offset + i] -
                committed[offset + i];

    MarketState state(inst, config, options.pricing_mode, flex, relevant);

    std::vector<AllocationOutcome> allocated;
    if (options.approach == Approach::fair_play) {
      allocated = fair_play_run(state, relevant, summary.households, options.fairness, rng);
    } else {
      rng.shuffle(relevant);  // randomize solver tie-breaking per seed
      SolverOptions sopts;
      sopts.allow_heuristic = options.allow_heuristic;
      SolveResult res = options.approach == Approach::volume_max
                            ? volume_max_solve(relevant, state, sopts)
                            : revenue_max_solve(relevant, state, sopts);
      summary.exact_solver = summary.exact_solver && res.exact;
      apply_schedule(state, relevant, res.outcomes);
      allocated = std::move(res.outcomes);
    }

    // instance-level invariants
    if (std::abs(state.buyer_payments() - state.seller_receipts()) >
        kTol * std::max(1.0, state.buyer_payments()))
      summary.invariants.budget_balance = false;

    std::vector<std::string> finalized_served;
    for (const auto& out : allocated) {
      if (!out.served) continue;
      const Request& r = *request_by_id.at(out.request_id);
      if (out.slot->cost > r.budget + kTol) summary.invariants.individual_rationality = false;
      auto& rec = outcome_by_id[out.request_id];
      rec = out;
      rec.slot->start_period += offset;  // global horizon index
      status[out.request_id] = Status::served;
      finalized_served.push_back(out.request_id);
      for (int i = 0; i < out.slot->n_periods; ++i)
        committed[rec.slot->start_period + i] += out.slot->power_kw;
      summary.total_cost_gbp += out.slot->cost;
    }

    // committed flexible load must fit in the flexible headroom; periods where
    // essential demand alone exceeds supply are an input shortage, not an
    // over-commitment, so the bound is clamped at zero
    for (int i = 0; i < inst.n_periods(); ++i)
      if (committed[offset + i] >
          std::max(0.0, inputs.total_supply_kw[offset + i] - inputs.essential_kw[offset + i]) +
              kTol)
        summary.invariants.capacity = false;

    // requests whose last feasible start has passed will never be served
    const Minutes next_clock = clock + config.spacing;
    const bool last_instance = next_clock >= horizon.end();
    std::vector<std::string> finalized_failed;
    for (const auto& r : inputs.requests) {
      if (status.at(r.id) != Status::pending) continue;
      const Minutes last_start = r.latest - r.min_duration(config.resolution);
      if (last_instance || last_start < next_clock) {
        status[r.id] = Status::failed;
        finalized_failed.push_back(r.id);
      }
    }

    // reliability histories roll at instance close
    for (const auto& id : finalized_served) {
      const Request& r = *request_by_id.at(id);
      auto& h = summary.households[r.household_id];
      h.served_kwh += r.energy;
      h.requested_kwh += r.energy;
    }
    for (const auto& id : finalized_failed) {
      const Request& r = *request_by_id.at(id);
      summary.households[r.household_id].requested_kwh += r.energy;
    }

    // record prices for the exclusive live span of this instance
    const Minutes sample_end = std::min(next_clock, hi);
    for (Minutes t = lo > clock ? lo : clock; t < sample_end; t += config.resolution) {
      const int i = inst.index_of(t);
      summary.prices.push_back(
          {lo, t, state.alpha_series()[i], state.bp()[i], state.sp()[i]});
    }
  }

  for (const auto& r : inputs.requests) {
    const auto& out = outcome_by_id.at(r.id);
    summary.outcomes.push_back(out);
    summary.requested_kwh += r.energy;
    if (out.served) summary.served_kwh += r.energy;
    const std::string g = group_of(r.household_id);
    if (!g.empty()) {
      auto& gt = summary.per_group[g];
      gt.requested_kwh += r.energy;
      if (out.served) gt.served_kwh += r.energy;
    }
  }
  summary.gamma_actual =
      summary.households.empty() ? 0.0 : system_reliability(summary.households);
  return summary;
}

namespace {

Minutes align_up(Minutes t, Minutes step) {
  const Minutes r = t % step;
  if (r == 0) return t;
  return r > 0 ? t + (step - r) : t - r;
}

Minutes align_down(Minutes t, Minutes step) {
  const Minutes r = t % step;
  if (r == 0) return t;
  return r > 0 ? t - r : t - (step + r);
}

}  // namespace

MarketInputs prepare_inputs(const ScenarioSpec& spec) {
  spec.market.validate();
  std::vector<ConsumptionSeries> consumption;
  std::optional<SupplyProfile> supply;

  if (spec.synth) {
    Rng rng(spec.engine.seed);
    SynthSpec synth = *spec.synth;
    synth.resolution = spec.market.resolution;
    SynthData data = synth_generate(synth, rng);
    consumption = std::move(data.consumption);
    supply = scale_supply(data.supply, spec.upsilon);
  } else if (spec.consumption_csv && spec.supply_csv) {
    auto load = load_consumption_csv(*spec.consumption_csv, spec.market.resolution);
    consumption = std::move(load.series);
    supply = scale_supply(load_supply_csv(*spec.supply_csv, spec.market.resolution), spec.upsilon);
  } else {
    throw InputError("scenario: need either a synth spec or consumption+supply files");
  }
  if (consumption.empty()) throw InputError("scenario: no consumption data");

  Minutes start = supply->grid.start();
  Minutes end = supply->grid.end();
  for (const auto& s : consumption) {
    start = std::max(start, s.grid.start());
    end = std::min(end, s.grid.end());
  }
  if (spec.period) {
    start = std::max(start, spec.period->first);
    end = std::min(end, spec.period->second);
  }
  start = align_up(start, spec.market.spacing);
  end = align_down(end, spec.market.resolution);
  if (end <= start) throw InputError("scenario: empty horizon after alignment");
  TimeGrid horizon(start, end, spec.market.resolution);
  const int nh = horizon.n_periods();

  MarketInputs inputs{horizon, std::vector<double>(nh, 0.0), std::vector<double>(nh, 0.0), {}, {}, {}};
  for (int i = 0; i < nh; ++i) {
    const int j = supply->grid.index_of(horizon.time_of(i));
    inputs.total_supply_kw[i] = supply->total_kw[static_cast<std::size_t>(j)];
  }

  const Minutes sigma = hours(spec.sigma_hours);
  std::vector<FlexibleBlock> blocks;
  for (const auto& series : consumption) {
    auto res = characterize(series, spec.characterizer);
    for (int i = 0; i < nh; ++i) {
      const int j = series.grid.index_of(horizon.time_of(i));
      if (j >= 0 && j < series.grid.n_periods())
        inputs.essential_kw[i] += res.essential.power_kw[static_cast<std::size_t>(j)];
    }
    for (auto& b : res.blocks)
      if (b.start < horizon.end() && b.start + b.duration + sigma > horizon.start())
        blocks.push_back(std::move(b));
    inputs.households[series.household_id] = HouseholdRecord{series.household_id, 0, 0};
  }
  inputs.requests = blocks_to_requests(blocks, sigma, spec.bp_h_max);
  return inputs;
}

RunSummary run(const ScenarioSpec& spec) {
  return run_market(prepare_inputs(spec), spec.market, spec.engine);
}

namespace {

double percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= v.size()) return v.back();
  const double frac = pos - static_cast<double>(i);
  return v[i] * (1.0 - frac) + v[i + 1] * frac;
}

}  // namespace

std::vector<FlexSweepRow> sweep_flex(const ScenarioSpec& spec,
                                     const std::vector<double>& sigmas_hours) {
  std::vector<FlexSweepRow> rows;
  for (double s : sigmas_hours) {
    ScenarioSpec variant = spec;
    variant.sigma_hours = s;
    RunSummary summary = run(variant);
    std::vector<double> unit_costs;
    int served = 0;
    for (const auto& out : summary.outcomes) {
      if (!out.served) continue;
      ++served;
      unit_costs.push_back(out.slot->cost / out.delivered_kwh);
    }
    rows.push_back({s, percentile(unit_costs, 0.25), percentile(unit_costs, 0.5),
                    percentile(unit_costs, 0.75), served,
                    static_cast<int>(summary.outcomes.size())});
  }
  return rows;
}

MarketInputs build_shortage_inputs(const ScenarioSpec& spec, double group1_bp_h_max,
                                   double group2_bp_h_max) {
  MarketInputs base = prepare_inputs(spec);
  MarketInputs out{base.horizon, base.total_supply_kw, base.essential_kw, {}, {}, {}};
  auto duplicate = [&](const Request& r, const std::string& prefix, double bp_h_max) {
    Request d = r;
    d.id = prefix + r.id;
    d.household_id = prefix + r.household_id;
    d.budget = bp_h_max * r.energy;
    return d;
  };
  std::map<std::string, double> hh_energy;
  for (const auto& r : base.requests) hh_energy[r.household_id] += r.energy;
  for (const auto& r : base.requests) {
    out.requests.push_back(duplicate(r, "g1_", group1_bp_h_max));
    out.requests.push_back(duplicate(r, "g2_", group2_bp_h_max));
  }
  for (const auto& [hid, w] : hh_energy) {
    // group 1 starts with full historic success, group 2 with none
    out.households["g1_" + hid] = HouseholdRecord{"g1_" + hid, w, w};
    out.households["g2_" + hid] = HouseholdRecord{"g2_" + hid, 0, w};
    out.group_of_household["g1_" + hid] = "group1";
    out.group_of_household["g2_" + hid] = "group2";
  }
  return out;
}

std::map<Approach, ShortageGroupResult> shortage_experiment(const ScenarioSpec& spec,
                                                            double group1_bp_h_max,
                                                            double group2_bp_h_max) {
  MarketInputs inputs = build_shortage_inputs(spec, group1_bp_h_max, group2_bp_h_max);
  std::map<Approach, ShortageGroupResult> results;
  for (Approach a : {Approach::fair_play, Approach::volume_max, Approach::revenue_max}) {
    EngineOptions opts = spec.engine;
    opts.approach = a;
    RunSummary s = run_market(inputs, spec.market, opts);
    if (!s.invariants.all()) throw InvariantViolation("shortage_experiment: invariant violated");
    ShortageGroupResult r;
    r.group1_share = s.per_group["group1"].share();
    r.group2_share = s.per_group["group2"].share();
    r.overall_share = s.requested_kwh > 0 ? s.served_kwh / s.requested_kwh : 0.0;
    results[a] = r;
  }
  return results;
}

std::vector<SupplyMixRow> supply_mix_report(const std::vector<double>& essential_kw,
                                            const std::vector<double>& uncontrollable_kw,
                                            Minutes resolution, const std::vector<double>& mixes,
                                            const std::map<std::string, double>& comparator_costs) {
  double essential_kwh = 0;
  for (double p : essential_kw) essential_kwh += p * to_hours(resolution);
  std::vector<SupplyMixRow> rows;
  for (double mix : mixes) {
    SupplyMixRow row;
    row.mix = mix;
    row.excess_kwh = supply_mix_excess(uncontrollable_kw, essential_kw, mix, resolution);
    const double controllable_share = 1.0 - mix;
    for (const auto& [name, cost] : comparator_costs)
      row.cutoff_gbp_per_kwh[name] =
          controllable_share > 0 ? affordability_cutoff(cost, essential_kwh, controllable_share)
                                 : std::numeric_limits<double>::infinity();
    rows.push_back(std::move(row));
  }
  return rows;
}

AssessmentResult assess_target(const ScenarioSpec& spec, const AssessmentOptions& options) {
  if (options.sigma_hours_choices.empty())
    throw InputError("assess_target: need at least one sigma choice");

  auto build = [&](double extra_sigma_hours) {
    ScenarioSpec base = spec;
    base.sigma_hours = 0.0;
    MarketInputs inputs = prepare_inputs(base);
    Rng sigma_rng(spec.engine.seed + 1);
    for (auto& r : inputs.requests) {
      const double s = options.sigma_hours_choices[static_cast<std::size_t>(
          sigma_rng.uniform_int(static_cast<std::int64_t>(options.sigma_hours_choices.size())))];
      r.latest += hours(s + extra_sigma_hours);
    }
    return inputs;
  };

  MarketInputs inputs = build(0.0);
  EngineOptions opts = spec.engine;
  opts.approach = Approach::fair_play;
  RunSummary summary = run_market(inputs, spec.market, opts);

  AssessmentResult result;
  result.report = build_report(summary.outcomes, inputs.requests, summary.households,
                               spec.market.gamma_target);
  if (result.report.gap < 0) {
    result.suggestions = {
        "increase the price offered to suppliers of controllable supply (raise sp_max)",
        "encourage consumers to offer more flexibility (larger sigma)"};
    if (options.try_levers) {
      MarketConfig boosted = spec.market;
      boosted.sp_max *= options.sp_boost_factor;
      RunSummary s1 = run_market(inputs, boosted, opts);
      result.gamma_with_sp_boost = s1.gamma_actual;
      MarketInputs flexed = build(options.extra_sigma_hours);
      RunSummary s2 = run_market(flexed, spec.market, opts);
      result.gamma_with_extra_sigma = s2.gamma_actual;
    }
  }
  return result;
}

std::string summary_to_json(const RunSummary& summary) {
  nlohmann::ordered_json j;
  j["gamma_actual"] = summary.gamma_actual;
  j["total_cost_gbp"] = summary.total_cost_gbp;
  j["served_kwh"] = summary.served_kwh;
  j["requested_kwh"] = summary.requested_kwh;
  j["invariants"] = {{"capacity", summary.invariants.capacity},
                     {"budget_balance", summary.invariants.budget_balance},
                     {"individual_rationality", summary.invariants.individual_rationality}};
  if (!summary.per_group.empty()) {
    nlohmann::ordered_json groups;
    for (const auto& [name, g] : summary.per_group)
      groups[name] = {{"served_kwh", g.served_kwh},
                      {"requested_kwh", g.requested_kwh},
                      {"share", g.share()}};
    j["per_group"] = groups;
  }
  j["exact_solver"] = summary.exact_solver;
  return j.dump(2) + "\n";
}

void write_outcomes_csv(const std::string& path, const RunSummary& summary,
                        const TimeGrid& horizon) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << "request_id,household_id,served,delivered_kwh,start,cost_gbp\n";
  char buf[64];
  for (const auto& o : summary.outcomes) {
    out << o.request_id << ',' << o.household_id << ',' << (o.served ? 1 : 0) << ',';
    std::snprintf(buf, sizeof buf, "%.6f", o.delivered_kwh);
    out << buf << ',';
    out << (o.slot ? format_timestamp(horizon.time_of(o.slot->start_period)) : std::string()) << ',';
    std::snprintf(buf, sizeof buf, "%.6f", o.slot ? o.slot->cost : 0.0);
    out << buf << '\n';
  }
}

void write_prices_csv(const std::string& path, const RunSummary& summary) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << "instance_start,period,alpha,bp_gbp_per_kwh,sp_gbp_per_kwh\n";
  char buf[96];
  for (const auto& p : summary.prices) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f", p.alpha, p.bp, p.sp);
    out << format_timestamp(p.instance_start) << ',' << format_timestamp(p.period_time) << ','
        << buf << '\n';
  }
}

}  // namespace ffem
