// ffem: fairness-first flexible-electricity market simulator CLI.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "ffem/engine.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliOptions {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> approach;
  std::optional<std::string> pricing_mode;
};

struct Config {
  ffem::ScenarioSpec spec;
  std::vector<double> sigmas_hours = {0, 3, 6, 12};
  std::vector<double> mixes = {0, 0.25, 0.5, 0.75, 1.0};
  double flat_tariff = 0.2084;
  double tou_low = 0.15, tou_high = 0.30;
  std::vector<std::pair<int, int>> tou_bands = {{7, 9}, {17, 20}};
  std::optional<std::string> dynamic_tariff_csv;
  double group1_bp_h_max = 1e6;
  double group2_bp_h_max = 1.0;
  ffem::AssessmentOptions assessment;
};

ffem::Minutes minutes_from_hours_field(const json& j, const char* key, double fallback_hours) {
  return ffem::hours(j.value(key, fallback_hours));
}

Config load_config(const CliOptions& cli) {
  std::ifstream in(cli.config_path);
  if (!in) throw ffem::InputError("cannot open config " + cli.config_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ffem::InputError(std::string("config parse error: ") + e.what());
  }

  Config cfg;
  auto& spec = cfg.spec;
  if (j.contains("market")) {
    const json& m = j["market"];
    spec.market.window = minutes_from_hours_field(m, "window_hours", 24);
    spec.market.spacing = minutes_from_hours_field(m, "spacing_hours", 3);
    spec.market.resolution = m.value("resolution_minutes", 5);
    spec.market.bp_max = m.value("bp_max", 1.0);
    spec.market.sp_max = m.value("sp_max", spec.market.bp_max);
    const std::string curve = m.value("curve", "linear");
    if (curve == "linear")
      spec.market.curve = ffem::PriceCurve::linear;
    else if (curve == "quadratic")
      spec.market.curve = ffem::PriceCurve::quadratic;
    else
      throw ffem::InputError("config: unknown curve '" + curve + "'");
    spec.market.gamma_target = m.value("gamma_target", 0.95);
  }

  const json s = j.value("scenario", json::object());
  if (s.contains("synth")) {
    const json& y = s["synth"];
    ffem::SynthSpec synth;
    synth.households = y.value("households", 10);
    synth.days = y.value("days", 1);
    if (y.contains("start")) synth.start = ffem::parse_timestamp(y["start"].get<std::string>());
    if (y.contains("day_cases")) {
      synth.day_cases.clear();
      for (int c : y["day_cases"].get<std::vector<int>>()) {
        if (c < 1 || c > 3) throw ffem::InputError("config: day_cases entries must be 1..3");
        synth.day_cases.push_back(static_cast<ffem::SupplyCase>(c));
      }
    }
    synth.blocks_per_day = y.value("blocks_per_day", synth.blocks_per_day);
    synth.baseload_min_kw = y.value("baseload_min_kw", synth.baseload_min_kw);
    synth.baseload_max_kw = y.value("baseload_max_kw", synth.baseload_max_kw);
    synth.block_power_min_kw = y.value("block_power_min_kw", synth.block_power_min_kw);
    synth.block_power_max_kw = y.value("block_power_max_kw", synth.block_power_max_kw);
    synth.block_dur_min = y.value("block_dur_min_minutes", synth.block_dur_min);
    synth.block_dur_max = y.value("block_dur_max_minutes", synth.block_dur_max);
    synth.case1_level_kw = y.value("case1_level_kw", synth.case1_level_kw);
    synth.case2_base_kw = y.value("case2_base_kw", synth.case2_base_kw);
    synth.case2_amp_kw = y.value("case2_amp_kw", synth.case2_amp_kw);
    synth.case2_peak_hour = y.value("case2_peak_hour", synth.case2_peak_hour);
    synth.case3_level_kw = y.value("case3_level_kw", synth.case3_level_kw);
    spec.synth = synth;
  }
  if (s.contains("consumption_csv")) spec.consumption_csv = s["consumption_csv"].get<std::string>();
  if (s.contains("supply_csv")) spec.supply_csv = s["supply_csv"].get<std::string>();
  spec.upsilon = s.value("upsilon", 1.0);
  spec.sigma_hours = s.value("sigma_hours", 0.0);
  spec.bp_h_max = s.value("bp_h_max", 1.0);
  if (s.contains("characterizer")) {
    const json& c = s["characterizer"];
    spec.characterizer.p_base = c.value("p_base_kw", spec.characterizer.p_base);
    spec.characterizer.p_threshold = c.value("p_threshold_kw", spec.characterizer.p_threshold);
    spec.characterizer.t_threshold = c.value("t_threshold_minutes", spec.characterizer.t_threshold);
  }
  if (s.contains("fairness")) {
    spec.engine.fairness.gamma_floor = s["fairness"].value("gamma_floor", 1e-3);
    spec.engine.fairness.scale = s["fairness"].value("scale", 1.0);
  }
  if (s.contains("period"))
    spec.period = {ffem::parse_timestamp(s["period"]["start"].get<std::string>()),
                   ffem::parse_timestamp(s["period"]["end"].get<std::string>())};
  spec.engine.seed = s.value("seed", 0);
  spec.engine.approach = ffem::approach_from_string(s.value("approach", "fair_play"));
  spec.engine.allow_heuristic = s.value("allow_heuristic", true);
  const std::string pm = s.value("pricing_mode", "per-period");
  if (pm != "per-period" && pm != "paper-literal")
    throw ffem::InputError("config: unknown pricing_mode '" + pm + "'");
  spec.engine.pricing_mode =
      pm == "per-period" ? ffem::PricingMode::per_period : ffem::PricingMode::paper_literal;

  if (s.contains("sigmas_hours")) cfg.sigmas_hours = s["sigmas_hours"].get<std::vector<double>>();
  if (s.contains("mixes")) cfg.mixes = s["mixes"].get<std::vector<double>>();
  if (s.contains("tariffs")) {
    const json& t = s["tariffs"];
    cfg.flat_tariff = t.value("flat_gbp_per_kwh", cfg.flat_tariff);
    if (t.contains("static_tou")) {
      cfg.tou_low = t["static_tou"].value("low", cfg.tou_low);
      cfg.tou_high = t["static_tou"].value("high", cfg.tou_high);
      if (t["static_tou"].contains("bands")) {
        cfg.tou_bands.clear();
        for (const auto& b : t["static_tou"]["bands"])
          cfg.tou_bands.emplace_back(b[0].get<int>(), b[1].get<int>());
      }
    }
    if (t.contains("dynamic_csv")) cfg.dynamic_tariff_csv = t["dynamic_csv"].get<std::string>();
  }
  if (s.contains("shortage")) {
    cfg.group1_bp_h_max = s["shortage"].value("group1_bp_h_max", cfg.group1_bp_h_max);
    cfg.group2_bp_h_max = s["shortage"].value("group2_bp_h_max", cfg.group2_bp_h_max);
  }
  if (s.contains("reliability")) {
    const json& r = s["reliability"];
    if (r.contains("sigma_choices_hours"))
      cfg.assessment.sigma_hours_choices = r["sigma_choices_hours"].get<std::vector<double>>();
    cfg.assessment.try_levers = r.value("try_levers", false);
    cfg.assessment.sp_boost_factor = r.value("sp_boost_factor", 2.0);
    cfg.assessment.extra_sigma_hours = r.value("extra_sigma_hours", 3.0);
  }

  // CLI flags override the config file
  if (cli.seed) spec.engine.seed = *cli.seed;
  if (cli.approach) spec.engine.approach = ffem::approach_from_string(*cli.approach);
  if (cli.pricing_mode) {
    if (*cli.pricing_mode == "per-period")
      spec.engine.pricing_mode = ffem::PricingMode::per_period;
    else if (*cli.pricing_mode == "paper-literal")
      spec.engine.pricing_mode = ffem::PricingMode::paper_literal;
    else
      throw ffem::InputError("unknown --pricing-mode '" + *cli.pricing_mode + "'");
  }
  return cfg;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ffem::InputError("cannot write " + path.string());
  out << content;
}

/// Static time-of-use price series over a grid: high rate within the bands.
std::vector<double> static_tou_series(const ffem::TimeGrid& grid, double low, double high,
                                      const std::vector<std::pair<int, int>>& bands) {
  std::vector<double> prices(static_cast<std::size_t>(grid.n_periods()), low);
  for (int i = 0; i < grid.n_periods(); ++i) {
    const ffem::Minutes tod = ((grid.time_of(i) % ffem::kMinutesPerDay) + ffem::kMinutesPerDay) %
                              ffem::kMinutesPerDay;
    const double hour = ffem::to_hours(tod);
    for (const auto& [lo, hi] : bands)
      if (hour >= lo && hour < hi) prices[static_cast<std::size_t>(i)] = high;
  }
  return prices;
}

int cmd_run(const Config& cfg, const fs::path& out_dir) {
  ffem::MarketInputs inputs = ffem::prepare_inputs(cfg.spec);
  ffem::RunSummary summary = ffem::run_market(inputs, cfg.spec.market, cfg.spec.engine);
  write_file(out_dir / "summary.json", ffem::summary_to_json(summary));
  ffem::write_outcomes_csv((out_dir / "outcomes.csv").string(), summary, inputs.horizon);
  ffem::write_prices_csv((out_dir / "prices.csv").string(), summary);
  std::cout << ffem::summary_to_json(summary);
  return summary.invariants.all() ? 0 : 1;
}

int cmd_characterize(const Config& cfg, const fs::path& out_dir) {
  ffem::ScenarioSpec spec = cfg.spec;
  std::vector<ffem::ConsumptionSeries> consumption;
  if (spec.synth) {
    ffem::Rng rng(spec.engine.seed);
    ffem::SynthSpec synth = *spec.synth;
    synth.resolution = spec.market.resolution;
    consumption = ffem::synth_generate(synth, rng).consumption;
  } else if (spec.consumption_csv) {
    consumption = ffem::load_consumption_csv(*spec.consumption_csv, spec.market.resolution).series;
  } else {
    throw ffem::InputError("characterize: need consumption_csv or synth in the config");
  }

  std::vector<ffem::ConsumptionSeries> essential;
  std::vector<ffem::FlexibleBlock> blocks;
  for (const auto& series : consumption) {
    auto res = ffem::characterize(series, spec.characterizer);
    essential.push_back(std::move(res.essential));
    for (auto& b : res.blocks) blocks.push_back(std::move(b));
  }
  ffem::write_consumption_csv((out_dir / "essential.csv").string(), essential);
  auto requests = ffem::blocks_to_requests(blocks, ffem::hours(spec.sigma_hours), spec.bp_h_max);
  std::ofstream out(out_dir / "requests.csv");
  out << "id,household_id,earliest,latest,energy_kwh,p_max_kw,budget_gbp\n";
  char buf[128];
  for (const auto& r : requests) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f", r.energy, r.p_max, r.budget);
    out << r.id << ',' << r.household_id << ',' << ffem::format_timestamp(r.earliest) << ','
        << ffem::format_timestamp(r.latest) << ',' << buf << '\n';
  }
  std::cout << "households: " << consumption.size() << ", flexible blocks: " << blocks.size()
            << "\n";
  return 0;
}

int cmd_sweep_flex(const Config& cfg, const fs::path& out_dir) {
  auto rows = ffem::sweep_flex(cfg.spec, cfg.sigmas_hours);
  std::ostringstream csv;
  csv << "sigma_hours,p25_gbp_per_kwh,median_gbp_per_kwh,p75_gbp_per_kwh,served,total\n";
  for (const auto& r : rows) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%g,%.6f,%.6f,%.6f,%d,%d\n", r.sigma_hours, r.p25, r.median,
                  r.p75, r.served, r.total);
    csv << buf;
  }
  write_file(out_dir / "sweep_flex.csv", csv.str());
  std::cout << csv.str();
  return 0;
}

int cmd_shortage(const Config& cfg, const fs::path& out_dir) {
  auto results = ffem::shortage_experiment(cfg.spec, cfg.group1_bp_h_max, cfg.group2_bp_h_max);
  nlohmann::ordered_json j;
  for (const auto& [approach, r] : results)
    j[ffem::to_string(approach)] = {{"group1_share", r.group1_share},
                                    {"group2_share", r.group2_share},
                                    {"overall_share", r.overall_share}};
  const std::string body = j.dump(2) + "\n";
  write_file(out_dir / "summary.json", body);
  std::cout << body;
  return 0;
}

int cmd_supply_mix(const Config& cfg, const fs::path& out_dir) {
  ffem::MarketInputs inputs = ffem::prepare_inputs(cfg.spec);
  const ffem::Minutes res = cfg.spec.market.resolution;

  std::map<std::string, double> comparators;
  std::vector<double> flat(inputs.essential_kw.size(), cfg.flat_tariff);
  comparators["flat"] = ffem::tariff_cost(inputs.essential_kw, flat, res);
  comparators["static_tou"] = ffem::tariff_cost(
      inputs.essential_kw, static_tou_series(inputs.horizon, cfg.tou_low, cfg.tou_high, cfg.tou_bands),
      res);
  if (cfg.dynamic_tariff_csv) {
    auto tariff = ffem::load_tariff_csv(*cfg.dynamic_tariff_csv, res);
    std::vector<double> prices(inputs.essential_kw.size());
    for (std::size_t i = 0; i < prices.size(); ++i) {
      const int k = tariff.grid.index_of(inputs.horizon.time_of(static_cast<int>(i)));
      if (k < 0 || k >= tariff.grid.n_periods())
        throw ffem::InputError("dynamic tariff does not cover the horizon");
      prices[i] = tariff.price_gbp_per_kwh[static_cast<std::size_t>(k)];
    }
    comparators["dynamic_tou"] = ffem::tariff_cost(inputs.essential_kw, prices, res);
  }

  auto rows = ffem::supply_mix_report(inputs.essential_kw, inputs.total_supply_kw, res, cfg.mixes,
                                      comparators);
  std::ostringstream csv;
  csv << "mix,excess_kwh";
  for (const auto& [name, cost] : comparators) csv << ",cutoff_" << name << "_gbp_per_kwh";
  csv << "\n";
  for (const auto& r : rows) {
    csv << r.mix << ',' << r.excess_kwh;
    for (const auto& [name, cost] : comparators) csv << ',' << r.cutoff_gbp_per_kwh.at(name);
    csv << "\n";
  }
  write_file(out_dir / "supply_mix.csv", csv.str());
  std::cout << csv.str();
  return 0;
}

int cmd_reliability(const Config& cfg, const fs::path& out_dir) {
  auto result = ffem::assess_target(cfg.spec, cfg.assessment);
  nlohmann::ordered_json j;
  j["gamma_actual"] = result.report.system;
  j["gamma_target"] = result.report.target;
  j["gap"] = result.report.gap;
  j["suggestions"] = result.suggestions;
  if (result.gamma_with_sp_boost) j["gamma_with_sp_boost"] = *result.gamma_with_sp_boost;
  if (result.gamma_with_extra_sigma) j["gamma_with_extra_sigma"] = *result.gamma_with_extra_sigma;
  nlohmann::ordered_json hh;
  for (const auto& [id, gw] : result.report.per_household)
    hh[id] = {{"gamma", gw.first}, {"weight_kwh", gw.second}};
  j["per_household"] = hh;
  const std::string body = j.dump(2) + "\n";
  write_file(out_dir / "reliability.json", body);
  std::cout << body;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fairness-first flexible-electricity market simulator"};
  app.require_subcommand(1);

  CliOptions cli;
  std::string subcommand;
  for (const char* name : {"characterize", "run", "sweep-flex", "shortage-exp", "supply-mix",
                           "reliability"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", cli.config_path, "JSON config file")->required();
    sub->add_option("--seed", cli.seed, "override the scenario seed");
    sub->add_option("--out-dir", cli.out_dir, "output directory");
    sub->add_option("--approach", cli.approach, "fair_play | volume_max | revenue_max");
    sub->add_option("--pricing-mode", cli.pricing_mode, "per-period | paper-literal");
    sub->callback([&subcommand, name] { subcommand = name; });
  }

  CLI11_PARSE(app, argc, argv);

  try {
    const Config cfg = load_config(cli);
    const fs::path out_dir(cli.out_dir);
    fs::create_directories(out_dir);
    if (subcommand == "run") return cmd_run(cfg, out_dir);
    if (subcommand == "characterize") return cmd_characterize(cfg, out_dir);
    if (subcommand == "sweep-flex") return cmd_sweep_flex(cfg, out_dir);
    if (subcommand == "shortage-exp") return cmd_shortage(cfg, out_dir);
    if (subcommand == "supply-mix") return cmd_supply_mix(cfg, out_dir);
    if (subcommand == "reliability") return cmd_reliability(cfg, out_dir);
    std::cerr << "unknown subcommand\n";
    return 2;
  } catch (const ffem::InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
