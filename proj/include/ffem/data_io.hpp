#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ffem/characterizer.hpp"
#include "ffem/core.hpp"
#include "ffem/rng.hpp"

namespace ffem {

enum class SupplyCase { high_flat = 1, variable = 2, low_flat = 3 };

/// A supply time series, optionally broken down by fuel type.
struct SupplyProfile {
  TimeGrid grid;
  std::vector<double> total_kw;
  std::map<std::string, std::vector<double>> source_mix_kw;
  std::optional<SupplyCase> case_label;
};

/// consumption.csv: `timestamp,household_id,power_kw` at 5-minute rows.
/// Gaps up to 30 minutes are filled by zero-order hold; a longer gap drops
/// the affected day (power zeroed, day recorded).
struct ConsumptionLoad {
  std::vector<ConsumptionSeries> series;
  std::map<std::string, std::vector<Minutes>> dropped_days;  // day start per household
};
ConsumptionLoad load_consumption_csv(const std::string& path, Minutes resolution = 5);

/// supply.csv: `timestamp,fuel_type,generation_mw` at 30-minute rows,
/// resampled to the market resolution by zero-order hold. Missing rows are
/// held forward up to 2 hours, beyond that it is an error.
SupplyProfile load_supply_csv(const std::string& path, Minutes resolution = 5);

/// Divides the profile pointwise by upsilon; shape preserved exactly.
SupplyProfile scale_supply(const SupplyProfile& profile, double upsilon);

/// tariff.csv: `timestamp,price_gbp_per_kwh`, zero-order held to the market
/// resolution. Returns the grid and the price series.
struct TariffSeries {
  TimeGrid grid;
  std::vector<double> price_gbp_per_kwh;
};
TariffSeries load_tariff_csv(const std::string& path, Minutes resolution = 5);

/// Synthetic dataset standing in for the proprietary consumption data.
struct SynthSpec {
  int households = 10;
  Minutes start = 0;                 // horizon start (aligned to resolution)
  int days = 1;
  std::vector<SupplyCase> day_cases = {SupplyCase::high_flat};  // cycled over days
  Minutes resolution = 5;

  // consumption model: constant baseload plus Poisson-arriving appliance runs
  double baseload_min_kw = 0.1;
  double baseload_max_kw = 0.3;
  double blocks_per_day = 2.0;
  double block_power_min_kw = 1.0;
  double block_power_max_kw = 3.0;
  Minutes block_dur_min = 30;
  Minutes block_dur_max = 120;

  // supply archetypes, kW per household (scaled by household count)
  double case1_level_kw = 1.2;
  double case3_level_kw = 0.3;
  double case2_base_kw = 0.35;
  double case2_amp_kw = 1.0;
  int case2_peak_hour = 13;
};

struct SynthData {
  std::vector<ConsumptionSeries> consumption;
  SupplyProfile supply;
};

/// Deterministic for a given spec and rng seed.
SynthData synth_generate(const SynthSpec& spec, Rng& rng);

// writers (round-trip counterparts of the loaders)
void write_consumption_csv(const std::string& path, const std::vector<ConsumptionSeries>& series);
void write_tariff_csv(const std::string& path, const TariffSeries& tariff);

/// Zero-order-hold resampling of a power series onto a finer grid.
std::vector<double> resample_hold(const std::vector<double>& values, Minutes from_res,
                                  Minutes to_res);

}  // namespace ffem
