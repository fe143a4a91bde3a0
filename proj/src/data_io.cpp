#include "ffem/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ffem {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

double parse_number(const std::string& s, int row) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw InputError("row " + std::to_string(row) + ": bad numeric field '" + s + "'");
  }
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace

std::vector<double> resample_hold(const std::vector<double>& values, Minutes from_res,
                                  Minutes to_res) {
  if (from_res % to_res != 0)
    throw InputError("resample_hold: target resolution must divide the source resolution");
  const auto factor = static_cast<std::size_t>(from_res / to_res);
  std::vector<double> out;
  out.reserve(values.size() * factor);
  for (double v : values)
    for (std::size_t i = 0; i < factor; ++i) out.push_back(v);
  return out;
}

ConsumptionLoad load_consumption_csv(const std::string& path, Minutes resolution) {
  auto lines = read_lines(path);
  if (lines.empty() || split_csv_line(lines[0]) != std::vector<std::string>{"timestamp", "household_id", "power_kw"})
    throw InputError(path + ": expected header 'timestamp,household_id,power_kw'");

  std::map<std::string, std::map<Minutes, double>> rows;  // household -> time -> kW
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const int row = static_cast<int>(i) + 1;
    auto f = split_csv_line(lines[i]);
    if (f.size() != 3) throw InputError(path + ": row " + std::to_string(row) + ": expected 3 fields");
    const Minutes t = parse_timestamp(f[0]);
    const double p = parse_number(f[2], row);
    if (p < 0) throw InputError(path + ": row " + std::to_string(row) + ": negative power");
    auto [it, inserted] = rows[f[1]].emplace(t, p);
    if (!inserted)
      throw InputError(path + ": row " + std::to_string(row) + ": duplicate (timestamp, household)");
  }

  ConsumptionLoad load;
  const Minutes gap_limit = 30;
  for (auto& [hid, samples] : rows) {
    const Minutes start = samples.begin()->first;
    const Minutes end = samples.rbegin()->first + resolution;
    if ((start % resolution) != 0)
      throw InputError(path + ": household " + hid + ": timestamps not aligned to resolution");
    TimeGrid grid(start, end, resolution);
    std::vector<double> power(grid.n_periods(), 0.0);
    std::vector<bool> bad_day((end - start) / kMinutesPerDay + 2, false);
    double held = samples.begin()->second;
    Minutes last_seen = start;
    for (int i = 0; i < grid.n_periods(); ++i) {
      const Minutes t = grid.time_of(i);
      auto it = samples.find(t);
      if (it != samples.end()) {
        held = it->second;
        last_seen = t;
        power[i] = held;
      } else if (t - last_seen <= gap_limit) {
        power[i] = held;  // zero-order hold across a short gap
      } else {
        bad_day[static_cast<std::size_t>((t - start) / kMinutesPerDay)] = true;
        power[i] = held;  // provisional; zeroed below with the rest of the day
      }
    }
    for (int i = 0; i < grid.n_periods(); ++i) {
      const Minutes t = grid.time_of(i);
      const auto day = static_cast<std::size_t>((t - start) / kMinutesPerDay);
      if (bad_day[day]) power[i] = 0.0;
    }
    for (std::size_t d = 0; d < bad_day.size(); ++d)
      if (bad_day[d])
        load.dropped_days[hid].push_back(start + static_cast<Minutes>(d) * kMinutesPerDay);
    load.series.emplace_back(hid, grid, std::move(power));
  }
  return load;
}

SupplyProfile load_supply_csv(const std::string& path, Minutes resolution) {
  auto lines = read_lines(path);
  if (lines.empty() || split_csv_line(lines[0]) != std::vector<std::string>{"timestamp", "fuel_type", "generation_mw"})
    throw InputError(path + ": expected header 'timestamp,fuel_type,generation_mw'");

  const Minutes src_res = 30;
  std::map<Minutes, std::map<std::string, double>> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const int row = static_cast<int>(i) + 1;
    auto f = split_csv_line(lines[i]);
    if (f.size() != 3) throw InputError(path + ": row " + std::to_string(row) + ": expected 3 fields");
    const Minutes t = parse_timestamp(f[0]);
    if (t % src_res != 0)
      throw InputError(path + ": row " + std::to_string(row) + ": timestamp not on the 30-minute grid");
    const double mw = parse_number(f[2], row);
    if (mw < 0) throw InputError(path + ": row " + std::to_string(row) + ": negative generation");
    auto [it, inserted] = rows[t].emplace(f[1], mw);
    if (!inserted)
      throw InputError(path + ": row " + std::to_string(row) + ": duplicate (timestamp, fuel)");
  }
  if (rows.empty()) throw InputError(path + ": no data rows");

  const Minutes start = rows.begin()->first;
  const Minutes end = rows.rbegin()->first + src_res;
  const auto n_src = static_cast<std::size_t>((end - start) / src_res);
  std::map<std::string, std::vector<double>> per_fuel;
  std::vector<double> total(n_src, 0.0);
  std::map<std::string, double> held;
  Minutes last_seen = start;
  for (std::size_t i = 0; i < n_src; ++i) {
    const Minutes t = start + static_cast<Minutes>(i) * src_res;
    auto it = rows.find(t);
    if (it != rows.end()) {
      for (const auto& [fuel, mw] : it->second) held[fuel] = mw;
      last_seen = t;
    } else if (t - last_seen > hours(2)) {
      throw InputError(path + ": gap longer than 2h at " + format_timestamp(t));
    }
    for (const auto& [fuel, mw] : held) {
      auto& v = per_fuel[fuel];
      v.resize(n_src, 0.0);
      v[i] = mw * 1000.0;  // MW -> kW
      total[i] += mw * 1000.0;
    }
  }

  SupplyProfile profile{TimeGrid(start, end, resolution), resample_hold(total, src_res, resolution), {}, std::nullopt};
  for (auto& [fuel, v] : per_fuel)
    profile.source_mix_kw[fuel] = resample_hold(v, src_res, resolution);
  return profile;
}

SupplyProfile scale_supply(const SupplyProfile& profile, double upsilon) {
  if (upsilon <= 0) throw InputError("scale_supply: upsilon must be positive");
  SupplyProfile out = profile;
  for (double& v : out.total_kw) v /= upsilon;
  for (auto& [fuel, series] : out.source_mix_kw)
    for (double& v : series) v /= upsilon;
  return out;
}

TariffSeries load_tariff_csv(const std::string& path, Minutes resolution) {
  auto lines = read_lines(path);
  if (lines.empty() || split_csv_line(lines[0]) != std::vector<std::string>{"timestamp", "price_gbp_per_kwh"})
    throw InputError(path + ": expected header 'timestamp,price_gbp_per_kwh'");
  std::map<Minutes, double> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const int row = static_cast<int>(i) + 1;
    auto f = split_csv_line(lines[i]);
    if (f.size() != 2) throw InputError(path + ": row " + std::to_string(row) + ": expected 2 fields");
    const Minutes t = parse_timestamp(f[0]);
    if (t % resolution != 0)
      throw InputError(path + ": row " + std::to_string(row) + ": timestamp not aligned to resolution");
    rows[t] = parse_number(f[1], row);
  }
  if (rows.empty()) throw InputError(path + ": no data rows");

  // infer the native spacing, hold prices forward, reject long coverage gaps
  Minutes spacing = resolution;
  if (rows.size() > 1) spacing = std::next(rows.begin())->first - rows.begin()->first;
  const Minutes start = rows.begin()->first;
  const Minutes end = rows.rbegin()->first + spacing;
  TimeGrid grid(start, end, resolution);
  std::vector<double> prices(grid.n_periods(), 0.0);
  double held = rows.begin()->second;
  Minutes last_seen = start;
  for (int i = 0; i < grid.n_periods(); ++i) {
    const Minutes t = grid.time_of(i);
    auto it = rows.find(t);
    if (it != rows.end()) {
      held = it->second;
      last_seen = t;
    } else if (t - last_seen > std::max<Minutes>(spacing, hours(2))) {
      throw InputError(path + ": tariff coverage gap at " + format_timestamp(t));
    }
    prices[i] = held;
  }
  return {grid, std::move(prices)};
}

SynthData synth_generate(const SynthSpec& spec, Rng& rng) {
  if (spec.households <= 0 || spec.days <= 0) throw InputError("SynthSpec: empty scenario");
  if (spec.start % spec.resolution != 0) throw InputError("SynthSpec: start not aligned");
  const Minutes end = spec.start + static_cast<Minutes>(spec.days) * kMinutesPerDay;
  TimeGrid grid(spec.start, end, spec.resolution);
  const int n = grid.n_periods();

  std::vector<ConsumptionSeries> consumption;
  for (int h = 0; h < spec.households; ++h) {
    std::vector<double> power(n, 0.0);
    const double base = rng.uniform(spec.baseload_min_kw, spec.baseload_max_kw);
    for (int i = 0; i < n; ++i) power[i] = base;
    for (int day = 0; day < spec.days; ++day) {
      const int blocks = rng.poisson(spec.blocks_per_day);
      for (int b = 0; b < blocks; ++b) {
        const double p = rng.uniform(spec.block_power_min_kw, spec.block_power_max_kw);
        Minutes dur = spec.block_dur_min +
                      rng.uniform_int((spec.block_dur_max - spec.block_dur_min) / spec.resolution + 1) *
                          spec.resolution;
        const Minutes day_start = spec.start + static_cast<Minutes>(day) * kMinutesPerDay;
        const Minutes latest_start = kMinutesPerDay - dur;
        const Minutes offset =
            rng.uniform_int(latest_start / spec.resolution + 1) * spec.resolution;
        const int first = grid.index_of(day_start + offset);
        const int count = static_cast<int>(dur / spec.resolution);
        for (int i = first; i < first + count && i < n; ++i) power[i] += p;
      }
    }
    consumption.emplace_back("h" + std::to_string(h), grid, std::move(power));
  }

  std::vector<double> supply(n, 0.0);
  const double hh = spec.households;
  for (int day = 0; day < spec.days; ++day) {
    const SupplyCase c = spec.day_cases.empty()
                             ? SupplyCase::high_flat
                             : spec.day_cases[static_cast<std::size_t>(day) % spec.day_cases.size()];
    const int per_day = static_cast<int>(kMinutesPerDay / spec.resolution);
    for (int j = 0; j < per_day; ++j) {
      const int i = day * per_day + j;
      const double hour = to_hours(static_cast<Minutes>(j) * spec.resolution);
      switch (c) {
        case SupplyCase::high_flat:
          supply[i] = spec.case1_level_kw * hh;
          break;
        case SupplyCase::low_flat:
          supply[i] = spec.case3_level_kw * hh;
          break;
        case SupplyCase::variable: {
          const double phase = (hour - spec.case2_peak_hour) * (2.0 * M_PI / 24.0);
          supply[i] = std::max(0.0, (spec.case2_base_kw + spec.case2_amp_kw * std::cos(phase)) * hh);
          break;
        }
      }
    }
  }
  SynthData data{std::move(consumption), SupplyProfile{grid, std::move(supply), {}, std::nullopt}};
  if (spec.day_cases.size() == 1) data.supply.case_label = spec.day_cases[0];
  return data;
}

void write_consumption_csv(const std::string& path, const std::vector<ConsumptionSeries>& series) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << "timestamp,household_id,power_kw\n";
  char buf[64];
  for (const auto& s : series)
    for (int i = 0; i < s.grid.n_periods(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", s.power_kw[i]);
      out << format_timestamp(s.grid.time_of(i)) << ',' << s.household_id << ',' << buf << '\n';
    }
}

void write_tariff_csv(const std::string& path, const TariffSeries& tariff) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << "timestamp,price_gbp_per_kwh\n";
  char buf[64];
  for (int i = 0; i < tariff.grid.n_periods(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", tariff.price_gbp_per_kwh[i]);
    out << format_timestamp(tariff.grid.time_of(i)) << ',' << buf << '\n';
  }
}

}  // namespace ffem
