#include "ffem/characterizer.hpp"

#include <algorithm>
#include <cmath>

namespace ffem {

ConsumptionSeries::ConsumptionSeries(std::string id, TimeGrid g, std::vector<double> kw)
    : household_id(std::move(id)), grid(g), power_kw(std::move(kw)) {
  if (static_cast<int>(power_kw.size()) != grid.n_periods())
    throw InputError("ConsumptionSeries " + household_id + ": length does not match the grid");
  for (double p : power_kw)
    if (p < 0) throw InputError("ConsumptionSeries " + household_id + ": negative power");
}

void CharacterizerParams::validate(Minutes resolution) const {
  if (p_base <= 0 || p_threshold <= 0 || t_threshold <= 0)
    throw InputError("CharacterizerParams: all parameters must be positive");
  if (t_threshold % resolution != 0)
    throw InputError("CharacterizerParams: t_threshold must be a multiple of the resolution");
  if (resolution > t_threshold)
    throw InputError("CharacterizerParams: series resolution exceeds t_threshold");
}

namespace {

struct Segment {
  int first = 0, last = 0;  // inclusive period range
  double baseline = 0;      // quantized power before the excursion
};

}  // namespace

CharacterizeResult characterize(const ConsumptionSeries& series, const CharacterizerParams& params) {
  const TimeGrid& grid = series.grid;
  params.validate(grid.resolution());
  const int n = grid.n_periods();
  const double res_h = grid.resolution_hours();

  // Quantize down to multiples of p_base; the remainder is always essential.
  std::vector<double> q(n);
  for (int i = 0; i < n; ++i)
    q[i] = std::floor(series.power_kw[i] / params.p_base + 1e-9) * params.p_base;

  // Excursion periods: quantized power at least p_threshold above the local
  // pre-excursion baseline.
  std::vector<Segment> segments;
  double baseline = 0;
  bool in_seg = false;
  for (int i = 0; i < n; ++i) {
    if (q[i] - baseline >= params.p_threshold - 1e-9) {
      if (!in_seg) {
        segments.push_back({i, i, baseline});
        in_seg = true;
      } else {
        segments.back().last = i;
      }
    } else {
      baseline = q[i];
      in_seg = false;
    }
  }

  // Merge excursions separated by less than t_threshold, then keep groups
  // whose total above-threshold time reaches t_threshold.
  std::vector<std::vector<Segment>> groups;
  for (const auto& s : segments) {
    if (!groups.empty()) {
      const Segment& prev = groups.back().back();
      const Minutes gap = grid.time_of(s.first) - grid.time_of(prev.last + 1);
      if (gap < params.t_threshold) {
        groups.back().push_back(s);
        continue;
      }
    }
    groups.push_back({s});
  }

  std::vector<double> flexible(n, 0.0);
  std::vector<FlexibleBlock> blocks;
  for (const auto& g : groups) {
    Minutes dur = 0;
    for (const auto& s : g) dur += static_cast<Minutes>(s.last - s.first + 1) * grid.resolution();
    if (dur < params.t_threshold) continue;  // short spike, stays essential
    double energy = 0;
    for (const auto& s : g)
      for (int i = s.first; i <= s.last; ++i) {
        flexible[i] = q[i] - s.baseline;
        energy += flexible[i] * res_h;
      }
    FlexibleBlock b;
    b.household_id = series.household_id;
    b.start = grid.time_of(g.front().first);
    b.duration = dur;
    b.energy = energy;
    b.mean_power = energy / to_hours(dur);
    blocks.push_back(b);
  }

  std::vector<double> essential(n);
  for (int i = 0; i < n; ++i) essential[i] = series.power_kw[i] - flexible[i];
  return {ConsumptionSeries(series.household_id, grid, std::move(essential)), std::move(blocks)};
}

std::vector<Request> blocks_to_requests(const std::vector<FlexibleBlock>& blocks, Minutes sigma,
                                        double bp_h_max) {
  if (sigma < 0) throw InputError("blocks_to_requests: sigma must be non-negative");
  std::vector<Request> out;
  out.reserve(blocks.size());
  int seq = 0;
  for (const auto& b : blocks) {
    Request r;
    r.id = b.household_id + "#" + std::to_string(seq++);
    r.household_id = b.household_id;
    r.earliest = b.start;
    r.latest = b.start + b.duration + sigma;
    r.energy = b.energy;
    r.p_min = b.mean_power;
    r.p_max = b.mean_power;
    r.budget = bp_h_max * b.energy;
    r.validate();
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace ffem
