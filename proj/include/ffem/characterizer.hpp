#pragma once

#include <string>
#include <vector>

#include "ffem/core.hpp"

namespace ffem {

/// One household's metered power on a time grid.
struct ConsumptionSeries {
  std::string household_id;
  TimeGrid grid;
  std::vector<double> power_kw;

  ConsumptionSeries(std::string id, TimeGrid g, std::vector<double> kw);
};

struct CharacterizerParams {
  double p_base = 0.25;       // kW, quantisation level; baseload stays essential
  double p_threshold = 1.0;   // kW above the local baseline to count as flexible
  Minutes t_threshold = 30;   // minimum excursion duration

  void validate(Minutes resolution) const;
};

/// A sustained above-threshold excursion, a candidate flexible appliance run.
struct FlexibleBlock {
  std::string household_id;
  Minutes start = 0;
  Minutes duration = 0;       // total above-threshold time
  double mean_power = 0;      // kW above the baseline
  double energy = 0;          // kWh, mean_power * duration
};

/** Splits a consumption series into essential and flexible consumption.
 *
 * Power is quantized to multiples of p_base, then periods whose quantized
 * power exceeds the local pre-excursion baseline by at least p_threshold are
 * collected into excursions. Excursions closer together than t_threshold
 * merge; a merged group shorter than t_threshold (a short spike) stays
 * essential. The decomposition is lossless: essential_t + flexible_t equals
 * the input at every period.
 */
struct CharacterizeResult {
  ConsumptionSeries essential;
  std::vector<FlexibleBlock> blocks;
};

CharacterizeResult characterize(const ConsumptionSeries& series, const CharacterizerParams& params);

/// Turns flexible blocks into market requests with sigma hours of slack and a
/// willingness to pay of bp_h_max per kWh.
std::vector<Request> blocks_to_requests(const std::vector<FlexibleBlock>& blocks, Minutes sigma,
                                        double bp_h_max);

}  // namespace ffem
