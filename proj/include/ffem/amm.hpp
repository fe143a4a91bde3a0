#pragma once

#include <optional>
#include <vector>

#include "ffem/core.hpp"

namespace ffem {

/// Supply available to flexible appliances: S^fa_t = S^T_t - C^B_t pointwise.
struct SupplySplit {
  TimeGrid grid;
  std::vector<double> total;             // S^T_t, kW
  std::vector<double> essential_demand;  // C^B_t, kW

  SupplySplit(TimeGrid g, std::vector<double> total_kw, std::vector<double> essential_kw);
  std::vector<double> flexible_supply() const;  // S^fa_t
};

/// Predicted outstanding flexible consumption C^fa_t, kW per period.
struct DemandForecast {
  std::vector<double> c_fa;
};

/// Average power a request would draw if equally likely to run anywhere in
/// its valid interval.
double average_power(const Request& request, Minutes resolution);

DemandForecast predict_flexible_consumption(const std::vector<Request>& open_requests,
                                            const TimeGrid& grid);

/// Scarcity ratio: 1 when supply covers predicted demand (including the
/// no-demand case), else the servable fraction, floored at 0.
double alpha(double available_kw, double c_fa_kw);

/// Buy price, strictly decreasing in alpha with f(0)=bp_max, f(1)=0.
double buy_price(double a, const MarketConfig& config);
/// Sell price offered to controllable suppliers; 0 at alpha=1, sp_max at 0.
/// Uses the same curve shape as the buy price so that pass-through
/// (sp_max == bp_max) keeps buyer payments equal to seller receipts.
double sell_price(double a, const MarketConfig& config);

/** One live market instance: remaining supply, demand forecast, price series
 *  and the commitment ledger. Owned and mutated by a single engine thread.
 */
class MarketState {
 public:
  MarketState(TimeGrid grid, MarketConfig config, PricingMode mode,
              std::vector<double> flexible_supply_kw,
              const std::vector<Request>& open_requests);

  const TimeGrid& grid() const { return grid_; }
  const MarketConfig& config() const { return config_; }
  PricingMode pricing_mode() const { return mode_; }
  const CommitmentLedger& ledger() const { return ledger_; }

  double flexible_supply(int i) const { return flexible_supply_[i]; }
  double available(int i) const { return flexible_supply_[i] - committed_[i]; }
  const std::vector<double>& committed() const { return committed_; }
  const std::vector<double>& c_fa() const { return c_fa_; }
  const std::vector<double>& alpha_series() const { return alpha_; }
  const std::vector<double>& bp() const { return bp_; }
  const std::vector<double>& sp() const { return sp_; }

  /// True if the request can draw full power on [start, start+n) periods.
  bool capacity_ok(const Request& request, int start_period) const;

  /// Cost of delivering the request starting at the given period, at current
  /// prices (per-period or paper-literal depending on the pricing mode).
  double slot_cost(const Request& request, int start_period) const;
  /// What sellers receive for the same delivery at current prices.
  double slot_receipt(const Request& request, int start_period) const;

  /** Books the request: reduces available supply over the slot, removes the
   *  request's forecast contribution and reprices affected periods.
   *  Returns the cost charged (quoted at pre-commit prices). Throws
   *  InvariantViolation on a capacity violation.
   */
  double commit_request(const Request& request, int start_period);

  /// Like commit_request but with externally fixed cost/receipt (used when a
  /// global solver priced the schedule against a frozen price series).
  void commit_at_fixed_price(const Request& request, int start_period, double cost,
                             double receipt);

  /// Drops a request's contribution from the forecast (expired or withdrawn).
  void remove_from_forecast(const Request& request);

  double buyer_payments() const { return payments_; }
  double seller_receipts() const { return receipts_; }

  bool operator==(const MarketState& other) const;

 private:
  void reprice(int first, int last);  // inclusive period range, clamped
  void subtract_forecast(const Request& request);

  TimeGrid grid_;
  MarketConfig config_;
  PricingMode mode_;
  std::vector<double> flexible_supply_;
  std::vector<double> committed_;
  std::vector<double> c_fa_;
  std::vector<double> alpha_, bp_, sp_;
  CommitmentLedger ledger_;
  double payments_ = 0;
  double receipts_ = 0;
};

/// Flat unit price recovering the cost U of controllable supply across all
/// essential energy.
double essential_unit_cost(double u_total_gbp, const std::vector<double>& essential_kw,
                           Minutes resolution);

/** Excess energy (kWh) generated when the uncontrollable profile is scaled so
 *  it delivers `mix` of the total essential energy, the rest coming from
 *  controllable supply (which produces no excess).
 */
double supply_mix_excess(const std::vector<double>& uncontrollable_kw,
                         const std::vector<double>& essential_kw, double mix,
                         Minutes resolution);

/// Break-even unit price for controllable suppliers against a comparator
/// tariff bill, with uncontrollable energy priced at zero.
double affordability_cutoff(double comparator_cost_gbp, double essential_kwh,
                            double controllable_share);

/// Bill for an essential consumption series under a per-period tariff.
double tariff_cost(const std::vector<double>& essential_kw, const std::vector<double>& price_gbp_per_kwh,
                   Minutes resolution);

/// An offer is attracted by the sell price when its floor is covered.
inline bool offer_acceptable(const Offer& offer, double sp_gbp_per_kwh) {
  return offer.revenue_floor <= sp_gbp_per_kwh * offer.energy + 1e-12;
}

}  // namespace ffem
