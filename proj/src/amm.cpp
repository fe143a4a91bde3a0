#include "ffem/amm.hpp"

#include <algorithm>
#include <cmath>

namespace ffem {

SupplySplit::SupplySplit(TimeGrid g, std::vector<double> total_kw, std::vector<double> essential_kw)
    : grid(g), total(std::move(total_kw)), essential_demand(std::move(essential_kw)) {
  if (static_cast<int>(total.size()) != grid.n_periods() ||
      static_cast<int>(essential_demand.size()) != grid.n_periods())
    throw InputError("SupplySplit: series length does not match the grid");
}

std::vector<double> SupplySplit::flexible_supply() const {
  std::vector<double> s(total.size());
  for (std::size_t i = 0; i < total.size(); ++i) s[i] = total[i] - essential_demand[i];
  return s;
}

double average_power(const Request& request, Minutes resolution) {
  const double d_min_h = to_hours(request.min_duration(resolution));
  const double span_h = to_hours(request.latest - request.earliest);
  return d_min_h / span_h * request.p_max;
}

DemandForecast predict_flexible_consumption(const std::vector<Request>& open_requests,
                                            const TimeGrid& grid) {
  DemandForecast f;
  f.c_fa.assign(grid.n_periods(), 0.0);
  for (const auto& r : open_requests) {
    const double pbar = average_power(r, grid.resolution());
    const int lo = std::max(0, grid.index_of(std::max(r.earliest, grid.start())));
    for (int i = lo; i < grid.n_periods(); ++i) {
      const Minutes t0 = grid.time_of(i);
      if (t0 < r.earliest) continue;
      if (t0 + grid.resolution() > r.latest) break;
      f.c_fa[i] += pbar;
    }
  }
  return f;
}

double alpha(double available_kw, double c_fa_kw) {
  if (c_fa_kw <= 0) return 1.0;  // no outstanding demand means no scarcity
  if (available_kw >= c_fa_kw) return 1.0;
  if (available_kw <= 0) return 0.0;
  return available_kw / c_fa_kw;
}

namespace {
double curve_value(double a, double max_price, PriceCurve curve) {
  const double x = 1.0 - a;
  return curve == PriceCurve::linear ? max_price * x : max_price * x * x;
}
}  // namespace

double buy_price(double a, const MarketConfig& config) {
  return curve_value(a, config.bp_max, config.curve);
}

double sell_price(double a, const MarketConfig& config) {
  return curve_value(a, config.sp_max, config.curve);
}

MarketState::MarketState(TimeGrid grid, MarketConfig config, PricingMode mode,
                         std::vector<double> flexible_supply_kw,
                         const std::vector<Request>& open_requests)
    : grid_(grid),
      config_(config),
      mode_(mode),
      flexible_supply_(std::move(flexible_supply_kw)),
      committed_(grid.n_periods(), 0.0),
      ledger_(grid.n_periods()) {
  if (static_cast<int>(flexible_supply_.size()) != grid_.n_periods())
    throw InputError("MarketState: supply series length does not match the grid");
  c_fa_ = predict_flexible_consumption(open_requests, grid_).c_fa;
  alpha_.assign(grid_.n_periods(), 1.0);
  bp_.assign(grid_.n_periods(), 0.0);
  sp_.assign(grid_.n_periods(), 0.0);
  reprice(0, grid_.n_periods() - 1);
}

void MarketState::reprice(int first, int last) {
  first = std::max(first, 0);
  last = std::min(last, grid_.n_periods() - 1);
  for (int i = first; i <= last; ++i) {
    alpha_[i] = alpha(available(i), c_fa_[i]);
    bp_[i] = buy_price(alpha_[i], config_);
    sp_[i] = sell_price(alpha_[i], config_);
  }
}

bool MarketState::capacity_ok(const Request& request, int start_period) const {
  const int n = request.n_periods(grid_.resolution());
  if (start_period < 0 || start_period + n > grid_.n_periods()) return false;
  for (int i = start_period; i < start_period + n; ++i)
    if (available(i) + 1e-9 < request.p_max) return false;
  return true;
}

double MarketState::slot_cost(const Request& request, int start_period) const {
  const int n = request.n_periods(grid_.resolution());
  const double res_h = grid_.resolution_hours();
  if (mode_ == PricingMode::paper_literal)
    return bp_[start_period] * request.p_max * n * res_h;
  double c = 0;
  for (int i = start_period; i < start_period + n; ++i) c += bp_[i] * request.p_max * res_h;
  return c;
}

double MarketState::slot_receipt(const Request& request, int start_period) const {
  const int n = request.n_periods(grid_.resolution());
  const double res_h = grid_.resolution_hours();
  if (mode_ == PricingMode::paper_literal)
    return sp_[start_period] * request.p_max * n * res_h;
  double c = 0;
  for (int i = start_period; i < start_period + n; ++i) c += sp_[i] * request.p_max * res_h;
  return c;
}

void MarketState::subtract_forecast(const Request& request) {
  const double pbar = average_power(request, grid_.resolution());
  for (int i = 0; i < grid_.n_periods(); ++i) {
    const Minutes t0 = grid_.time_of(i);
    if (t0 < request.earliest) continue;
    if (t0 + grid_.resolution() > request.latest) break;
    c_fa_[i] = std::max(0.0, c_fa_[i] - pbar);
  }
}

double MarketState::commit_request(const Request& request, int start_period) {
  if (!capacity_ok(request, start_period))
    throw InvariantViolation("commit_request: capacity violation for request " + request.id);
  const double cost = slot_cost(request, start_period);
  const double receipt = slot_receipt(request, start_period);
  commit_at_fixed_price(request, start_period, cost, receipt);
  return cost;
}

void MarketState::commit_at_fixed_price(const Request& request, int start_period, double cost,
                                        double receipt) {
  const int n = request.n_periods(grid_.resolution());
  if (start_period < 0 || start_period + n > grid_.n_periods())
    throw InvariantViolation("commit: slot outside the instance grid");
  for (int i = start_period; i < start_period + n; ++i)
    if (available(i) + 1e-9 < request.p_max)
      throw InvariantViolation("commit: capacity violation for request " + request.id);
  ledger_.add({request.id, start_period, n, request.p_max, cost});
  for (int i = start_period; i < start_period + n; ++i) committed_[i] += request.p_max;
  subtract_forecast(request);
  // prices change wherever either the slot or the request's interval touches
  const int lo = std::min(start_period, grid_.index_of(request.earliest));
  const int hi = std::max(start_period + n - 1, grid_.index_of(request.latest));
  reprice(lo, hi);
  payments_ += cost;
  receipts_ += receipt;
}

void MarketState::remove_from_forecast(const Request& request) {
  subtract_forecast(request);
  reprice(grid_.index_of(request.earliest), grid_.index_of(request.latest));
}

bool MarketState::operator==(const MarketState& other) const {
  return flexible_supply_ == other.flexible_supply_ && committed_ == other.committed_ &&
         c_fa_ == other.c_fa_ && alpha_ == other.alpha_ && bp_ == other.bp_ && sp_ == other.sp_;
}

double essential_unit_cost(double u_total_gbp, const std::vector<double>& essential_kw,
                           Minutes resolution) {
  double energy = 0;
  for (double p : essential_kw) energy += p * to_hours(resolution);
  if (energy <= 0) throw InputError("essential_unit_cost: zero essential energy");
  return u_total_gbp / energy;
}

double supply_mix_excess(const std::vector<double>& uncontrollable_kw,
                         const std::vector<double>& essential_kw, double mix,
                         Minutes resolution) {
  if (uncontrollable_kw.size() != essential_kw.size())
    throw InputError("supply_mix_excess: series lengths differ");
  if (mix < 0 || mix > 1) throw InputError("supply_mix_excess: mix must lie in [0,1]");
  const double res_h = to_hours(resolution);
  double e_ess = 0;
  for (double p : essential_kw) e_ess += p * res_h;
  if (mix == 0 || e_ess <= 0) return 0.0;

  auto delivered = [&](double k) {
    double d = 0;
    for (std::size_t i = 0; i < essential_kw.size(); ++i)
      d += std::min(k * uncontrollable_kw[i], essential_kw[i]) * res_h;
    return d;
  };

  // scale factor so the uncontrollable fleet delivers mix * e_ess
  double hi = 1.0;
  while (delivered(hi) < mix * e_ess) {
    hi *= 2.0;
    if (hi > 1e12) throw InputError("supply_mix_excess: requested mix unattainable with this profile");
  }
  double lo = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (delivered(mid) < mix * e_ess ? lo : hi) = mid;
  }
  const double k = hi;
  double excess = 0;
  for (std::size_t i = 0; i < essential_kw.size(); ++i)
    excess += std::max(0.0, k * uncontrollable_kw[i] - essential_kw[i]) * res_h;
  return excess;
}

double affordability_cutoff(double comparator_cost_gbp, double essential_kwh,
                            double controllable_share) {
  if (controllable_share <= 0 || controllable_share > 1)
    throw InputError("affordability_cutoff: controllable share must lie in (0,1]");
  if (essential_kwh <= 0) throw InputError("affordability_cutoff: essential energy must be positive");
  return comparator_cost_gbp / (controllable_share * essential_kwh);
}

double tariff_cost(const std::vector<double>& essential_kw,
                   const std::vector<double>& price_gbp_per_kwh, Minutes resolution) {
  if (price_gbp_per_kwh.size() < essential_kw.size())
    throw InputError("tariff_cost: tariff does not cover all periods");
  double total = 0;
  for (std::size_t i = 0; i < essential_kw.size(); ++i)
    total += essential_kw[i] * to_hours(resolution) * price_gbp_per_kwh[i];
  return total;
}

}  // namespace ffem
