#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ffem {

/// Raised on malformed external input (files, configs, CLI arguments).
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when an internal market invariant is violated (engine bug signal).
struct InvariantViolation : std::logic_error {
  using std::logic_error::logic_error;
};

/// Timestamps and durations are whole minutes (UTC, minutes since Unix epoch).
using Minutes = std::int64_t;

constexpr Minutes kMinutesPerHour = 60;
constexpr Minutes kMinutesPerDay = 24 * kMinutesPerHour;

inline constexpr Minutes hours(double h) {
  return static_cast<Minutes>(h * 60.0 + (h >= 0 ? 0.5 : -0.5));
}
inline constexpr double to_hours(Minutes m) { return static_cast<double>(m) / 60.0; }

/// Parses "YYYY-MM-DDTHH:MM[:SS]Z" (or with a space separator) to minutes since epoch.
Minutes parse_timestamp(const std::string& iso);
/// Formats minutes since epoch as "YYYY-MM-DDTHH:MM:00Z".
std::string format_timestamp(Minutes t);

/** The discrete time grid of one market instance (or data horizon).
 *
 * The window [start, end) is split into equal periods of `resolution` minutes.
 * Period i covers [start + i*res, start + (i+1)*res).
 */
class TimeGrid {
 public:
  TimeGrid(Minutes start, Minutes end, Minutes resolution);

  Minutes start() const { return start_; }
  Minutes end() const { return end_; }
  Minutes resolution() const { return res_; }
  int n_periods() const { return n_; }
  double resolution_hours() const { return to_hours(res_); }

  /// Start time of period i (i may be out of range; no clamping).
  Minutes time_of(int i) const { return start_ + static_cast<Minutes>(i) * res_; }
  /// Period index containing time t; t need not lie inside the grid.
  int index_of(Minutes t) const;
  bool contains(Minutes t) const { return t >= start_ && t < end_; }

 private:
  Minutes start_, end_, res_;
  int n_;
};

enum class PriceCurve { linear, quadratic };
enum class PricingMode { per_period, paper_literal };

/// Market design parameters: instance window/spacing/resolution and price caps.
struct MarketConfig {
  Minutes window = hours(24);   // how far ahead energy can be booked
  Minutes spacing = hours(3);   // time between consecutive instance starts
  Minutes resolution = 5;       // minimum bookable block, minutes
  double bp_max = 1.0;          // £/kWh at full scarcity
  double sp_max = 1.0;          // £/kWh paid to sellers at full scarcity
  PriceCurve curve = PriceCurve::linear;
  double gamma_target = 0.95;

  void validate() const;
};

/** A flexible appliance's demand: energy over a valid interval, power bounds
 *  and a budget. Immutable once constructed; construction validates.
 */
struct Request {
  std::string id;
  std::string household_id;
  Minutes earliest = 0;   // E^r
  Minutes latest = 0;     // L^r
  double energy = 0;      // kWh
  double p_min = 0;       // kW; carried in the data model, unused by allocation
  double p_max = 0;       // kW
  double budget = 0;      // £

  void validate() const;

  /// Minimum delivery duration at full power, rounded up to whole periods.
  Minutes min_duration(Minutes resolution) const;
  /// Number of delivery periods at full power.
  int n_periods(Minutes resolution) const;
  /// Slack beyond the minimum delivery duration.
  Minutes flexibility(Minutes resolution) const;
};

/// A supplier's availability of energy over an interval with a revenue floor.
struct Offer {
  std::string id;
  std::string agent_id;
  Minutes earliest = 0;
  Minutes latest = 0;
  double energy = 0;         // kWh
  double p_min = 0;          // kW
  double p_max = 0;          // kW
  double revenue_floor = 0;  // £, I^o
  bool controllable = false;

  void validate() const;
};

/// Running reliability history for one household.
struct HouseholdRecord {
  std::string id;
  double served_kwh = 0;
  double requested_kwh = 0;

  /// Energy-weighted historic success; 1 with no history (no advantage until
  /// history accrues).
  double gamma() const { return requested_kwh > 0 ? served_kwh / requested_kwh : 1.0; }
};

/// One committed booking: a contiguous fixed-power block.
struct LedgerEntry {
  std::string request_id;
  int start_period = 0;
  int n_periods = 0;
  double power_kw = 0;
  double cost = 0;
};

/// Append-only record of commitments plus the implied scheduled power S^b_t.
class CommitmentLedger {
 public:
  explicit CommitmentLedger(int n_periods) : scheduled_(n_periods, 0.0) {}

  void add(const LedgerEntry& e);
  const std::vector<LedgerEntry>& entries() const { return entries_; }
  const std::vector<double>& scheduled_power() const { return scheduled_; }

  /// Recomputes S^b_t from entries; used to check ledger consistency.
  std::vector<double> recompute_scheduled() const;

 private:
  std::vector<LedgerEntry> entries_;
  std::vector<double> scheduled_;
};

/// Requests from the waiting area that are live for the given instance window.
std::vector<Request> relevant_requests(const std::vector<Request>& waiting_area,
                                       const TimeGrid& grid);

/// Grid of the instance live at `clock`: start = largest multiple of the
/// spacing <= clock (half-open boundary), end = start + window.
TimeGrid advance_instance(const MarketConfig& config, Minutes clock);

}  // namespace ffem
