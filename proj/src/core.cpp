#include "ffem/core.hpp"

#include <cmath>
#include <cstdio>

namespace ffem {

namespace {

// Days since 1970-01-01 for a civil date (Howard Hinnant's algorithm).
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yr = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yr + (m <= 2));
}

}  // namespace

Minutes parse_timestamp(const std::string& iso) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char sep = 0;
  int n = std::sscanf(iso.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep, &h, &mi, &s);
  if (n < 6 || (sep != 'T' && sep != ' '))
    throw InputError("bad timestamp: '" + iso + "'");
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || s > 59)
    throw InputError("bad timestamp: '" + iso + "'");
  if (n >= 7 && s != 0)
    throw InputError("sub-minute timestamp not representable: '" + iso + "'");
  return days_from_civil(y, mo, d) * kMinutesPerDay + h * kMinutesPerHour + mi;
}

std::string format_timestamp(Minutes t) {
  std::int64_t days = t / kMinutesPerDay;
  Minutes rem = t % kMinutesPerDay;
  if (rem < 0) {
    rem += kMinutesPerDay;
    --days;
  }
  int y, m, d;
  civil_from_days(days, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:00Z", y, m, d,
                static_cast<int>(rem / 60), static_cast<int>(rem % 60));
  return buf;
}

TimeGrid::TimeGrid(Minutes start, Minutes end, Minutes resolution)
    : start_(start), end_(end), res_(resolution) {
  if (end <= start) throw InputError("TimeGrid: end must be after start");
  if (resolution <= 0) throw InputError("TimeGrid: resolution must be positive");
  if ((end - start) % resolution != 0)
    throw InputError("TimeGrid: span is not a multiple of the resolution");
  n_ = static_cast<int>((end - start) / resolution);
}

int TimeGrid::index_of(Minutes t) const {
  Minutes d = t - start_;
  // floor division for times before the grid start
  return static_cast<int>(d >= 0 ? d / res_ : -((-d + res_ - 1) / res_));
}

void MarketConfig::validate() const {
  if (spacing <= 0 || window < spacing)
    throw InputError("MarketConfig: require window >= spacing > 0");
  if (resolution <= 0 || window % resolution != 0 || spacing % resolution != 0)
    throw InputError("MarketConfig: resolution must divide window and spacing");
  if (bp_max <= 0) throw InputError("MarketConfig: bp_max must be positive");
  if (sp_max < 0) throw InputError("MarketConfig: sp_max must be non-negative");
  if (gamma_target <= 0 || gamma_target > 1)
    throw InputError("MarketConfig: gamma_target must lie in (0,1]");
}

void Request::validate() const {
  if (latest <= earliest) throw InputError("Request " + id + ": latest must exceed earliest");
  if (energy <= 0) throw InputError("Request " + id + ": energy must be positive");
  if (p_min <= 0 || p_max < p_min)
    throw InputError("Request " + id + ": require 0 < p_min <= p_max");
  if (budget < 0) throw InputError("Request " + id + ": budget must be non-negative");
  // satisfiable within its own window at full power
  double need_hours = energy / p_max;
  if (need_hours > to_hours(latest - earliest) + 1e-9)
    throw InputError("Request " + id + ": window too short for requested energy");
}

Minutes Request::min_duration(Minutes resolution) const {
  double raw_min = energy / p_max * 60.0;
  auto periods = static_cast<Minutes>(std::ceil(raw_min / static_cast<double>(resolution) - 1e-9));
  if (periods < 1) periods = 1;
  return periods * resolution;
}

int Request::n_periods(Minutes resolution) const {
  return static_cast<int>(min_duration(resolution) / resolution);
}

Minutes Request::flexibility(Minutes resolution) const {
  Minutes sigma = (latest - earliest) - min_duration(resolution);
  return sigma > 0 ? sigma : 0;
}

void Offer::validate() const {
  if (latest <= earliest) throw InputError("Offer " + id + ": latest must exceed earliest");
  if (energy <= 0) throw InputError("Offer " + id + ": energy must be positive");
  if (p_min <= 0 || p_max < p_min)
    throw InputError("Offer " + id + ": require 0 < p_min <= p_max");
  if (revenue_floor < 0) throw InputError("Offer " + id + ": revenue floor must be non-negative");
}

void CommitmentLedger::add(const LedgerEntry& e) {
  if (e.start_period < 0 || e.start_period + e.n_periods > static_cast<int>(scheduled_.size()))
    throw InvariantViolation("ledger entry outside the grid");
  entries_.push_back(e);
  for (int i = e.start_period; i < e.start_period + e.n_periods; ++i)
    scheduled_[i] += e.power_kw;
}

std::vector<double> CommitmentLedger::recompute_scheduled() const {
  std::vector<double> s(scheduled_.size(), 0.0);
  for (const auto& e : entries_)
    for (int i = e.start_period; i < e.start_period + e.n_periods; ++i) s[i] += e.power_kw;
  return s;
}

std::vector<Request> relevant_requests(const std::vector<Request>& waiting_area,
                                       const TimeGrid& grid) {
  std::vector<Request> out;
  const Minutes ms = grid.start(), me = grid.end();
  for (const auto& r : waiting_area) {
    const Minutes d = r.min_duration(grid.resolution());
    // Live iff the request's window overlaps the instance enough to host a
    // delivery, or extends past the window end (it then waits for the next
    // instance if unserved). This is the union of spans / fully-inside /
    // straddles-the-end, closed so that enlarging the window never removes a
    // relevant request.
    if (r.earliest <= me && r.latest >= ms + d) out.push_back(r);
  }
  return out;
}

TimeGrid advance_instance(const MarketConfig& config, Minutes clock) {
  if (clock % config.resolution != 0)
    throw InputError("clock " + format_timestamp(clock) + " is not aligned to the market resolution");
  Minutes q = clock / config.spacing;
  if (clock < 0 && clock % config.spacing != 0) --q;  // floor
  const Minutes start = q * config.spacing;
  return TimeGrid(start, start + config.window, config.resolution);
}

}  // namespace ffem
