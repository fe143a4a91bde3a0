#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ffem/amm.hpp"
#include "ffem/core.hpp"
#include "ffem/rng.hpp"

namespace ffem {

/// A booked delivery slot within one market instance.
struct Slot {
  int start_period = 0;
  int n_periods = 0;
  double power_kw = 0;
  double cost = 0;
};

/// Per-request result; delivery is all-or-nothing.
struct AllocationOutcome {
  std::string request_id;
  std::string household_id;
  bool served = false;
  double delivered_kwh = 0;
  std::optional<Slot> slot;
};

/// Single-factor fairness policy over historic household success.
struct FairnessPolicy {
  double gamma_floor = 1e-3;  // guards 1/gamma at gamma = 0
  double scale = 1.0;         // pure rescaling; relative weights preserved
};

/** Probabilistic success score per request: each request inherits its
 *  household's normalized 1/gamma weight, so scores over distinct households
 *  sum to `scale`.
 */
std::map<std::string, double> fairness_scores(const std::vector<Request>& requests,
                                              const std::map<std::string, HouseholdRecord>& households,
                                              const FairnessPolicy& policy);

/// One weighted categorical draw from the backlog; returns an index into it.
std::size_t draw_next_request(const std::vector<Request>& backlog,
                              const std::map<std::string, double>& scores, Rng& rng);

/// Cheapest feasible slot for the request at current prices, or nothing.
/// Equal-cost slots resolve to the earliest start.
std::optional<Slot> find_cheapest_slot(const Request& request, const MarketState& state);

/** Fair Play: repeatedly draw a request with probability proportional to its
 *  fairness score, book it the cheapest feasible slot, and reprice. Requests
 *  proven infeasible are parked; they are reconsidered after each successful
 *  commit (prices may have moved) and the loop ends when the backlog is empty
 *  or everything left is proven infeasible against an unchanged state.
 */
std::vector<AllocationOutcome> fair_play_run(MarketState& state, const std::vector<Request>& requests,
                                             const std::map<std::string, HouseholdRecord>& households,
                                             const FairnessPolicy& policy, Rng& rng);

enum class SolveObjective { volume, revenue };

struct SolverOptions {
  bool allow_heuristic = false;
  int exact_max_requests = 30;
  int exact_max_periods = 288;
};

struct SolveResult {
  std::vector<AllocationOutcome> outcomes;
  double objective = 0;
  bool exact = true;
};

/// Approach 1: select the schedule making maximal use of available supply.
SolveResult volume_max_solve(const std::vector<Request>& requests, const MarketState& state,
                             const SolverOptions& options = {});

/// Approach 2: maximize the sum of served willingness-to-pay.
SolveResult revenue_max_solve(const std::vector<Request>& requests, const MarketState& state,
                              const SolverOptions& options = {});

/// Exhaustive enumeration over all start assignments; testing oracle only.
/// Limits: at most 8 requests and 48 periods.
double brute_force_oracle(const std::vector<Request>& requests, const MarketState& state,
                          SolveObjective objective);

/// Applies a solved schedule to the state at the solver's frozen prices.
void apply_schedule(MarketState& state, const std::vector<Request>& requests,
                    const std::vector<AllocationOutcome>& outcomes);

}  // namespace ffem
