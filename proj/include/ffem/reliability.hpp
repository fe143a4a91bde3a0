#pragma once

#include <map>
#include <string>
#include <vector>

#include "ffem/allocators.hpp"
#include "ffem/core.hpp"

namespace ffem {

/// Reliability bookkeeping rolled up from requests to households to system.
struct ReliabilityReport {
  std::map<std::string, double> per_request;                    // Gamma^r
  std::map<std::string, std::pair<double, double>> per_household;  // id -> (Gamma^h, w^h)
  double system = 0;   // Gamma^actual
  double target = 0;   // Gamma^target
  double gap = 0;      // system - target
};

/// Delivered-over-requested for one outcome; 0 or 1 under all-or-nothing.
double request_success(const AllocationOutcome& outcome, const Request& request);

/// Energy-weighted mean of request successes; 1 with empty history.
double household_reliability(const std::vector<std::pair<double, double>>& gamma_and_weight);

/// Energy-weighted mean of household reliabilities.
double system_reliability(const std::map<std::string, HouseholdRecord>& households);

/// Builds a full report from finalized outcomes and household records.
ReliabilityReport build_report(const std::vector<AllocationOutcome>& outcomes,
                               const std::vector<Request>& requests,
                               const std::map<std::string, HouseholdRecord>& households,
                               double gamma_target);

}  // namespace ffem
