#include "ffem/reliability.hpp"

namespace ffem {

double request_success(const AllocationOutcome& outcome, const Request& request) {
  if (outcome.request_id != request.id)
    throw InvariantViolation("request_success: outcome does not match request");
  return outcome.delivered_kwh / request.energy;
}

double household_reliability(const std::vector<std::pair<double, double>>& gamma_and_weight) {
  double num = 0, den = 0;
  for (const auto& [g, w] : gamma_and_weight) {
    num += g * w;
    den += w;
  }
  return den > 0 ? num / den : 1.0;
}

double system_reliability(const std::map<std::string, HouseholdRecord>& households) {
  double num = 0, den = 0;
  for (const auto& [id, h] : households) {
    num += h.gamma() * h.requested_kwh;
    den += h.requested_kwh;
  }
  if (den <= 0) throw InputError("system_reliability: no household has requested energy");
  return num / den;
}

ReliabilityReport build_report(const std::vector<AllocationOutcome>& outcomes,
                               const std::vector<Request>& requests,
                               const std::map<std::string, HouseholdRecord>& households,
                               double gamma_target) {
  ReliabilityReport rep;
  rep.target = gamma_target;
  std::map<std::string, const Request*> by_id;
  for (const auto& r : requests) by_id[r.id] = &r;
  for (const auto& out : outcomes)
    rep.per_request[out.request_id] = request_success(out, *by_id.at(out.request_id));
  for (const auto& [id, h] : households)
    rep.per_household[id] = {h.gamma(), h.requested_kwh};
  rep.system = system_reliability(households);
  rep.gap = rep.system - rep.target;
  return rep;
}

}  // namespace ffem
