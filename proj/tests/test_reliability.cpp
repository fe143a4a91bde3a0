#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ffem/reliability.hpp"
#include "ffem/rng.hpp"

using namespace ffem;

namespace {

Request make_request(std::string id, std::string hh, double q) {
  Request r{std::move(id), std::move(hh), 0, hours(4), q, 1, std::max(1.0, q), 100};
  r.validate();
  return r;
}

AllocationOutcome served(const Request& r) {
  return {r.id, r.household_id, true, r.energy, Slot{0, 1, r.p_max, 0.0}};
}

AllocationOutcome unserved(const Request& r) { return {r.id, r.household_id, false, 0, {}}; }

}  // namespace

TEST_CASE("request_success is all-or-nothing") {
  auto r = make_request("r", "h", 2.0);
  CHECK(request_success(served(r), r) == 1.0);
  CHECK(request_success(unserved(r), r) == 0.0);
}

TEST_CASE("household_reliability is energy-weighted") {
  CHECK(household_reliability({{1.0, 2.0}, {0.0, 2.0}}) == doctest::Approx(0.5));
  CHECK(household_reliability({{1.0, 5.0}, {1.0, 1.0}}) == 1.0);
  CHECK(household_reliability({{1.0, 1.0}, {0.0, 3.0}}) == doctest::Approx(0.25));
  CHECK(household_reliability({}) == 1.0);  // empty history
}

TEST_CASE("system_reliability is household-weighted") {
  std::map<std::string, HouseholdRecord> hh;
  SUBCASE("equal weights average") {
    hh["a"] = {"a", 10, 10};
    hh["b"] = {"b", 0, 10};
    CHECK(system_reliability(hh) == doctest::Approx(0.5));
  }
  SUBCASE("single household") {
    hh["a"] = {"a", 3, 4};
    CHECK(system_reliability(hh) == doctest::Approx(0.75));
  }
  SUBCASE("weighted mean") {
    hh["a"] = {"a", 30, 30};  // gamma 1, weight 30
    hh["b"] = {"b", 5, 10};   // gamma 0.5, weight 10
    CHECK(system_reliability(hh) == doctest::Approx(0.875));
  }
  SUBCASE("no history is an error") {
    hh["a"] = {"a", 0, 0};
    CHECK_THROWS_AS(system_reliability(hh), InputError);
  }
}

TEST_CASE("weighted mean equals delivered over requested energy") {
  Rng rng(101);
  for (int trial = 0; trial < 200; ++trial) {
    std::map<std::string, HouseholdRecord> hh;
    double delivered = 0, requested = 0;
    const int n = 1 + static_cast<int>(rng.uniform_int(20));
    for (int i = 0; i < n; ++i) {
      const double req = rng.uniform(0.1, 50.0);
      const double srv = req * rng.uniform();
      const std::string id = "h" + std::to_string(i);
      hh[id] = {id, srv, req};
      delivered += srv;
      requested += req;
    }
    const double gamma = system_reliability(hh);
    CHECK(gamma == doctest::Approx(delivered / requested).epsilon(1e-12));
  }
}

TEST_CASE("serving never lowers and failing never raises reliability") {
  std::map<std::string, HouseholdRecord> hh;
  hh["a"] = {"a", 4, 8};
  hh["b"] = {"b", 2, 2};
  const double before = system_reliability(hh);
  auto plus_served = hh;
  plus_served["a"].served_kwh += 3;
  plus_served["a"].requested_kwh += 3;
  CHECK(system_reliability(plus_served) >= before);
  auto plus_failed = hh;
  plus_failed["b"].requested_kwh += 3;
  CHECK(system_reliability(plus_failed) <= before);
}

TEST_CASE("build_report rolls requests up to the system level") {
  auto r1 = make_request("r1", "a", 2.0);
  auto r2 = make_request("r2", "a", 2.0);
  auto r3 = make_request("r3", "b", 4.0);
  std::vector<AllocationOutcome> outcomes{served(r1), unserved(r2), served(r3)};
  std::map<std::string, HouseholdRecord> hh;
  hh["a"] = {"a", 2, 4};
  hh["b"] = {"b", 4, 4};
  auto report = build_report(outcomes, {r1, r2, r3}, hh, 0.9);
  CHECK(report.per_request.at("r1") == 1.0);
  CHECK(report.per_request.at("r2") == 0.0);
  CHECK(report.per_household.at("a").first == doctest::Approx(0.5));
  CHECK(report.per_household.at("a").second == doctest::Approx(4.0));
  CHECK(report.system == doctest::Approx(6.0 / 8.0));
  CHECK(report.target == 0.9);
  CHECK(report.gap == doctest::Approx(0.75 - 0.9));
}
