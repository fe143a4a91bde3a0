#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>

#include "ffem/allocators.hpp"

using namespace ffem;

namespace {

MarketConfig hourly_config(double bp_max = 1.0) {
  MarketConfig cfg;
  cfg.window = hours(24);
  cfg.spacing = hours(3);
  cfg.resolution = 60;
  cfg.bp_max = bp_max;
  cfg.sp_max = bp_max;
  return cfg;
}

Request make_request(std::string id, std::string hh, Minutes e, Minutes l, double q, double pmax,
                     double budget = 1e9) {
  Request r{std::move(id), std::move(hh), e, l, q, pmax, pmax, budget};
  r.validate();
  return r;
}

/// Instance whose bp series is 0.5 / 0.2 / 0.3 over three one-hour periods
/// (a broad 30 kW forecast request pins c_fa at 10 kW).
MarketState priced_state(PricingMode mode = PricingMode::per_period) {
  TimeGrid grid(0, hours(3), 60);
  auto forecast = make_request("forecast", "hf", 0, hours(3), 30, 30);
  return MarketState(grid, hourly_config(), mode, {5.0, 8.0, 7.0}, {forecast});
}

std::map<std::string, HouseholdRecord> household_map(
    std::initializer_list<std::pair<std::string, double>> gammas) {
  std::map<std::string, HouseholdRecord> out;
  for (const auto& [id, gamma] : gammas) out[id] = HouseholdRecord{id, gamma, 1.0};
  return out;
}

struct RandomInstance {
  TimeGrid grid;
  std::vector<double> supply;
  std::vector<Request> requests;
};

RandomInstance random_instance(Rng& rng, int max_requests = 8, int n_periods = 8) {
  RandomInstance inst{TimeGrid(0, 60 * n_periods, 60), {}, {}};
  inst.supply.resize(static_cast<std::size_t>(n_periods));
  for (auto& s : inst.supply) s = rng.uniform(0.0, 4.0);
  const int n_req = 1 + static_cast<int>(rng.uniform_int(max_requests));
  for (int i = 0; i < n_req; ++i) {
    const Minutes e = 60 * rng.uniform_int(n_periods - 1);
    const int span = 1 + static_cast<int>(rng.uniform_int(n_periods - e / 60));
    const Minutes l = e + 60 * span;
    const double pmax = rng.uniform(0.3, 3.0);
    const int dur = 1 + static_cast<int>(rng.uniform_int(span));
    const double q = pmax * dur;
    const double budget = rng.uniform(0.0, 2.0) * q;
    inst.requests.push_back(
        make_request("r" + std::to_string(i), "h" + std::to_string(i % 3), e, l, q, pmax, budget));
  }
  return inst;
}

}  // namespace

TEST_CASE("fairness_scores") {
  SUBCASE("inverse-gamma weighting") {
    auto hh = household_map({{"a", 0.5}, {"b", 0.25}});
    auto reqs = std::vector<Request>{make_request("r1", "a", 0, 60, 1, 1),
                                     make_request("r2", "b", 0, 60, 1, 1)};
    auto scores = fairness_scores(reqs, hh, {});
    CHECK(scores["r1"] == doctest::Approx(1.0 / 3.0));
    CHECK(scores["r2"] == doctest::Approx(2.0 / 3.0));
  }
  SUBCASE("equal histories give uniform scores") {
    auto hh = household_map({{"a", 0.7}, {"b", 0.7}, {"c", 0.7}});
    auto reqs = std::vector<Request>{make_request("r1", "a", 0, 60, 1, 1),
                                     make_request("r2", "b", 0, 60, 1, 1),
                                     make_request("r3", "c", 0, 60, 1, 1)};
    auto scores = fairness_scores(reqs, hh, {});
    for (const auto& [id, s] : scores) CHECK(s == doctest::Approx(1.0 / 3.0));
  }
  SUBCASE("a 100x gamma gap gives a 100x weight ratio") {
    auto hh = household_map({{"a", 0.01}, {"b", 1.0}});
    auto reqs = std::vector<Request>{make_request("r1", "a", 0, 60, 1, 1),
                                     make_request("r2", "b", 0, 60, 1, 1)};
    auto scores = fairness_scores(reqs, hh, {});
    CHECK(scores["r1"] / scores["r2"] == doctest::Approx(100.0));
  }
  SUBCASE("gamma_floor guards zero histories") {
    auto hh = household_map({{"a", 0.0}, {"b", 1.0}});
    auto reqs = std::vector<Request>{make_request("r1", "a", 0, 60, 1, 1),
                                     make_request("r2", "b", 0, 60, 1, 1)};
    auto scores = fairness_scores(reqs, hh, {});
    CHECK(scores["r1"] / scores["r2"] == doctest::Approx(1000.0));  // 1/gamma_floor
  }
  SUBCASE("scores over distinct households sum to the scale") {
    auto hh = household_map({{"a", 0.3}, {"b", 0.9}});
    auto reqs = std::vector<Request>{make_request("r1", "a", 0, 60, 1, 1),
                                     make_request("r2", "a", 0, 60, 1, 1),
                                     make_request("r3", "b", 0, 60, 1, 1)};
    FairnessPolicy policy;
    policy.scale = 7.0;
    auto scores = fairness_scores(reqs, hh, policy);
    CHECK(scores["r1"] + scores["r3"] == doctest::Approx(7.0));  // one request per household
    CHECK(scores["r1"] == doctest::Approx(scores["r2"]));
    // rescaling preserves relative weights exactly
    FairnessPolicy unit;
    auto base = fairness_scores(reqs, hh, unit);
    CHECK(scores["r1"] / scores["r3"] == doctest::Approx(base["r1"] / base["r3"]));
  }
  SUBCASE("unknown households start with gamma 1") {
    auto reqs = std::vector<Request>{make_request("r1", "new", 0, 60, 1, 1),
                                     make_request("r2", "old", 0, 60, 1, 1)};
    auto hh = household_map({{"old", 1.0}});
    auto scores = fairness_scores(reqs, hh, {});
    CHECK(scores["r1"] == doctest::Approx(scores["r2"]));
  }
}

TEST_CASE("draw_next_request") {
  std::vector<Request> backlog{make_request("r1", "a", 0, 60, 1, 1),
                               make_request("r2", "b", 0, 60, 1, 1)};
  SUBCASE("single request is always selected") {
    std::vector<Request> one{backlog[0]};
    Rng rng(1);
    for (int i = 0; i < 20; ++i)
      CHECK(draw_next_request(one, {{"r1", 1.0}}, rng) == 0);
  }
  SUBCASE("100:1 weights select about 100:1 over 10,000 draws") {
    Rng rng(9);
    std::map<std::string, double> scores{{"r1", 100.0}, {"r2", 1.0}};
    int n1 = 0, n2 = 0;
    for (int i = 0; i < 10000; ++i)
      (draw_next_request(backlog, scores, rng) == 0 ? n1 : n2)++;
    const double ratio = static_cast<double>(n1) / static_cast<double>(n2);
    CHECK(ratio > 90.0);
    CHECK(ratio < 110.0);
  }
  SUBCASE("equal weights split 50/50 within 2%") {
    Rng rng(7);
    std::map<std::string, double> scores{{"r1", 1.0}, {"r2", 1.0}};
    int n1 = 0;
    for (int i = 0; i < 10000; ++i)
      if (draw_next_request(backlog, scores, rng) == 0) ++n1;
    CHECK(n1 > 4800);
    CHECK(n1 < 5200);
  }
}

TEST_CASE("find_cheapest_slot") {
  MarketState state = priced_state();  // bp = 0.5 / 0.2 / 0.3
  SUBCASE("picks the cheapest start") {
    auto r = make_request("r", "h", 0, hours(3), 1, 1);
    auto slot = find_cheapest_slot(r, state);
    REQUIRE(slot.has_value());
    CHECK(slot->start_period == 1);
    CHECK(slot->cost == doctest::Approx(0.2));
    CHECK(slot->n_periods == 1);
    CHECK(slot->power_kw == doctest::Approx(1.0));
  }
  SUBCASE("budget excludes all slots") {
    auto r = make_request("r", "h", 0, hours(3), 1, 1, 0.10);
    CHECK(!find_cheapest_slot(r, state).has_value());
  }
  SUBCASE("no capacity anywhere") {
    TimeGrid grid(0, hours(3), 60);
    MarketState empty(grid, hourly_config(), PricingMode::per_period, {0, 0, 0}, {});
    auto r = make_request("r", "h", 0, hours(3), 1, 1);
    CHECK(!find_cheapest_slot(r, empty).has_value());
  }
  SUBCASE("equal-cost ties resolve to the earliest start") {
    TimeGrid grid(0, hours(3), 60);
    MarketState flat(grid, hourly_config(), PricingMode::per_period, {5, 5, 5}, {});
    auto r = make_request("r", "h", 0, hours(3), 1, 1);
    auto slot = find_cheapest_slot(r, flat);
    REQUIRE(slot.has_value());
    CHECK(slot->start_period == 0);
  }
  SUBCASE("respects the request window") {
    auto r = make_request("r", "h", hours(2), hours(3), 1, 1);
    auto slot = find_cheapest_slot(r, state);
    REQUIRE(slot.has_value());
    CHECK(slot->start_period == 2);  // only feasible start despite higher price
  }
}

TEST_CASE("fair_play_run with abundant supply serves everything for free") {
  TimeGrid grid(0, hours(6), 60);
  std::vector<Request> reqs;
  for (int i = 0; i < 5; ++i)
    reqs.push_back(make_request("r" + std::to_string(i), "h" + std::to_string(i), 0, hours(6), 2, 1));
  MarketState state(grid, hourly_config(), PricingMode::per_period,
                    std::vector<double>(6, 100.0), reqs);
  Rng rng(3);
  auto outcomes = fair_play_run(state, reqs, {}, {}, rng);
  for (const auto& out : outcomes) {
    CHECK(out.served);
    CHECK(out.slot->cost == 0.0);  // alpha = 1 everywhere
  }
  CHECK(state.buyer_payments() == 0.0);
}

TEST_CASE("fair_play_run with no feasible slot leaves the state unchanged") {
  TimeGrid grid(0, hours(3), 60);
  auto r = make_request("r", "h", 0, hours(3), 2, 2);
  MarketState state(grid, hourly_config(), PricingMode::per_period, {1, 1, 1}, {r});
  Rng rng(3);
  auto outcomes = fair_play_run(state, {r}, {}, {}, rng);
  REQUIRE(outcomes.size() == 1);
  CHECK(!outcomes[0].served);
  for (int i = 0; i < 3; ++i) CHECK(state.committed()[i] == 0.0);
  CHECK(state.ledger().entries().empty());
}

TEST_CASE("fair_play_run never exceeds budgets or capacity") {
  Rng meta(99);
  for (int trial = 0; trial < 50; ++trial) {
    auto inst = random_instance(meta);
    MarketState state(inst.grid, hourly_config(), PricingMode::per_period, inst.supply,
                      inst.requests);
    Rng rng(trial);
    auto outcomes = fair_play_run(state, inst.requests, {}, {}, rng);
    for (std::size_t i = 0; i < outcomes.size(); ++i)
      if (outcomes[i].served) CHECK(outcomes[i].slot->cost <= inst.requests[i].budget + 1e-9);
    for (int t = 0; t < inst.grid.n_periods(); ++t)
      CHECK(state.committed()[t] <= inst.supply[t] + 1e-9);
    // ledger consistency after the run
    auto recomputed = state.ledger().recompute_scheduled();
    for (int t = 0; t < inst.grid.n_periods(); ++t)
      CHECK(recomputed[t] == doctest::Approx(state.committed()[t]));
    // per-instance budget balance under pass-through pricing
    CHECK(state.buyer_payments() == doctest::Approx(state.seller_receipts()));
  }
}

TEST_CASE("fair_play_run is deterministic for a fixed seed") {
  Rng meta(5);
  auto inst = random_instance(meta, 6);
  auto run_once = [&] {
    MarketState state(inst.grid, hourly_config(), PricingMode::per_period, inst.supply,
                      inst.requests);
    Rng rng(77);
    return fair_play_run(state, inst.requests, {}, {}, rng);
  };
  auto a = run_once();
  auto b = run_once();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].served == b[i].served);
    if (a[i].served) {
      CHECK(a[i].slot->start_period == b[i].slot->start_period);
      CHECK(a[i].slot->cost == b[i].slot->cost);
    }
  }
}

TEST_CASE("volume_max prefers the larger booking") {
  // 1 kW for 2 periods available; r1 wants both, r2 wants one
  TimeGrid grid(0, hours(2), 60);
  auto r1 = make_request("r1", "a", 0, hours(2), 2, 1);
  auto r2 = make_request("r2", "b", 0, hours(2), 1, 1);
  MarketState state(grid, hourly_config(), PricingMode::per_period, {1, 1}, {r1, r2});
  auto res = volume_max_solve({r1, r2}, state);
  CHECK(res.exact);
  CHECK(res.objective == doctest::Approx(2.0));  // kWh
  CHECK(res.outcomes[0].served);
  CHECK(!res.outcomes[1].served);
  CHECK(brute_force_oracle({r1, r2}, state, SolveObjective::volume) == doctest::Approx(2.0));
}

TEST_CASE("revenue_max prefers the bigger budget") {
  TimeGrid grid(0, hours(1), 60);
  auto r1 = make_request("r1", "a", 0, hours(1), 1, 1, 1.0);
  auto r2 = make_request("r2", "b", 0, hours(1), 1, 1, 5.0);
  MarketState state(grid, hourly_config(), PricingMode::per_period, {1}, {r1, r2});
  auto res = revenue_max_solve({r1, r2}, state);
  CHECK(res.objective == doctest::Approx(5.0));
  CHECK(!res.outcomes[0].served);
  CHECK(res.outcomes[1].served);
  CHECK(brute_force_oracle({r1, r2}, state, SolveObjective::revenue) == doctest::Approx(5.0));
}

TEST_CASE("solvers handle edge cases") {
  TimeGrid grid(0, hours(2), 60);
  SUBCASE("empty request set") {
    MarketState state(grid, hourly_config(), PricingMode::per_period, {1, 1}, {});
    auto res = volume_max_solve({}, state);
    CHECK(res.outcomes.empty());
    CHECK(res.objective == 0.0);
  }
  SUBCASE("unaffordable requests are never served") {
    // scarcity pins bp above zero; zero budgets exclude everything
    auto filler = make_request("f", "hf", 0, hours(2), 20, 20);
    auto r1 = make_request("r1", "a", 0, hours(2), 1, 1, 0.0);
    MarketState state(grid, hourly_config(), PricingMode::per_period, {2, 2}, {filler, r1});
    CHECK(state.bp()[0] > 0.0);
    auto res = volume_max_solve({r1}, state);
    CHECK(!res.outcomes[0].served);
    CHECK(brute_force_oracle({r1}, state, SolveObjective::volume) == 0.0);
  }
  SUBCASE("zero capacity") {
    auto r1 = make_request("r1", "a", 0, hours(2), 1, 1);
    MarketState state(grid, hourly_config(), PricingMode::per_period, {0, 0}, {r1});
    CHECK(brute_force_oracle({r1}, state, SolveObjective::volume) == 0.0);
    CHECK(!volume_max_solve({r1}, state).outcomes[0].served);
  }
}

TEST_CASE("oracle size limits") {
  TimeGrid grid(0, hours(2), 60);
  std::vector<Request> many;
  for (int i = 0; i < 9; ++i)
    many.push_back(make_request("r" + std::to_string(i), "h", 0, hours(2), 1, 1));
  MarketState state(grid, hourly_config(), PricingMode::per_period, {50, 50}, many);
  CHECK_THROWS_AS(brute_force_oracle(many, state, SolveObjective::volume), InputError);
}

TEST_CASE("exact solvers match the oracle on random instances") {
  Rng meta(2718);
  for (int trial = 0; trial < 40; ++trial) {
    auto inst = random_instance(meta);
    MarketState state(inst.grid, hourly_config(), PricingMode::per_period, inst.supply,
                      inst.requests);
    for (auto objective : {SolveObjective::volume, SolveObjective::revenue}) {
      const double oracle = brute_force_oracle(inst.requests, state, objective);
      auto res = objective == SolveObjective::volume ? volume_max_solve(inst.requests, state)
                                                     : revenue_max_solve(inst.requests, state);
      CHECK(res.exact);
      CHECK(res.objective == oracle);  // exact equality required
    }
  }
}

TEST_CASE("oversized instances need the heuristic flag") {
  TimeGrid grid(0, hours(4), 60);
  std::vector<Request> many;
  for (int i = 0; i < 31; ++i)  // above the 30-request exactness threshold
    many.push_back(make_request("r" + std::to_string(i), "h" + std::to_string(i), 0, hours(4), 1, 1));
  MarketState state(grid, hourly_config(), PricingMode::per_period,
                    std::vector<double>(4, 100.0), many);
  CHECK_THROWS_AS(volume_max_solve(many, state), InputError);
  SolverOptions opts;
  opts.allow_heuristic = true;
  auto res = volume_max_solve(many, state, opts);
  CHECK(!res.exact);  // labelled non-exact
  int served = 0;
  for (const auto& o : res.outcomes) served += o.served ? 1 : 0;
  CHECK(served == 31);  // abundance: the heuristic still serves everything
}

TEST_CASE("apply_schedule books at the solver's frozen prices and balances") {
  Rng meta(31415);
  for (int trial = 0; trial < 20; ++trial) {
    auto inst = random_instance(meta);
    MarketState state(inst.grid, hourly_config(), PricingMode::per_period, inst.supply,
                      inst.requests);
    auto res = revenue_max_solve(inst.requests, state);
    apply_schedule(state, inst.requests, res.outcomes);
    double paid = 0;
    for (const auto& o : res.outcomes)
      if (o.served) paid += o.slot->cost;
    CHECK(state.buyer_payments() == doctest::Approx(paid));
    CHECK(state.buyer_payments() == doctest::Approx(state.seller_receipts()));
    for (int t = 0; t < inst.grid.n_periods(); ++t)
      CHECK(state.committed()[t] <= inst.supply[t] + 1e-9);
  }
}
