#include "ffem/allocators.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace ffem {

namespace {

constexpr double kBudgetSlack = 1e-9;

/// Start periods satisfying the request's time window within the grid.
std::vector<int> time_feasible_starts(const Request& request, const TimeGrid& grid) {
  const int n = request.n_periods(grid.resolution());
  std::vector<int> starts;
  const int first = std::max(0, grid.index_of(request.earliest + grid.resolution() - 1));
  for (int s = first; s + n <= grid.n_periods(); ++s) {
    const Minutes t0 = grid.time_of(s);
    if (t0 < request.earliest) continue;
    if (t0 + static_cast<Minutes>(n) * grid.resolution() > request.latest) break;
    starts.push_back(s);
  }
  return starts;
}

}  // namespace

std::map<std::string, double> fairness_scores(const std::vector<Request>& requests,
                                              const std::map<std::string, HouseholdRecord>& households,
                                              const FairnessPolicy& policy) {
  if (policy.gamma_floor <= 0) throw InputError("FairnessPolicy: gamma_floor must be positive");
  std::map<std::string, double> hh_weight;
  for (const auto& r : requests) {
    if (hh_weight.count(r.household_id)) continue;
    auto it = households.find(r.household_id);
    const double gamma = it == households.end() ? 1.0 : it->second.gamma();
    hh_weight[r.household_id] = 1.0 / std::max(gamma, policy.gamma_floor);
  }
  double total = 0;
  for (const auto& [id, w] : hh_weight) total += w;
  std::map<std::string, double> scores;
  for (const auto& r : requests)
    scores[r.id] = hh_weight[r.household_id] / total * policy.scale;
  return scores;
}

std::size_t draw_next_request(const std::vector<Request>& backlog,
                              const std::map<std::string, double>& scores, Rng& rng) {
  if (backlog.empty()) throw InvariantViolation("draw_next_request: empty backlog");
  std::vector<double> w;
  w.reserve(backlog.size());
  for (const auto& r : backlog) w.push_back(scores.at(r.id));
  return rng.pick_weighted(w);
}

std::optional<Slot> find_cheapest_slot(const Request& request, const MarketState& state) {
  const TimeGrid& grid = state.grid();
  const int n = request.n_periods(grid.resolution());
  std::optional<Slot> best;
  for (int s : time_feasible_starts(request, grid)) {
    if (!state.capacity_ok(request, s)) continue;
    const double cost = state.slot_cost(request, s);
    if (cost > request.budget + kBudgetSlack) continue;
    if (!best || cost < best->cost) best = Slot{s, n, request.p_max, cost};
  }
  return best;
}

std::vector<AllocationOutcome> fair_play_run(MarketState& state, const std::vector<Request>& requests,
                                             const std::map<std::string, HouseholdRecord>& households,
                                             const FairnessPolicy& policy, Rng& rng) {
  std::map<std::string, AllocationOutcome> by_id;
  for (const auto& r : requests)
    by_id[r.id] = AllocationOutcome{r.id, r.household_id, false, 0, std::nullopt};

  std::vector<Request> active = requests;
  std::vector<Request> parked;
  while (!active.empty()) {
    const auto scores = fairness_scores(active, households, policy);
    const std::size_t i = draw_next_request(active, scores, rng);
    const Request req = active[i];
    if (auto slot = find_cheapest_slot(req, state)) {
      state.commit_request(req, slot->start_period);
      auto& out = by_id[req.id];
      out.served = true;
      out.delivered_kwh = req.energy;
      out.slot = slot;
      active.erase(active.begin() + static_cast<std::ptrdiff_t>(i));
      // prices moved; parked requests may have become affordable again
      for (auto& p : parked) active.push_back(std::move(p));
      parked.clear();
    } else {
      parked.push_back(req);
      active.erase(active.begin() + static_cast<std::ptrdiff_t>(i));
    }
  }

  std::vector<AllocationOutcome> outcomes;
  outcomes.reserve(requests.size());
  for (const auto& r : requests) outcomes.push_back(by_id[r.id]);
  return outcomes;
}

namespace detail {

struct Item {
  std::size_t req_index;
  int n_periods;
  double power;
  double scheduled_kwh;
  double value;
  std::vector<std::pair<int, double>> starts;
};

class BranchAndBound {
 public:
  BranchAndBound(std::vector<Item> items, std::vector<double> avail, double res_h)
      : items_(std::move(items)), avail_(std::move(avail)), res_h_(res_h) {
    choice_.assign(items_.size(), -1);
    best_choice_ = choice_;
  }

  void run() { descend(0, 0.0); }

  double best() const { return best_; }
  const std::vector<int>& best_choice() const { return best_choice_; }

 private:
  bool fits(const Item& it, int start) const {
    for (int t = start; t < start + it.n_periods; ++t)
      if (avail_[t] + 1e-9 < it.power) return false;
    return true;
  }

  void occupy(const Item& it, int start, double sign) {
    for (int t = start; t < start + it.n_periods; ++t) avail_[t] -= sign * it.power;
  }

  double capacity_kwh() const {
    double e = 0;
    for (double a : avail_) e += std::max(a, 0.0) * res_h_;
    return e;
  }

  double bound_from(std::size_t k) const {
    double cap = capacity_kwh();
    double b = 0;
    for (std::size_t i = k; i < items_.size() && cap > 1e-12; ++i) {
      const double take = std::min(items_[i].scheduled_kwh, cap);
      b += items_[i].value * (take / items_[i].scheduled_kwh);
      cap -= take;
    }
    return b;
  }

  void descend(std::size_t k, double value) {
    if (value > best_ + 1e-12) {
      best_ = value;
      best_choice_ = choice_;
    }
    if (k == items_.size()) return;
    if (value + bound_from(k) <= best_ + 1e-12) return;
    const Item& it = items_[k];
    for (const auto& [start, cost] : it.starts) {
      (void)cost;
      if (!fits(it, start)) continue;
      occupy(it, start, 1.0);
      choice_[k] = start;
      descend(k + 1, value + it.value);
      choice_[k] = -1;
      occupy(it, start, -1.0);
    }
    descend(k + 1, value);  // leave unserved
  }

  std::vector<Item> items_;
  std::vector<double> avail_;
  double res_h_;
  double best_ = 0;
  std::vector<int> choice_;
  std::vector<int> best_choice_;
};

std::vector<Item> build_items(const std::vector<Request>& requests, const MarketState& state,
                              SolveObjective objective) {
  const TimeGrid& grid = state.grid();
  const double res_h = grid.resolution_hours();
  std::vector<Item> items;
  for (std::size_t i = 0; i < requests.size(); ++i) {
    const Request& r = requests[i];
    Item it;
    it.req_index = i;
    it.n_periods = r.n_periods(grid.resolution());
    it.power = r.p_max;
    it.scheduled_kwh = r.p_max * it.n_periods * res_h;
    it.value = objective == SolveObjective::volume ? it.scheduled_kwh : r.budget;
    for (int s : time_feasible_starts(r, grid)) {
      const double cost = state.slot_cost(r, s);
      if (cost <= r.budget + kBudgetSlack) it.starts.emplace_back(s, cost);
    }
    if (!it.starts.empty()) items.push_back(std::move(it));
  }
  return items;
}

}  // namespace detail

namespace {

std::vector<double> initial_available(const MarketState& state) {
  std::vector<double> avail(state.grid().n_periods());
  for (int i = 0; i < state.grid().n_periods(); ++i) avail[i] = state.available(i);
  return avail;
}

SolveResult make_result(const std::vector<Request>& requests, const MarketState& state,
                        const std::vector<detail::Item>& items, const std::vector<int>& choice,
                        bool exact) {
  SolveResult res;
  res.exact = exact;
  res.outcomes.reserve(requests.size());
  std::map<std::size_t, std::pair<int, const detail::Item*>> chosen;
  for (std::size_t k = 0; k < items.size(); ++k)
    if (choice[k] >= 0) chosen[items[k].req_index] = {choice[k], &items[k]};
  // objective summed in request order so it is bit-identical regardless of
  // the search's internal item ordering
  for (const auto& [i, c] : chosen) res.objective += c.second->value;
  for (std::size_t i = 0; i < requests.size(); ++i) {
    const Request& r = requests[i];
    AllocationOutcome out{r.id, r.household_id, false, 0, std::nullopt};
    auto it = chosen.find(i);
    if (it != chosen.end()) {
      const int start = it->second.first;
      const detail::Item& item = *it->second.second;
      double cost = 0;
      for (const auto& [s, c] : item.starts)
        if (s == start) cost = c;
      out.served = true;
      out.delivered_kwh = r.energy;
      out.slot = Slot{start, item.n_periods, r.p_max, cost};
    }
    res.outcomes.push_back(std::move(out));
  }
  (void)state;
  return res;
}

/// Greedy by value density plus a single improvement sweep; labelled non-exact.
SolveResult heuristic_solve(const std::vector<Request>& requests, const MarketState& state,
                            std::vector<detail::Item> items) {
  std::vector<double> avail = initial_available(state);
  std::vector<int> choice(items.size(), -1);
  auto fits = [&](const detail::Item& it, int start) {
    for (int t = start; t < start + it.n_periods; ++t)
      if (avail[t] + 1e-9 < it.power) return false;
    return true;
  };
  auto occupy = [&](const detail::Item& it, int start, double sign) {
    for (int t = start; t < start + it.n_periods; ++t) avail[t] -= sign * it.power;
  };
  auto place_cheapest = [&](const detail::Item& it) -> int {
    int best_start = -1;
    double best_cost = 0;
    for (const auto& [s, c] : it.starts)
      if (fits(it, s) && (best_start < 0 || c < best_cost)) {
        best_start = s;
        best_cost = c;
      }
    return best_start;
  };

  for (std::size_t k = 0; k < items.size(); ++k) {
    const int s = place_cheapest(items[k]);
    if (s >= 0) {
      occupy(items[k], s, 1.0);
      choice[k] = s;
    }
  }
  // one swap sweep: drop a served item if that lets a more valuable one in
  for (std::size_t u = 0; u < items.size(); ++u) {
    if (choice[u] >= 0) continue;
    for (std::size_t v = 0; v < items.size(); ++v) {
      if (choice[v] < 0 || items[v].value >= items[u].value) continue;
      occupy(items[v], choice[v], -1.0);
      const int s = place_cheapest(items[u]);
      if (s >= 0) {
        occupy(items[u], s, 1.0);
        choice[u] = s;
        choice[v] = -1;
        break;
      }
      occupy(items[v], choice[v], 1.0);
    }
  }
  return make_result(requests, state, items, choice, false);
}

SolveResult solve(const std::vector<Request>& requests, const MarketState& state,
                  SolveObjective objective, const SolverOptions& options) {
  auto items = detail::build_items(requests, state, objective);
  // densest-first improves pruning; stable so caller-supplied order breaks ties
  std::stable_sort(items.begin(), items.end(), [](const detail::Item& a, const detail::Item& b) {
    return a.value / a.scheduled_kwh > b.value / b.scheduled_kwh;
  });

  const bool oversized = static_cast<int>(requests.size()) > options.exact_max_requests ||
                         state.grid().n_periods() > options.exact_max_periods;
  if (oversized) {
    if (!options.allow_heuristic)
      throw InputError("solver: instance exceeds the exactness threshold; pass the heuristic flag");
    return heuristic_solve(requests, state, std::move(items));
  }

  detail::BranchAndBound bb(items, initial_available(state), state.grid().resolution_hours());
  bb.run();
  return make_result(requests, state, items, bb.best_choice(), true);
}

}  // namespace

SolveResult volume_max_solve(const std::vector<Request>& requests, const MarketState& state,
                             const SolverOptions& options) {
  return solve(requests, state, SolveObjective::volume, options);
}

SolveResult revenue_max_solve(const std::vector<Request>& requests, const MarketState& state,
                              const SolverOptions& options) {
  return solve(requests, state, SolveObjective::revenue, options);
}

double brute_force_oracle(const std::vector<Request>& requests, const MarketState& state,
                          SolveObjective objective) {
  if (requests.size() > 8 || state.grid().n_periods() > 48)
    throw InputError("brute_force_oracle: instance too large");
  auto items = detail::build_items(requests, state, objective);
  std::vector<double> avail = initial_available(state);
  double best = 0;

  std::function<void(std::size_t, double)> recurse = [&](std::size_t k, double value) {
    if (k == items.size()) {
      best = std::max(best, value);
      return;
    }
    const auto& it = items[k];
    for (const auto& [start, cost] : it.starts) {
      (void)cost;
      bool ok = true;
      for (int t = start; t < start + it.n_periods && ok; ++t)
        if (avail[t] + 1e-9 < it.power) ok = false;
      if (!ok) continue;
      for (int t = start; t < start + it.n_periods; ++t) avail[t] -= it.power;
      recurse(k + 1, value + it.value);
      for (int t = start; t < start + it.n_periods; ++t) avail[t] += it.power;
    }
    recurse(k + 1, value);
  };
  recurse(0, 0.0);
  return best;
}

void apply_schedule(MarketState& state, const std::vector<Request>& requests,
                    const std::vector<AllocationOutcome>& outcomes) {
  std::map<std::string, const Request*> by_id;
  for (const auto& r : requests) by_id[r.id] = &r;
  // receipts priced against the same frozen series as the solver's costs
  std::vector<std::pair<const AllocationOutcome*, double>> to_apply;
  for (const auto& out : outcomes) {
    if (!out.served) continue;
    const Request& r = *by_id.at(out.request_id);
    to_apply.emplace_back(&out, state.slot_receipt(r, out.slot->start_period));
  }
  for (const auto& [out, receipt] : to_apply) {
    const Request& r = *by_id.at(out->request_id);
    state.commit_at_fixed_price(r, out->slot->start_period, out->slot->cost, receipt);
  }
}

}  // namespace ffem
