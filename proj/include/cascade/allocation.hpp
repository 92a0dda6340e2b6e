#ifndef CASCADE_ALLOCATION_HPP
#define CASCADE_ALLOCATION_HPP

#include <algorithm>
#include <functional>
#include <numeric>
#include <optional>
#include <vector>

#include "cascade/model.hpp"

namespace cascade {

enum class Strategy { Auto, SortByExpectedValue, BruteForce };

namespace detail {

// ads ordered by key descending, lowest index first on ties; `skip` goes last
inline std::vector<int> rank_by_key(const std::vector<double>& key, int skip) {
  std::vector<int> order;
  order.reserve(key.size());
  for (int i = 0; i < static_cast<int>(key.size()); ++i)
    if (i != skip) order.push_back(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return key[a] > key[b]; });
  if (skip >= 0) order.push_back(skip);
  return order;
}

inline std::vector<double> expected_value_keys(const std::vector<double>& qualities, const BidProfile& bids) {
  std::vector<double> key(qualities.size());
  for (std::size_t i = 0; i < key.size(); ++i) key[i] = qualities[i] * bids[i];
  return key;
}

inline Allocation brute_force(const std::vector<double>& key, const CascadeModel& model, int skip) {
  const int n = static_cast<int>(key.size());
  const int k = model.n_slots();
  std::vector<int> current(k), best_prefix;
  std::vector<char> used(n, 0);
  if (skip >= 0) used[skip] = 1;
  double best = -1.0;
  // slots are filled top-down so the running Γ is the product of the prefix
  std::function<void(int, double, double)> rec = [&](int m, double gam, double sw) {
    if (m == k) {
      if (sw > best) {
        best = sw;
        best_prefix = current;
      }
      return;
    }
    for (int i = 0; i < n; ++i) {
      if (used[i]) continue;
      used[i] = 1;
      current[m] = i;
      const double next = m + 1 < k ? gam * model.gamma(m, i) : 0.0;
      rec(m + 1, next, sw + gam * key[i]);
      used[i] = 0;
    }
  };
  rec(0, 1.0, 0.0);

  std::vector<int> order = best_prefix;
  std::vector<char> placed(n, 0);
  for (int i : order) placed[i] = 1;
  for (int i : rank_by_key(key, skip))
    if (!placed[i] && i != skip) order.push_back(i);
  if (skip >= 0) order.push_back(skip);
  return Allocation::from_order(std::move(order));
}

inline Allocation solve(const std::vector<double>& qualities, const BidProfile& bids, const CascadeModel& model,
                        Strategy strategy, int skip) {
  const int n = static_cast<int>(qualities.size());
  if (static_cast<int>(bids.size()) != n) throw ConfigError("one bid per ad is required");
  if (model.n_slots() >= n) throw ConfigError("n_slots must be smaller than n_ads");
  model.check_ads(n);
  if (skip >= n) throw std::out_of_range("ad index out of range");
  if (strategy == Strategy::Auto)
    strategy = model.position_dependent() ? Strategy::SortByExpectedValue : Strategy::BruteForce;
  if (strategy == Strategy::SortByExpectedValue && !model.position_dependent())
    throw ConfigError("sort-based allocation needs a position-dependent model");
  const auto key = expected_value_keys(qualities, bids);
  if (strategy == Strategy::SortByExpectedValue) return Allocation::from_order(rank_by_key(key, skip));
  return brute_force(key, model, skip);
}

}  // namespace detail

/** \brief f*: argmax of Σ Γ q v̂ over allocations.
 *
 *  Passing estimated qualities instead of the true ones gives f̃.
 */
inline Allocation optimal_allocation(const std::vector<double>& qualities, const BidProfile& bids,
                                     const CascadeModel& model, Strategy strategy = Strategy::Auto) {
  return detail::solve(qualities, bids, model, strategy, -1);
}

inline Allocation optimal_allocation(const AuctionEnv& env, const BidProfile& bids,
                                     const std::vector<double>& qualities, const CascadeModel& model,
                                     Strategy strategy = Strategy::Auto) {
  model.check(env);
  return optimal_allocation(qualities, bids, model, strategy);
}

/** \brief θ*_{-i}: best allocation of the other ads, i parked in the last extended slot. */
inline Allocation optimal_allocation_excluding(int i, const std::vector<double>& qualities, const BidProfile& bids,
                                               const CascadeModel& model, Strategy strategy = Strategy::Auto) {
  if (i < 0) throw std::out_of_range("ad index out of range");
  return detail::solve(qualities, bids, model, strategy, i);
}

inline Allocation optimal_allocation_excluding(int i, const AuctionEnv& env, const BidProfile& bids,
                                               const std::vector<double>& qualities, const CascadeModel& model,
                                               Strategy strategy = Strategy::Auto) {
  model.check(env);
  return optimal_allocation_excluding(i, qualities, bids, model, strategy);
}

struct MonotonicityWitness {
  int ad;
  double bid_low;
  double bid_high;
  double ctr_low;
  double ctr_high;
};

using AllocationRule = std::function<Allocation(const BidProfile&)>;

/** \brief First grid step where raising an ad's bid lowers its true CTR.
 *
 *  Bids of the other ads stay at env's true values. No witness on the grid
 *  does not prove the rule monotone.
 */
inline std::optional<MonotonicityWitness> monotonicity_witness(const AllocationRule& rule, const AuctionEnv& env,
                                                               const CascadeModel& model_true,
                                                               const std::vector<double>& bid_grid) {
  const auto& q = env.qualities();
  auto ctr = [&](int i, const BidProfile& bids) {
    const Allocation a = rule(bids);
    return cumulative_observation(a, model_true)[a.slot_of(i)] * q[i];
  };
  for (int i = 0; i < env.n_ads(); ++i) {
    for (std::size_t g = 0; g + 1 < bid_grid.size(); ++g) {
      const double lo = bid_grid[g], hi = bid_grid[g + 1];
      const double c_lo = ctr(i, with_bid(env.true_values(), i, lo));
      const double c_hi = ctr(i, with_bid(env.true_values(), i, hi));
      if (c_hi < c_lo) return MonotonicityWitness{i, lo, hi, c_lo, c_hi};
    }
  }
  return std::nullopt;
}

}  // namespace cascade

#endif  // CASCADE_ALLOCATION_HPP
