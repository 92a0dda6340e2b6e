#ifndef CASCADE_TESTS_SUPPORT_HPP
#define CASCADE_TESTS_SUPPORT_HPP

// Instance generators and oracles written without the library's solvers.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "cascade/model.hpp"
#include "cascade/rng.hpp"

namespace testing {

using cascade::Allocation;
using cascade::AuctionEnv;
using cascade::CascadeModel;
using cascade::Purpose;
using cascade::Stream;

struct Instance {
  AuctionEnv env;
  CascadeModel model;
};

inline Stream test_stream(std::uint64_t a, std::uint64_t b = 0) { return Stream(a, b, 0, Purpose::Test); }

inline std::vector<double> uniform_vector(Stream& rng, int n, double lo, double hi) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

inline Instance random_position_dependent(Stream& rng, int n, int k) {
  AuctionEnv env(k, uniform_vector(rng, n, 0.01, 1.0), uniform_vector(rng, n, 0.0, 1.0));
  return {env, CascadeModel::position_dependent(uniform_vector(rng, k - 1, 0.3, 1.0))};
}

inline Instance random_general(Stream& rng, int n, int k) {
  AuctionEnv env(k, uniform_vector(rng, n, 0.01, 1.0), uniform_vector(rng, n, 0.0, 1.0));
  std::vector<std::vector<double>> g(k);
  for (auto& row : g) row = uniform_vector(rng, n, 0.3, 1.0);
  return {env, CascadeModel::general(g)};
}

// Γ straight from the definition: product of γ over the ads shown above
inline double gamma_at(const std::vector<int>& ad_at, int m, const CascadeModel& model) {
  if (m >= model.n_slots()) return 0.0;
  double g = 1.0;
  for (int l = 0; l < m; ++l) g *= model.gamma(l, ad_at[l]);
  return g;
}

inline double welfare(const std::vector<int>& ad_at, const std::vector<double>& q, const std::vector<double>& v,
                      const CascadeModel& model, int skip = -1) {
  double sw = 0.0;
  for (int m = 0; m < model.n_slots(); ++m)
    if (ad_at[m] != skip) sw += gamma_at(ad_at, m, model) * q[ad_at[m]] * v[ad_at[m]];
  return sw;
}

// every full permutation of the ads, visited in lexicographic order
inline void for_each_permutation(int n, const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  do fn(p);
  while (std::next_permutation(p.begin(), p.end()));
}

// best welfare over all permutations, optionally with one ad removed
inline double best_welfare(const std::vector<double>& q, const std::vector<double>& v, const CascadeModel& model,
                           int without = -1) {
  const int n = static_cast<int>(q.size());
  double best = 0.0;
  for_each_permutation(n, [&](const std::vector<int>& p) {
    if (without >= 0 && std::find(p.begin(), p.begin() + model.n_slots(), without) != p.begin() + model.n_slots())
      return;
    best = std::max(best, welfare(p, q, v, model));
  });
  return best;
}

// VCG externality of every ad under allocation `chosen`, by enumeration
inline std::vector<double> enumerated_externalities(const std::vector<double>& q, const std::vector<double>& v,
                                                    const CascadeModel& model, const std::vector<int>& chosen) {
  const int n = static_cast<int>(q.size());
  std::vector<double> out(n, 0.0);
  for (int s = 0; s < model.n_slots(); ++s) {
    const int i = chosen[s];
    out[i] = best_welfare(q, v, model, i) - welfare(chosen, q, v, model, i);
  }
  return out;
}

inline Allocation random_allocation(Stream& rng, int n) {
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  for (int i = n - 1; i > 0; --i) std::swap(p[i], p[static_cast<int>(rng.uniform() * (i + 1))]);
  return Allocation::from_order(p);
}

}  // namespace testing

#endif  // CASCADE_TESTS_SUPPORT_HPP
