#ifndef CASCADE_PAYMENTS_HPP
#define CASCADE_PAYMENTS_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cascade/allocation.hpp"
#include "cascade/model.hpp"
#include "cascade/rng.hpp"

namespace cascade {

/** \brief SW(θ_{-i}) − SW_{-i}(θ) for every ad, welfare measured with `qualities`. */
inline std::vector<double> externalities(const std::vector<double>& qualities, const BidProfile& bids,
                                         const CascadeModel& model, const Allocation& chosen,
                                         Strategy strategy = Strategy::Auto) {
  const int n = static_cast<int>(qualities.size());
  std::vector<double> out(n, 0.0);
  for (int i = 0; i < n; ++i) {
    if (chosen.slot_of(i) >= model.n_slots()) continue;
    const Allocation without = optimal_allocation_excluding(i, qualities, bids, model, strategy);
    out[i] = social_welfare(without, qualities, bids, model) -
             social_welfare_excluding(i, chosen, qualities, bids, model);
  }
  return out;
}

/** \brief Σ_{l>m} (Λ_{l-1} − Λ_l) · (l-th largest key), indexed by ad. */
inline std::vector<double> position_dependent_externalities(const std::vector<double>& qualities,
                                                            const BidProfile& bids,
                                                            const std::vector<double>& cum_lambda) {
  const int n = static_cast<int>(qualities.size());
  const int k = static_cast<int>(cum_lambda.size());
  const auto key = detail::expected_value_keys(qualities, bids);
  const auto order = detail::rank_by_key(key, -1);
  auto lam = [&](int s) { return s < k ? cum_lambda[s] : 0.0; };
  std::vector<double> out(n, 0.0);
  for (int s = 0; s < k; ++s) {
    double p = 0.0;
    for (int l = s + 1; l <= k; ++l) p += (lam(l - 1) - lam(l)) * key[order[l]];
    out[order[s]] = p;
  }
  return out;
}

inline std::vector<double> vcg_expected_payments(const AuctionEnv& env, const BidProfile& bids,
                                                 const CascadeModel& model) {
  model.check(env);
  validate_bids(env, bids);
  const Allocation theta = optimal_allocation(env.qualities(), bids, model);
  return externalities(env.qualities(), bids, model, theta);
}

/** \brief Pay-per-click VCG: p*_i / CTR_i charged on a click. */
inline double vcg_click_payment(int i, const AuctionEnv& env, const BidProfile& bids, const CascadeModel& model,
                                bool clicked) {
  const auto p = vcg_expected_payments(env, bids, model);
  if (!clicked) return 0.0;
  const Allocation theta = optimal_allocation(env.qualities(), bids, model);
  const double ctr = cumulative_observation(theta, model)[theta.slot_of(i)] * env.qualities()[i];
  if (ctr <= 0.0) throw ImpossibleEvent("click on an ad with zero click-through rate");
  return p[i] / ctr;
}

/** \brief Weighted VCG: allocation maximizes Σ Γ w q v̂, payments rescaled by 1/w. */
inline std::vector<double> wvcg_expected_payments(const AuctionEnv& env, const BidProfile& bids,
                                                  const CascadeModel& model, const std::vector<double>& weights) {
  model.check(env);
  validate_bids(env, bids);
  if (static_cast<int>(weights.size()) != env.n_ads()) throw ConfigError("one weight per ad is required");
  std::vector<double> wq(weights.size());
  for (std::size_t i = 0; i < wq.size(); ++i) {
    if (!(weights[i] > 0.0) || !std::isfinite(weights[i])) throw ConfigError("weights must be positive");
    wq[i] = weights[i] * env.qualities()[i];
  }
  const Allocation theta = optimal_allocation(wq, bids, model);
  auto p = externalities(wq, bids, model, theta);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] /= weights[i];
  return p;
}

/** \brief Myerson payment Λ q v̂ − ∫_0^{v̂} Λ_{π(u)} q du, integrated piece by piece.
 *
 *  Ad i's slot only changes where q_i u crosses another ad's key, so the
 *  integrand is a step function with breakpoints key_j / q_i.
 */
inline double myerson_piecewise_payment(int i, const AuctionEnv& env, const BidProfile& bids,
                                        const std::vector<double>& qualities, const CascadeModel& model) {
  if (!model.position_dependent()) throw ConfigError("piecewise payments need a position-dependent model");
  model.check(env);
  const int n = env.n_ads();
  if (i < 0 || i >= n) throw std::out_of_range("ad index out of range");
  const double qi = qualities[i];
  const double b = bids[i];
  if (qi <= 0.0 || b <= 0.0) return 0.0;
  const auto lam = model.cumulative_lambda();
  const int k = model.n_slots();

  // above u_j = key_j / q_i ad i ranks ahead of j; zero keys give empty pieces
  std::vector<std::pair<double, int>> cuts;
  int slot = 0;
  for (int j = 0; j < n; ++j) {
    if (j == i) continue;
    cuts.emplace_back(qualities[j] * bids[j] / qi, j);
    ++slot;
  }
  std::sort(cuts.begin(), cuts.end());
  auto lam_at = [&](int s) { return s < k ? lam[s] : 0.0; };

  double integral = 0.0;
  double prev = 0.0;
  for (const auto& [u, j] : cuts) {
    if (u >= b) break;
    integral += lam_at(slot) * (u - prev);
    prev = u;
    --slot;
  }
  integral += lam_at(slot) * (b - prev);

  const Allocation theta = optimal_allocation(qualities, bids, model);
  return lam_at(theta.slot_of(i)) * qi * b - qi * integral;
}

/** \brief Per-slot click coefficients of the execution-contingent payments.
 *
 *  p^c_i = Σ_m click_m · coef[i][m]; computed once per bid profile.
 */
inline std::vector<std::vector<double>> contingent_coefficients(const AuctionEnv& env, const BidProfile& bids,
                                                                const CascadeModel& model) {
  if (!model.position_dependent()) throw ConfigError("contingent payments need a position-dependent model");
  model.check(env);
  validate_bids(env, bids);
  const auto& q = env.qualities();
  const int n = env.n_ads();
  const int k = env.n_slots();
  const Allocation theta = optimal_allocation(q, bids, model);
  std::vector<std::vector<double>> coef(n, std::vector<double>(k, 0.0));
  for (int s = 0; s < k; ++s)
    if (q[theta.ad_at(s)] <= 0.0) throw ConfigError("contingent payments need positive quality for displayed ads");
  for (int s0 = 0; s0 < k; ++s0) {
    const int i = theta.ad_at(s0);
    const Allocation without = optimal_allocation_excluding(i, q, bids, model);
    for (int s = s0; s < k; ++s) {
      const int shown = theta.ad_at(s);
      const int moved = without.ad_at(s);
      coef[i][s] += q[moved] * bids[moved] / q[shown];
      if (s > s0) coef[i][s] -= bids[shown];
    }
  }
  return coef;
}

inline std::vector<double> apply_contingent(const std::vector<std::vector<double>>& coef,
                                            const ClickRealization& clicks) {
  std::vector<double> p(coef.size(), 0.0);
  for (std::size_t i = 0; i < coef.size(); ++i)
    for (std::size_t s = 0; s < coef[i].size(); ++s)
      if (clicks.clicked[s]) p[i] += coef[i][s];
  return p;
}

/** \brief Execution-contingent payments; they use q but never Λ. */
inline std::vector<double> avcg2_click_payments(const AuctionEnv& env, const BidProfile& bids,
                                                const CascadeModel& model, const ClickRealization& clicks) {
  return apply_contingent(contingent_coefficients(env, bids, model), clicks);
}

/** \brief Output of the self-resampling step for every ad. */
struct ResampledBids {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<bool> s;
};

inline constexpr int kResampleDepth = 64;

/** \brief Canonical self-resampling of one bid. Returns (x, y). */
template <class Rng>
std::pair<double, double> csrp(double bid, double mu, Rng& rng) {
  if (!(mu > 0.0 && mu <= 1.0)) throw ConfigError("mu must lie in (0,1]");
  if (!(bid >= 0.0) || !std::isfinite(bid)) throw ConfigError("bid must be finite and >= 0");
  if (rng.uniform() >= mu) return {bid, bid};
  const double y = bid * rng.uniform();
  double x = y;
  for (int depth = 0;; ++depth) {
    if (depth == kResampleDepth) return {0.0, y};
    if (rng.uniform() >= mu) break;
    x *= rng.uniform();
  }
  return {x, y};
}

/** \brief Resample every bid then allocate on the resampled bids x. */
template <class Rng>
std::pair<Allocation, ResampledBids> randomized_allocate(const std::vector<double>& qualities, const BidProfile& bids,
                                                         const CascadeModel& model, double mu, Rng& rng) {
  ResampledBids r;
  const auto n = bids.size();
  r.x.resize(n);
  r.y.resize(n);
  r.s.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::tie(r.x[i], r.y[i]) = csrp(bids[i], mu, rng);
    r.s[i] = r.x[i] == bids[i] && r.y[i] == bids[i];
  }
  Allocation a = optimal_allocation(qualities, r.x, model);
  return {std::move(a), std::move(r)};
}

/** \brief Per-click payment with the implicit Myerson rebate. */
inline double srp_click_payment(int i, const BidProfile& bids, const ResampledBids& resampled, double mu,
                                bool clicked) {
  if (!clicked) return 0.0;
  const double b = bids[i];
  return resampled.y[i] < b ? b - b / mu : b;
}

}  // namespace cascade

#endif  // CASCADE_PAYMENTS_HPP
