#ifndef CASCADE_MECHANISMS_HPP
#define CASCADE_MECHANISMS_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "cascade/allocation.hpp"
#include "cascade/model.hpp"
#include "cascade/payments.hpp"
#include "cascade/rng.hpp"

namespace cascade {

enum class MechanismKind { OracleVCG, AVCG1, AVCG2, AVCG2Prime, AVCG3, PADAVCG };
enum class Phase { Exploration, Exploitation };

inline std::string to_string(MechanismKind k) {
  switch (k) {
    case MechanismKind::OracleVCG: return "oracle";
    case MechanismKind::AVCG1: return "avcg1";
    case MechanismKind::AVCG2: return "avcg2";
    case MechanismKind::AVCG2Prime: return "avcg2p";
    case MechanismKind::AVCG3: return "avcg3";
    case MechanismKind::PADAVCG: return "pad";
  }
  return "?";
}

inline MechanismKind parse_mechanism(const std::string& s) {
  for (auto k : {MechanismKind::OracleVCG, MechanismKind::AVCG1, MechanismKind::AVCG2, MechanismKind::AVCG2Prime,
                 MechanismKind::AVCG3, MechanismKind::PADAVCG})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown mechanism '" + s + "'");
}

inline bool learns_qualities(MechanismKind k) {
  return k == MechanismKind::AVCG1 || k == MechanismKind::AVCG3 || k == MechanismKind::PADAVCG;
}

inline bool randomized(MechanismKind k) { return k == MechanismKind::AVCG2Prime || k == MechanismKind::AVCG3; }

// floor on q̃⁺ so the per-click divisions stay finite
inline constexpr double kQualityFloor = 1e-6;

/** \brief Quality estimates gathered during exploration. */
struct QualityEstimate {
  std::vector<double> sums;
  std::vector<int> samples;
  std::vector<double> q_hat;
  std::vector<double> q_plus;
  double eta = 0.0;
  double confidence = 1.0;

  // q̃⁺ = clip(q̃ + η) to [kQualityFloor, 1]
  void freeze(double eta_value) {
    eta = eta_value;
    q_hat.assign(sums.size(), 0.0);
    q_plus.assign(sums.size(), 0.0);
    for (std::size_t i = 0; i < sums.size(); ++i) {
      if (samples[i] < 1) throw ConfigError("ad " + std::to_string(i) + " was never sampled during exploration");
      q_hat[i] = sums[i] / samples[i];
      q_plus[i] = std::clamp(q_hat[i] + eta, kQualityFloor, 1.0);
    }
  }
};

inline double eta_avcg1(const std::vector<double>& cum_lambda, int n, int tau, double delta) {
  const int k = static_cast<int>(cum_lambda.size());
  double inv = 0.0;
  for (double l : cum_lambda) inv += 1.0 / (l * l);
  return std::sqrt(inv * 2.0 * n / (static_cast<double>(k) * k * tau) * std::log(2.0 * n / delta));
}

inline double eta_pad(double gamma_min, int n, int k, int tau, double delta) {
  return std::sqrt(n / (2.0 * k * tau) * std::log(2.0 * n / delta)) / gamma_min;
}

inline double eta_avcg3(int n, int tau, double delta) {
  return std::sqrt(static_cast<double>(n) / tau * std::log(2.0 * n / delta));
}

struct ExploitationPlan {
  Allocation allocation;
  std::vector<double> per_click;
  std::vector<double> expected_payments;
};

/** \brief Exploitation of A-VCG1 and PAD-A-VCG for frozen estimates q̃⁺.
 *
 *  Allocation maximizes Σ Γ q̃⁺ v̂. A click on the ad in slot m costs
 *  (SW̃(θ̃_{-i}) − SW̃_{-i}(θ̃)) / (Γ_m q̃⁺_i); the expected payment uses the true q.
 *  Position-dependent models use the closed-form externality.
 */
inline ExploitationPlan estimated_vcg_plan(const AuctionEnv& env, const BidProfile& bids, const CascadeModel& model,
                                           const std::vector<double>& q_plus) {
  model.check(env);
  validate_bids(env, bids);
  const int n = env.n_ads(), k = env.n_slots();
  if (static_cast<int>(q_plus.size()) != n) throw ConfigError("one estimate per ad is required");
  ExploitationPlan p;
  p.allocation = optimal_allocation(q_plus, bids, model);
  const auto ext = model.position_dependent()
                       ? position_dependent_externalities(q_plus, bids, model.cumulative_lambda())
                       : externalities(q_plus, bids, model, p.allocation);
  const auto g = cumulative_observation(p.allocation, model);
  p.per_click.assign(n, 0.0);
  p.expected_payments.assign(n, 0.0);
  for (int s = 0; s < k; ++s) {
    const int i = p.allocation.ad_at(s);
    const double denom = g[s] * q_plus[i];
    p.per_click[i] = denom > 0.0 ? ext[i] / denom : 0.0;
    p.expected_payments[i] = g[s] * env.qualities()[i] * p.per_click[i];
  }
  return p;
}

struct MechanismParams {
  MechanismKind kind = MechanismKind::OracleVCG;
  int tau = 0;
  double delta = 1.0;
  double mu = 0.0;
};

/** \brief Per-run phase state. Single owner, mutated once per round. */
struct MechanismState {
  MechanismKind kind;
  Phase phase = Phase::Exploitation;
  long t = 0;
  int tau = 0;
  double mu = 0.0;
  QualityEstimate estimate;
  std::vector<double> weights;
};

/** \brief What the mechanism commits to in one round, before clicks are seen. */
struct RoundPlan {
  Allocation allocation;
  std::optional<ResampledBids> resampled;
  // expectation over clicks given this round's allocation and resampling
  std::vector<double> expected_payments;
  // charged on a click of the ad; unused by the contingent scheme
  std::vector<double> per_click;
  std::vector<std::vector<double>> contingent;
};

/** \brief One of the learning mechanisms (or the VCG oracle) as a round-driven machine.
 *
 *  The environment's true qualities are read only where the mechanism is
 *  allowed to know them, and to report analytic expected payments.
 */
class Mechanism {
 public:
  Mechanism(MechanismParams params, AuctionEnv env, CascadeModel model)
      : params_(params), env_(std::move(env)), model_(std::move(model)) {
    model_.check(env_);
    state_.kind = params_.kind;
    const int n = env_.n_ads(), k = env_.n_slots();
    const auto kind = params_.kind;
    if (kind == MechanismKind::AVCG1 || kind == MechanismKind::AVCG2 || kind == MechanismKind::AVCG2Prime ||
        kind == MechanismKind::AVCG3) {
      if (!model_.position_dependent()) throw ConfigError(to_string(kind) + " needs a position-dependent model");
    }
    if (kind == MechanismKind::AVCG2) {
      for (double q : env_.qualities())
        if (q <= 0.0) throw ConfigError("avcg2 divides by qualities; every quality must be positive");
    }
    if (randomized(kind) && !(params_.mu > 0.0 && params_.mu <= 1.0)) throw ConfigError("mu must lie in (0,1]");
    if (learns_qualities(kind)) {
      if (!(params_.delta > 0.0 && params_.delta <= 1.0)) throw ConfigError("delta must lie in (0,1]");
      const int min_tau = kind == MechanismKind::AVCG3 ? n : (n + k - 1) / k;
      if (params_.tau < min_tau)
        throw ConfigError("tau = " + std::to_string(params_.tau) + " leaves some ad unsampled; need tau >= " +
                          std::to_string(min_tau));
      if (kind == MechanismKind::PADAVCG) {
        gamma_min_ = model_.gamma_min(n);
        if (gamma_min_ <= 0.0) throw ConfigError("pad needs gamma_min > 0");
      } else if (model_.lambda_min() <= 0.0) {
        throw ConfigError("exploration needs every slot to be observable (lambda_min > 0)");
      }
      state_.tau = params_.tau;
      state_.phase = Phase::Exploration;
      state_.estimate.sums.assign(n, 0.0);
      state_.estimate.samples.assign(n, 0);
      state_.estimate.confidence = params_.delta;
    }
    state_.mu = params_.mu;
  }

  const MechanismState& state() const { return state_; }
  const AuctionEnv& env() const { return env_; }
  const CascadeModel& model() const { return model_; }

  /** \brief Start round t+1. `rng` feeds the resampling of randomized kinds. */
  template <class Rng>
  const RoundPlan& step(const BidProfile& bids, Rng& rng) {
    ++state_.t;
    if (learns_qualities(state_.kind) && state_.t <= state_.tau) {
      current_ = exploration_plan();
      return current_;
    }
    switch (state_.kind) {
      case MechanismKind::AVCG2Prime: current_ = resampled_plan(bids, env_.qualities(), rng); return current_;
      case MechanismKind::AVCG3: current_ = resampled_plan(bids, state_.estimate.q_plus, rng); return current_;
      default: return cached_plan(bids);
    }
  }

  /** \brief Charge the round's clicks and feed exploration samples. */
  std::vector<double> settle(const RoundPlan& plan, const ClickRealization& clicks) {
    const int n = env_.n_ads(), k = env_.n_slots();
    std::vector<double> paid(n, 0.0);
    if (state_.phase == Phase::Exploration) {
      record(plan.allocation, clicks);
      if (state_.t == state_.tau) finish_exploration();
      return paid;
    }
    if (!plan.contingent.empty()) return apply_contingent(plan.contingent, clicks);
    for (int s = 0; s < k; ++s)
      if (clicks.clicked[s]) paid[plan.allocation.ad_at(s)] = plan.per_click[plan.allocation.ad_at(s)];
    return paid;
  }

  /** \brief Cyclic exploration allocation for round t (1-based).
   *
   *  Each round advances the cycle by `stride` ads. Stride K makes the shown
   *  slots walk K·τ consecutive ads, so every ad gets ⌊Kτ/N⌋ or ⌈Kτ/N⌉ samples;
   *  stride 1 does the same for the top slot alone.
   */
  static Allocation exploration_allocation(long t, int n, int stride = 1) {
    std::vector<int> order(n);
    const long first = static_cast<long>(stride) * (t - 1) + 1;
    for (int s = 0; s < n; ++s) order[s] = static_cast<int>((first + s) % n);
    return Allocation::from_order(std::move(order));
  }

 private:
  RoundPlan exploration_plan() const {
    const int n = env_.n_ads();
    RoundPlan p;
    const int stride = state_.kind == MechanismKind::AVCG3 ? 1 : env_.n_slots();
    p.allocation = exploration_allocation(state_.t, n, stride);
    p.expected_payments.assign(n, 0.0);
    p.per_click.assign(n, 0.0);
    return p;
  }

  void record(const Allocation& a, const ClickRealization& clicks) {
    auto& est = state_.estimate;
    const int k = env_.n_slots();
    if (state_.kind == MechanismKind::AVCG3) {
      const int i = a.ad_at(0);
      est.sums[i] += clicks.clicked[0] ? 1.0 : 0.0;
      ++est.samples[i];
      return;
    }
    const auto g = cumulative_observation(a, model_);
    for (int s = 0; s < k; ++s) {
      const int i = a.ad_at(s);
      if (clicks.clicked[s]) est.sums[i] += 1.0 / g[s];
      ++est.samples[i];
    }
  }

  void finish_exploration() {
    const int n = env_.n_ads(), k = env_.n_slots();
    const int tau = state_.tau;
    const double delta = params_.delta;
    double eta = 0.0;
    switch (state_.kind) {
      case MechanismKind::AVCG1: eta = eta_avcg1(model_.cumulative_lambda(), n, tau, delta); break;
      case MechanismKind::PADAVCG: eta = eta_pad(gamma_min_, n, k, tau, delta); break;
      case MechanismKind::AVCG3: eta = eta_avcg3(n, tau, delta); break;
      default: break;
    }
    state_.estimate.freeze(eta);
    state_.weights.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
      const double q = env_.qualities()[i];
      state_.weights[i] = q > 0.0 ? state_.estimate.q_plus[i] / q : HUGE_VAL;
    }
    state_.phase = Phase::Exploitation;
  }

  // deterministic exploitation rounds only depend on the bids, so reuse the plan
  const RoundPlan& cached_plan(const BidProfile& bids) {
    if (cache_ && cache_bids_ == bids) return *cache_;
    validate_bids(env_, bids);
    cache_ = build_plan(bids);
    cache_bids_ = bids;
    return *cache_;
  }

  RoundPlan build_plan(const BidProfile& bids) const {
    const int n = env_.n_ads(), k = env_.n_slots();
    const auto& q = env_.qualities();
    RoundPlan p;
    p.per_click.assign(n, 0.0);
    p.expected_payments.assign(n, 0.0);
    switch (state_.kind) {
      case MechanismKind::OracleVCG:
      case MechanismKind::AVCG2: {
        p.allocation = optimal_allocation(q, bids, model_);
        p.expected_payments = externalities(q, bids, model_, p.allocation);
        if (state_.kind == MechanismKind::AVCG2) {
          p.contingent = contingent_coefficients(env_, bids, model_);
          break;
        }
        const auto g = cumulative_observation(p.allocation, model_);
        for (int s = 0; s < k; ++s) {
          const int i = p.allocation.ad_at(s);
          const double ctr = g[s] * q[i];
          p.per_click[i] = ctr > 0.0 ? p.expected_payments[i] / ctr : 0.0;
        }
        break;
      }
      case MechanismKind::AVCG1:
      case MechanismKind::PADAVCG: {
        auto e = estimated_vcg_plan(env_, bids, model_, state_.estimate.q_plus);
        p.allocation = std::move(e.allocation);
        p.per_click = std::move(e.per_click);
        p.expected_payments = std::move(e.expected_payments);
        break;
      }
      default: break;
    }
    return p;
  }

  template <class Rng>
  RoundPlan resampled_plan(const BidProfile& bids, const std::vector<double>& qualities, Rng& rng) const {
    const int n = env_.n_ads(), k = env_.n_slots();
    const double mu = params_.mu;
    auto [alloc, r] = randomized_allocate(qualities, bids, model_, mu, rng);
    RoundPlan p;
    p.per_click.assign(n, 0.0);
    p.expected_payments.assign(n, 0.0);
    const auto g = cumulative_observation(alloc, model_);
    for (int s = 0; s < k; ++s) {
      const int i = alloc.ad_at(s);
      p.per_click[i] = srp_click_payment(i, bids, r, mu, true);
      p.expected_payments[i] = g[s] * env_.qualities()[i] * p.per_click[i];
    }
    p.allocation = std::move(alloc);
    p.resampled = std::move(r);
    return p;
  }

  MechanismParams params_;
  AuctionEnv env_;
  CascadeModel model_;
  MechanismState state_;
  double gamma_min_ = 1.0;
  RoundPlan current_;
  std::optional<RoundPlan> cache_;
  BidProfile cache_bids_;
};

}  // namespace cascade

#endif  // CASCADE_MECHANISMS_HPP
