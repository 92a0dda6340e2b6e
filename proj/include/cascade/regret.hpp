#ifndef CASCADE_REGRET_HPP
#define CASCADE_REGRET_HPP

#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "cascade/mechanisms.hpp"
#include "cascade/model.hpp"
#include "cascade/payments.hpp"
#include "cascade/simulation.hpp"

namespace cascade {

enum class TheoremId { T1_AVCG1_rev, T2_AVCG1_sw, T4_AVCG2p_rev, T5_AVCG2p_sw, T7_AVCG3_rev, T7sw_AVCG3_sw,
                       T8_PAD_rev, T9_PAD_sw, T11_deviation };

inline const std::vector<std::pair<TheoremId, std::string>>& theorem_names() {
  static const std::vector<std::pair<TheoremId, std::string>> names = {
      {TheoremId::T1_AVCG1_rev, "T1"},   {TheoremId::T2_AVCG1_sw, "T2"},   {TheoremId::T4_AVCG2p_rev, "T4"},
      {TheoremId::T5_AVCG2p_sw, "T5"},   {TheoremId::T7_AVCG3_rev, "T7"},  {TheoremId::T7sw_AVCG3_sw, "T7sw"},
      {TheoremId::T8_PAD_rev, "T8"},     {TheoremId::T9_PAD_sw, "T9"},     {TheoremId::T11_deviation, "T11"}};
  return names;
}

inline std::string to_string(TheoremId id) {
  for (const auto& [k, v] : theorem_names())
    if (k == id) return v;
  return "?";
}

inline TheoremId parse_theorem(const std::string& s) {
  for (const auto& [k, v] : theorem_names())
    if (v == s) return k;
  throw ConfigError("unknown theorem '" + s + "'");
}

namespace detail {

// x^e for the thirds used by the bounds, through cbrt so exact cubes stay exact
inline double third_pow(double x, double e) {
  const double c = std::cbrt(x);
  if (e == 2.0 / 3) return c * c;
  if (e == -2.0 / 3) return 1.0 / (c * c);
  if (e == 4.0 / 3) return x * c;
  if (e == -1.0 / 3) return 1.0 / c;
  return std::pow(x, e);
}

}  // namespace detail

/** \brief The mechanism a theorem speaks about. */
inline MechanismKind theorem_mechanism(TheoremId id) {
  switch (id) {
    case TheoremId::T1_AVCG1_rev:
    case TheoremId::T2_AVCG1_sw:
    case TheoremId::T11_deviation: return MechanismKind::AVCG1;
    case TheoremId::T4_AVCG2p_rev:
    case TheoremId::T5_AVCG2p_sw: return MechanismKind::AVCG2Prime;
    case TheoremId::T7_AVCG3_rev:
    case TheoremId::T7sw_AVCG3_sw: return MechanismKind::AVCG3;
    case TheoremId::T8_PAD_rev:
    case TheoremId::T9_PAD_sw: return MechanismKind::PADAVCG;
  }
  return MechanismKind::OracleVCG;
}

// Λ_min for position-dependent theorems, Γ_min for the PAD ones
struct BoundInputs {
  double T = 1;
  double K = 1;
  double N = 1;
  double v_max = 1;
  double discount_min = 1;
  double q_min = 1;
  double mu = 0;
};

struct BoundValue {
  double value = 0;
  std::vector<std::string> warnings;
};

/** \brief Closed-form regret bound of a theorem, evaluated as printed. */
inline BoundValue bound(TheoremId id, const BoundInputs& in) {
  BoundValue out;
  const double T = in.T, K = in.K, N = in.N, v = in.v_max, L = in.discount_min;
  auto c = [](double x) { return std::cbrt(x); };
  auto p = [](double x, double e) { return detail::third_pow(x, e); };
  auto log_term = [&](double arg) {
    if (arg < 1.0) out.warnings.push_back("log argument " + std::to_string(arg) + " is below 1");
    return c(std::log(arg));
  };
  const bool uses_discount = id != TheoremId::T4_AVCG2p_rev && id != TheoremId::T5_AVCG2p_sw &&
                             id != TheoremId::T7_AVCG3_rev && id != TheoremId::T7sw_AVCG3_sw;
  if (uses_discount && !(L > 0.0 && L <= 1.0)) out.warnings.push_back("discount minimum must lie in (0,1]");
  if ((id == TheoremId::T8_PAD_rev || id == TheoremId::T11_deviation) && !(in.q_min > 0.0))
    out.warnings.push_back("q_min must be positive");
  switch (id) {
    case TheoremId::T1_AVCG1_rev:
      out.value = 4.0 * c(2.0) * v * p(L, -2.0 / 3) * p(K, 2.0 / 3) * p(T, 2.0 / 3) * c(N) *
                  log_term(c(K) * c(T) * p(N, 2.0 / 3));
      break;
    case TheoremId::T2_AVCG1_sw:
      out.value = 4.0 * v * p(std::sqrt(2.0) / L, 2.0 / 3) * p(K, 2.0 / 3) * c(N) * p(T, 2.0 / 3) *
                  log_term(p(2.0, 2.0 / 3) * p(L, 2.0 / 3) * p(N, 2.0 / 3) * c(K) * c(T));
      break;
    case TheoremId::T4_AVCG2p_rev: out.value = 2.0 * K * K * in.mu * v * T; break;
    case TheoremId::T5_AVCG2p_sw: out.value = K * K * in.mu * v * T; break;
    case TheoremId::T7_AVCG3_rev:
      out.value = 6.0 * v * K * p(T, 2.0 / 3) * c(N) * log_term(2.0 * p(N, 2.0 / 3) * c(T));
      break;
    case TheoremId::T7sw_AVCG3_sw:
      out.value = 5.0 * v * K * c(N) * p(T, 2.0 / 3) * log_term(p(N, 2.0 / 3) * c(T));
      break;
    case TheoremId::T8_PAD_rev:
      out.value = 4.0 * v * p(K, 4.0 / 3) * p(T, 2.0 / 3) * c(N) * p(5.0, 2.0 / 3) /
                  (c(2.0) * p(L, 2.0 / 3) * in.q_min) *
                  log_term(c(2.0) * p(L, 2.0 / 3) * p(N, 2.0 / 3) * c(T) / (c(K) * p(5.0, 2.0 / 3)));
      break;
    case TheoremId::T9_PAD_sw:
      out.value = 4.0 * v * p(std::sqrt(2.0) / L, 2.0 / 3) * p(K, 2.0 / 3) * c(N) * p(T, 2.0 / 3) *
                  log_term(p(2.0, 2.0 / 3) * p(L, -2.0 / 3) * p(N, 2.0 / 3) * c(K) * c(T));
      break;
    case TheoremId::T11_deviation:
      out.value = v * 4.0 * c(2.0) * p(K, -1.0 / 3) * c(N) * p(T, 2.0 / 3) / (in.q_min * p(L, 2.0 / 3)) *
                  log_term(p(N, 2.0 / 3) * c(K) * c(T));
      break;
  }
  return out;
}

struct Tuning {
  int tau = 0;
  double delta = 1.0;
  std::optional<double> mu;
  std::vector<std::string> warnings;
};

/** \brief Closed-form (τ, δ, μ) of a theorem.
 *
 *  τ is rounded up and floored at the mechanism's minimum; δ above 1 is
 *  clamped with a warning. Constraints the theorem states explicitly throw.
 */
inline Tuning tune(TheoremId id, long T_in, int K_in, int N_in, double discount_min = 1.0, double alpha = 1.5) {
  if (T_in < 1 || K_in < 1 || N_in < 1) throw ConfigError("T, K and N must be positive");
  const double T = static_cast<double>(T_in), K = K_in, N = N_in, L = discount_min;
  auto c = [](double x) { return std::cbrt(x); };
  auto p = [](double x, double e) { return detail::third_pow(x, e); };
  Tuning out;
  double tau = 0.0;
  int tau_floor = (N_in + K_in - 1) / K_in;

  auto need = [&](bool ok, const std::string& constraint) {
    if (!ok) throw ConfigError(to_string(id) + " requires " + constraint);
  };
  auto clamp_delta = [&](double d) {
    if (d > 1.0) {
      out.warnings.push_back("delta = " + std::to_string(d) + " exceeds 1, clamped");
      d = 1.0;
    }
    return d;
  };
  if (id != TheoremId::T4_AVCG2p_rev && id != TheoremId::T5_AVCG2p_sw && id != TheoremId::T7_AVCG3_rev &&
      id != TheoremId::T7sw_AVCG3_sw)
    need(L > 0.0 && L <= 1.0, "a discount minimum in (0,1]");

  switch (id) {
    case TheoremId::T1_AVCG1_rev:
      need(T * K >= N, "T >= N/K");
      out.delta = clamp_delta(c(N) / (c(K) * c(T)));
      tau = c(2.0) / c(K) * p(T, 2.0 / 3) * c(N) * p(L, -2.0 / 3) * c(std::log(c(K) * c(T) * p(N, 2.0 / 3)));
      break;
    case TheoremId::T2_AVCG1_sw:
      out.delta = clamp_delta(p(std::sqrt(2.0) / L, 2.0 / 3) * c(N) / (c(K) * c(T)));
      tau = p(std::sqrt(2.0) / L, 2.0 / 3) * p(T, 2.0 / 3) * c(N) / c(K) *
            c(std::log(p(2.0, 2.0 / 3) * p(L, 2.0 / 3) * p(N, 2.0 / 3) * c(K) * c(T)));
      break;
    case TheoremId::T4_AVCG2p_rev:
    case TheoremId::T5_AVCG2p_sw:
      need(alpha > 0.0, "alpha > 0");
      out.mu = p(T, -alpha);
      tau_floor = 0;
      break;
    case TheoremId::T7_AVCG3_rev:
      need(T >= N, "T >= N");
      out.mu = 1.0 / (p(N, 2.0 / 3) * c(T));
      out.delta = clamp_delta(c(N) / c(T));
      tau = p(T, 2.0 / 3) * c(N) * c(std::log(2.0 * N / out.delta));
      tau_floor = N_in;
      break;
    case TheoremId::T7sw_AVCG3_sw:
      need(T >= N, "T >= N");
      need(T * K * K * K > N, "T > N/K^3");
      out.mu = c(N) / (K * c(T));
      out.delta = clamp_delta(c(N) / c(T));
      tau = p(T, 2.0 / 3) * c(N) * c(std::log(2.0 * N / out.delta));
      tau_floor = N_in;
      break;
    case TheoremId::T8_PAD_rev: {
      const double a = p(5.0 / (std::sqrt(2.0) * L), 2.0 / 3);
      out.delta = clamp_delta(c(K) * c(N) * a / c(T));
      tau = a * c(K) * p(T, 2.0 / 3) * c(N) * c(std::log(N / out.delta));
      break;
    }
    case TheoremId::T9_PAD_sw: {
      const double a = p(std::sqrt(2.0) / L, 2.0 / 3);
      out.delta = clamp_delta(a * c(N) / (c(K) * c(T)));
      tau = a * p(T, 2.0 / 3) * c(N) / c(K) * c(std::log(2.0 * N / out.delta));
      break;
    }
    case TheoremId::T11_deviation:
      need(T * K >= N, "T >= N/K");
      out.delta = clamp_delta(c(N) / (c(K) * c(T)));
      tau = c(2.0) / c(K) * c(N) * p(T, 2.0 / 3) * p(L, -2.0 / 3) * c(std::log(N / out.delta));
      break;
  }
  out.tau = std::max(tau_floor, static_cast<int>(std::ceil(tau)));
  need(out.tau <= T_in, "tau <= T (tuned tau = " + std::to_string(out.tau) + ")");
  return out;
}

/** \brief Regret of one replication, accumulated round by round. */
struct ReplicationRegret {
  double revenue = 0;
  double sw = 0;
  double deviation = 0;
  // Σ_i p*_i − Σ_i p_{i,t} for every round
  std::vector<double> per_round;
};

/** \brief Compares a run against the VCG mechanism with true parameters. */
class RegretTracker {
 public:
  RegretTracker(const AuctionEnv& env, const BidProfile& bids, const CascadeModel& model, bool keep_rounds = true)
      : env_(env), bids_(bids), model_(model), keep_(keep_rounds) {
    const Allocation best = optimal_allocation(env.qualities(), bids, model);
    const auto p = externalities(env.qualities(), bids, model, best);
    p_star_ = std::accumulate(p.begin(), p.end(), 0.0);
    sw_star_ = social_welfare(best, env.qualities(), bids, model);
  }

  double p_star_total() const { return p_star_; }
  double sw_star() const { return sw_star_; }

  void add(const Allocation& allocation, const std::vector<double>& expected_payments) {
    const double paid = std::accumulate(expected_payments.begin(), expected_payments.end(), 0.0);
    const double r = p_star_ - paid;
    out_.revenue += r;
    out_.deviation += std::abs(r);
    out_.sw += sw_star_ - social_welfare(allocation, env_.qualities(), bids_, model_);
    if (keep_) out_.per_round.push_back(r);
  }

  void add(const RoundView& v) { add(v.allocation, v.expected_payments); }
  void add(const RoundTrace& v) { add(v.allocation, v.expected_payments); }

  const ReplicationRegret& result() const { return out_; }

 private:
  const AuctionEnv& env_;
  const BidProfile& bids_;
  const CascadeModel& model_;
  bool keep_;
  double p_star_ = 0;
  double sw_star_ = 0;
  ReplicationRegret out_;
};

struct RegretReport {
  std::vector<double> per_round_revenue_regret;
  double R_T = 0;
  double R_T_SW = 0;
  double R_tilde_T = 0;
  // standard error of R_T across replications
  double stderr_R_T = 0;
  double bound_B = 0;
  double relative = 0;
  std::optional<TheoremId> bound_id;
  std::vector<std::string> warnings;
};

inline double mean_of(const std::vector<double>& x) {
  return x.empty() ? 0.0 : std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

inline double stderr_of(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  const double m = mean_of(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1) / static_cast<double>(x.size()));
}

/** \brief Average replications. Payments of randomized rounds are averaged
 *  across replications before the deviation's absolute value is taken.
 */
inline RegretReport summarize(const std::vector<ReplicationRegret>& reps) {
  RegretReport rep;
  if (reps.empty()) return rep;
  const std::size_t T = reps.front().per_round.size();
  rep.per_round_revenue_regret.assign(T, 0.0);
  std::vector<double> rt, sw;
  for (const auto& r : reps) {
    rt.push_back(r.revenue);
    sw.push_back(r.sw);
    for (std::size_t t = 0; t < T && t < r.per_round.size(); ++t) rep.per_round_revenue_regret[t] += r.per_round[t];
  }
  for (auto& v : rep.per_round_revenue_regret) v /= static_cast<double>(reps.size());
  rep.R_T = mean_of(rt);
  rep.R_T_SW = mean_of(sw);
  rep.stderr_R_T = stderr_of(rt);
  for (double v : rep.per_round_revenue_regret) rep.R_tilde_T += std::abs(v);
  return rep;
}

inline void attach_bound(RegretReport& rep, TheoremId id, const BoundInputs& in) {
  const auto b = bound(id, in);
  rep.bound_id = id;
  rep.bound_B = b.value;
  rep.relative = b.value > 0.0 ? rep.R_T / b.value : 0.0;
  rep.warnings.insert(rep.warnings.end(), b.warnings.begin(), b.warnings.end());
}

inline std::vector<ReplicationRegret> track(const std::vector<std::vector<RoundTrace>>& traces, const AuctionEnv& env,
                                            const BidProfile& bids, const CascadeModel& model) {
  std::vector<ReplicationRegret> out;
  for (const auto& rep : traces) {
    RegretTracker tracker(env, bids, model);
    for (const auto& tr : rep) tracker.add(tr);
    out.push_back(tracker.result());
  }
  return out;
}

/** \brief Revenue regret against true-parameter VCG; R_T and per-round values. */
inline RegretReport revenue_regret(const std::vector<std::vector<RoundTrace>>& traces, const AuctionEnv& env,
                                   const BidProfile& bids, const CascadeModel& model) {
  return summarize(track(traces, env, bids, model));
}

inline double sw_regret(const std::vector<std::vector<RoundTrace>>& traces, const AuctionEnv& env,
                        const BidProfile& bids, const CascadeModel& model) {
  return summarize(track(traces, env, bids, model)).R_T_SW;
}

inline double deviation_regret(const std::vector<std::vector<RoundTrace>>& traces, const AuctionEnv& env,
                               const BidProfile& bids, const CascadeModel& model) {
  return summarize(track(traces, env, bids, model)).R_tilde_T;
}

}  // namespace cascade

#endif  // CASCADE_REGRET_HPP
