#ifndef CASCADE_SIMULATION_HPP
#define CASCADE_SIMULATION_HPP

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "cascade/mechanisms.hpp"
#include "cascade/model.hpp"
#include "cascade/rng.hpp"

namespace cascade {

/** \brief One user scanning the slots top-down. Clicks do not stop the scan. */
template <class Rng>
ClickRealization sample_cascade_clicks(const Allocation& alloc, const std::vector<double>& qualities,
                                       const CascadeModel& model, Rng& rng) {
  const int k = model.n_slots();
  ClickRealization c;
  c.clicked.assign(k, false);
  c.observed.assign(k, false);
  c.observed[0] = true;
  for (int s = 0; s < k; ++s) {
    const int i = alloc.ad_at(s);
    c.clicked[s] = rng.bernoulli(qualities[i]);
    if (s + 1 < k && !rng.bernoulli(model.gamma(s, i))) break;
    if (s + 1 < k) c.observed[s + 1] = true;
  }
  return c;
}

template <class Rng>
ClickRealization sample_cascade_clicks(const Allocation& alloc, const AuctionEnv& env, const CascadeModel& model,
                                       Rng& rng) {
  return sample_cascade_clicks(alloc, env.qualities(), model, rng);
}

struct RunConfig {
  AuctionEnv env;
  CascadeModel model;
  MechanismParams mechanism;
  long horizon = 1;
  std::uint64_t seed = 0;
  int replications = 1;
  // empty means truthful bidding
  BidProfile bids;

  void validate() const {
    model.check(env);
    if (horizon < 1) throw ConfigError("horizon must be positive");
    if (replications < 1) throw ConfigError("replications must be positive");
    if (learns_qualities(mechanism.kind) && mechanism.tau > horizon)
      throw ConfigError("tau = " + std::to_string(mechanism.tau) + " exceeds the horizon T = " +
                        std::to_string(horizon));
    if (!bids.empty()) validate_bids(env, bids);
  }

  const BidProfile& bid_profile() const { return bids.empty() ? env.true_values() : bids; }
};

struct RoundTrace {
  long t = 0;
  Allocation allocation;
  std::optional<ResampledBids> resampled;
  ClickRealization clicks;
  std::vector<double> expected_payments;
  std::vector<double> realized_payments;
};

/** \brief Borrowed view of one round, valid only inside the observer call. */
struct RoundView {
  long t;
  const Allocation& allocation;
  const std::optional<ResampledBids>& resampled;
  const ClickRealization& clicks;
  const std::vector<double>& expected_payments;
  const std::vector<double>& realized_payments;

  RoundTrace copy() const {
    return RoundTrace{t, allocation, resampled, clicks, expected_payments, realized_payments};
  }
};

using RoundObserver = std::function<void(const RoundView&)>;

/** \brief Play one replication. Draws are keyed by (seed, replication, round). */
inline MechanismState run_replication(const RunConfig& config, int replication, const RoundObserver& observe) {
  config.validate();
  Mechanism mech(config.mechanism, config.env, config.model);
  const BidProfile& bids = config.bid_profile();
  const auto rep = static_cast<std::uint64_t>(replication);
  for (long t = 1; t <= config.horizon; ++t) {
    Stream resample(config.seed, rep, static_cast<std::uint64_t>(t), Purpose::Resample);
    Stream click_rng(config.seed, rep, static_cast<std::uint64_t>(t), Purpose::Clicks);
    const RoundPlan& plan = mech.step(bids, resample);
    const ClickRealization clicks = sample_cascade_clicks(plan.allocation, config.env, config.model, click_rng);
    const std::vector<double> paid = mech.settle(plan, clicks);
    observe(RoundView{t, plan.allocation, plan.resampled, clicks, plan.expected_payments, paid});
  }
  return mech.state();
}

/** \brief Worker count: CAL_THREADS if set, else the hardware concurrency. */
inline unsigned worker_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CAL_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(v));
  }
  return n;
}

/** \brief Run fn(0..count-1) over a small worker pool; first exception wins. */
inline void parallel_for(int count, const std::function<void(int)>& fn) {
  const unsigned workers = std::min<unsigned>(worker_count(), static_cast<unsigned>(std::max(count, 1)));
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

/** \brief All traces, one vector per replication, in replication order. */
inline std::vector<std::vector<RoundTrace>> run(const RunConfig& config) {
  config.validate();
  std::vector<std::vector<RoundTrace>> out(config.replications);
  parallel_for(config.replications, [&](int r) {
    auto& traces = out[r];
    traces.reserve(static_cast<std::size_t>(config.horizon));
    run_replication(config, r, [&](const RoundView& v) { traces.push_back(v.copy()); });
  });
  return out;
}

}  // namespace cascade

#endif  // CASCADE_SIMULATION_HPP
