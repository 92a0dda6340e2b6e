#ifndef CASCADE_MODEL_HPP
#define CASCADE_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace cascade {

// Ads and slots are 0-based here. Slot 0 is the top slot.

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ImpossibleEvent : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

inline void require_probability(double p, const std::string& what) {
  require(std::isfinite(p) && p >= 0.0 && p <= 1.0, what + " must be a probability in [0,1]");
}

}  // namespace detail

using BidProfile = std::vector<double>;

/** \brief Ground truth of a run: N ads with qualities and values, K slots. */
class AuctionEnv {
 public:
  AuctionEnv(int n_slots, std::vector<double> qualities, std::vector<double> true_values,
             double v_max = 1.0)
      : k_(n_slots), q_(std::move(qualities)), v_(std::move(true_values)), v_max_(v_max) {
    using detail::require;
    require(!q_.empty(), "at least one ad is required");
    require(q_.size() == v_.size(), "qualities and values must have the same length");
    require(k_ >= 1, "n_slots must be positive");
    require(k_ < n_ads(), "n_slots must be smaller than n_ads");
    require(std::isfinite(v_max_) && v_max_ > 0.0, "v_max must be positive");
    for (std::size_t i = 0; i < q_.size(); ++i) {
      detail::require_probability(q_[i], "quality " + std::to_string(i));
      require(std::isfinite(v_[i]) && v_[i] >= 0.0 && v_[i] <= v_max_,
              "value " + std::to_string(i) + " must lie in [0, v_max]");
    }
  }

  int n_ads() const { return static_cast<int>(q_.size()); }
  int n_slots() const { return k_; }
  const std::vector<double>& qualities() const { return q_; }
  const std::vector<double>& true_values() const { return v_; }
  double v_max() const { return v_max_; }
  double q_min() const { return *std::min_element(q_.begin(), q_.end()); }

 private:
  int k_;
  std::vector<double> q_;
  std::vector<double> v_;
  double v_max_;
};

inline void validate_bids(const AuctionEnv& env, const BidProfile& bids) {
  detail::require(static_cast<int>(bids.size()) == env.n_ads(), "one bid per ad is required");
  for (double b : bids) detail::require(std::isfinite(b) && b >= 0.0, "bids must be finite and >= 0");
}

inline BidProfile with_bid(BidProfile bids, int i, double b) {
  bids.at(static_cast<std::size_t>(i)) = b;
  return bids;
}

/** \brief Bijection between ads and the N extended slots. */
class Allocation {
 public:
  Allocation() = default;

  // ad_at[m] is the ad shown in extended slot m
  static Allocation from_order(std::vector<int> ad_at) {
    Allocation a;
    const auto n = ad_at.size();
    a.slot_of_.assign(n, -1);
    for (std::size_t m = 0; m < n; ++m) {
      const int i = ad_at[m];
      detail::require(i >= 0 && static_cast<std::size_t>(i) < n && a.slot_of_[i] == -1,
                      "allocation must be a permutation of the ads");
      a.slot_of_[i] = static_cast<int>(m);
    }
    a.ad_at_ = std::move(ad_at);
    return a;
  }

  int slot_of(int ad) const { return slot_of_.at(static_cast<std::size_t>(ad)); }
  int ad_at(int slot) const { return ad_at_.at(static_cast<std::size_t>(slot)); }
  int size() const { return static_cast<int>(ad_at_.size()); }
  const std::vector<int>& order() const { return ad_at_; }

  bool operator==(const Allocation&) const = default;

 private:
  std::vector<int> slot_of_;
  std::vector<int> ad_at_;
};

/** \brief Cascade continuation parameters in one of three shapes. */
class CascadeModel {
 public:
  enum class Kind { PositionDependent, Factorized, General };

  static CascadeModel position_dependent(std::vector<double> lambdas) {
    CascadeModel m(Kind::PositionDependent, static_cast<int>(lambdas.size()) + 1, 0);
    for (double l : lambdas) detail::require_probability(l, "lambda");
    m.lambdas_ = std::move(lambdas);
    return m;
  }

  static CascadeModel factorized(std::vector<double> lambdas, std::vector<double> continuations) {
    CascadeModel m(Kind::Factorized, static_cast<int>(lambdas.size()) + 1,
                   static_cast<int>(continuations.size()));
    for (double l : lambdas) detail::require_probability(l, "lambda");
    for (double c : continuations) detail::require_probability(c, "continuation");
    m.lambdas_ = std::move(lambdas);
    m.cont_ = std::move(continuations);
    return m;
  }

  // gamma[m][i] for slot m in 0..K-1; the last row is never consulted
  static CascadeModel general(std::vector<std::vector<double>> gamma) {
    detail::require(!gamma.empty() && !gamma[0].empty(), "gamma must be a non-empty K x N matrix");
    CascadeModel m(Kind::General, static_cast<int>(gamma.size()), static_cast<int>(gamma[0].size()));
    for (const auto& row : gamma) {
      detail::require(static_cast<int>(row.size()) == m.n_ads_, "gamma rows must all have N entries");
      for (double g : row) detail::require_probability(g, "gamma");
    }
    m.gamma_ = std::move(gamma);
    return m;
  }

  Kind kind() const { return kind_; }
  bool position_dependent() const { return kind_ == Kind::PositionDependent; }
  int n_slots() const { return k_; }
  // 0 when the model does not depend on ads
  int n_ads() const { return n_ads_; }

  // probability the user goes on from slot m (0-based, m < K-1) having seen ad i
  double gamma(int m, int ad) const {
    switch (kind_) {
      case Kind::PositionDependent: return lambdas_[m];
      case Kind::Factorized: return lambdas_[m] * cont_[ad];
      case Kind::General: return gamma_[m][ad];
    }
    return 0.0;
  }

  const std::vector<double>& lambdas() const { return lambdas_; }
  const std::vector<double>& continuations() const { return cont_; }

  /** \brief Λ_1..Λ_K, only for position-dependent models. */
  std::vector<double> cumulative_lambda() const {
    if (!position_dependent()) throw ConfigError("cumulative lambda needs a position-dependent model");
    std::vector<double> out(k_, 1.0);
    for (int m = 1; m < k_; ++m) out[m] = out[m - 1] * lambdas_[m - 1];
    return out;
  }

  double lambda_min() const { return cumulative_lambda().back(); }

  /** \brief min over allocations and displayed slots of Γ_m(θ). */
  double gamma_min(int n_ads) const {
    if (position_dependent()) return lambda_min();
    check_ads(n_ads);
    // Γ is non-increasing in m, so the minimum sits at slot K over ordered (K-1)-prefixes
    double best = 1.0;
    std::vector<char> used(n_ads, 0);
    std::function<void(int, double)> rec = [&](int m, double prod) {
      if (m == k_ - 1) {
        best = std::min(best, prod);
        return;
      }
      for (int i = 0; i < n_ads; ++i) {
        if (used[i]) continue;
        used[i] = 1;
        rec(m + 1, prod * gamma(m, i));
        used[i] = 0;
      }
    };
    rec(0, 1.0);
    return best;
  }

  void check_ads(int n_ads) const {
    if (n_ads_ != 0 && n_ads_ != n_ads)
      throw ConfigError("cascade model has " + std::to_string(n_ads_) + " ads, environment has " +
                        std::to_string(n_ads));
  }

  void check(const AuctionEnv& env) const {
    if (k_ != env.n_slots())
      throw ConfigError("cascade model has " + std::to_string(k_) + " slots, environment has " +
                        std::to_string(env.n_slots()));
    check_ads(env.n_ads());
  }

 private:
  CascadeModel(Kind kind, int k, int n) : kind_(kind), k_(k), n_ads_(n) {
    detail::require(k_ >= 1, "at least one slot is required");
  }

  Kind kind_;
  int k_;
  int n_ads_;
  std::vector<double> lambdas_;
  std::vector<double> cont_;
  std::vector<std::vector<double>> gamma_;
};

/** \brief Slot-by-slot click record of one user. */
struct ClickRealization {
  std::vector<bool> clicked;
  std::vector<bool> observed;
};

/** \brief Γ_m(θ) for every extended slot; zero past slot K. */
inline std::vector<double> cumulative_observation(const Allocation& alloc, const CascadeModel& model) {
  const int n = alloc.size();
  const int k = model.n_slots();
  if (k >= n) throw ConfigError("allocation must cover more ads than slots");
  model.check_ads(n);
  std::vector<double> g(n, 0.0);
  g[0] = 1.0;
  for (int m = 1; m < k; ++m) g[m] = g[m - 1] * model.gamma(m - 1, alloc.ad_at(m - 1));
  return g;
}

inline void check_vectors(const Allocation& alloc, const std::vector<double>& qualities,
                          const std::vector<double>& values) {
  if (static_cast<int>(qualities.size()) != alloc.size() || static_cast<int>(values.size()) != alloc.size())
    throw ConfigError("quality and value vectors must have one entry per ad");
}

/** \brief Σ_i Γ_{π(i)} q_i value_i, with the quality vector chosen by the caller. */
inline double social_welfare(const Allocation& alloc, const std::vector<double>& qualities,
                             const std::vector<double>& values, const CascadeModel& model) {
  check_vectors(alloc, qualities, values);
  const auto g = cumulative_observation(alloc, model);
  double sw = 0.0;
  for (int m = 0; m < model.n_slots(); ++m) {
    const int i = alloc.ad_at(m);
    sw += g[m] * qualities[i] * values[i];
  }
  return sw;
}

inline double social_welfare(const Allocation& alloc, const AuctionEnv& env, const std::vector<double>& values,
                             const CascadeModel& model) {
  return social_welfare(alloc, env.qualities(), values, model);
}

/** \brief Welfare of everyone but ad i, with i still holding its slot. */
inline double social_welfare_excluding(int i, const Allocation& alloc, const std::vector<double>& qualities,
                                       const std::vector<double>& values, const CascadeModel& model) {
  check_vectors(alloc, qualities, values);
  if (i < 0 || i >= alloc.size()) throw std::out_of_range("ad index out of range");
  const auto g = cumulative_observation(alloc, model);
  double sw = 0.0;
  for (int m = 0; m < model.n_slots(); ++m) {
    const int j = alloc.ad_at(m);
    if (j != i) sw += g[m] * qualities[j] * values[j];
  }
  return sw;
}

inline double social_welfare_excluding(int i, const Allocation& alloc, const AuctionEnv& env,
                                       const std::vector<double>& values, const CascadeModel& model) {
  return social_welfare_excluding(i, alloc, env.qualities(), values, model);
}

}  // namespace cascade

#endif  // CASCADE_MODEL_HPP
