#include <doctest.h>

#include <cmath>

#include "cascade/payments.hpp"
#include "support.hpp"

using namespace cascade;

namespace {

const ClickRealization kBoth{{true, true}, {true, true}};

// expected payment under the cascade, enumerating stop depth and click vectors
std::vector<double> enumerated_contingent_expectation(const AuctionEnv& env, const BidProfile& bids,
                                                      const CascadeModel& model) {
  const int n = env.n_ads(), k = env.n_slots();
  const auto& q = env.qualities();
  const Allocation theta = optimal_allocation(q, bids, model);
  std::vector<double> out(n, 0.0);
  for (int depth = 1; depth <= k; ++depth) {
    // user sees slots 0..depth-1 and stops there
    double p_depth = 1.0;
    for (int l = 0; l + 1 < depth; ++l) p_depth *= model.gamma(l, theta.ad_at(l));
    if (depth < k) p_depth *= 1.0 - model.gamma(depth - 1, theta.ad_at(depth - 1));
    for (int bits = 0; bits < (1 << depth); ++bits) {
      ClickRealization c{std::vector<bool>(k, false), std::vector<bool>(k, false)};
      double p = p_depth;
      for (int s = 0; s < depth; ++s) {
        c.observed[s] = true;
        c.clicked[s] = bits >> s & 1;
        const double qs = q[theta.ad_at(s)];
        p *= c.clicked[s] ? qs : 1.0 - qs;
      }
      const auto pay = avcg2_click_payments(env, bids, model, c);
      for (int i = 0; i < n; ++i) out[i] += p * pay[i];
    }
  }
  return out;
}

}  // namespace

TEST_CASE("single-slot VCG payment") {
  const AuctionEnv env(1, {0.1, 0.2, 0.3}, {1, 1, 1});
  const auto model = CascadeModel::position_dependent({});
  const auto p = vcg_expected_payments(env, env.true_values(), model);
  CHECK(p[2] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(p[0] == 0.0);
  CHECK(p[1] == 0.0);
}

TEST_CASE("no competition means no payment") {
  const AuctionEnv env(1, {0.4, 0.3}, {1, 0});
  const auto p = vcg_expected_payments(env, env.true_values(), CascadeModel::position_dependent({}));
  CHECK(p[0] == 0.0);
}

TEST_CASE("two-slot VCG payments in both forms") {
  const AuctionEnv env(2, {1, 1, 1}, {2, 1, 0.5}, 2);
  const auto model = CascadeModel::position_dependent({0.8});
  const auto p = vcg_expected_payments(env, env.true_values(), model);
  CHECK(p[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(p[1] == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(p[2] == 0.0);
  const auto closed = position_dependent_externalities(env.qualities(), env.true_values(), model.cumulative_lambda());
  for (int i = 0; i < 3; ++i) CHECK(closed[i] == doctest::Approx(p[i]).epsilon(1e-14));
  for (int i = 0; i < 3; ++i)
    CHECK(myerson_piecewise_payment(i, env, env.true_values(), env.qualities(), model) ==
          doctest::Approx(p[i]).epsilon(1e-14));
}

TEST_CASE("VCG payments equal the enumerated externality") {
  auto rng = testing::test_stream(30);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 3 + trial % 4, k = 1 + trial % std::min(3, n - 1);
    auto inst = trial % 2 ? testing::random_general(rng, n, k) : testing::random_position_dependent(rng, n, k);
    const auto& q = inst.env.qualities();
    const auto& v = inst.env.true_values();
    const auto p = vcg_expected_payments(inst.env, v, inst.model);
    const auto want = testing::enumerated_externalities(q, v, inst.model, optimal_allocation(q, v, inst.model).order());
    for (int i = 0; i < n; ++i) CHECK(p[i] == doctest::Approx(want[i]).epsilon(1e-13).scale(1.0));
    if (inst.model.position_dependent()) {
      const auto closed = position_dependent_externalities(q, v, inst.model.cumulative_lambda());
      for (int i = 0; i < n; ++i) CHECK(std::abs(closed[i] - p[i]) <= 1e-14);
    }
  }
}

TEST_CASE("pay-per-click VCG") {
  const AuctionEnv env(1, {0.1, 0.2, 0.3}, {1, 1, 1});
  const auto model = CascadeModel::position_dependent({});
  CHECK(vcg_click_payment(2, env, env.true_values(), model, false) == 0.0);
  const double c = vcg_click_payment(2, env, env.true_values(), model, true);
  CHECK(c == doctest::Approx(0.2 / 0.3).epsilon(1e-15));
  CHECK(0.3 * c == doctest::Approx(0.2).epsilon(1e-15));

  const AuctionEnv zero(1, {0.0, 0.2}, {1, 0});
  CHECK_THROWS_AS(vcg_click_payment(0, zero, {1, 1}, model, true), ImpossibleEvent);
}

TEST_CASE("weighted VCG") {
  const AuctionEnv env(1, {0.1, 0.2, 0.3}, {1, 1, 1});
  const auto model = CascadeModel::position_dependent({});
  CHECK(wvcg_expected_payments(env, env.true_values(), model, {1, 1, 1}) ==
        vcg_expected_payments(env, env.true_values(), model));
  const auto w = wvcg_expected_payments(env, env.true_values(), model, {1, 1.45, 1});
  CHECK(w[2] == doctest::Approx(0.29).epsilon(1e-14));
  CHECK_THROWS_AS(wvcg_expected_payments(env, env.true_values(), model, {1, 0, 1}), ConfigError);
  CHECK_THROWS_AS(wvcg_expected_payments(env, env.true_values(), model, {1, -1, 1}), ConfigError);
}

TEST_CASE("piecewise Myerson payments") {
  const auto one = CascadeModel::position_dependent({});
  const AuctionEnv env(1, {0.1, 0.2, 0.3}, {1, 1, 1});
  CHECK(myerson_piecewise_payment(2, env, env.true_values(), env.qualities(), one) ==
        doctest::Approx(0.2).epsilon(1e-14));
  // ad 1 never wins below 0.3 / 0.1
  CHECK(myerson_piecewise_payment(0, env, env.true_values(), env.qualities(), one) == 0.0);
  const AuctionEnv alone(1, {0.4, 0.3}, {1, 0});
  CHECK(myerson_piecewise_payment(0, alone, alone.true_values(), alone.qualities(), one) == 0.0);
  CHECK_THROWS_AS(myerson_piecewise_payment(0, env, env.true_values(), env.qualities(),
                                            CascadeModel::factorized({}, {1, 1, 1})),
                  ConfigError);

  auto rng = testing::test_stream(31);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 5, k = 1 + trial % std::min(3, n - 1);
    auto inst = testing::random_position_dependent(rng, n, k);
    const auto& v = inst.env.true_values();
    const auto p = vcg_expected_payments(inst.env, v, inst.model);
    for (int i = 0; i < n; ++i)
      CHECK(std::abs(myerson_piecewise_payment(i, inst.env, v, inst.env.qualities(), inst.model) - p[i]) <= 1e-12);
  }
}

TEST_CASE("execution-contingent payments") {
  const auto model = CascadeModel::position_dependent({1.0});
  const AuctionEnv env(2, {0.5, 1, 1}, {4, 1, 0.5}, 4);
  CHECK(avcg2_click_payments(env, env.true_values(), model, kBoth)[1] == 0.5);
  CHECK(avcg2_click_payments(env, {4, 3, 0.5}, model, kBoth)[1] == -1.0);

  const double eps = 0.01;
  const AuctionEnv wbb(2, {1, 0.5, 1}, {2, 1, eps}, 2);
  const auto p = avcg2_click_payments(wbb, wbb.true_values(), model, kBoth);
  CHECK(p[0] == doctest::Approx(-0.48).epsilon(1e-14));
  CHECK(p[1] == doctest::Approx(0.02).epsilon(1e-14));
  CHECK(p[0] + p[1] + p[2] == doctest::Approx(4 * eps - 0.5).epsilon(1e-14));
  CHECK(p[0] + p[1] + p[2] < 0.0);

  const ClickRealization none{{false, false}, {true, true}};
  for (double x : avcg2_click_payments(env, env.true_values(), model, none)) CHECK(x == 0.0);

  // every key is zero, so the zero-quality ad 1 is displayed
  const AuctionEnv zero(2, {0.0, 1, 1}, {1, 0, 0});
  CHECK_THROWS_AS(avcg2_click_payments(zero, zero.true_values(), model, kBoth), ConfigError);
}

TEST_CASE("contingent payments average to VCG payments") {
  auto rng = testing::test_stream(32);
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 1 + trial % 4, n = k + 1 + trial % 3;
    auto inst = testing::random_position_dependent(rng, n, k);
    const auto& v = inst.env.true_values();
    const auto e = enumerated_contingent_expectation(inst.env, v, inst.model);
    const auto p = vcg_expected_payments(inst.env, v, inst.model);
    for (int i = 0; i < n; ++i) CHECK(std::abs(e[i] - p[i]) <= 1e-12);
  }
}

TEST_CASE("contingent payments never exceed the realized value") {
  auto rng = testing::test_stream(33);
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 1 + trial % 4, n = k + 1 + trial % 3;
    auto inst = testing::random_position_dependent(rng, n, k);
    const auto& v = inst.env.true_values();
    const Allocation theta = optimal_allocation(inst.env.qualities(), v, inst.model);
    for (int bits = 0; bits < (1 << k); ++bits) {
      ClickRealization c{std::vector<bool>(k), std::vector<bool>(k, true)};
      for (int s = 0; s < k; ++s) c.clicked[s] = bits >> s & 1;
      const auto p = avcg2_click_payments(inst.env, v, inst.model, c);
      for (int i = 0; i < n; ++i) {
        const int s = theta.slot_of(i);
        const double value = s < k && c.clicked[s] ? v[i] : 0.0;
        CHECK(value - p[i] >= -1e-12);
      }
    }
  }
}

TEST_CASE("self-resampling examples") {
  auto rng = testing::test_stream(34);
  for (int t = 0; t < 1000; ++t) {
    const auto [x0, y0] = csrp(0.0, 0.3, rng);
    CHECK(x0 == 0.0);
    CHECK(y0 == 0.0);
    const auto [x, y] = csrp(0.7, 1.0, rng);
    CHECK(y < 0.7);
    CHECK(x <= y);
    const auto [x2, y2] = csrp(0.7, 0.4, rng);
    CHECK(x2 <= 0.7);
    CHECK(y2 <= 0.7);
    if (x2 == 0.7) CHECK(y2 == 0.7);
  }
  CHECK_THROWS_AS(csrp(1.0, 0.0, rng), ConfigError);
  CHECK_THROWS_AS(csrp(1.0, 1.5, rng), ConfigError);
}

TEST_CASE("resampled bid follows its closed-form distribution") {
  // given the resample branch, y ~ U[0,b) and P(x <= z | y = u) = mu (z/u)^(1-mu) + (1-mu)[z >= u]
  const double mu = 0.3, b = 1.0;
  auto cdf = [&](double z) {
    const int grid = 20000;
    double acc = 0.0;
    for (int g = 0; g < grid; ++g) {
      const double u = b * (g + 0.5) / grid;
      acc += z >= u ? 1.0 : mu * std::pow(z / u, 1.0 - mu);
    }
    return acc / grid;
  };
  auto rng = testing::test_stream(35);
  const int draws = 200000;
  std::vector<double> xs;
  while (static_cast<int>(xs.size()) < draws) {
    const auto [x, y] = csrp(b, mu, rng);
    if (y < b) xs.push_back(x);
  }
  for (double z : {0.05, 0.2, 0.5, 0.8}) {
    const double emp = static_cast<double>(std::count_if(xs.begin(), xs.end(), [&](double x) { return x <= z; })) / draws;
    CHECK(emp == doctest::Approx(cdf(z)).epsilon(0.01));
  }
}

TEST_CASE("randomized allocation") {
  auto rng = testing::test_stream(36);
  const auto model = CascadeModel::position_dependent({0.8});
  const std::vector<double> q{0.5, 0.4, 0.3}, bids{0.9, 0.6, 0.7};
  const auto plain = optimal_allocation(q, bids, model);
  for (int t = 0; t < 1000; ++t) {
    const auto [a, r] = randomized_allocate(q, bids, model, 0.2, rng);
    bool all = true;
    for (int i = 0; i < 3; ++i) {
      CHECK(r.x[i] <= bids[i]);
      all = all && r.s[i];
    }
    if (all) CHECK(a == plain);
  }
}

TEST_CASE("per-click payment branches") {
  const BidProfile bids{1.0, 0.5};
  const ResampledBids kept{{1.0, 0.5}, {1.0, 0.5}, {true, true}};
  const ResampledBids moved{{0.2, 0.5}, {0.4, 0.5}, {false, true}};
  CHECK(srp_click_payment(0, bids, kept, 0.1, false) == 0.0);
  CHECK(srp_click_payment(0, bids, moved, 0.1, false) == 0.0);
  CHECK(srp_click_payment(0, bids, kept, 0.1, true) == 1.0);
  CHECK(srp_click_payment(0, bids, moved, 0.1, true) == doctest::Approx(-9.0).epsilon(1e-15));
}
