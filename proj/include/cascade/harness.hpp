#ifndef CASCADE_HARNESS_HPP
#define CASCADE_HARNESS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cascade/allocation.hpp"
#include "cascade/mechanisms.hpp"
#include "cascade/model.hpp"
#include "cascade/payments.hpp"
#include "cascade/regret.hpp"
#include "cascade/simulation.hpp"

namespace cascade {

// ---------------------------------------------------------------------------
// configuration

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || !std::isfinite(v))
    throw ConfigError("key '" + key + "': '" + text + "' is not a finite number");
  return v;
}

inline long long parse_integer(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  const long long v = std::strtoll(t.c_str(), &end, 10);
  if (t.empty() || end != t.c_str() + t.size()) throw ConfigError("key '" + key + "': '" + text + "' is not an integer");
  return v;
}

inline std::vector<double> parse_list(const std::string& key, const std::string& text, char sep = ',') {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!trim(item).empty()) out.push_back(parse_double(key, item));
  return out;
}

}  // namespace detail

/** \brief Everything a run needs, read from a `key = value` file. */
struct ExperimentConfig {
  MechanismKind mechanism = MechanismKind::AVCG1;
  // unset means the mechanism's default revenue theorem
  std::optional<TheoremId> theorem;
  bool no_theorem = false;
  long horizon = 1000;
  std::uint64_t seed = 0;
  int replications = 100;
  int n_ads = 10;
  int n_slots = 2;
  double v_max = 1.0;
  double q_min = 0.01;
  double q_max = 0.1;
  std::vector<double> qualities;
  std::vector<double> values;
  std::string model = "paper-posdep";
  std::vector<double> lambdas;
  std::vector<double> continuations;
  std::vector<std::vector<double>> gamma;
  double lambda_low = 0.5;
  double gamma_low = 0.5;
  std::optional<int> tau;
  std::optional<double> delta;
  std::optional<double> mu;
  double alpha = 1.5;
};

inline const std::set<std::string>& config_keys() {
  static const std::set<std::string> keys = {
      "mechanism", "theorem",  "horizon",       "seed",      "replications", "n_ads",  "n_slots",
      "v_max",     "q_min",    "q_max",         "qualities", "values",       "model",  "lambdas",
      "continuations", "gamma", "lambda_low",   "gamma_low", "tau",          "delta",  "mu",
      "alpha"};
  return keys;
}

inline std::optional<TheoremId> default_theorem(MechanismKind k) {
  switch (k) {
    case MechanismKind::AVCG1: return TheoremId::T1_AVCG1_rev;
    case MechanismKind::AVCG2Prime: return TheoremId::T4_AVCG2p_rev;
    case MechanismKind::AVCG3: return TheoremId::T7_AVCG3_rev;
    case MechanismKind::PADAVCG: return TheoremId::T8_PAD_rev;
    default: return std::nullopt;
  }
}

/** \brief Parse `key = value` lines; `#` starts a comment. Unknown keys are errors. */
inline ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  std::stringstream in(text);
  std::string line;
  std::set<std::string> seen;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    if (!config_keys().count(key)) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    const bool is_auto = val == "auto";
    if (key == "mechanism") c.mechanism = parse_mechanism(val);
    else if (key == "theorem") {
      if (val == "none") c.no_theorem = true;
      else c.theorem = parse_theorem(val);
    } else if (key == "horizon") c.horizon = detail::parse_integer(key, val);
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(detail::parse_integer(key, val));
    else if (key == "replications") c.replications = static_cast<int>(detail::parse_integer(key, val));
    else if (key == "n_ads") c.n_ads = static_cast<int>(detail::parse_integer(key, val));
    else if (key == "n_slots") c.n_slots = static_cast<int>(detail::parse_integer(key, val));
    else if (key == "v_max") c.v_max = detail::parse_double(key, val);
    else if (key == "q_min") c.q_min = detail::parse_double(key, val);
    else if (key == "q_max") c.q_max = detail::parse_double(key, val);
    else if (key == "qualities") c.qualities = detail::parse_list(key, val);
    else if (key == "values") c.values = detail::parse_list(key, val);
    else if (key == "model") c.model = val;
    else if (key == "lambdas") c.lambdas = detail::parse_list(key, val);
    else if (key == "continuations") c.continuations = detail::parse_list(key, val);
    else if (key == "gamma") {
      std::stringstream rows(val);
      std::string row;
      while (std::getline(rows, row, ';'))
        if (!detail::trim(row).empty()) c.gamma.push_back(detail::parse_list(key, row));
    } else if (key == "lambda_low") c.lambda_low = detail::parse_double(key, val);
    else if (key == "gamma_low") c.gamma_low = detail::parse_double(key, val);
    else if (key == "tau") {
      if (!is_auto) c.tau = static_cast<int>(detail::parse_integer(key, val));
    } else if (key == "delta") {
      if (!is_auto) c.delta = detail::parse_double(key, val);
    } else if (key == "mu") {
      if (!is_auto) c.mu = detail::parse_double(key, val);
    } else if (key == "alpha") c.alpha = detail::parse_double(key, val);
  }
  if (!c.qualities.empty()) c.n_ads = static_cast<int>(c.qualities.size());
  if (c.qualities.size() != c.values.size()) throw ConfigError("qualities and values must be given together");
  if (c.replications < 1) throw ConfigError("replications must be positive");
  if (c.horizon < 1) throw ConfigError("horizon must be positive");
  if (!(c.q_min >= 0.0 && c.q_min <= c.q_max && c.q_max <= 1.0)) throw ConfigError("need 0 <= q_min <= q_max <= 1");
  if (!c.theorem && !c.no_theorem) c.theorem = default_theorem(c.mechanism);
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

/** \brief Cascade model named by the config. Random presets draw once from the seed. */
inline CascadeModel build_model(const ExperimentConfig& c) {
  const int k = c.n_slots, n = c.n_ads;
  Stream rng(c.seed, 0, 0, Purpose::Model);
  if (c.model == "paper-posdep") {
    // Λ_K = 0.8
    return CascadeModel::position_dependent(std::vector<double>(k - 1, std::pow(0.8, 1.0 / std::max(1, k - 1))));
  }
  if (c.model == "posdep") {
    if (static_cast<int>(c.lambdas.size()) != k - 1) throw ConfigError("posdep needs n_slots - 1 lambdas");
    return CascadeModel::position_dependent(c.lambdas);
  }
  if (c.model == "posdep-uniform") {
    std::vector<double> l(k - 1);
    for (auto& x : l) x = rng.uniform(c.lambda_low, 1.0);
    return CascadeModel::position_dependent(l);
  }
  if (c.model == "factorized") {
    if (static_cast<int>(c.lambdas.size()) != k - 1) throw ConfigError("factorized needs n_slots - 1 lambdas");
    if (static_cast<int>(c.continuations.size()) != n) throw ConfigError("factorized needs n_ads continuations");
    return CascadeModel::factorized(c.lambdas, c.continuations);
  }
  if (c.model == "general") {
    if (static_cast<int>(c.gamma.size()) != k) throw ConfigError("general needs n_slots rows of gamma");
    return CascadeModel::general(c.gamma);
  }
  if (c.model == "pad-random") {
    std::vector<std::vector<double>> g(k, std::vector<double>(n));
    for (auto& row : g)
      for (auto& x : row) x = rng.uniform(c.gamma_low, 1.0);
    return CascadeModel::general(g);
  }
  throw ConfigError("unknown model '" + c.model + "'");
}

/** \brief Instance of replication r: explicit vectors, or q ~ U[q_min, q_max], v ~ U[0, v_max]. */
inline AuctionEnv build_env(const ExperimentConfig& c, int replication) {
  if (!c.qualities.empty()) {
    if (c.n_ads != static_cast<int>(c.qualities.size())) throw ConfigError("n_ads disagrees with explicit qualities");
    return AuctionEnv(c.n_slots, c.qualities, c.values, c.v_max);
  }
  Stream rng(c.seed, static_cast<std::uint64_t>(replication), 0, Purpose::Instance);
  std::vector<double> q(c.n_ads), v(c.n_ads);
  for (int i = 0; i < c.n_ads; ++i) {
    q[i] = rng.uniform(c.q_min, c.q_max);
    v[i] = rng.uniform(0.0, c.v_max);
  }
  return AuctionEnv(c.n_slots, q, v, c.v_max);
}

/** \brief Model, tuned mechanism parameters and bound inputs shared by all replications. */
struct PointSetup {
  CascadeModel model;
  MechanismParams params;
  std::optional<TheoremId> theorem;
  BoundInputs bound_inputs;
  std::vector<std::string> warnings;
};

inline PointSetup prepare(const ExperimentConfig& c) {
  PointSetup s{build_model(c), {}, c.theorem, {}, {}};
  s.model.check_ads(c.n_ads);
  if (s.model.n_slots() != c.n_slots) throw ConfigError("model slot count disagrees with n_slots");
  if (c.n_slots >= c.n_ads) throw ConfigError("n_slots must be smaller than n_ads");
  const double disc = s.model.position_dependent() ? s.model.lambda_min() : s.model.gamma_min(c.n_ads);
  s.params.kind = c.mechanism;
  const bool learns = learns_qualities(c.mechanism);
  const bool needs_mu = randomized(c.mechanism);
  const bool missing = (learns && (!c.tau || !c.delta)) || (needs_mu && !c.mu);
  if (missing) {
    if (!s.theorem) throw ConfigError("auto parameters need a theorem to tune from");
    if (theorem_mechanism(*s.theorem) != c.mechanism)
      throw ConfigError("theorem " + to_string(*s.theorem) + " does not cover mechanism " + to_string(c.mechanism));
    const Tuning t = tune(*s.theorem, c.horizon, c.n_slots, c.n_ads, disc, c.alpha);
    s.params.tau = t.tau;
    s.params.delta = t.delta;
    if (t.mu) s.params.mu = *t.mu;
    s.warnings = t.warnings;
  }
  if (c.tau) s.params.tau = *c.tau;
  if (c.delta) s.params.delta = *c.delta;
  if (c.mu) s.params.mu = *c.mu;
  if (!learns) {
    s.params.tau = 0;
    s.params.delta = 1.0;
  }
  double qmin = c.q_min;
  if (!c.qualities.empty()) qmin = *std::min_element(c.qualities.begin(), c.qualities.end());
  s.bound_inputs = BoundInputs{static_cast<double>(c.horizon), static_cast<double>(c.n_slots),
                               static_cast<double>(c.n_ads), c.v_max, disc, qmin, s.params.mu};
  return s;
}

// ---------------------------------------------------------------------------
// summary rows and CSV

struct SummaryRow {
  std::string axis;
  double value = 0;
  int replication = 0;
  double RT = 0;
  double RT_sw = 0;
  double RT_dev = 0;
  double bound = 0;
  double relative = 0;
  double stderr_RT = 0;
  std::uint64_t seed = 0;

  bool operator==(const SummaryRow&) const = default;
};

inline const char* kCsvHeader = "axis,value,replication,RT,RT_sw,RT_dev,bound,relative,stderr,seed";

inline std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/** \brief Write rows sorted by (value, replication) under the fixed header. */
inline void emit_csv(std::vector<SummaryRow> rows, const std::string& path) {
  std::stable_sort(rows.begin(), rows.end(), [](const SummaryRow& a, const SummaryRow& b) {
    return a.value != b.value ? a.value < b.value : a.replication < b.replication;
  });
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  f << kCsvHeader << '\n';
  for (const auto& r : rows) {
    f << r.axis << ',' << format_double(r.value) << ',' << r.replication << ',' << format_double(r.RT) << ','
      << format_double(r.RT_sw) << ',' << format_double(r.RT_dev) << ',' << format_double(r.bound) << ','
      << format_double(r.relative) << ',' << format_double(r.stderr_RT) << ',' << r.seed << '\n';
  }
  if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

inline std::vector<SummaryRow> parse_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(f, line) || line != kCsvHeader) throw ConfigError("'" + path + "' does not have the summary header");
  std::vector<SummaryRow> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 10) throw ConfigError("'" + path + "': row with " + std::to_string(cells.size()) + " cells");
    SummaryRow r;
    r.axis = cells[0];
    r.value = detail::parse_double("value", cells[1]);
    r.replication = static_cast<int>(detail::parse_integer("replication", cells[2]));
    r.RT = detail::parse_double("RT", cells[3]);
    r.RT_sw = detail::parse_double("RT_sw", cells[4]);
    r.RT_dev = detail::parse_double("RT_dev", cells[5]);
    r.bound = detail::parse_double("bound", cells[6]);
    r.relative = detail::parse_double("relative", cells[7]);
    r.stderr_RT = detail::parse_double("stderr", cells[8]);
    r.seed = std::stoull(cells[9]);
    rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// experiments

struct PointResult {
  std::vector<SummaryRow> rows;
  RegretReport report;
  PointSetup setup;
};

/** \brief All replications of one configuration, with per-replication rows. */
inline PointResult run_point(const ExperimentConfig& c, const std::string& axis = "none", double value = 0.0) {
  PointSetup setup = prepare(c);
  std::vector<ReplicationRegret> reps(c.replications);
  parallel_for(c.replications, [&](int r) {
    RunConfig rc{build_env(c, r), setup.model, setup.params, c.horizon, c.seed, 1, {}};
    RegretTracker tracker(rc.env, rc.env.true_values(), rc.model, true);
    run_replication(rc, r, [&](const RoundView& v) { tracker.add(v); });
    reps[r] = tracker.result();
  });
  PointResult out{{}, summarize(reps), setup};
  if (setup.theorem) attach_bound(out.report, *setup.theorem, setup.bound_inputs);
  out.report.warnings.insert(out.report.warnings.end(), setup.warnings.begin(), setup.warnings.end());
  for (int r = 0; r < c.replications; ++r) {
    SummaryRow row;
    row.axis = axis;
    row.value = value;
    row.replication = r;
    row.RT = reps[r].revenue;
    row.RT_sw = reps[r].sw;
    row.RT_dev = reps[r].deviation;
    row.bound = out.report.bound_B;
    row.relative = row.bound > 0.0 ? row.RT / row.bound : 0.0;
    row.stderr_RT = out.report.stderr_R_T;
    row.seed = c.seed;
    out.rows.push_back(row);
  }
  return out;
}

inline const std::set<std::string>& sweep_axes() {
  static const std::set<std::string> axes = {"T", "N", "K", "q_min", "mu"};
  return axes;
}

inline ExperimentConfig at_point(ExperimentConfig c, const std::string& axis, double value) {
  auto whole = [&](double v) {
    if (v != std::floor(v) || v < 1) throw ConfigError("axis " + axis + " needs positive integer points");
    return static_cast<long>(v);
  };
  if (axis == "T") c.horizon = whole(value);
  else if (axis == "N") {
    if (!c.qualities.empty()) throw ConfigError("cannot sweep N over an explicit instance");
    c.n_ads = static_cast<int>(whole(value));
  } else if (axis == "K") c.n_slots = static_cast<int>(whole(value));
  else if (axis == "q_min") c.q_min = value;
  else if (axis == "mu") c.mu = value;
  else throw ConfigError("unknown sweep axis '" + axis + "'");
  return c;
}

/** \brief One run_point per axis value, rows concatenated. */
inline std::vector<PointResult> sweep(const ExperimentConfig& base, const std::string& axis,
                                      const std::vector<double>& points) {
  if (!sweep_axes().count(axis)) throw ConfigError("unknown sweep axis '" + axis + "'");
  for (std::size_t i = 1; i < points.size(); ++i)
    if (!(points[i] > points[i - 1])) throw ConfigError("sweep points must be strictly increasing");
  std::vector<PointResult> out;
  for (double v : points) out.push_back(run_point(at_point(base, axis, v), axis, v));
  return out;
}

// ---------------------------------------------------------------------------
// counterexample suite

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

inline bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

inline std::vector<CheckResult> counterexample_suite() {
  std::vector<CheckResult> out;
  auto fmt = [](double x) { return format_double(x); };

  {
    // three ads, one slot, unit bids
    const AuctionEnv env(1, {0.1, 0.2, 0.3}, {1, 1, 1});
    const auto model = CascadeModel::position_dependent({});
    const auto p = vcg_expected_payments(env, env.true_values(), model);
    const bool ok = near(p[2], 0.2, 1e-12) && p[0] == 0.0 && p[1] == 0.0;
    out.push_back({"vcg-baseline", ok, "p*_3 = " + fmt(p[2]) + " (want 0.2)"});

    const auto plan = estimated_vcg_plan(env, env.true_values(), model, {0.1, 0.29, 0.3});
    const double r = p[0] + p[1] + p[2] - (plan.expected_payments[0] + plan.expected_payments[1] +
                                           plan.expected_payments[2]);
    const bool ok2 = plan.allocation.ad_at(0) == 2 && near(plan.expected_payments[2], 0.29, 1e-12) &&
                     near(r, -0.09, 1e-12);
    out.push_back({"avcg1-exploitation", ok2,
                   "expected payment " + fmt(plan.expected_payments[2]) + " (want 0.29), regret " + fmt(r) +
                       " (want -0.09)"});
  }
  {
    const auto model = CascadeModel::position_dependent({1.0});
    const AuctionEnv env(2, {0.5, 1, 1}, {4, 1, 0.5}, 4);
    const ClickRealization both{{true, true}, {true, true}};
    const double truthful = avcg2_click_payments(env, env.true_values(), model, both)[1];
    const double lied = avcg2_click_payments(env, {4, 3, 0.5}, model, both)[1];
    out.push_back({"avcg2-dsic", truthful == 0.5 && lied == -1.0,
                   "p^c_2 = " + fmt(truthful) + " truthful (want 0.5), " + fmt(lied) + " at bid 3 (want -1)"});

    const double eps = 0.01;
    const AuctionEnv wbb(2, {1, 0.5, 1}, {2, 1, eps}, 2);
    const auto p = avcg2_click_payments(wbb, wbb.true_values(), model, both);
    const double total = p[0] + p[1] + p[2];
    const bool ok = near(p[0], 2 * eps - 0.5, 1e-15) && near(p[1], 2 * eps, 1e-15) && near(total, 4 * eps - 0.5, 1e-15);
    out.push_back({"avcg2-wbb", ok, "total payment " + fmt(total) + " (want 4*eps - 0.5 = " + fmt(4 * eps - 0.5) + ")"});
  }
  {
    const AuctionEnv env(2, {1, 1, 1}, {0.85, 1, 1.4}, 2);
    const auto estimated = CascadeModel::factorized({1.0}, {1, 0.9, 0});
    const auto truth = CascadeModel::factorized({1.0}, {0.89, 0.9, 0});
    const AllocationRule rule = [&](const BidProfile& b) { return optimal_allocation(env.qualities(), b, estimated); };
    const auto w = monotonicity_witness(rule, env, truth, {1.4, 1.6});
    const bool ok = w && w->ad == 2 && w->bid_low == 1.4 && w->bid_high == 1.6 && near(w->ctr_low, 0.9, 1e-15) &&
                    near(w->ctr_high, 0.89, 1e-15);
    out.push_back({"monotonicity", ok,
                   w ? "ad " + std::to_string(w->ad + 1) + " CTR " + fmt(w->ctr_low) + " -> " + fmt(w->ctr_high)
                     : std::string("no witness")});
  }
  return out;
}

}  // namespace cascade

#endif  // CASCADE_HARNESS_HPP
