// Command-line front end: run, sweep, bounds, verify.
//
// Exit codes: 0 success, 1 verification failure, 2 configuration error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cascade/harness.hpp"

using namespace cascade;

namespace {

void print_warnings(const std::vector<std::string>& w) {
  for (const auto& s : w) std::cerr << "warning: " << s << '\n';
}

void write_trace(const ExperimentConfig& c, const PointSetup& setup, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  f << "replication,t,allocation,clicks,expected_total,realized_total,regret\n";
  for (int r = 0; r < c.replications; ++r) {
    RunConfig rc{build_env(c, r), setup.model, setup.params, c.horizon, c.seed, 1, {}};
    RegretTracker tracker(rc.env, rc.env.true_values(), rc.model, false);
    run_replication(rc, r, [&](const RoundView& v) {
      double e = 0, p = 0;
      for (double x : v.expected_payments) e += x;
      for (double x : v.realized_payments) p += x;
      f << r << ',' << v.t << ',';
      for (int s = 0; s < rc.env.n_slots(); ++s) f << (s ? "|" : "") << v.allocation.ad_at(s) + 1;
      f << ',';
      for (int s = 0; s < rc.env.n_slots(); ++s) f << (v.clicks.clicked[s] ? '1' : '0');
      f << ',' << format_double(e) << ',' << format_double(p) << ',' << format_double(tracker.p_star_total() - e)
        << '\n';
    });
  }
}

void print_report(const RegretReport& r) {
  std::printf("R_T=%.17g stderr=%.17g R_T_SW=%.17g R_tilde_T=%.17g bound=%.17g relative=%.17g\n", r.R_T,
              r.stderr_R_T, r.R_T_SW, r.R_tilde_T, r.bound_B, r.relative);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Truthful learning mechanisms for cascade-model sponsored search"};
  app.require_subcommand(1);

  std::string config_path, out_path, axis, points_text, filter;
  std::string summary_path;
  auto* run = app.add_subcommand("run", "run one configuration and write its per-round trace");
  run->add_option("--config", config_path, "config file")->required();
  run->add_option("--out", out_path, "trace CSV")->required();
  run->add_option("--summary", summary_path, "optional summary CSV, one row per replication");

  auto* sw = app.add_subcommand("sweep", "sweep one axis and write a summary CSV");
  sw->add_option("--config", config_path, "config file")->required();
  sw->add_option("--axis", axis, "T, N, K, q_min or mu")->required();
  sw->add_option("--points", points_text, "comma-separated increasing values")->required();
  sw->add_option("--out", out_path, "summary CSV")->required();

  std::string theorem;
  long T = 0;
  int K = 1, N = 1;
  double lambda_min = -1, gamma_min = -1, v_max = 1, q_min = 0.01, mu = -1, alpha = 1.5;
  auto* bd = app.add_subcommand("bounds", "print the tuned parameters and bound of a theorem");
  bd->add_option("--theorem", theorem, "T1 T2 T4 T5 T7 T7sw T8 T9 T11")->required();
  bd->add_option("--T", T, "horizon")->required();
  bd->add_option("--K", K, "slots");
  bd->add_option("--N", N, "ads");
  auto* lm = bd->add_option("--lambda-min", lambda_min, "smallest cumulative prominence");
  auto* gm = bd->add_option("--gamma-min", gamma_min, "smallest cumulative discount");
  lm->excludes(gm);
  bd->add_option("--v-max", v_max, "largest value");
  bd->add_option("--q-min", q_min, "smallest quality");
  bd->add_option("--mu", mu, "resampling probability (defaults to the tuned one)");
  bd->add_option("--alpha", alpha, "mu = T^-alpha for T4/T5");

  auto* vf = app.add_subcommand("verify", "run the counterexample suite");
  vf->add_option("--filter", filter, "only checks whose name contains this");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) {
      const auto c = load_config(config_path);
      const auto res = run_point(c);
      print_warnings(res.report.warnings);
      write_trace(c, res.setup, out_path);
      if (!summary_path.empty()) emit_csv(res.rows, summary_path);
      print_report(res.report);
      return 0;
    }
    if (*sw) {
      const auto c = load_config(config_path);
      const auto points = detail::parse_list("points", points_text);
      if (points.empty()) throw ConfigError("--points must list at least one value");
      const auto results = sweep(c, axis, points);
      std::vector<SummaryRow> rows;
      for (std::size_t i = 0; i < results.size(); ++i) {
        print_warnings(results[i].report.warnings);
        rows.insert(rows.end(), results[i].rows.begin(), results[i].rows.end());
        std::printf("%s=%.17g ", axis.c_str(), points[i]);
        print_report(results[i].report);
      }
      emit_csv(rows, out_path);
      return 0;
    }
    if (*bd) {
      const TheoremId id = parse_theorem(theorem);
      const double disc = lambda_min > 0 ? lambda_min : gamma_min > 0 ? gamma_min : 1.0;
      const Tuning t = tune(id, T, K, N, disc, alpha);
      print_warnings(t.warnings);
      const double used_mu = mu > 0 ? mu : t.mu.value_or(0.0);
      const auto b = bound(id, BoundInputs{static_cast<double>(T), static_cast<double>(K), static_cast<double>(N),
                                           v_max, disc, q_min, used_mu});
      print_warnings(b.warnings);
      std::printf("theorem=%s tau=%d delta=%.17g", to_string(id).c_str(), t.tau, t.delta);
      if (t.mu) std::printf(" mu=%.17g", *t.mu);
      std::printf(" bound=%.17g\n", b.value);
      return 0;
    }
    if (*vf) {
      bool all = true;
      int shown = 0;
      for (const auto& r : counterexample_suite()) {
        if (!filter.empty() && r.name.find(filter) == std::string::npos) continue;
        ++shown;
        all = all && r.passed;
        std::printf("%s %s: %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
      }
      if (shown == 0) {
        std::fprintf(stderr, "no check matches '%s'\n", filter.c_str());
        return 2;
      }
      return all ? 0 : 1;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
