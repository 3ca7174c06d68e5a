#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <thread>

#include <CLI11.hpp>

#include "betaconst/errors.hpp"
#include "betaconst/io.hpp"
#include "betaconst/mc.hpp"
#include "betaconst/sim.hpp"
#include "cli_config.hpp"

namespace betaconst::cli {

namespace fs = std::filesystem;

namespace {

#define BETACONST_FIELD(path) [](CliConfig& c) -> auto& { return c.path; }

// Options write into a scratch config so --help can show the defaults; only
// the ones actually given on the command line are copied onto the effective
// config afterwards.
class Binder {
 public:
  template <class Get>
  CLI::Option* opt(CLI::App* app, const std::string& name, Get get, const std::string& desc) {
    CLI::Option* o = app->add_option(name, get(flags_), desc)->capture_default_str();
    appliers_.push_back([this, o, get](CliConfig& c) {
      if (o->count() > 0) get(c) = get(flags_);
    });
    return o;
  }

  template <class Get>
  CLI::Option* flag(CLI::App* app, const std::string& name, Get get, const std::string& desc) {
    CLI::Option* o = app->add_flag(name, get(flags_), desc)->capture_default_str();
    appliers_.push_back([this, o, get](CliConfig& c) {
      if (o->count() > 0) get(c) = get(flags_);
    });
    return o;
  }

  void apply(CliConfig& cfg) const {
    for (const auto& f : appliers_) f(cfg);
  }

 private:
  CliConfig flags_;
  std::vector<std::function<void(CliConfig&)>> appliers_;
};

void add_model_options(CLI::App* app, Binder& b) {
  b.opt(app, "--steps", BETACONST_FIELD(sim.steps_per_day), "observations per day (n)");
  b.opt(app, "--substeps", BETACONST_FIELD(sim.substeps), "Euler substeps per observation");
  b.opt(app, "--jumps", BETACONST_FIELD(sim.jumps), "jump preset")
      ->check(CLI::IsMember({"levy", "prose", "none", "custom"}));
  b.opt(app, "--jump-intensity-x", BETACONST_FIELD(sim.jump_intensity_x), "custom jumps: X jumps per day");
  b.opt(app, "--jump-intensity-y", BETACONST_FIELD(sim.jump_intensity_y), "custom jumps: Y jumps per day");
  b.opt(app, "--laplace-rate", BETACONST_FIELD(sim.laplace_rate), "custom jumps: Laplace rate");
}

void add_path_options(CLI::App* app, Binder& b) {
  b.opt(app, "--days", BETACONST_FIELD(sim.days), "trading days to simulate");
  b.opt(app, "--beta", BETACONST_FIELD(sim.beta), "beta process")
      ->check(CLI::IsMember({"constant", "cir", "step"}));
  b.opt(app, "--beta-value", BETACONST_FIELD(sim.beta_value), "constant beta value");
  b.opt(app, "--step-before", BETACONST_FIELD(sim.step_before), "step beta: value up to the switch");
  b.opt(app, "--step-after", BETACONST_FIELD(sim.step_after), "step beta: value after the switch");
  b.opt(app, "--step-time", BETACONST_FIELD(sim.step_time), "step beta: switch time in days");
  b.opt(app, "--drift-x", BETACONST_FIELD(sim.drift_x), "drift of X per day");
  b.opt(app, "--drift-y", BETACONST_FIELD(sim.drift_y), "drift of Y per day");
  b.opt(app, "--format", BETACONST_FIELD(sim.format), "CSV value kind")
      ->check(CLI::IsMember({"prices", "returns"}));
  b.opt(app, "--start-date", BETACONST_FIELD(sim.start_date), "first weekday date (YYYY-MM-DD)");
}

void add_test_options(CLI::App* app, Binder& b) {
  b.opt(app, "--k-n", BETACONST_FIELD(test.k_n), "block size in increments");
  b.opt(app, "--beta-mode", BETACONST_FIELD(test.beta), "beta used in the residuals")
      ->check(CLI::IsMember({"estimated", "known"}));
  b.opt(app, "--known-beta", BETACONST_FIELD(test.beta_value), "beta when --beta-mode=known");
  b.opt(app, "--truncation", BETACONST_FIELD(test.truncation), "jump truncation")
      ->check(CLI::IsMember({"adaptive", "fixed", "none"}));
  b.opt(app, "--truncation-c", BETACONST_FIELD(test.truncation_c), "adaptive threshold multiple of sqrt(BV)");
  b.opt(app, "--alpha-x", BETACONST_FIELD(test.alpha_x), "fixed threshold scale for X");
  b.opt(app, "--alpha-y", BETACONST_FIELD(test.alpha_y), "fixed threshold scale for Y");
  b.opt(app, "--varpi", BETACONST_FIELD(test.varpi), "threshold exponent");
  b.opt(app, "--levels", BETACONST_FIELD(test.levels), "significance levels")->delimiter(',');
  b.opt(app, "--guard-floor", BETACONST_FIELD(test.guard_floor), "smallest usable denominator");
  b.opt(app, "--guard-policy", BETACONST_FIELD(test.guard_policy), "tiny denominators")
      ->check(CLI::IsMember({"skip", "error"}));
  b.opt(app, "--max-skip-fraction", BETACONST_FIELD(test.max_skip_fraction),
        "skipped-block share above which a result is invalid");
  b.opt(app, "--ci-level", BETACONST_FIELD(test.ci_level), "confidence level of the beta interval");
}

// The global flags are registered on the top-level app and on every
// subcommand, so they may appear on either side of the subcommand name and
// show up in each subcommand's --help.
struct Globals {
  std::string config_path;
  std::uint64_t seed_value = 0;
  int threads_value = 0;
  std::string out_dir;
  std::vector<CLI::Option*> config, seed, threads, out;

  void add(CLI::App* app) {
    config.push_back(app->add_option("--config", config_path, "JSON config file")
                         ->check(CLI::ExistingFile)
                         ->default_str("none"));
    seed.push_back(app->add_option("--seed", seed_value, "random seed")->default_str("generated, printed"));
    threads.push_back(app->add_option("--threads", threads_value, "worker threads")
                          ->default_str("BETACONST_THREADS, else all cores"));
    out.push_back(app->add_option("--out", out_dir, "existing output directory")->default_str("."));
  }

  static bool given(const std::vector<CLI::Option*>& opts) {
    return std::any_of(opts.begin(), opts.end(), [](const CLI::Option* o) { return o->count() > 0; });
  }
};

std::uint64_t fresh_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

int resolve_threads(const CliConfig& cfg) {
  if (cfg.threads) {
    if (*cfg.threads < 1) throw ConfigError("threads must be at least 1");
    return *cfg.threads;
  }
  if (const char* env = std::getenv("BETACONST_THREADS"); env && *env) {
    int value = 0;
    try {
      std::size_t used = 0;
      value = std::stoi(env, &used);
      if (env[used] != '\0') value = 0;
    } catch (const std::exception&) {
      value = 0;
    }
    if (value < 1) throw ConfigError(std::string("BETACONST_THREADS must be a positive integer, got '") + env + "'");
    return value;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

fs::path output_dir(const std::string& out) {
  fs::path dir = out.empty() ? fs::path(".") : fs::path(out);
  if (!fs::is_directory(dir)) throw InputError("output directory does not exist: " + dir.string());
  return dir;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw InputError("cannot write " + path.string());
  return f;
}

void finish_output(std::ofstream& f, const fs::path& path) {
  f.flush();
  if (!f) throw InputError("write failed for " + path.string());
}

void print_outcome(std::ostream& out, const TestOutcome& o) {
  out << "days: " << o.days << "\n";
  out << "increments: " << o.n_total << "\n";
  out << "k_n: " << o.k_n << "\n";
  if (o.pooled_beta) {
    out << "beta_hat: " << format_report_number(o.pooled_beta->value) << " ["
        << format_report_number(o.pooled_beta->ci_lo) << ", " << format_report_number(o.pooled_beta->ci_hi)
        << "]\n";
  } else {
    out << "beta (known): " << format_report_number(o.beta_used) << "\n";
  }
  out << "statistic: " << format_report_number(o.statistic) << "\n";
  out << "p_value: " << format_report_number(o.p_value) << "\n";
  for (const auto& d : o.decisions) {
    out << "level " << format_report_number(d.level) << ": " << (d.reject ? "reject" : "do not reject")
        << " (critical " << format_report_number(d.critical) << ")\n";
  }
  out << "blocks: " << o.terms << " used, " << o.skipped_blocks << " skipped\n";
  out << "valid: " << (o.valid ? "true" : "false") << "\n";
}

void write_test_csv(std::ostream& f, const TestOutcome& o) {
  f << "days,increments,k_n,beta_hat,ci_lo,ci_hi,statistic,p_value";
  for (const auto& d : o.decisions) f << ",reject_" << format_report_number(d.level);
  f << ",skipped_blocks,valid\n";
  f << o.days << ',' << o.n_total << ',' << o.k_n << ',' << format_report_number(o.beta_used) << ',';
  if (o.pooled_beta) {
    f << format_report_number(o.pooled_beta->ci_lo) << ',' << format_report_number(o.pooled_beta->ci_hi);
  } else {
    f << ',';
  }
  f << ',' << format_report_number(o.statistic) << ',' << format_report_number(o.p_value);
  for (const auto& d : o.decisions) f << ',' << (d.reject ? 1 : 0);
  f << ',' << o.skipped_blocks << ',' << (o.valid ? "true" : "false") << '\n';
}

std::vector<Hypothesis> hypotheses(const std::string& which) {
  if (which == "null") return {Hypothesis::Null};
  if (which == "alternative") return {Hypothesis::Alternative};
  if (which == "both") return {Hypothesis::Null, Hypothesis::Alternative};
  throw ConfigError("mc.hypothesis: unsupported value '" + which + "'");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Nonparametric test for a constant spot beta from high-frequency data", "betaconst"};
  app.require_subcommand(1);
  app.footer("Settings not exposed as flags (volatility and CIR-beta parameters, v0, ...) are read from --config.");

  Globals globals;
  globals.add(&app);

  Binder binder;

  auto* sim_cmd = app.add_subcommand("simulate", "simulate a pair of log-prices and write sim.csv");
  globals.add(sim_cmd);
  add_path_options(sim_cmd, binder);
  add_model_options(sim_cmd, binder);

  std::string data_path;
  auto* test_cmd = app.add_subcommand("test", "run the constancy test on a CSV file");
  globals.add(test_cmd);
  test_cmd->add_option("data", data_path, "input CSV (date,seq,px,py or date,seq,rx,ry)")
      ->required()
      ->check(CLI::ExistingFile);
  add_test_options(test_cmd, binder);

  auto* mc_cmd = app.add_subcommand("mc", "Monte Carlo size and power table, written to mc.csv");
  globals.add(mc_cmd);
  binder.opt(mc_cmd, "--replications", BETACONST_FIELD(mc.replications),
             "replications per window length");
  binder.opt(mc_cmd, "--windows", BETACONST_FIELD(mc.window_lengths),
             "window lengths in days")
      ->delimiter(',');
  binder.opt(mc_cmd, "--hypothesis", BETACONST_FIELD(mc.hypothesis),
             "which beta process to simulate")
      ->check(CLI::IsMember({"null", "alternative", "both"}));
  add_model_options(mc_cmd, binder);
  add_test_options(mc_cmd, binder);

  std::string window_data;
  auto* win_cmd = app.add_subcommand("window", "test each window of a CSV file; writes windows, summary, betas");
  globals.add(win_cmd);
  win_cmd->add_option("data", window_data, "input CSV (date,seq,px,py or date,seq,rx,ry)")
      ->required()
      ->check(CLI::ExistingFile);
  binder.opt(win_cmd, "--scheme", BETACONST_FIELD(window.scheme), "window scheme")
      ->check(CLI::IsMember({"weekly", "monthly", "quarterly", "fixed"}));
  binder.opt(win_cmd, "--window-days", BETACONST_FIELD(window.days),
             "days per window for --scheme=fixed");
  binder.flag(win_cmd, "--calendar", BETACONST_FIELD(window.calendar),
              "group monthly/quarterly windows by calendar date");
  add_test_options(win_cmd, binder);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    CliConfig cfg;
    if (globals.given(globals.config)) cfg = load_config_file(globals.config_path);
    binder.apply(cfg);
    if (globals.given(globals.seed)) cfg.seed = globals.seed_value;
    if (globals.given(globals.threads)) cfg.threads = globals.threads_value;
    const int threads = resolve_threads(cfg);
    cfg.threads = threads;

    const bool needs_seed = sim_cmd->parsed() || mc_cmd->parsed();
    if (needs_seed && !cfg.seed) {
      cfg.seed = fresh_seed();
      out << "generated seed: " << *cfg.seed << "\n";
    }
    if (!needs_seed) cfg.seed.reset();

    const std::string config_line = to_json(cfg).dump();
    out << "effective config: " << config_line << "\n";

    if (sim_cmd->parsed()) {
      const fs::path dir = output_dir(globals.out_dir);
      const SimConfig sc = make_sim_config(cfg.sim, *cfg.seed);
      const SimPath path = simulate(sc);
      const ValueKind kind = cfg.sim.format == "returns" ? ValueKind::Returns : ValueKind::Prices;
      PriceTable table = table_from_grid(path.grid, kind, weekday_dates(sc.days, cfg.sim.start_date));
      table.comments = {"# seed=" + std::to_string(*cfg.seed), "# config=" + config_line};
      const fs::path file = dir / "sim.csv";
      write_csv(file, table);
      out << "wrote " << file.string() << "\n";
      return kExitOk;
    }

    if (test_cmd->parsed()) {
      const TestConfig tc = make_test_config(cfg.test);
      const PriceTable table = read_csv(fs::path(data_path));
      const TestOutcome outcome = run_test(table.to_grid(), tc);
      print_outcome(out, outcome);
      if (globals.given(globals.out)) {
        const fs::path file = output_dir(globals.out_dir) / "test.csv";
        auto f = open_output(file);
        write_test_csv(f, outcome);
        finish_output(f, file);
        out << "wrote " << file.string() << "\n";
      }
      return kExitOk;
    }

    if (mc_cmd->parsed()) {
      const fs::path dir = output_dir(globals.out_dir);
      std::vector<McReport> reports;
      for (Hypothesis h : hypotheses(cfg.mc.hypothesis)) {
        reports.push_back(run_mc(make_mc_design(cfg, h, *cfg.seed), threads));
      }
      out << format_mc_table(reports);
      const fs::path file = dir / "mc.csv";
      auto f = open_output(file);
      f << "# seed=" << *cfg.seed << "\n# config=" << config_line << "\n";
      write_mc_csv(f, reports);
      finish_output(f, file);
      out << "wrote " << file.string() << "\n";
      return kExitOk;
    }

    if (win_cmd->parsed()) {
      const fs::path dir = output_dir(globals.out_dir);
      const TestConfig tc = make_test_config(cfg.test);
      const WindowPlan plan = make_window_plan(cfg.window);
      const PriceTable table = read_csv(fs::path(window_data));
      const WindowReport report = window_report(table, plan, tc, threads);

      const std::pair<const char*, void (*)(std::ostream&, const WindowReport&)> outputs[] = {
          {"windows.csv", &write_windows_csv}, {"summary.csv", &write_summary_csv}, {"betas.csv", &write_betas_csv}};
      for (const auto& [name, writer] : outputs) {
        const fs::path file = dir / name;
        auto f = open_output(file);
        writer(f, report);
        finish_output(f, file);
        out << "wrote " << file.string() << "\n";
      }
      out << "scheme: " << report.scheme << ", windows: " << report.rows.size()
          << ", dropped days: " << report.dropped_days << "\n";
      for (const auto& s : report.summary) {
        out << "level " << format_report_number(s.level) << ": " << s.rejected << " of " << s.valid_windows
            << " valid windows rejected (" << format_report_number(s.percent) << "%)\n";
      }
      return kExitOk;
    }
  } catch (const DegenerateInputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitAnalysis;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitAnalysis;
  }
  return kExitUsage;
}

#undef BETACONST_FIELD

}  // namespace betaconst::cli
