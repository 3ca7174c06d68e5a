#include "cli_config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>

#include "betaconst/errors.hpp"

namespace betaconst::cli {

namespace {

using nlohmann::json;

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (const auto& [key, value] : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* k) { return key == k; });
    if (!known) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <class T>
void read(const json& obj, const char* key, T& dst) {
  if (auto it = obj.find(key); it != obj.end()) dst = it->template get<T>();
}

template <class T>
void read(const json& obj, const char* key, std::optional<T>& dst) {
  if (auto it = obj.find(key); it != obj.end()) {
    if (it->is_null()) {
      dst.reset();
    } else {
      dst = it->template get<T>();
    }
  }
}

void read_cir(const json& obj, const char* key, CirSettings& dst, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  check_keys(*it, {"kappa", "theta", "xi"}, where + "." + key);
  read(*it, "kappa", dst.kappa);
  read(*it, "theta", dst.theta);
  read(*it, "xi", dst.xi);
}

json cir_json(const CirSettings& c) { return json{{"kappa", c.kappa}, {"theta", c.theta}, {"xi", c.xi}}; }

template <class T>
json opt_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

void one_of(const std::string& value, std::initializer_list<const char*> allowed, const std::string& what) {
  if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return value == a; })) {
    throw ConfigError(what + ": unsupported value '" + value + "'");
  }
}

}  // namespace

void merge_json(CliConfig& base, const json& doc) {
  try {
    check_keys(doc, {"seed", "threads", "sim", "test", "mc", "window"}, "config");
    read(doc, "seed", base.seed);
    read(doc, "threads", base.threads);

    if (auto it = doc.find("sim"); it != doc.end()) {
      const json& s = *it;
      check_keys(s,
                 {"days", "steps_per_day", "substeps", "vol_x", "vol_y", "beta", "beta_value", "beta_cir",
                  "beta_initial", "step_before", "step_after", "step_time", "jumps", "jump_intensity_x",
                  "jump_intensity_y", "laplace_rate", "v0", "vtilde0", "drift_x", "drift_y", "format",
                  "start_date"},
                 "sim");
      auto& d = base.sim;
      read(s, "days", d.days);
      read(s, "steps_per_day", d.steps_per_day);
      read(s, "substeps", d.substeps);
      read_cir(s, "vol_x", d.vol_x, "sim");
      read_cir(s, "vol_y", d.vol_y, "sim");
      read(s, "beta", d.beta);
      read(s, "beta_value", d.beta_value);
      read_cir(s, "beta_cir", d.beta_cir, "sim");
      read(s, "beta_initial", d.beta_initial);
      read(s, "step_before", d.step_before);
      read(s, "step_after", d.step_after);
      read(s, "step_time", d.step_time);
      read(s, "jumps", d.jumps);
      read(s, "jump_intensity_x", d.jump_intensity_x);
      read(s, "jump_intensity_y", d.jump_intensity_y);
      read(s, "laplace_rate", d.laplace_rate);
      read(s, "v0", d.v0);
      read(s, "vtilde0", d.vtilde0);
      read(s, "drift_x", d.drift_x);
      read(s, "drift_y", d.drift_y);
      read(s, "format", d.format);
      read(s, "start_date", d.start_date);
    }

    if (auto it = doc.find("test"); it != doc.end()) {
      const json& t = *it;
      check_keys(t,
                 {"k_n", "beta", "beta_value", "truncation", "truncation_c", "alpha_x", "alpha_y", "varpi",
                  "levels", "guard_floor", "guard_policy", "max_skip_fraction", "ci_level"},
                 "test");
      auto& d = base.test;
      read(t, "k_n", d.k_n);
      read(t, "beta", d.beta);
      read(t, "beta_value", d.beta_value);
      read(t, "truncation", d.truncation);
      read(t, "truncation_c", d.truncation_c);
      read(t, "alpha_x", d.alpha_x);
      read(t, "alpha_y", d.alpha_y);
      read(t, "varpi", d.varpi);
      read(t, "levels", d.levels);
      read(t, "guard_floor", d.guard_floor);
      read(t, "guard_policy", d.guard_policy);
      read(t, "max_skip_fraction", d.max_skip_fraction);
      read(t, "ci_level", d.ci_level);
    }

    if (auto it = doc.find("mc"); it != doc.end()) {
      check_keys(*it, {"replications", "window_lengths", "hypothesis"}, "mc");
      read(*it, "replications", base.mc.replications);
      read(*it, "window_lengths", base.mc.window_lengths);
      read(*it, "hypothesis", base.mc.hypothesis);
    }

    if (auto it = doc.find("window"); it != doc.end()) {
      check_keys(*it, {"scheme", "days", "calendar"}, "window");
      read(*it, "scheme", base.window.scheme);
      read(*it, "days", base.window.days);
      read(*it, "calendar", base.window.calendar);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

CliConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path + ": " + e.what());
  }
  CliConfig cfg;
  merge_json(cfg, doc);
  return cfg;
}

json to_json(const CliConfig& cfg) {
  const auto& s = cfg.sim;
  const auto& t = cfg.test;
  json j;
  j["seed"] = opt_json(cfg.seed);
  j["threads"] = opt_json(cfg.threads);
  j["sim"] = {{"days", s.days},
              {"steps_per_day", s.steps_per_day},
              {"substeps", s.substeps},
              {"vol_x", cir_json(s.vol_x)},
              {"vol_y", cir_json(s.vol_y)},
              {"beta", s.beta},
              {"beta_value", s.beta_value},
              {"beta_cir", cir_json(s.beta_cir)},
              {"beta_initial", opt_json(s.beta_initial)},
              {"step_before", s.step_before},
              {"step_after", s.step_after},
              {"step_time", s.step_time},
              {"jumps", s.jumps},
              {"jump_intensity_x", s.jump_intensity_x},
              {"jump_intensity_y", s.jump_intensity_y},
              {"laplace_rate", s.laplace_rate},
              {"v0", opt_json(s.v0)},
              {"vtilde0", opt_json(s.vtilde0)},
              {"drift_x", s.drift_x},
              {"drift_y", s.drift_y},
              {"format", s.format},
              {"start_date", s.start_date}};
  j["test"] = {{"k_n", t.k_n},
               {"beta", t.beta},
               {"beta_value", t.beta_value},
               {"truncation", t.truncation},
               {"truncation_c", t.truncation_c},
               {"alpha_x", t.alpha_x},
               {"alpha_y", t.alpha_y},
               {"varpi", t.varpi},
               {"levels", t.levels},
               {"guard_floor", t.guard_floor},
               {"guard_policy", t.guard_policy},
               {"max_skip_fraction", t.max_skip_fraction},
               {"ci_level", t.ci_level}};
  j["mc"] = {{"replications", cfg.mc.replications},
             {"window_lengths", cfg.mc.window_lengths},
             {"hypothesis", cfg.mc.hypothesis}};
  j["window"] = {{"scheme", cfg.window.scheme}, {"days", cfg.window.days}, {"calendar", cfg.window.calendar}};
  return j;
}

SimConfig make_sim_config(const SimSettings& s, std::uint64_t seed) {
  SimConfig c;
  c.days = s.days;
  c.steps_per_day = s.steps_per_day;
  c.substeps = s.substeps;
  c.vol_x = CirParams{s.vol_x.kappa, s.vol_x.theta, s.vol_x.xi};
  c.vol_y = CirParams{s.vol_y.kappa, s.vol_y.theta, s.vol_y.xi};

  one_of(s.beta, {"constant", "cir", "step"}, "sim.beta");
  if (s.beta == "constant") {
    c.beta = ConstantBeta{s.beta_value};
  } else if (s.beta == "cir") {
    c.beta = CirBeta{CirParams{s.beta_cir.kappa, s.beta_cir.theta, s.beta_cir.xi}, s.beta_initial};
  } else {
    c.beta = StepBeta{s.step_before, s.step_after, s.step_time};
  }

  one_of(s.jumps, {"levy", "prose", "none", "custom"}, "sim.jumps");
  if (s.jumps == "levy") {
    c.jumps_x = levy_measure_jumps();
    c.jumps_y = levy_measure_jumps();
  } else if (s.jumps == "prose") {
    c.jumps_x = prose_jumps_x();
    c.jumps_y = prose_jumps_y();
  } else if (s.jumps == "custom") {
    c.jumps_x = JumpSpec{s.jump_intensity_x, s.laplace_rate};
    c.jumps_y = JumpSpec{s.jump_intensity_y, s.laplace_rate};
  }
  c.v0 = s.v0;
  c.vtilde0 = s.vtilde0;
  c.drift_x = s.drift_x;
  c.drift_y = s.drift_y;
  c.seed = seed;
  one_of(s.format, {"prices", "returns"}, "sim.format");
  c.validate();
  return c;
}

TestConfig make_test_config(const TestSettings& t) {
  TestConfig c;
  c.k_n = t.k_n;
  one_of(t.beta, {"estimated", "known"}, "test.beta");
  if (t.beta == "known") {
    c.beta_mode = KnownBeta{t.beta_value};
  } else {
    c.beta_mode = EstimatedBeta{};
  }
  one_of(t.truncation, {"adaptive", "fixed", "none"}, "test.truncation");
  if (t.truncation == "adaptive") {
    c.truncation.mode = AdaptiveThreshold{t.truncation_c};
  } else if (t.truncation == "fixed") {
    c.truncation.mode = FixedThreshold{t.alpha_x, t.alpha_y};
  } else {
    c.truncation.mode = NoTruncation{};
  }
  c.truncation.varpi = t.varpi;
  c.levels = t.levels;
  c.guard.floor = t.guard_floor;
  one_of(t.guard_policy, {"skip", "error"}, "test.guard_policy");
  c.guard.policy = t.guard_policy == "error" ? DenominatorGuard::Policy::Error : DenominatorGuard::Policy::Skip;
  c.guard.max_skip_fraction = t.max_skip_fraction;
  c.ci_level = t.ci_level;
  c.truncation.validate();
  return c;
}

McDesign make_mc_design(const CliConfig& cfg, Hypothesis h, std::uint64_t seed) {
  McDesign d;
  d.replications = cfg.mc.replications;
  d.window_lengths = cfg.mc.window_lengths;
  d.hypothesis = h;
  d.sim = make_sim_config(cfg.sim, seed);
  d.test = make_test_config(cfg.test);
  d.base_seed = seed;
  d.validate();
  return d;
}

WindowPlan make_window_plan(const WindowSettings& w) {
  WindowPlan p;
  one_of(w.scheme, {"weekly", "monthly", "quarterly", "fixed"}, "window.scheme");
  if (w.scheme == "weekly") {
    p.scheme = WindowPlan::Scheme::Weekly;
  } else if (w.scheme == "monthly") {
    p.scheme = WindowPlan::Scheme::Monthly;
  } else if (w.scheme == "quarterly") {
    p.scheme = WindowPlan::Scheme::Quarterly;
  } else {
    p.scheme = WindowPlan::Scheme::FixedDays;
  }
  if (w.days < 1) throw ConfigError("window.days must be at least 1");
  p.fixed_days = w.days;
  p.calendar = w.calendar;
  return p;
}

}  // namespace betaconst::cli
