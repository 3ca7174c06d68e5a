#include "betaconst/sim.hpp"

#include <cmath>
#include <random>
#include <string>

#include "betaconst/errors.hpp"

namespace betaconst {

namespace {

// Compound Poisson increment over one sub-step.
class JumpSource {
 public:
  JumpSource(const std::optional<JumpSpec>& spec, double dt) {
    if (spec && spec->intensity > 0.0) {
      active_ = true;
      count_ = std::poisson_distribution<int>(spec->intensity * dt);
      size_ = std::exponential_distribution<double>(spec->laplace_rate);
    }
  }

  double draw(std::mt19937_64& rng, std::uint64_t& counter) {
    if (!active_) return 0.0;
    const int k = count_(rng);
    double total = 0.0;
    for (int i = 0; i < k; ++i) {
      const double magnitude = size_(rng);
      total += sign_(rng) ? magnitude : -magnitude;
    }
    counter += static_cast<std::uint64_t>(k);
    return total;
  }

 private:
  bool active_ = false;
  std::poisson_distribution<int> count_;
  std::exponential_distribution<double> size_;
  std::bernoulli_distribution sign_{0.5};
};

}  // namespace

void CirParams::validate(const char* what) const {
  if (!(kappa > 0.0) || !(theta > 0.0) || !(xi >= 0.0) || !std::isfinite(kappa) ||
      !std::isfinite(theta) || !std::isfinite(xi)) {
    throw ConfigError(std::string(what) + ": CIR parameters need kappa > 0, theta > 0, xi >= 0");
  }
}

void JumpSpec::validate() const {
  if (!(intensity >= 0.0) || !std::isfinite(intensity)) {
    throw ConfigError("jump intensity must be finite and nonnegative");
  }
  if (!(laplace_rate > 0.0) || !std::isfinite(laplace_rate)) {
    throw ConfigError("Laplace rate must be finite and positive");
  }
}

void SimConfig::validate() const {
  if (days < 1) throw ConfigError("days must be at least 1");
  if (steps_per_day < 2) throw ConfigError("steps_per_day must be at least 2");
  if (substeps < 1) throw ConfigError("substeps must be at least 1");
  vol_x.validate("vol_x");
  vol_y.validate("vol_y");
  if (const auto* c = std::get_if<ConstantBeta>(&beta)) {
    if (!std::isfinite(c->value)) throw ConfigError("constant beta must be finite");
  } else if (const auto* cir = std::get_if<CirBeta>(&beta)) {
    cir->params.validate("beta");
    if (cir->initial && !std::isfinite(*cir->initial)) throw ConfigError("beta initial value must be finite");
  } else if (const auto* s = std::get_if<StepBeta>(&beta)) {
    if (!std::isfinite(s->before) || !std::isfinite(s->after) || !std::isfinite(s->switch_time)) {
      throw ConfigError("step beta values must be finite");
    }
  }
  if (jumps_x) jumps_x->validate();
  if (jumps_y) jumps_y->validate();
  if (v0 && !(*v0 >= 0.0)) throw ConfigError("v0 must be nonnegative");
  if (vtilde0 && !(*vtilde0 >= 0.0)) throw ConfigError("vtilde0 must be nonnegative");
  if (!std::isfinite(drift_x) || !std::isfinite(drift_y)) throw ConfigError("drifts must be finite");
}

double cir_step(double state, const CirParams& params, double dt, double shock) {
  const double floored = state > 0.0 ? state : 0.0;
  return state + params.kappa * (params.theta - state) * dt +
         params.xi * std::sqrt(floored) * std::sqrt(dt) * shock;
}

SimPath simulate(const SimConfig& config) {
  config.validate();

  const int n = config.steps_per_day;
  const std::size_t observations = static_cast<std::size_t>(config.days) * n;
  const double dt = 1.0 / (static_cast<double>(n) * config.substeps);
  const double sqrt_dt = std::sqrt(dt);

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  JumpSource jump_x(config.jumps_x, dt);
  JumpSource jump_y(config.jumps_y, dt);

  double v = config.v0.value_or(config.vol_x.theta);
  double vt = config.vtilde0.value_or(config.vol_y.theta);
  double beta = 0.0;
  const CirBeta* cir_beta = std::get_if<CirBeta>(&config.beta);
  const StepBeta* step_beta = std::get_if<StepBeta>(&config.beta);
  if (const auto* c = std::get_if<ConstantBeta>(&config.beta)) {
    beta = c->value;
  } else if (cir_beta) {
    beta = cir_beta->initial.value_or(cir_beta->params.theta);
  } else {
    beta = step_beta->before;
  }

  SimPath path;
  auto& grid = path.grid;
  grid.n_per_day = n;
  grid.days = config.days;
  grid.x.assign(observations + 1, 0.0);
  grid.y.assign(observations + 1, 0.0);

  SimLatent latent;
  auto record = [&](std::size_t i, double xd, double xj, double yi, double yj) {
    if (!config.record_latent) return;
    latent.v[i] = v;
    latent.vtilde[i] = vt;
    latent.beta[i] = beta;
    latent.x_diffusive[i] = xd;
    latent.x_jump[i] = xj;
    latent.y_idio[i] = yi;
    latent.y_jump[i] = yj;
  };
  if (config.record_latent) {
    for (auto* s : {&latent.v, &latent.vtilde, &latent.beta, &latent.x_diffusive, &latent.x_jump,
                    &latent.y_idio, &latent.y_jump}) {
      s->assign(observations + 1, 0.0);
    }
  }

  double x_diff = 0.0;
  double x_jump = 0.0;
  double y_level = 0.0;
  double y_idio = 0.0;
  double y_jump = 0.0;
  std::uint64_t sub_index = 0;
  record(0, 0.0, 0.0, 0.0, 0.0);

  for (std::size_t i = 1; i <= observations; ++i) {
    for (int s = 0; s < config.substeps; ++s, ++sub_index) {
      if (step_beta) {
        const double t_left = static_cast<double>(sub_index) * dt;
        beta = t_left <= step_beta->switch_time ? step_beta->before : step_beta->after;
      }

      const double z_w = gauss(rng);
      const double z_wt = gauss(rng);
      const double z_b = gauss(rng);
      const double z_bt = gauss(rng);
      const double z_beta = cir_beta ? gauss(rng) : 0.0;

      const double dxc = config.drift_x * dt + std::sqrt(v > 0.0 ? v : 0.0) * sqrt_dt * z_w;
      const double dxj = jump_x.draw(rng, latent.jump_count_x);
      const double dyi = config.drift_y * dt + std::sqrt(vt > 0.0 ? vt : 0.0) * sqrt_dt * z_wt;
      const double dyj_own = jump_y.draw(rng, latent.jump_count_y);

      // beta enters at the left end of the sub-step
      y_level += beta * (dxc + dxj) + dyi + dyj_own;
      x_diff += dxc;
      x_jump += dxj;
      y_idio += dyi;
      y_jump += beta * dxj + dyj_own;

      v = cir_step(v, config.vol_x, dt, z_b);
      vt = cir_step(vt, config.vol_y, dt, z_bt);
      if (cir_beta) beta = cir_step(beta, cir_beta->params, dt, z_beta);
    }
    grid.x[i] = x_diff + x_jump;
    grid.y[i] = y_level;
    record(i, x_diff, x_jump, y_idio, y_jump);
  }

  if (config.record_latent) path.latent = std::move(latent);
  return path;
}

}  // namespace betaconst
