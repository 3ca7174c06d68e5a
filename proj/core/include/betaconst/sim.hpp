#pragma once

// Simulator for the bivariate stochastic-volatility jump model
//
//   dX = a_x dt + sqrt(V) dW + dL
//   dY = beta dX + a_y dt + sqrt(V~) dW~ + dL~
//   dV = kappa (theta - V) dt + xi sqrt(V) dB        (same form for V~)
//
// with L, L~ compound Poisson with Laplace jump sizes, and beta either
// constant, a square-root diffusion, or a deterministic step. Time is in
// trading days.

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "betaconst/stats.hpp"

namespace betaconst {

struct CirParams {
  double kappa = 0.03;
  double theta = 1.0;
  double xi = 0.18;

  void validate(const char* what) const;
};

struct ConstantBeta {
  double value = 1.0;
};

struct CirBeta {
  CirParams params{};
  std::optional<double> initial;  // defaults to params.theta
};

/// beta_t = before for t <= switch_time (days from the path start), after otherwise.
struct StepBeta {
  double before = 1.0;
  double after = 2.0;
  double switch_time = 0.5;
};

using BetaSpec = std::variant<ConstantBeta, CirBeta, StepBeta>;

/// Compound Poisson jumps with symmetric Laplace sizes, density
/// proportional to exp(-laplace_rate |x|).
struct JumpSpec {
  double intensity = 1.6;     // expected jumps per day
  double laplace_rate = 2.0;

  void validate() const;
};

/// Levy measure nu(dx) = 1.6 exp(-2|x|) dx for both L and L~.
inline JumpSpec levy_measure_jumps() { return JumpSpec{1.6, 2.0}; }

/// Rates quoted in prose: 0.4/day on X and 0.8/day on Y's own jumps.
inline JumpSpec prose_jumps_x() { return JumpSpec{0.4, 2.0}; }
inline JumpSpec prose_jumps_y() { return JumpSpec{0.8, 2.0}; }

struct SimConfig {
  int days = 1;
  int steps_per_day = 38;
  int substeps = 10;
  CirParams vol_x{};
  CirParams vol_y{};
  BetaSpec beta = ConstantBeta{1.0};
  std::optional<JumpSpec> jumps_x;
  std::optional<JumpSpec> jumps_y;
  std::uint64_t seed = 0;
  std::optional<double> v0;
  std::optional<double> vtilde0;
  double drift_x = 0.0;
  double drift_y = 0.0;
  bool record_latent = false;

  void validate() const;
};

/// Per-observation model state, cumulative channels start at 0.
///
/// x = x_diffusive + x_jump (drift included in x_diffusive), and y_idio is
/// the cumulative sqrt(V~) dW~ component of Y (drift a_y included).
struct SimLatent {
  std::vector<double> v;
  std::vector<double> vtilde;
  std::vector<double> beta;
  std::vector<double> x_diffusive;
  std::vector<double> x_jump;
  std::vector<double> y_idio;
  std::vector<double> y_jump;  // L~ plus beta * dL
  std::uint64_t jump_count_x = 0;
  std::uint64_t jump_count_y = 0;
};

struct SimPath {
  ObservationGrid grid;
  std::optional<SimLatent> latent;
};

/// One full-truncation Euler step of a square-root diffusion. The state may
/// go negative; only the argument of the square root is floored at 0.
double cir_step(double state, const CirParams& params, double dt, double shock);

/// Simulates config.days days; bit-identical for identical configs.
SimPath simulate(const SimConfig& config);

}  // namespace betaconst
