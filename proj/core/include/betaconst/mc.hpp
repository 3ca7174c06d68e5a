#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "betaconst/constancy_test.hpp"
#include "betaconst/sim.hpp"

namespace betaconst {

enum class Hypothesis { Null, Alternative };

const char* to_string(Hypothesis h);

/// Beta dynamics used for each hypothesis: constant 1 under the null, a
/// square-root diffusion with kappa = 0.03, theta = 1, xi = 0.18 otherwise.
BetaSpec hypothesis_beta(Hypothesis h);

struct McDesign {
  int replications = 500;
  std::vector<int> window_lengths{5, 22, 66};
  Hypothesis hypothesis = Hypothesis::Null;
  SimConfig sim{};  // days, seed and beta are overwritten per replication
  TestConfig test{};
  std::uint64_t base_seed = 20140101;

  void validate() const;
};

struct McCell {
  int window_days = 0;
  double level = 0.0;
  int rejections = 0;
  int valid = 0;
  int invalid = 0;
  double rate = 0.0;
  double stderr_ = 0.0;
};

struct McReport {
  Hypothesis hypothesis = Hypothesis::Null;
  int replications = 0;
  std::vector<McCell> cells;  // window-major, levels in design order

  const McCell& cell(int window_days, double level) const;
};

/// Seed of replication r for a given window length. Pure function of its
/// arguments, so any single replication can be re-run in isolation.
std::uint64_t replication_seed(std::uint64_t base_seed, int window_days, int replication);

/// Window test statistics of every replication, window-major. Deterministic for
/// any thread count.
struct McSamples {
  std::vector<int> window_lengths;
  std::vector<std::vector<TestOutcome>> outcomes;
};

McSamples run_mc_samples(const McDesign& design, int threads = 1);

McReport tabulate(const McDesign& design, const McSamples& samples);

McReport run_mc(const McDesign& design, int threads = 1);

/// CSV with columns hypothesis,window_days,level,rate,stderr,reps,invalid.
void write_mc_csv(std::ostream& out, const std::vector<McReport>& reports);

/// Plain-text table: one row per window length, one column group per report.
std::string format_mc_table(const std::vector<McReport>& reports);

}  // namespace betaconst
