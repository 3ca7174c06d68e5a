#pragma once

// Jump-truncated block statistics for the constant-beta test.
//
// All per-day quantities use the day as the unit of time: with n equidistant
// observations per day, Delta_n = 1/n and a block of k_n increments spans
// k_n/n days. Blocks never straddle a day boundary.

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace betaconst {

/// Equidistant log-price observations of a factor X and an asset Y.
///
/// Both series hold days * n_per_day + 1 values; increment i of day d is
/// z[d*n + i + 1] - z[d*n + i] for i in [0, n).
struct ObservationGrid {
  int n_per_day = 0;
  int days = 0;
  std::vector<double> x;
  std::vector<double> y;

  void validate() const;

  std::size_t increments() const {
    return static_cast<std::size_t>(n_per_day) * static_cast<std::size_t>(days);
  }

  /// Increments of X (resp. Y) within day d (0-based).
  std::vector<double> day_dx(int d) const;
  std::vector<double> day_dy(int d) const;

  /// Sub-grid covering days [first, first + count).
  ObservationGrid slice_days(int first, int count) const;
};

struct FixedThreshold {
  double alpha_x = 0.5;
  double alpha_y = 0.5;
};

/// alpha per asset and per day = c * sqrt(bipower variation of that day).
struct AdaptiveThreshold {
  double c = 4.0;
};

/// Keep every increment.
struct NoTruncation {};

using TruncationMode = std::variant<AdaptiveThreshold, FixedThreshold, NoTruncation>;

struct TruncationSpec {
  TruncationMode mode = AdaptiveThreshold{};
  double varpi = 0.49;

  void validate() const;
};

/// One day's increments together with the truncation event.
struct IncrementSet {
  std::vector<double> dx;
  std::vector<double> dy;
  std::vector<std::uint8_t> keep;
  int retained_count = 0;
  // Absolute cutoffs alpha * Delta_n^varpi; +inf when truncation is off.
  double threshold_x = 0.0;
  double threshold_y = 0.0;

  std::size_t size() const { return dx.size(); }
};

/// (pi/2) * sum |d_i| |d_{i-1}|: jump-robust estimate of the day's diffusive
/// variance.
double bipower_variation(std::span<const double> d);

/// Applies the truncation rule |dX| <= a_x Delta_n^varpi and |dY| <= a_y Delta_n^varpi.
/// Throws InputError when dx/dy do not hold n_per_day increments, and
/// DegenerateInputError for adaptive mode on a day with zero bipower variation.
IncrementSet truncate(std::span<const double> dx, std::span<const double> dy,
                      const TruncationSpec& spec, int n_per_day);

/// Truncates every day of a grid with the same spec.
std::vector<IncrementSet> truncate_days(const ObservationGrid& grid,
                                        const TruncationSpec& spec);

// Block j is 1-based and covers increments (j-1)*k_n .. j*k_n - 1 of the day.
// All three throw IndexError when the block does not fit inside the day.
double block_c(const IncrementSet& inc, double b, int j, int k_n, int n);
double block_v1(const IncrementSet& inc, int j, int k_n, int n);
double block_v2(const IncrementSet& inc, double b, int j, int k_n, int n);

struct DenominatorGuard {
  enum class Policy { Skip, Error };

  double floor = 1e-12;
  Policy policy = Policy::Skip;
  // A window whose skipped share of T_j terms exceeds this is flagged invalid.
  double max_skip_fraction = 0.10;
};

struct BlockStats {
  int j = 0;
  double c_hat = 0.0;
  double v1 = 0.0;
  double v2 = 0.0;
  double v = 0.0;
  std::optional<double> t_j;  // absent for j == 1 and for guarded blocks
  double r2 = 0.0;
  int retained = 0;
  bool skipped = false;  // T_j dropped because the previous V fell below the guard
};

struct DayStatistic {
  double t_sum = 0.0;  // sum of T_j over contributing j >= 2
  int terms = 0;       // contributing T_j
  int skipped = 0;     // T_j dropped by the guard
  std::vector<BlockStats> blocks;
};

/// Block statistics of one day and the sum of T_j = (C_j^2 - V_j) / V_{j-1}.
///
/// Uses floor(n/k_n) blocks; trailing increments are discarded. Requires
/// k_n >= 2 and at least two blocks. With Policy::Error a guarded
/// denominator throws DegenerateInputError.
DayStatistic day_statistic(const IncrementSet& day, double b, int k_n, int n,
                           const DenominatorGuard& guard = {});

/// sum dx*dy / sum dx^2 over all kept increments of all days.
double pooled_beta(std::span<const IncrementSet> days);

/// Plug-in estimate of the asymptotic variance of sqrt(n_total) * (beta_hat - beta_bar).
///
/// Integrals over the window are replaced by block averages of spot
/// estimates sigma^2 ~ V1_j, beta_j = block least squares, and
/// sigma^2 sigma~^2 ~ V1_j * V2_j(beta_j). Blocks with V1_j = 0 are skipped.
double beta_avar(std::span<const IncrementSet> days, double beta_hat, int k_n, int n);

/// Squared uncentred correlation between dx and dy - b*dx over kept increments.
double sample_r_squared(const IncrementSet& inc, double b);

}  // namespace betaconst
