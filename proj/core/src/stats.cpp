#include "betaconst/stats.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "betaconst/errors.hpp"

namespace betaconst {

namespace {

struct BlockSums {
  double xx = 0.0;  // sum dx^2
  double xe = 0.0;  // sum dx * (dy - b dx)
  double ee = 0.0;  // sum (dy - b dx)^2
  double xy = 0.0;  // sum dx * dy
  int retained = 0;
};

void check_block(const IncrementSet& inc, int j, int k_n) {
  if (k_n < 1) throw InputError("block size k_n must be positive");
  if (j < 1 || static_cast<std::size_t>(j) * static_cast<std::size_t>(k_n) > inc.size()) {
    throw IndexError("block " + std::to_string(j) + " with k_n=" + std::to_string(k_n) +
                     " does not fit in a day of " + std::to_string(inc.size()) +
                     " increments");
  }
}

BlockSums block_sums(const IncrementSet& inc, double b, int j, int k_n) {
  BlockSums s;
  const std::size_t first = static_cast<std::size_t>(j - 1) * static_cast<std::size_t>(k_n);
  const std::size_t last = first + static_cast<std::size_t>(k_n);
  for (std::size_t i = first; i < last; ++i) {
    if (!inc.keep[i]) continue;
    const double dx = inc.dx[i];
    const double e = inc.dy[i] - b * dx;
    s.xx += dx * dx;
    s.xe += dx * e;
    s.ee += e * e;
    s.xy += dx * inc.dy[i];
    ++s.retained;
  }
  return s;
}

std::vector<double> diff_range(const std::vector<double>& z, std::size_t first, std::size_t count) {
  std::vector<double> d(count);
  for (std::size_t i = 0; i < count; ++i) d[i] = z[first + i + 1] - z[first + i];
  return d;
}

}  // namespace

void ObservationGrid::validate() const {
  if (n_per_day < 1) throw InputError("observation grid needs n_per_day >= 1");
  if (days < 1) throw InputError("observation grid needs at least one day");
  const std::size_t expected = increments() + 1;
  if (x.size() != expected || y.size() != expected) {
    throw InputError("observation grid series must hold days*n_per_day+1 = " +
                     std::to_string(expected) + " values");
  }
  for (std::size_t i = 0; i < expected; ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw InputError("observation grid has a non-finite value at index " + std::to_string(i));
    }
  }
}

std::vector<double> ObservationGrid::day_dx(int d) const {
  if (d < 0 || d >= days) throw IndexError("day index out of range");
  return diff_range(x, static_cast<std::size_t>(d) * n_per_day, n_per_day);
}

std::vector<double> ObservationGrid::day_dy(int d) const {
  if (d < 0 || d >= days) throw IndexError("day index out of range");
  return diff_range(y, static_cast<std::size_t>(d) * n_per_day, n_per_day);
}

ObservationGrid ObservationGrid::slice_days(int first, int count) const {
  if (first < 0 || count < 1 || first + count > days) throw IndexError("day slice out of range");
  ObservationGrid g;
  g.n_per_day = n_per_day;
  g.days = count;
  const auto begin = static_cast<std::ptrdiff_t>(first) * n_per_day;
  const auto end = begin + static_cast<std::ptrdiff_t>(count) * n_per_day + 1;
  g.x.assign(x.begin() + begin, x.begin() + end);
  g.y.assign(y.begin() + begin, y.begin() + end);
  return g;
}

void TruncationSpec::validate() const {
  if (!(varpi > 0.0 && varpi < 0.5)) throw ConfigError("truncation exponent varpi must lie in (0, 1/2)");
  if (const auto* f = std::get_if<FixedThreshold>(&mode)) {
    if (!(f->alpha_x > 0.0) || !(f->alpha_y > 0.0)) {
      throw ConfigError("fixed truncation thresholds must be strictly positive");
    }
  } else if (const auto* a = std::get_if<AdaptiveThreshold>(&mode)) {
    if (!(a->c > 0.0)) throw ConfigError("adaptive truncation constant must be strictly positive");
  }
}

double bipower_variation(std::span<const double> d) {
  double s = 0.0;
  for (std::size_t i = 1; i < d.size(); ++i) s += std::abs(d[i]) * std::abs(d[i - 1]);
  return 0.5 * std::numbers::pi * s;
}

IncrementSet truncate(std::span<const double> dx, std::span<const double> dy,
                      const TruncationSpec& spec, int n_per_day) {
  spec.validate();
  if (n_per_day < 1 || dx.size() != static_cast<std::size_t>(n_per_day) ||
      dy.size() != static_cast<std::size_t>(n_per_day)) {
    throw InputError("truncate: expected " + std::to_string(n_per_day) +
                     " increments per series, got " + std::to_string(dx.size()) + " and " +
                     std::to_string(dy.size()));
  }

  IncrementSet inc;
  inc.dx.assign(dx.begin(), dx.end());
  inc.dy.assign(dy.begin(), dy.end());

  const double scale = std::pow(1.0 / n_per_day, spec.varpi);
  if (const auto* f = std::get_if<FixedThreshold>(&spec.mode)) {
    inc.threshold_x = f->alpha_x * scale;
    inc.threshold_y = f->alpha_y * scale;
  } else if (const auto* a = std::get_if<AdaptiveThreshold>(&spec.mode)) {
    const double bv_x = bipower_variation(dx);
    const double bv_y = bipower_variation(dy);
    if (!(bv_x > 0.0) || !(bv_y > 0.0)) {
      throw DegenerateInputError("adaptive truncation: zero bipower variation (constant price)");
    }
    inc.threshold_x = a->c * std::sqrt(bv_x) * scale;
    inc.threshold_y = a->c * std::sqrt(bv_y) * scale;
  } else {
    inc.threshold_x = std::numeric_limits<double>::infinity();
    inc.threshold_y = std::numeric_limits<double>::infinity();
  }

  inc.keep.resize(inc.dx.size());
  for (std::size_t i = 0; i < inc.dx.size(); ++i) {
    const bool k = std::abs(inc.dx[i]) <= inc.threshold_x && std::abs(inc.dy[i]) <= inc.threshold_y;
    inc.keep[i] = k ? 1 : 0;
    inc.retained_count += k ? 1 : 0;
  }
  return inc;
}

std::vector<IncrementSet> truncate_days(const ObservationGrid& grid, const TruncationSpec& spec) {
  grid.validate();
  std::vector<IncrementSet> out;
  out.reserve(static_cast<std::size_t>(grid.days));
  for (int d = 0; d < grid.days; ++d) {
    out.push_back(truncate(grid.day_dx(d), grid.day_dy(d), spec, grid.n_per_day));
  }
  return out;
}

double block_c(const IncrementSet& inc, double b, int j, int k_n, int n) {
  check_block(inc, j, k_n);
  return static_cast<double>(n) / std::sqrt(static_cast<double>(k_n)) * block_sums(inc, b, j, k_n).xe;
}

double block_v1(const IncrementSet& inc, int j, int k_n, int n) {
  check_block(inc, j, k_n);
  return static_cast<double>(n) / k_n * block_sums(inc, 0.0, j, k_n).xx;
}

double block_v2(const IncrementSet& inc, double b, int j, int k_n, int n) {
  check_block(inc, j, k_n);
  return static_cast<double>(n) / k_n * block_sums(inc, b, j, k_n).ee;
}

DayStatistic day_statistic(const IncrementSet& day, double b, int k_n, int n,
                           const DenominatorGuard& guard) {
  if (k_n < 2) throw InputError("day_statistic: k_n must be at least 2");
  if (day.size() != static_cast<std::size_t>(n)) {
    throw InputError("day_statistic: increment count does not match n");
  }
  const int blocks = n / k_n;
  if (blocks < 2) throw InputError("day_statistic: need at least two blocks per day");

  const double c_scale = static_cast<double>(n) / std::sqrt(static_cast<double>(k_n));
  const double v_scale = static_cast<double>(n) / k_n;

  DayStatistic out;
  out.blocks.reserve(static_cast<std::size_t>(blocks));
  for (int j = 1; j <= blocks; ++j) {
    const BlockSums s = block_sums(day, b, j, k_n);
    BlockStats bs;
    bs.j = j;
    bs.c_hat = c_scale * s.xe;
    bs.v1 = v_scale * s.xx;
    bs.v2 = v_scale * s.ee;
    bs.v = bs.v1 * bs.v2;
    bs.r2 = bs.v > 0.0 ? bs.c_hat * bs.c_hat / (k_n * bs.v) : 0.0;
    bs.retained = s.retained;

    if (j >= 2) {
      const double denom = out.blocks.back().v;
      if (denom < guard.floor) {
        if (guard.policy == DenominatorGuard::Policy::Error) {
          throw DegenerateInputError("day_statistic: V of block " + std::to_string(j - 1) +
                                     " below the denominator guard");
        }
        bs.skipped = true;
        ++out.skipped;
      } else {
        bs.t_j = (bs.c_hat * bs.c_hat - bs.v) / denom;
        out.t_sum += *bs.t_j;
        ++out.terms;
      }
    }
    out.blocks.push_back(bs);
  }
  return out;
}

double pooled_beta(std::span<const IncrementSet> days) {
  double sxy = 0.0;
  double sxx = 0.0;
  for (const auto& day : days) {
    for (std::size_t i = 0; i < day.size(); ++i) {
      if (!day.keep[i]) continue;
      sxy += day.dx[i] * day.dy[i];
      sxx += day.dx[i] * day.dx[i];
    }
  }
  if (!(sxx > 0.0)) throw DegenerateInputError("pooled_beta: no retained variation in X");
  return sxy / sxx;
}

double beta_avar(std::span<const IncrementSet> days, double beta_hat, int k_n, int n) {
  if (k_n < 1 || n / k_n < 2) throw InputError("beta_avar: need at least two blocks per day");
  const double v_scale = static_cast<double>(n) / k_n;

  // Block averages of sigma^2, sigma^2 sigma~^2 and (beta_j - beta_hat)^2 sigma^4.
  double sum_s2 = 0.0;
  double sum_s2_st2 = 0.0;
  double sum_dev = 0.0;
  long used = 0;
  for (const auto& day : days) {
    if (day.size() != static_cast<std::size_t>(n)) {
      throw InputError("beta_avar: increment count does not match n");
    }
    const int blocks = n / k_n;
    for (int j = 1; j <= blocks; ++j) {
      const BlockSums raw = block_sums(day, 0.0, j, k_n);
      if (!(raw.xx > 0.0)) continue;
      const double spot_beta = raw.xy / raw.xx;
      const BlockSums res = block_sums(day, spot_beta, j, k_n);
      const double s2 = v_scale * raw.xx;
      const double st2_s2 = s2 * v_scale * res.ee;
      const double dev = spot_beta - beta_hat;
      sum_s2 += s2;
      sum_s2_st2 += st2_s2;
      sum_dev += dev * dev * s2 * s2;
      ++used;
    }
  }
  if (used == 0) throw DegenerateInputError("beta_avar: every block has zero retained variation");

  const double m = static_cast<double>(used);
  const double s = sum_s2 / m;
  const double v = (2.0 * sum_dev / m + sum_s2_st2 / m) / (s * s);
  return v > 0.0 ? v : 0.0;
}

double sample_r_squared(const IncrementSet& inc, double b) {
  double sxe = 0.0;
  double sxx = 0.0;
  double see = 0.0;
  for (std::size_t i = 0; i < inc.size(); ++i) {
    if (!inc.keep[i]) continue;
    const double e = inc.dy[i] - b * inc.dx[i];
    sxe += inc.dx[i] * e;
    sxx += inc.dx[i] * inc.dx[i];
    see += e * e;
  }
  if (!(sxx > 0.0) || !(see > 0.0)) {
    throw DegenerateInputError("sample_r_squared: zero variation in a series");
  }
  const double r2 = sxe * sxe / (sxx * see);
  return r2 > 1.0 ? 1.0 : r2;
}

}  // namespace betaconst
