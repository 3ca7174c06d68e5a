#include "betaconst/mc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "betaconst/errors.hpp"
#include "betaconst/io.hpp"
#include "parallel.hpp"

namespace betaconst {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::string window_label(int days) {
  switch (days) {
    case 5: return "week";
    case 22: return "month";
    case 66: return "quarter";
    default: return "T=" + std::to_string(days);
  }
}

}  // namespace

const char* to_string(Hypothesis h) { return h == Hypothesis::Null ? "null" : "alternative"; }

BetaSpec hypothesis_beta(Hypothesis h) {
  if (h == Hypothesis::Null) return ConstantBeta{1.0};
  return CirBeta{CirParams{0.03, 1.0, 0.18}, std::nullopt};
}

void McDesign::validate() const {
  if (replications < 100) throw ConfigError("replications must be at least 100 for rate reporting");
  if (window_lengths.empty()) throw ConfigError("at least one window length is required");
  for (int w : window_lengths) {
    if (w < 1) throw ConfigError("window lengths must be at least one day");
  }
  SimConfig probe = sim;
  probe.days = 1;
  probe.beta = hypothesis_beta(hypothesis);
  probe.validate();
  test.validate(sim.steps_per_day);
}

const McCell& McReport::cell(int window_days, double level) const {
  for (const auto& c : cells) {
    if (c.window_days == window_days && c.level == level) return c;
  }
  throw IndexError("no Monte Carlo cell for window " + std::to_string(window_days));
}

std::uint64_t replication_seed(std::uint64_t base_seed, int window_days, int replication) {
  std::uint64_t s = splitmix64(base_seed);
  s = splitmix64(s ^ static_cast<std::uint64_t>(window_days));
  return splitmix64(s ^ static_cast<std::uint64_t>(replication));
}

McSamples run_mc_samples(const McDesign& design, int threads) {
  design.validate();
  const auto windows = design.window_lengths.size();
  const auto reps = static_cast<std::size_t>(design.replications);

  McSamples samples;
  samples.window_lengths = design.window_lengths;
  samples.outcomes.assign(windows, std::vector<TestOutcome>(reps));

  detail::parallel_for(windows * reps, threads, [&](std::size_t task) {
    const std::size_t w = task / reps;
    const std::size_t r = task % reps;
    const int days = design.window_lengths[w];

    SimConfig sim = design.sim;
    sim.days = days;
    sim.seed = replication_seed(design.base_seed, days, static_cast<int>(r));
    sim.beta = hypothesis_beta(design.hypothesis);
    sim.record_latent = false;

    TestOutcome outcome;
    try {
      outcome = run_test(simulate(sim).grid, design.test);
    } catch (const InputError&) {
      outcome.valid = false;
    }
    outcome.blocks.clear();
    samples.outcomes[w][r] = std::move(outcome);
  });
  return samples;
}

McReport tabulate(const McDesign& design, const McSamples& samples) {
  McReport report;
  report.hypothesis = design.hypothesis;
  report.replications = design.replications;
  for (std::size_t w = 0; w < samples.window_lengths.size(); ++w) {
    for (std::size_t l = 0; l < design.test.levels.size(); ++l) {
      McCell cell;
      cell.window_days = samples.window_lengths[w];
      cell.level = design.test.levels[l];
      for (const auto& o : samples.outcomes[w]) {
        if (!o.valid) {
          ++cell.invalid;
          continue;
        }
        ++cell.valid;
        if (o.decisions[l].reject) ++cell.rejections;
      }
      if (cell.valid > 0) {
        cell.rate = static_cast<double>(cell.rejections) / cell.valid;
        cell.stderr_ = std::sqrt(cell.rate * (1.0 - cell.rate) / cell.valid);
      }
      report.cells.push_back(cell);
    }
  }
  return report;
}

McReport run_mc(const McDesign& design, int threads) {
  return tabulate(design, run_mc_samples(design, threads));
}

void write_mc_csv(std::ostream& out, const std::vector<McReport>& reports) {
  out << "hypothesis,window_days,level,rate,stderr,reps,invalid\n";
  for (const auto& r : reports) {
    for (const auto& c : r.cells) {
      out << to_string(r.hypothesis) << ',' << c.window_days << ',' << format_report_number(c.level)
          << ',' << format_report_number(c.rate) << ',' << format_report_number(c.stderr_) << ','
          << c.valid << ',' << c.invalid << '\n';
    }
  }
}

std::string format_mc_table(const std::vector<McReport>& reports) {
  std::ostringstream os;
  if (reports.empty()) return {};

  std::vector<int> windows;
  std::vector<double> levels;
  for (const auto& c : reports.front().cells) {
    if (std::find(windows.begin(), windows.end(), c.window_days) == windows.end()) windows.push_back(c.window_days);
    if (std::find(levels.begin(), levels.end(), c.level) == levels.end()) levels.push_back(c.level);
  }

  char buf[64];
  const int group_width = static_cast<int>(levels.size()) * 8;
  os << "Interval  ";
  for (const auto& r : reports) {
    const char* title = r.hypothesis == Hypothesis::Null ? "Constant Beta" : "Time-Varying Beta";
    std::snprintf(buf, sizeof buf, "  %-*s", group_width, title);
    os << buf;
  }
  os << "\n          ";
  for (std::size_t g = 0; g < reports.size(); ++g) {
    os << "  ";
    for (double l : levels) {
      std::snprintf(buf, sizeof buf, "%8.1f", 100.0 * l);
      os << buf;
    }
  }
  os << '\n';
  for (int w : windows) {
    std::snprintf(buf, sizeof buf, "%-10s", window_label(w).c_str());
    os << buf;
    for (const auto& r : reports) {
      os << "  ";
      for (double l : levels) {
        double rate = -1.0;
        for (const auto& c : r.cells) {
          if (c.window_days == w && c.level == l && c.valid > 0) rate = c.rate;
        }
        if (rate < 0.0) {
          std::snprintf(buf, sizeof buf, "%8s", "-");
        } else {
          std::snprintf(buf, sizeof buf, "%8.2f", 100.0 * rate);
        }
        os << buf;
      }
    }
    os << '\n';
  }
  os << "(percent rejected; " << reports.front().replications << " replications)\n";
  return os.str();
}

}  // namespace betaconst
