#pragma once

// CSV ingestion of intraday price data and window-level reporting.
//
// Input layout, one row per observation:
//
//   date,seq,px,py      prices; seq = 0..n, n+1 rows per date
//   date,seq,rx,ry      log-returns; seq = 1..n, n rows per date
//
// Lines starting with '#' before the header are kept as comments.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "betaconst/constancy_test.hpp"
#include "betaconst/sim.hpp"
#include "betaconst/stats.hpp"

namespace betaconst {

enum class ValueKind { Prices, Returns };

struct PriceDay {
  std::string date;
  std::vector<double> x;  // raw column values as read
  std::vector<double> y;
};

struct PriceTable {
  ValueKind kind = ValueKind::Prices;
  int n_per_day = 0;
  std::vector<std::string> comments;
  std::vector<PriceDay> days;

  std::vector<std::string> dates() const;

  /// Log-price grid; overnight moves are dropped, each day contributes its
  /// n within-day increments.
  ObservationGrid to_grid() const;
};

struct CsvSchema {
  std::optional<int> n_per_day;            // inferred from the first date if absent
  std::optional<ValueKind> kind;           // inferred from the header if absent
};

PriceTable read_csv(std::istream& in, const CsvSchema& schema = {});
PriceTable read_csv(const std::filesystem::path& path, const CsvSchema& schema = {});

/// Canonical form: shortest round-trip decimal for every value.
void write_csv(std::ostream& out, const PriceTable& table);
void write_csv(const std::filesystem::path& path, const PriceTable& table);

/// Weekday ISO dates (YYYY-MM-DD) starting at `first` (default 2000-01-03).
std::vector<std::string> weekday_dates(int count, const std::string& first = "2000-01-03");

/// Converts a simulated grid to a table (prices = exp(log-price)).
PriceTable table_from_grid(const ObservationGrid& grid, ValueKind kind,
                           const std::vector<std::string>& dates);

struct WindowPlan {
  enum class Scheme { Weekly, Monthly, Quarterly, FixedDays };

  Scheme scheme = Scheme::Weekly;
  int fixed_days = 5;
  // Monthly/Quarterly: group by calendar month/quarter of the date string
  // instead of fixed 22/66-day runs.
  bool calendar = false;

  int window_days() const;
  std::string name() const;
};

struct Window {
  int first_day = 0;
  int day_count = 0;
  std::string start_date;
  std::string end_date;
};

struct Segmentation {
  std::vector<Window> windows;
  int dropped_days = 0;  // trailing days not forming a full window
};

Segmentation segment(const std::vector<std::string>& dates, const WindowPlan& plan);

struct WindowRow {
  Window window;
  TestOutcome outcome;
};

struct SummaryRow {
  double level = 0.0;
  int windows = 0;
  int valid_windows = 0;
  int rejected = 0;
  double percent = 0.0;  // of valid windows
};

struct WindowReport {
  std::string scheme;
  std::vector<WindowRow> rows;
  std::vector<SummaryRow> summary;
  int dropped_days = 0;
};

WindowReport window_report(const PriceTable& table, const WindowPlan& plan,
                           const TestConfig& cfg, int threads = 1);

void write_windows_csv(std::ostream& out, const WindowReport& report);
void write_summary_csv(std::ostream& out, const WindowReport& report);
void write_betas_csv(std::ostream& out, const WindowReport& report);

/// Decimal with 9 significant digits, locale-independent.
std::string format_report_number(double v);

/// Shortest decimal that parses back to the same double.
std::string format_exact(double v);

}  // namespace betaconst
