#include "betaconst/io.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "betaconst/errors.hpp"
#include "parallel.hpp"

namespace betaconst {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_double(std::string_view s, std::size_t row, const char* column) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ParseError(row, std::string("invalid number in column ") + column + ": '" + std::string(s) + "'");
  }
  return v;
}

int parse_int(std::string_view s, std::size_t row) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError(row, "invalid intraday index '" + std::string(s) + "'");
  }
  return v;
}

std::chrono::sys_days parse_iso_date(const std::string& s) {
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  char tail = 0;
  if (std::sscanf(s.c_str(), "%d-%u-%u%c", &y, &m, &d, &tail) != 3) {
    throw InputError("expected an ISO date YYYY-MM-DD, got '" + s + "'");
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) throw InputError("invalid calendar date '" + s + "'");
  return std::chrono::sys_days{ymd};
}

std::string calendar_key(const std::string& date, WindowPlan::Scheme scheme) {
  const auto ymd = std::chrono::year_month_day{parse_iso_date(date)};
  const int year = static_cast<int>(ymd.year());
  const unsigned month = static_cast<unsigned>(ymd.month());
  char buf[32];
  if (scheme == WindowPlan::Scheme::Monthly) {
    std::snprintf(buf, sizeof buf, "%04d-%02u", year, month);
  } else {
    std::snprintf(buf, sizeof buf, "%04d-Q%u", year, (month - 1) / 3 + 1);
  }
  return buf;
}

TestOutcome failed_outcome(const TestConfig& cfg, int days, long n_total) {
  TestOutcome o;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  o.statistic = nan;
  o.p_value = nan;
  o.scaled_alt = nan;
  o.beta_used = nan;
  o.valid = false;
  o.days = days;
  o.n_total = n_total;
  o.k_n = cfg.k_n;
  for (double level : cfg.levels) o.decisions.push_back(LevelDecision{level, nan, false});
  return o;
}

}  // namespace

std::string format_report_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 9);
  return std::string(buf, res.ptr);
}

std::string format_exact(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> PriceTable::dates() const {
  std::vector<std::string> out;
  out.reserve(days.size());
  for (const auto& d : days) out.push_back(d.date);
  return out;
}

ObservationGrid PriceTable::to_grid() const {
  if (days.empty()) throw InputError("price table holds no days");
  ObservationGrid g;
  g.n_per_day = n_per_day;
  g.days = static_cast<int>(days.size());
  g.x.reserve(g.increments() + 1);
  g.y.reserve(g.increments() + 1);

  if (kind == ValueKind::Prices) {
    g.x.push_back(std::log(days.front().x.front()));
    g.y.push_back(std::log(days.front().y.front()));
    for (const auto& day : days) {
      for (int s = 1; s <= n_per_day; ++s) {
        g.x.push_back(g.x.back() + (std::log(day.x[s]) - std::log(day.x[s - 1])));
        g.y.push_back(g.y.back() + (std::log(day.y[s]) - std::log(day.y[s - 1])));
      }
    }
  } else {
    g.x.push_back(0.0);
    g.y.push_back(0.0);
    for (const auto& day : days) {
      for (int s = 0; s < n_per_day; ++s) {
        g.x.push_back(g.x.back() + day.x[s]);
        g.y.push_back(g.y.back() + day.y[s]);
      }
    }
  }
  g.validate();
  return g;
}

PriceTable read_csv(std::istream& in, const CsvSchema& schema) {
  PriceTable table;
  std::string line;
  std::size_t row = 0;

  bool have_header = false;
  while (std::getline(in, line)) {
    ++row;
    const auto t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      table.comments.emplace_back(t);
      continue;
    }
    const auto cols = split(t);
    if (cols.size() == 4 && cols[0] == "date" && cols[1] == "seq" && cols[2] == "px" && cols[3] == "py") {
      table.kind = ValueKind::Prices;
    } else if (cols.size() == 4 && cols[0] == "date" && cols[1] == "seq" && cols[2] == "rx" && cols[3] == "ry") {
      table.kind = ValueKind::Returns;
    } else {
      throw ParseError(row, "header must be 'date,seq,px,py' or 'date,seq,rx,ry'");
    }
    have_header = true;
    break;
  }
  if (!have_header) throw ParseError(row, "missing header");
  if (schema.kind && *schema.kind != table.kind) {
    throw ParseError(row, "header value kind does not match the requested schema");
  }

  const bool prices = table.kind == ValueKind::Prices;
  const int first_seq = prices ? 0 : 1;
  std::optional<int> n = schema.n_per_day;
  if (n && *n < 1) throw InputError("n_per_day must be positive");

  auto close_day = [&](std::size_t at_row) {
    if (table.days.empty()) return;
    const auto& day = table.days.back();
    const int count = static_cast<int>(day.x.size());
    if (!n) {
      n = prices ? count - 1 : count;
      if (*n < 1) throw ParseError(at_row, "date " + day.date + ": a day needs at least two prices");
    }
    const int expected = prices ? *n + 1 : *n;
    if (count != expected) {
      throw ParseError(at_row, "date " + day.date + ": expected " + std::to_string(expected) +
                                   " rows, found " + std::to_string(count));
    }
  };

  while (std::getline(in, line)) {
    ++row;
    const auto t = trim(line);
    if (t.empty()) continue;
    const auto cols = split(t);
    if (cols.size() != 4) throw ParseError(row, "expected 4 columns, found " + std::to_string(cols.size()));
    if (cols[0].empty()) throw ParseError(row, "empty date");
    const std::string date(cols[0]);
    const int seq = parse_int(cols[1], row);
    const double vx = parse_double(cols[2], row, prices ? "px" : "rx");
    const double vy = parse_double(cols[3], row, prices ? "py" : "ry");
    if (prices && (!(vx > 0.0) || !(vy > 0.0))) throw ParseError(row, "prices must be strictly positive");

    if (table.days.empty() || table.days.back().date != date) {
      if (!table.days.empty() && !(table.days.back().date < date)) {
        throw ParseError(row, "dates not strictly increasing: '" + date + "' after '" +
                                  table.days.back().date + "'");
      }
      close_day(row);
      table.days.push_back(PriceDay{date, {}, {}});
    }
    auto& day = table.days.back();
    const int expected_seq = first_seq + static_cast<int>(day.x.size());
    if (seq != expected_seq) {
      throw ParseError(row, "date " + date + ": expected seq " + std::to_string(expected_seq) +
                                ", found " + std::to_string(seq) + " (missing or unordered row)");
    }
    day.x.push_back(vx);
    day.y.push_back(vy);
  }
  close_day(row);
  if (table.days.empty()) throw ParseError(row, "no data rows");
  table.n_per_day = *n;
  return table;
}

PriceTable read_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return read_csv(in, schema);
}

void write_csv(std::ostream& out, const PriceTable& table) {
  for (const auto& c : table.comments) out << c << '\n';
  const bool prices = table.kind == ValueKind::Prices;
  out << (prices ? "date,seq,px,py\n" : "date,seq,rx,ry\n");
  const int first_seq = prices ? 0 : 1;
  for (const auto& day : table.days) {
    for (std::size_t s = 0; s < day.x.size(); ++s) {
      out << day.date << ',' << first_seq + static_cast<int>(s) << ',' << format_exact(day.x[s]) << ','
          << format_exact(day.y[s]) << '\n';
    }
  }
}

void write_csv(const std::filesystem::path& path, const PriceTable& table) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  write_csv(out, table);
  if (!out) throw InputError("write failed for " + path.string());
}

std::vector<std::string> weekday_dates(int count, const std::string& first) {
  using namespace std::chrono;
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  sys_days day = parse_iso_date(first);
  while (static_cast<int>(out.size()) < count) {
    const weekday wd{day};
    if (wd != Saturday && wd != Sunday) {
      const year_month_day ymd{day};
      char buf[16];
      std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                    static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
      out.emplace_back(buf);
    }
    day += days{1};
  }
  return out;
}

PriceTable table_from_grid(const ObservationGrid& grid, ValueKind kind,
                           const std::vector<std::string>& dates) {
  grid.validate();
  if (dates.size() != static_cast<std::size_t>(grid.days)) {
    throw InputError("table_from_grid: need one date per day");
  }
  PriceTable t;
  t.kind = kind;
  t.n_per_day = grid.n_per_day;
  const std::size_t n = static_cast<std::size_t>(grid.n_per_day);
  for (std::size_t d = 0; d < dates.size(); ++d) {
    PriceDay day{dates[d], {}, {}};
    const std::size_t base = d * n;
    if (kind == ValueKind::Prices) {
      for (std::size_t s = 0; s <= n; ++s) {
        day.x.push_back(std::exp(grid.x[base + s]));
        day.y.push_back(std::exp(grid.y[base + s]));
      }
    } else {
      for (std::size_t s = 1; s <= n; ++s) {
        day.x.push_back(grid.x[base + s] - grid.x[base + s - 1]);
        day.y.push_back(grid.y[base + s] - grid.y[base + s - 1]);
      }
    }
    t.days.push_back(std::move(day));
  }
  return t;
}

int WindowPlan::window_days() const {
  switch (scheme) {
    case Scheme::Weekly: return 5;
    case Scheme::Monthly: return 22;
    case Scheme::Quarterly: return 66;
    case Scheme::FixedDays: return fixed_days;
  }
  return fixed_days;
}

std::string WindowPlan::name() const {
  switch (scheme) {
    case Scheme::Weekly: return "week";
    case Scheme::Monthly: return calendar ? "calendar-month" : "month";
    case Scheme::Quarterly: return calendar ? "calendar-quarter" : "quarter";
    case Scheme::FixedDays: return "days-" + std::to_string(fixed_days);
  }
  return "window";
}

Segmentation segment(const std::vector<std::string>& dates, const WindowPlan& plan) {
  Segmentation seg;
  const int total = static_cast<int>(dates.size());
  const bool by_calendar =
      plan.calendar && (plan.scheme == WindowPlan::Scheme::Monthly || plan.scheme == WindowPlan::Scheme::Quarterly);

  if (by_calendar) {
    int start = 0;
    while (start < total) {
      const std::string key = calendar_key(dates[start], plan.scheme);
      int end = start + 1;
      while (end < total && calendar_key(dates[end], plan.scheme) == key) ++end;
      seg.windows.push_back(Window{start, end - start, dates[start], dates[end - 1]});
      start = end;
    }
    return seg;
  }

  const int len = plan.window_days();
  if (len < 1) throw ConfigError("window length must be at least one day");
  int start = 0;
  for (; start + len <= total; start += len) {
    seg.windows.push_back(Window{start, len, dates[start], dates[start + len - 1]});
  }
  seg.dropped_days = total - start;
  return seg;
}

WindowReport window_report(const PriceTable& table, const WindowPlan& plan, const TestConfig& cfg,
                           int threads) {
  const ObservationGrid grid = table.to_grid();
  cfg.validate(grid.n_per_day);
  const Segmentation seg = segment(table.dates(), plan);
  if (seg.windows.empty()) throw InputError("price table does not cover a single full window");

  WindowReport report;
  report.scheme = plan.name();
  report.dropped_days = seg.dropped_days;
  report.rows.resize(seg.windows.size());

  detail::parallel_for(seg.windows.size(), threads, [&](std::size_t i) {
    const Window& w = seg.windows[i];
    const ObservationGrid sub = grid.slice_days(w.first_day, w.day_count);
    TestOutcome outcome;
    try {
      outcome = run_test(sub, cfg);
    } catch (const InputError&) {
      outcome = failed_outcome(cfg, w.day_count, static_cast<long>(sub.increments()));
    }
    report.rows[i] = WindowRow{w, std::move(outcome)};
  });

  for (std::size_t l = 0; l < cfg.levels.size(); ++l) {
    SummaryRow s;
    s.level = cfg.levels[l];
    for (const auto& row : report.rows) {
      ++s.windows;
      if (!row.outcome.valid) continue;
      ++s.valid_windows;
      if (row.outcome.decisions[l].reject) ++s.rejected;
    }
    s.percent = s.valid_windows > 0 ? 100.0 * s.rejected / s.valid_windows : 0.0;
    report.summary.push_back(s);
  }
  return report;
}

void write_windows_csv(std::ostream& out, const WindowReport& report) {
  out << "window,start_date,end_date,days,beta_hat,ci_lo,ci_hi,statistic,p_value";
  if (!report.rows.empty()) {
    for (const auto& d : report.rows.front().outcome.decisions) out << ",reject_" << format_report_number(d.level);
  }
  out << ",skipped_blocks,valid\n";
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& row = report.rows[i];
    const auto& o = row.outcome;
    out << i + 1 << ',' << row.window.start_date << ',' << row.window.end_date << ',' << row.window.day_count
        << ',' << format_report_number(o.beta_used) << ',';
    if (o.pooled_beta) {
      out << format_report_number(o.pooled_beta->ci_lo) << ',' << format_report_number(o.pooled_beta->ci_hi);
    } else {
      out << ',';
    }
    out << ',' << format_report_number(o.statistic) << ',' << format_report_number(o.p_value);
    for (const auto& d : o.decisions) out << ',' << (d.reject ? 1 : 0);
    out << ',' << o.skipped_blocks << ',' << (o.valid ? "true" : "false") << '\n';
  }
}

void write_summary_csv(std::ostream& out, const WindowReport& report) {
  out << "scheme,level,windows,valid_windows,rejected,percent\n";
  for (const auto& s : report.summary) {
    out << report.scheme << ',' << format_report_number(s.level) << ',' << s.windows << ',' << s.valid_windows
        << ',' << s.rejected << ',' << format_report_number(s.percent) << '\n';
  }
}

void write_betas_csv(std::ostream& out, const WindowReport& report) {
  out << "date,beta,ci_lo,ci_hi\n";
  for (const auto& row : report.rows) {
    const auto& pb = row.outcome.pooled_beta;
    if (!pb) continue;
    out << row.window.start_date << ',' << format_report_number(pb->value) << ','
        << format_report_number(pb->ci_lo) << ',' << format_report_number(pb->ci_hi) << '\n';
  }
}

}  // namespace betaconst
