#pragma once

// Delivery KPIs from a run log:
//   DT   total driven time, seconds
//   DD   total driven distance, meters
//   TD   total delay, sum of max(0, delivered_at - deadline), seconds
//   PD   orders delivered after their deadline
//   P10D orders delivered more than 600 s after their deadline
// Legs count toward the day their start tick falls on; orders toward the day
// they were placed.

#include <map>
#include <set>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cloudkitchen/dataset.hpp"
#include "cloudkitchen/simulator.hpp"
#include "cloudkitchen/time.hpp"

namespace ck {

inline constexpr int kKpiSchemaVersion = 1;
inline constexpr Seconds kLateThreshold = 600;

struct KpiTotals {
  std::int64_t dt = 0;
  std::int64_t dd = 0;
  std::int64_t td = 0;
  std::int64_t pd = 0;
  std::int64_t p10d = 0;
  std::int64_t orders = 0;
  std::int64_t delivered = 0;
  std::int64_t undeliverable = 0;

  KpiTotals& operator+=(const KpiTotals& o) {
    dt += o.dt;
    dd += o.dd;
    td += o.td;
    pd += o.pd;
    p10d += o.p10d;
    orders += o.orders;
    delivered += o.delivered;
    undeliverable += o.undeliverable;
    return *this;
  }

  friend bool operator==(const KpiTotals&, const KpiTotals&) = default;
};

struct DayKpi {
  std::string date;
  KpiTotals totals;
  bool failed = false;

  friend bool operator==(const DayKpi&, const DayKpi&) = default;
};

struct KpiReport {
  std::string mode;
  KpiTotals totals;
  std::vector<DayKpi> days;
  std::vector<std::string> failed_days;

  const DayKpi* find_day(std::string_view date) const {
    for (const auto& d : days) {
      if (d.date == date) return &d;
    }
    return nullptr;
  }

  friend bool operator==(const KpiReport&, const KpiReport&) = default;
};

class KpiError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Folds log entries into per-day KPIs one at a time.
class KpiAccumulator {
public:
  explicit KpiAccumulator(const Dataset& ds) {
    for (const auto& h : ds.orders) {
      by_id_.emplace(h.order.id, &h.order);
      per_day_[format_date(h.order.placed_at)].orders += 1;
    }
  }

  void add(const LogEntry& e) {
    if (e.entity_kind == "run" && e.transition == "start") {
      origin_ = parse_timestamp(e.detail.at("origin").get<std::string>());
      tick_seconds_ = e.detail.value("tick_seconds", kTickSeconds);
      mode_ = e.detail.value("mode", std::string());
      started_ = true;
      return;
    }
    if (!started_) throw KpiError("run log does not start with a run header");
    const Seconds at = origin_ + e.tick * tick_seconds_;
    if (e.entity_kind == "leg") {
      auto& d = per_day_[format_date(at)];
      d.dt += e.detail.at("seconds").get<std::int64_t>();
      d.dd += e.detail.at("meters").get<std::int64_t>();
    } else if (e.entity_kind == "order" && (e.transition == "delivered" || e.transition == "undeliverable")) {
      auto it = by_id_.find(e.entity_id);
      if (it == by_id_.end()) throw KpiError("run log mentions unknown order '" + e.entity_id + "'");
      auto& d = per_day_[format_date(it->second->placed_at)];
      if (e.transition == "undeliverable") {
        ++d.undeliverable;
        return;
      }
      ++d.delivered;
      const Seconds late = at - it->second->deadline;
      if (late > 0) {
        d.td += late;
        ++d.pd;
      }
      if (late > kLateThreshold) ++d.p10d;
    } else if (e.entity_kind == "day" && e.transition == "failed") {
      failed_.insert(e.entity_id);
    }
  }

  KpiReport report() const {
    KpiReport rep;
    rep.mode = mode_;
    for (const auto& [date, t] : per_day_) {
      rep.days.push_back(DayKpi{date, t, failed_.contains(date)});
      rep.totals += t;
    }
    rep.failed_days.assign(failed_.begin(), failed_.end());
    return rep;
  }

private:
  std::map<std::string, const Order*> by_id_;
  std::map<std::string, KpiTotals> per_day_;
  std::set<std::string> failed_;
  Seconds origin_ = 0;
  Seconds tick_seconds_ = kTickSeconds;
  std::string mode_;
  bool started_ = false;
};

inline KpiReport compute_kpis(const RunLog& log, const Dataset& ds) {
  if (log.entries.empty() || log.entries.front().entity_kind != "run") {
    throw KpiError("run log does not start with a run header");
  }
  KpiAccumulator acc(ds);
  for (const auto& e : log.entries) acc.add(e);
  return acc.report();
}

inline nlohmann::ordered_json totals_json(const KpiTotals& t) {
  nlohmann::ordered_json j;
  j["DT"] = t.dt;
  j["DD"] = t.dd;
  j["TD"] = t.td;
  j["PD"] = t.pd;
  j["P10D"] = t.p10d;
  j["orders"] = t.orders;
  j["delivered"] = t.delivered;
  j["undeliverable"] = t.undeliverable;
  return j;
}

inline KpiTotals totals_from_json(const nlohmann::json& j) {
  KpiTotals t;
  t.dt = j.at("DT");
  t.dd = j.at("DD");
  t.td = j.at("TD");
  t.pd = j.at("PD");
  t.p10d = j.at("P10D");
  t.orders = j.value("orders", std::int64_t{0});
  t.delivered = j.value("delivered", std::int64_t{0});
  t.undeliverable = j.value("undeliverable", std::int64_t{0});
  return t;
}

inline nlohmann::ordered_json to_json(const KpiReport& r) {
  nlohmann::ordered_json j;
  j["schema_version"] = kKpiSchemaVersion;
  j["mode"] = r.mode;
  j["totals"] = totals_json(r.totals);
  j["failed_days"] = r.failed_days;
  j["days"] = nlohmann::ordered_json::array();
  for (const auto& d : r.days) {
    auto e = totals_json(d.totals);
    e["date"] = d.date;
    e["failed"] = d.failed;
    j["days"].push_back(std::move(e));
  }
  return j;
}

inline KpiReport kpi_report_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema_version").get<int>() != kKpiSchemaVersion) {
      throw KpiError("unsupported KPI report schema_version " + j.at("schema_version").dump());
    }
    KpiReport r;
    r.mode = j.value("mode", std::string());
    r.totals = totals_from_json(j.at("totals"));
    r.failed_days = j.value("failed_days", std::vector<std::string>{});
    for (const auto& d : j.at("days")) {
      r.days.push_back(DayKpi{d.at("date").get<std::string>(), totals_from_json(d), d.value("failed", false)});
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw KpiError(std::string("malformed KPI report: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Comparison

struct MetricRatio {
  std::string metric;
  std::int64_t baseline = 0;
  std::int64_t optimized = 0;
  /// Absent when the baseline value is zero.
  std::optional<double> ratio;
};

struct DayP10d {
  std::string date;
  std::int64_t baseline = 0;
  std::int64_t optimized = 0;
};

struct Comparison {
  std::vector<MetricRatio> metrics;
  std::vector<DayP10d> p10d_series;
  /// Days left out because a run failed on them.
  std::vector<std::string> excluded_days;
  std::vector<std::string> notes;

  const MetricRatio* find(std::string_view metric) const {
    for (const auto& m : metrics) {
      if (m.metric == metric) return &m;
    }
    return nullptr;
  }
};

inline Comparison compare(const KpiReport& optimized, const KpiReport& baseline) {
  Comparison c;
  std::set<std::string> excluded(optimized.failed_days.begin(), optimized.failed_days.end());
  excluded.insert(baseline.failed_days.begin(), baseline.failed_days.end());
  c.excluded_days.assign(excluded.begin(), excluded.end());

  std::map<std::string, std::pair<KpiTotals, KpiTotals>> days;  // baseline, optimized
  for (const auto& d : baseline.days) days[d.date].first = d.totals;
  for (const auto& d : optimized.days) days[d.date].second = d.totals;
  KpiTotals base_sum, opt_sum;
  for (const auto& [date, pair] : days) {
    if (excluded.contains(date)) continue;
    base_sum += pair.first;
    opt_sum += pair.second;
    c.p10d_series.push_back(DayP10d{date, pair.first.p10d, pair.second.p10d});
  }
  auto add = [&](const char* name, std::int64_t b, std::int64_t o) {
    MetricRatio m{name, b, o, std::nullopt};
    if (b > 0) {
      m.ratio = static_cast<double>(o) / static_cast<double>(b);
    } else {
      c.notes.push_back(std::string(name) + " ratio omitted: baseline value is zero");
    }
    c.metrics.push_back(std::move(m));
  };
  add("DT", base_sum.dt, opt_sum.dt);
  add("DD", base_sum.dd, opt_sum.dd);
  add("TD", base_sum.td, opt_sum.td);
  add("PD", base_sum.pd, opt_sum.pd);
  add("P10D", base_sum.p10d, opt_sum.p10d);
  if (!excluded.empty()) c.notes.push_back(std::to_string(excluded.size()) + " failed day(s) excluded from totals");
  return c;
}

inline nlohmann::ordered_json to_json(const Comparison& c) {
  nlohmann::ordered_json j;
  j["schema_version"] = kKpiSchemaVersion;
  j["metrics"] = nlohmann::ordered_json::array();
  for (const auto& m : c.metrics) {
    nlohmann::ordered_json e;
    e["metric"] = m.metric;
    e["baseline"] = m.baseline;
    e["optimized"] = m.optimized;
    e["ratio"] = m.ratio ? nlohmann::ordered_json(*m.ratio) : nlohmann::ordered_json(nullptr);
    j["metrics"].push_back(std::move(e));
  }
  j["p10d_per_day"] = nlohmann::ordered_json::array();
  for (const auto& d : c.p10d_series) {
    j["p10d_per_day"].push_back(
        nlohmann::ordered_json{{"date", d.date}, {"baseline", d.baseline}, {"optimized", d.optimized}});
  }
  j["excluded_days"] = c.excluded_days;
  j["notes"] = c.notes;
  return j;
}

namespace detail {
inline std::string format_ratio(double r) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(4);
  s << r;
  return s.str();
}
}  // namespace detail

/// Header: schema_version,metric,day,baseline,optimized,ratio. Totals use
/// day "all"; the per-day P10D series follows.
inline std::string to_csv(const Comparison& c) {
  std::ostringstream out;
  out << "schema_version,metric,day,baseline,optimized,ratio\n";
  for (const auto& m : c.metrics) {
    out << kKpiSchemaVersion << ',' << m.metric << ",all," << m.baseline << ',' << m.optimized << ','
        << (m.ratio ? detail::format_ratio(*m.ratio) : "") << '\n';
  }
  for (const auto& d : c.p10d_series) {
    out << kKpiSchemaVersion << ",P10D," << d.date << ',' << d.baseline << ',' << d.optimized << ',';
    if (d.baseline > 0) out << detail::format_ratio(static_cast<double>(d.optimized) / static_cast<double>(d.baseline));
    out << '\n';
  }
  return out.str();
}

}  // namespace ck
