#pragma once

#include <string>
#include <vector>

namespace spinex {

struct MetricRow {
  std::string id;
  double entropy = 0.0;
  double brisque = 0.0;
  double lpc_si = 0.0;
};

struct AggregateStat {
  double mean = 0.0;
  double stddev = 0.0; ///< sample standard deviation
};

struct MetricAggregates {
  AggregateStat entropy, brisque, lpc_si;
};

struct MetricComparison {
  std::string pair;   ///< e.g. "original-vs-enhanced"
  std::string metric; ///< entropy | brisque | lpc_si
  double p_value = 1.0;
};

/// Per-image metric rows plus aggregates and optional paired comparisons.
/// Aggregates are always recomputable from the rows; finalize() does so
/// with a fixed accumulation order.
struct MetricReport {
  std::vector<MetricRow> per_image;
  MetricAggregates aggregate;
  std::vector<MetricComparison> comparisons;

  static MetricAggregates compute_aggregates(const std::vector<MetricRow>& rows);
  void finalize() { aggregate = compute_aggregates(per_image); }

  std::string to_json_string() const;
  void write_json(const std::string& path) const;
  static MetricReport read_json(const std::string& path);

  std::vector<double> column(const std::string& metric) const;
};

/// Table-shaped CSV: one row per method with mean and std per metric.
void write_reports_csv(const std::string& path,
                       const std::vector<std::pair<std::string, MetricReport>>& reports);

} // namespace spinex
