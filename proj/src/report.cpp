#include "spinex/report.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace spinex {

using nlohmann::json;

namespace {

AggregateStat stat_of(const std::vector<MetricRow>& rows, double MetricRow::* field) {
  AggregateStat s;
  const std::size_t n = rows.size();
  if (n == 0) return s;
  double sum = 0.0;
  for (const auto& r : rows) sum += r.*field;
  s.mean = sum / static_cast<double>(n);
  if (n > 1) {
    double ss = 0.0;
    for (const auto& r : rows) {
      const double d = r.*field - s.mean;
      ss += d * d;
    }
    s.stddev = std::sqrt(ss / static_cast<double>(n - 1));
  }
  return s;
}

json stat_json(const AggregateStat& s) {
  return json{{"mean", s.mean}, {"std", s.stddev}};
}

AggregateStat stat_from_json(const json& j) {
  return {j.at("mean").get<double>(), j.at("std").get<double>()};
}

} // namespace

MetricAggregates MetricReport::compute_aggregates(const std::vector<MetricRow>& rows) {
  MetricAggregates a;
  a.entropy = stat_of(rows, &MetricRow::entropy);
  a.brisque = stat_of(rows, &MetricRow::brisque);
  a.lpc_si = stat_of(rows, &MetricRow::lpc_si);
  return a;
}

std::vector<double> MetricReport::column(const std::string& metric) const {
  std::vector<double> out;
  out.reserve(per_image.size());
  for (const auto& r : per_image) {
    if (metric == "entropy") {
      out.push_back(r.entropy);
    } else if (metric == "brisque") {
      out.push_back(r.brisque);
    } else if (metric == "lpc_si") {
      out.push_back(r.lpc_si);
    } else {
      throw std::invalid_argument("unknown metric: " + metric);
    }
  }
  return out;
}

std::string MetricReport::to_json_string() const {
  json j;
  j["per_image"] = json::array();
  for (const auto& r : per_image) {
    j["per_image"].push_back(
        {{"id", r.id}, {"entropy", r.entropy}, {"brisque", r.brisque}, {"lpc_si", r.lpc_si}});
  }
  j["aggregate"] = {{"entropy", stat_json(aggregate.entropy)},
                    {"brisque", stat_json(aggregate.brisque)},
                    {"lpc_si", stat_json(aggregate.lpc_si)}};
  j["comparisons"] = json::array();
  for (const auto& c : comparisons) {
    j["comparisons"].push_back({{"pair", c.pair}, {"metric", c.metric}, {"p_value", c.p_value}});
  }
  return j.dump(1);
}

void MetricReport::write_json(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report: " + path);
  out << to_json_string() << "\n";
}

MetricReport MetricReport::read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("report not found: " + path);
  json j;
  in >> j;
  MetricReport r;
  for (const auto& row : j.at("per_image")) {
    r.per_image.push_back({row.at("id").get<std::string>(), row.at("entropy").get<double>(),
                           row.at("brisque").get<double>(), row.at("lpc_si").get<double>()});
  }
  r.aggregate.entropy = stat_from_json(j.at("aggregate").at("entropy"));
  r.aggregate.brisque = stat_from_json(j.at("aggregate").at("brisque"));
  r.aggregate.lpc_si = stat_from_json(j.at("aggregate").at("lpc_si"));
  for (const auto& c : j.at("comparisons")) {
    r.comparisons.push_back({c.at("pair").get<std::string>(), c.at("metric").get<std::string>(),
                             c.at("p_value").get<double>()});
  }
  return r;
}

void write_reports_csv(const std::string& path,
                       const std::vector<std::pair<std::string, MetricReport>>& reports) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write CSV: " + path);
  out << "method,entropy_mean,entropy_std,brisque_mean,brisque_std,lpc_si_mean,lpc_si_std\n";
  char buf[256];
  for (const auto& [name, rep] : reports) {
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", name.c_str(),
                  rep.aggregate.entropy.mean, rep.aggregate.entropy.stddev,
                  rep.aggregate.brisque.mean, rep.aggregate.brisque.stddev,
                  rep.aggregate.lpc_si.mean, rep.aggregate.lpc_si.stddev);
    out << buf;
  }
}

} // namespace spinex
