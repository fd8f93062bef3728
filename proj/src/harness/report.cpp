#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "lgmd/harness.hpp"

namespace lgmd {

using nlohmann::json;

namespace {

std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string opt(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::optional<double> mean_abs(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s / static_cast<double>(v.size());
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names{"e1", "e2", "e3", "e4", "e5", "e6", "e7", "e8", "accuracy"};
  return names;
}

std::optional<double> row_value(const ExperimentRow& row, const std::string& name) {
  const MetricReport& m = row.metrics;
  if (name == "e1") return m.e1;
  if (name == "e2") return m.e2;
  // E3/E4 collapse to the mean absolute pairwise correlation.
  if (name == "e3") return mean_abs(m.e3);
  if (name == "e4") return mean_abs(m.e4);
  if (name == "e5") return m.e5;
  if (name == "e6") return m.e6;
  if (name == "e7") return m.e7;
  if (name == "e8") return m.e8;
  if (name == "accuracy") return m.clustering_accuracy;
  if (name == "seconds") return row.seconds;
  const auto it = row.extra.find(name);
  if (it != row.extra.end()) return it->second;
  return std::nullopt;
}

std::vector<AggregateRow> aggregate(const std::vector<ExperimentRow>& rows) {
  // Group keys in first-appearance order so the output follows the row order.
  std::vector<std::pair<Method, double>> groups;
  for (const auto& r : rows) {
    const std::pair<Method, double> key{r.method, r.sweep_value};
    if (std::find(groups.begin(), groups.end(), key) == groups.end()) groups.push_back(key);
  }
  std::vector<AggregateRow> out;
  for (const auto& [method, sweep] : groups) {
    std::vector<std::string> names = metric_names();
    names.push_back("seconds");
    std::set<std::string> extras;
    for (const auto& r : rows) {
      if (r.method == method && r.sweep_value == sweep && r.ok()) {
        for (const auto& [k, v] : r.extra) extras.insert(k);
      }
    }
    names.insert(names.end(), extras.begin(), extras.end());
    for (const auto& name : names) {
      std::vector<double> vals;
      for (const auto& r : rows) {
        if (r.method != method || r.sweep_value != sweep || !r.ok()) continue;
        if (const auto v = row_value(r, name)) vals.push_back(*v);
      }
      if (vals.empty()) continue;
      AggregateRow a;
      a.method = method;
      a.sweep_value = sweep;
      a.metric = name;
      a.count = static_cast<int>(vals.size());
      double s = 0.0;
      for (double v : vals) s += v;
      a.mean = s / static_cast<double>(vals.size());
      if (vals.size() > 1) {
        double ss = 0.0;
        for (double v : vals) ss += (v - a.mean) * (v - a.mean);
        a.standard_error = std::sqrt(ss / static_cast<double>(vals.size() - 1)) / std::sqrt(static_cast<double>(vals.size()));
      }
      out.push_back(a);
    }
  }
  return out;
}

std::string report_to_csv(const ExperimentReport& r) {
  std::string out = "method,task,sweep_value,repetition,status,seconds,lambda1,lambda2";
  for (const auto& m : metric_names()) out += "," + m;
  out += ",extra\n";
  for (const auto& row : r.rows) {
    out += to_string(row.method) + "," + to_string(row.task) + "," + num(row.sweep_value) + "," +
           std::to_string(row.repetition) + "," + csv_escape(row.status) + "," + num(row.seconds) + "," +
           num(row.lambda1) + "," + num(row.lambda2);
    for (const auto& m : metric_names()) out += "," + opt(row_value(row, m));
    std::string extra;
    for (const auto& [k, v] : row.extra) extra += (extra.empty() ? "" : ";") + k + "=" + num(v);
    out += "," + csv_escape(extra) + "\n";
  }
  // Aggregates: one "mean" and one "se" line per (method, sweep value).
  std::vector<std::pair<Method, double>> groups;
  for (const auto& a : r.aggregates) {
    const std::pair<Method, double> key{a.method, a.sweep_value};
    if (std::find(groups.begin(), groups.end(), key) == groups.end()) groups.push_back(key);
  }
  for (const auto& [method, sweep] : groups) {
    for (const bool se : {false, true}) {
      std::map<std::string, double> vals;
      for (const auto& a : r.aggregates) {
        if (a.method == method && a.sweep_value == sweep) vals[a.metric] = se ? a.standard_error : a.mean;
      }
      auto cell = [&](const std::string& k) { return vals.count(k) ? num(vals.at(k)) : std::string(); };
      out += to_string(method) + "," + to_string(r.task) + "," + num(sweep) + "," + (se ? "se" : "mean") +
             ",aggregate," + cell("seconds") + ",,";
      for (const auto& m : metric_names()) out += "," + cell(m);
      std::string extra;
      for (const auto& [k, v] : vals) {
        if (k == "seconds" || std::find(metric_names().begin(), metric_names().end(), k) != metric_names().end()) continue;
        extra += (extra.empty() ? "" : ";") + k + "=" + num(v);
      }
      out += "," + csv_escape(extra) + "\n";
    }
  }
  return out;
}

std::string report_to_json(const ExperimentReport& r) {
  json j;
  j["schema_version"] = "1";
  j["task"] = to_string(r.task);
  j["rows"] = json::array();
  for (const auto& row : r.rows) {
    json jr;
    jr["method"] = to_string(row.method);
    jr["task"] = to_string(row.task);
    jr["sweep_value"] = row.sweep_value;
    jr["repetition"] = row.repetition;
    jr["status"] = row.status;
    jr["seconds"] = row.seconds;
    jr["lambda1"] = row.lambda1;
    jr["lambda2"] = row.lambda2;
    const MetricReport& m = row.metrics;
    jr["e1"] = opt_json(m.e1);
    jr["e2"] = opt_json(m.e2);
    jr["e3"] = m.e3;
    jr["e4"] = m.e4;
    jr["e5"] = opt_json(m.e5);
    jr["e6"] = opt_json(m.e6);
    jr["e7"] = opt_json(m.e7);
    jr["e8"] = opt_json(m.e8);
    jr["accuracy"] = opt_json(m.clustering_accuracy);
    jr["context"] = m.context;
    jr["extra"] = row.extra;
    j["rows"].push_back(jr);
  }
  j["aggregates"] = json::array();
  for (const auto& a : r.aggregates) {
    j["aggregates"].push_back({{"method", to_string(a.method)},
                               {"sweep_value", a.sweep_value},
                               {"metric", a.metric},
                               {"count", a.count},
                               {"mean", a.mean},
                               {"standard_error", a.standard_error}});
  }
  return j.dump(2);
}

ExperimentReport report_from_json(const std::string& text) {
  ExperimentReport r;
  try {
    const json j = json::parse(text);
    if (j.value("schema_version", "") != "1") throw Error(ErrorCode::ParseError, "unsupported report schema_version");
    r.task = parse_task(j.at("task").get<std::string>());
    for (const auto& jr : j.at("rows")) {
      ExperimentRow row;
      row.method = parse_method(jr.at("method").get<std::string>());
      row.task = parse_task(jr.at("task").get<std::string>());
      row.sweep_value = jr.at("sweep_value").get<double>();
      row.repetition = jr.at("repetition").get<int>();
      row.status = jr.at("status").get<std::string>();
      row.seconds = jr.at("seconds").get<double>();
      row.lambda1 = jr.at("lambda1").get<double>();
      row.lambda2 = jr.at("lambda2").get<double>();
      MetricReport& m = row.metrics;
      m.e1 = opt_from(jr, "e1");
      m.e2 = opt_from(jr, "e2");
      m.e3 = jr.at("e3").get<std::vector<double>>();
      m.e4 = jr.at("e4").get<std::vector<double>>();
      m.e5 = opt_from(jr, "e5");
      m.e6 = opt_from(jr, "e6");
      m.e7 = opt_from(jr, "e7");
      m.e8 = opt_from(jr, "e8");
      m.clustering_accuracy = opt_from(jr, "accuracy");
      m.context = jr.value("context", 0.0);
      row.extra = jr.at("extra").get<std::map<std::string, double>>();
      r.rows.push_back(std::move(row));
    }
    for (const auto& ja : j.at("aggregates")) {
      AggregateRow a;
      a.method = parse_method(ja.at("method").get<std::string>());
      a.sweep_value = ja.at("sweep_value").get<double>();
      a.metric = ja.at("metric").get<std::string>();
      a.count = ja.at("count").get<int>();
      a.mean = ja.at("mean").get<double>();
      a.standard_error = ja.at("standard_error").get<double>();
      r.aggregates.push_back(a);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed report: ") + e.what());
  }
  return r;
}

void emit_report(const ExperimentReport& r, const std::string& path, const std::string& format) {
  std::string text;
  if (format == "csv") {
    text = report_to_csv(r);
  } else if (format == "json") {
    text = report_to_json(r);
  } else {
    throw Error(ErrorCode::ConfigError, "unknown report format '" + format + "'");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

}  // namespace lgmd
