#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "lgmd/harness.hpp"

namespace lgmd {

using nlohmann::json;

namespace {

[[noreturn]] void config_fail(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

const std::map<std::string, Task>& task_names() {
  static const std::map<std::string, Task> m{
      {"denoise", Task::Denoise}, {"complete", Task::Complete}, {"cluster", Task::Cluster}, {"structure", Task::Structure}};
  return m;
}

const std::map<std::string, Method>& method_names() {
  static const std::map<std::string, Method> m{{"pca", Method::Pca},     {"pmf", Method::Pmf},
                                               {"dgrmd", Method::Dgrmd}, {"lgmd", Method::Lgmd},
                                               {"lgmd_plus", Method::LgmdPlus}, {"kmeans", Method::Kmeans}};
  return m;
}

double get_number(const json& v, const std::string& key) {
  if (!v.is_number()) config_fail("'" + key + "' must be a number");
  return v.get<double>();
}

long long get_integer(const json& v, const std::string& key) {
  if (!v.is_number_integer()) {
    if (v.is_number_float() && v.get<double>() == std::floor(v.get<double>())) return v.get<long long>();
    config_fail("'" + key + "' must be an integer");
  }
  return v.get<long long>();
}

std::vector<double> get_number_list(const json& v, const std::string& key) {
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array()) config_fail("'" + key + "' must be a number or a list of numbers");
  std::vector<double> out;
  for (const auto& e : v) out.push_back(get_number(e, key));
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const json&)>;

const std::map<std::string, Setter>& setters() {
  auto num = [](double ExperimentConfig::*field, const char* key) -> Setter {
    return [field, key](ExperimentConfig& c, const json& v) { c.*field = get_number(v, key); };
  };
  auto idx = [](Index ExperimentConfig::*field, const char* key) -> Setter {
    return [field, key](ExperimentConfig& c, const json& v) { c.*field = static_cast<Index>(get_integer(v, key)); };
  };
  auto integer = [](int ExperimentConfig::*field, const char* key) -> Setter {
    return [field, key](ExperimentConfig& c, const json& v) { c.*field = static_cast<int>(get_integer(v, key)); };
  };
  auto boolean = [](bool ExperimentConfig::*field, const char* key) -> Setter {
    return [field, key](ExperimentConfig& c, const json& v) {
      if (!v.is_boolean()) config_fail(std::string("'") + key + "' must be a boolean");
      c.*field = v.get<bool>();
    };
  };
  static const std::map<std::string, Setter> m{
      {"task",
       [](ExperimentConfig& c, const json& v) {
         if (!v.is_string()) config_fail("'task' must be a string");
         c.task = parse_task(v.get<std::string>());
       }},
      {"methods",
       [](ExperimentConfig& c, const json& v) {
         std::vector<Method> out;
         if (v.is_string()) {
           out.push_back(parse_method(v.get<std::string>()));
         } else if (v.is_array()) {
           for (const auto& e : v) {
             if (!e.is_string()) config_fail("'methods' entries must be strings");
             out.push_back(parse_method(e.get<std::string>()));
           }
         } else {
           config_fail("'methods' must be a list of strings");
         }
         c.methods = out;
       }},
      {"data_path",
       [](ExperimentConfig& c, const json& v) {
         if (v.is_null()) {
           c.data_path.reset();
         } else if (v.is_string()) {
           c.data_path = v.get<std::string>();
         } else {
           config_fail("'data_path' must be a string");
         }
       }},
      {"label_column", boolean(&ExperimentConfig::label_column, "label_column")},
      {"n", idx(&ExperimentConfig::n, "n")},
      {"p", idx(&ExperimentConfig::p, "p")},
      {"k", idx(&ExperimentConfig::k, "k")},
      {"edge_fraction", num(&ExperimentConfig::edge_fraction, "edge_fraction")},
      {"sweep", [](ExperimentConfig& c, const json& v) { c.sweep = get_number_list(v, "sweep"); }},
      {"repetitions", integer(&ExperimentConfig::repetitions, "repetitions")},
      {"lambda1_min", num(&ExperimentConfig::lambda1_min, "lambda1_min")},
      {"lambda1_max", num(&ExperimentConfig::lambda1_max, "lambda1_max")},
      {"lambda2_min", num(&ExperimentConfig::lambda2_min, "lambda2_min")},
      {"lambda2_max", num(&ExperimentConfig::lambda2_max, "lambda2_max")},
      {"lambda1", num(&ExperimentConfig::lambda1, "lambda1")},
      {"lambda2", num(&ExperimentConfig::lambda2, "lambda2")},
      {"tie_lambdas", boolean(&ExperimentConfig::tie_lambdas, "tie_lambdas")},
      {"eta1", num(&ExperimentConfig::eta1, "eta1")},
      {"eta2", num(&ExperimentConfig::eta2, "eta2")},
      {"tune_budget", integer(&ExperimentConfig::tune_budget, "tune_budget")},
      {"tune_strategy",
       [](ExperimentConfig& c, const json& v) {
         const std::string s = v.is_string() ? v.get<std::string>() : "";
         if (s == "random") {
           c.tune_strategy = TuneStrategy::Random;
         } else if (s == "surrogate") {
           c.tune_strategy = TuneStrategy::Surrogate;
         } else {
           config_fail("'tune_strategy' must be \"random\" or \"surrogate\"");
         }
       }},
      {"holdout_fraction", num(&ExperimentConfig::holdout_fraction, "holdout_fraction")},
      {"knn_neighbors", idx(&ExperimentConfig::knn_neighbors, "knn_neighbors")},
      {"top_fractions",
       [](ExperimentConfig& c, const json& v) { c.top_fractions = get_number_list(v, "top_fractions"); }},
      {"noise_ratio", num(&ExperimentConfig::noise_ratio, "noise_ratio")},
      {"cluster_dim", idx(&ExperimentConfig::cluster_dim, "cluster_dim")},
      {"within_edge_fraction", num(&ExperimentConfig::within_edge_fraction, "within_edge_fraction")},
      {"diagonal_offset", num(&ExperimentConfig::diagonal_offset, "diagonal_offset")},
      {"cluster_noise", num(&ExperimentConfig::cluster_noise, "cluster_noise")},
      {"max_outer", integer(&ExperimentConfig::max_outer, "max_outer")},
      {"max_inner", integer(&ExperimentConfig::max_inner, "max_inner")},
      {"tol_outer", num(&ExperimentConfig::tol_outer, "tol_outer")},
      {"tol_inner", num(&ExperimentConfig::tol_inner, "tol_inner")},
      {"workers", integer(&ExperimentConfig::workers, "workers")},
      {"seed",
       [](ExperimentConfig& c, const json& v) {
         if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
           config_fail("'seed' must be a non-negative integer");
         }
         c.seed = v.get<std::uint64_t>();
       }},
  };
  return m;
}

void apply_key(ExperimentConfig& cfg, const std::string& key, const json& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) config_fail("unknown config key '" + key + "'");
  it->second(cfg, value);
}

}  // namespace

std::string to_string(Task t) {
  for (const auto& [name, v] : task_names()) {
    if (v == t) return name;
  }
  return "?";
}

std::string to_string(Method m) {
  for (const auto& [name, v] : method_names()) {
    if (v == m) return name;
  }
  return "?";
}

Task parse_task(const std::string& s) {
  const auto it = task_names().find(s);
  if (it == task_names().end()) config_fail("unknown task '" + s + "'");
  return it->second;
}

Method parse_method(const std::string& s) {
  const auto it = method_names().find(s);
  if (it == method_names().end()) config_fail("unknown method '" + s + "'");
  return it->second;
}

void ExperimentConfig::validate() const {
  if (methods.empty()) config_fail("methods must not be empty");
  if (sweep.empty()) config_fail("sweep must not be empty");
  if (repetitions < 1) config_fail("repetitions must be at least 1");
  if (k < 1) config_fail("k must be at least 1");
  if (!data_path && (n < 2 || p < 2)) config_fail("n and p must be at least 2");
  if (!data_path && task != Task::Cluster && k > std::min(n, p)) config_fail("k exceeds min(n, p)");
  if (!(lambda1_min > 0 && lambda1_min < lambda1_max)) config_fail("need 0 < lambda1_min < lambda1_max");
  if (!(lambda2_min > 0 && lambda2_min < lambda2_max)) config_fail("need 0 < lambda2_min < lambda2_max");
  if (!(lambda1 >= 0 && lambda2 >= 0)) config_fail("lambda1 and lambda2 must be non-negative");
  if (!(eta1 >= 0 && eta2 >= 0)) config_fail("eta1 and eta2 must be non-negative");
  if (tune_budget < 0) config_fail("tune_budget must be non-negative");
  if (!(holdout_fraction > 0 && holdout_fraction < 1)) config_fail("holdout_fraction must lie in (0, 1)");
  if (!(edge_fraction > 0 && edge_fraction <= 1)) config_fail("edge_fraction must lie in (0, 1]");
  if (knn_neighbors < 1) config_fail("knn_neighbors must be at least 1");
  if (top_fractions.empty()) config_fail("top_fractions must not be empty");
  for (double f : top_fractions) {
    if (!(f > 0 && f <= 1)) config_fail("top_fractions must lie in (0, 1]");
  }
  if (!(noise_ratio >= 0) || !(cluster_noise >= 0)) config_fail("noise ratios must be non-negative");
  if (max_outer < 1 || max_inner < 1) config_fail("iteration limits must be positive");
  if (!(tol_outer > 0 && tol_inner > 0)) config_fail("tolerances must be positive");
  if (workers < 0) config_fail("workers must be non-negative");
  for (double s : sweep) {
    if (!std::isfinite(s)) config_fail("sweep values must be finite");
    switch (task) {
      case Task::Denoise:
      case Task::Structure:
        if (s < 0) config_fail("noise ratios must be non-negative");
        break;
      case Task::Complete:
        if (!(s > 0 && s <= 1)) config_fail("keep fractions must lie in (0, 1]");
        break;
      case Task::Cluster:
        if (s < 2 || s != std::floor(s)) config_fail("cluster counts must be integers >= 2");
        break;
    }
  }
  if (task == Task::Cluster && !data_path && cluster_dim < 1) config_fail("cluster_dim must be positive");
  if (task == Task::Cluster && data_path && !label_column) config_fail("cluster files need label_column = true");
}

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    config_fail(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) config_fail("config must be a JSON object");
  ExperimentConfig cfg;
  for (const auto& [key, value] : j.items()) apply_key(cfg, key, value);
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) config_fail("cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) config_fail("override must look like key=value: '" + assignment + "'");
  const std::string key = assignment.substr(0, eq), raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;  // bare string
  }
  apply_key(cfg, key, value);
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["task"] = to_string(c.task);
  j["methods"] = json::array();
  for (Method m : c.methods) j["methods"].push_back(to_string(m));
  j["data_path"] = c.data_path ? json(*c.data_path) : json(nullptr);
  j["label_column"] = c.label_column;
  j["n"] = c.n;
  j["p"] = c.p;
  j["k"] = c.k;
  j["edge_fraction"] = c.edge_fraction;
  j["sweep"] = c.sweep;
  j["repetitions"] = c.repetitions;
  j["lambda1_min"] = c.lambda1_min;
  j["lambda1_max"] = c.lambda1_max;
  j["lambda2_min"] = c.lambda2_min;
  j["lambda2_max"] = c.lambda2_max;
  j["lambda1"] = c.lambda1;
  j["lambda2"] = c.lambda2;
  j["tie_lambdas"] = c.tie_lambdas;
  j["eta1"] = c.eta1;
  j["eta2"] = c.eta2;
  j["tune_budget"] = c.tune_budget;
  j["tune_strategy"] = c.tune_strategy == TuneStrategy::Random ? "random" : "surrogate";
  j["holdout_fraction"] = c.holdout_fraction;
  j["knn_neighbors"] = c.knn_neighbors;
  j["top_fractions"] = c.top_fractions;
  j["noise_ratio"] = c.noise_ratio;
  j["cluster_dim"] = c.cluster_dim;
  j["within_edge_fraction"] = c.within_edge_fraction;
  j["diagonal_offset"] = c.diagonal_offset;
  j["cluster_noise"] = c.cluster_noise;
  j["max_outer"] = c.max_outer;
  j["max_inner"] = c.max_inner;
  j["tol_outer"] = c.tol_outer;
  j["tol_inner"] = c.tol_inner;
  j["workers"] = c.workers;
  j["seed"] = c.seed;
  return j.dump(2);
}

Hyperparams make_hyperparams(const ExperimentConfig& cfg, double lambda1, double lambda2) {
  Hyperparams h;
  h.k = cfg.k;
  h.lambda1 = lambda1;
  h.lambda2 = lambda2;
  h.eta1 = cfg.eta1;
  h.eta2 = cfg.eta2;
  h.max_outer = cfg.max_outer;
  h.max_inner = cfg.max_inner;
  h.tol_outer = cfg.tol_outer;
  h.tol_inner = cfg.tol_inner;
  return h;
}

}  // namespace lgmd
