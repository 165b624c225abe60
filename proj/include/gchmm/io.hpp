#pragma once

// On-disk formats: header-row CSV for tables, JSON for parameters, configs,
// metrics and manifests. Doubles are written with 17 significant digits so
// every file reads back into an equal object.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "gchmm/contact_sim.hpp"
#include "gchmm/core_model.hpp"
#include "gchmm/errors.hpp"
#include "gchmm/evaluation.hpp"
#include "gchmm/experiments.hpp"
#include "gchmm/inference.hpp"

namespace gchmm::io {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Plain file helpers
// ---------------------------------------------------------------------------

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
  if (!out) throw DataError("write failed for " + path.string());
}

inline json read_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

inline void write_json(const fs::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

// Parses a CSV file and checks its header against `expected`.
inline CsvTable read_csv(const fs::path& path, const std::vector<std::string>& expected) {
  const std::string text = read_file(path);
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (first) {
      table.header = std::move(fields);
      if (table.header != expected) {
        std::string want;
        for (const auto& h : expected) want += (want.empty() ? "" : ",") + h;
        throw DataError(path.string() + ": expected header '" + want + "'");
      }
      first = false;
      continue;
    }
    if (fields.size() != expected.size())
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": wrong number of fields");
    table.rows.push_back(std::move(fields));
  }
  if (first) throw DataError(path.string() + ": empty file");
  return table;
}

template <class T>
T parse_number(const std::string& s, const fs::path& where) {
  T v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw DataError(where.string() + ": cannot parse '" + s + "' as a number");
  return v;
}

// ---------------------------------------------------------------------------
// Dataset tables
// ---------------------------------------------------------------------------

struct DatasetShape {
  Index num_individuals = 0;
  Index num_families = 0;
  Index horizon = 0;
  friend bool operator==(const DatasetShape&, const DatasetShape&) = default;
};

inline void write_shape(const fs::path& path, const DatasetShape& s) {
  write_json(path, json{{"num_individuals", s.num_individuals}, {"num_families", s.num_families}, {"horizon", s.horizon}});
}

inline DatasetShape read_shape(const fs::path& path) {
  const json j = read_json(path);
  try {
    DatasetShape s{j.at("num_individuals").get<Index>(), j.at("num_families").get<Index>(), j.at("horizon").get<Index>()};
    if (s.num_individuals <= 0 || s.num_families <= 0 || s.horizon <= 0)
      throw DataError(path.string() + ": shape entries must be positive");
    return s;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

inline std::string families_csv(const FamilyPartition& families) {
  std::string out = "i,f\n";
  for (Index i = 0; i < families.num_individuals(); ++i)
    out += std::to_string(i) + ',' + std::to_string(families.family_of(i)) + '\n';
  return out;
}

inline FamilyPartition read_families(const fs::path& path, const DatasetShape& shape) {
  const CsvTable t = read_csv(path, {"i", "f"});
  std::vector<std::vector<Index>> fam(static_cast<std::size_t>(shape.num_families));
  if (static_cast<Index>(t.rows.size()) != shape.num_individuals)
    throw DataError(path.string() + ": expected one row per individual");
  for (const auto& r : t.rows) {
    const auto i = parse_number<Index>(r[0], path), f = parse_number<Index>(r[1], path);
    if (f < 0 || f >= shape.num_families) throw DataError(path.string() + ": family index out of range");
    fam[f].push_back(i);
  }
  return FamilyPartition(shape.num_individuals, std::move(fam));
}

inline std::string contacts_csv(const TemporalContactNetwork& network) {
  std::string out = "t,i,j\n";
  for (Index t = 0; t < network.num_steps(); ++t)
    for (const Edge& e : network.edges(t))
      out += std::to_string(t) + ',' + std::to_string(e.i) + ',' + std::to_string(e.j) + '\n';
  return out;
}

inline TemporalContactNetwork read_contacts(const fs::path& path, const DatasetShape& shape) {
  const CsvTable t = read_csv(path, {"t", "i", "j"});
  std::vector<std::vector<Edge>> steps(static_cast<std::size_t>(shape.horizon));
  for (const auto& r : t.rows) {
    const auto s = parse_number<Index>(r[0], path);
    const Edge e{parse_number<Index>(r[1], path), parse_number<Index>(r[2], path)};
    if (s < 0 || s >= shape.horizon) throw DataError(path.string() + ": contact step outside 0..T-1");
    if (!(e.i < e.j)) throw DataError(path.string() + ": contacts must satisfy i < j");
    steps[s].push_back(e);
  }
  return TemporalContactNetwork(shape.num_individuals, steps);
}

inline std::string states_csv(const HealthStateMatrix& x) {
  std::string out = "i,t,x\n";
  for (Index i = 0; i < x.num_individuals(); ++i)
    for (Index t = 0; t <= x.horizon(); ++t)
      out += std::to_string(i) + ',' + std::to_string(t) + ',' + std::to_string(x(i, t)) + '\n';
  return out;
}

inline HealthStateMatrix read_states(const fs::path& path, const DatasetShape& shape) {
  const CsvTable tab = read_csv(path, {"i", "t", "x"});
  HealthStateMatrix x(shape.num_individuals, shape.horizon);
  if (tab.rows.size() != static_cast<std::size_t>(shape.num_individuals) * (shape.horizon + 1))
    throw DataError(path.string() + ": expected I*(T+1) rows");
  for (const auto& r : tab.rows) {
    const auto i = parse_number<Index>(r[0], path), t = parse_number<Index>(r[1], path);
    const auto v = parse_number<int>(r[2], path);
    if (i < 0 || i >= shape.num_individuals || t < 0 || t > shape.horizon || (v != 0 && v != 1))
      throw DataError(path.string() + ": state entry out of range");
    x.set(i, t, static_cast<std::uint8_t>(v));
  }
  return x;
}

inline std::string observations_csv(const ObservationSet& y) {
  std::string out = "f,t,result\n";
  for (Index f = 0; f < y.num_families(); ++f)
    for (Index t = 0; t <= y.horizon(); ++t)
      if (y.tested(f, t)) out += std::to_string(f) + ',' + std::to_string(t) + ',' + std::to_string(y.result(f, t)) + '\n';
  return out;
}

inline ObservationSet read_observations(const fs::path& path, const DatasetShape& shape) {
  const CsvTable tab = read_csv(path, {"f", "t", "result"});
  ObservationSet y(shape.num_families, shape.horizon);
  for (const auto& r : tab.rows) {
    const auto f = parse_number<Index>(r[0], path), t = parse_number<Index>(r[1], path);
    const auto v = parse_number<int>(r[2], path);
    try {
      y.add(f, t, v);
    } catch (const std::exception& e) {
      throw DataError(path.string() + ": " + e.what());
    }
  }
  return y;
}

inline std::string marginals_csv(const MarginalMatrix& m) {
  std::string out = "i,t,probability\n";
  for (Index i = 0; i < m.num_individuals(); ++i)
    for (Index t = 0; t <= m.horizon(); ++t)
      out += std::to_string(i) + ',' + std::to_string(t) + ',' + format_double(m(i, t)) + '\n';
  return out;
}

inline MarginalMatrix read_marginals(const fs::path& path, const DatasetShape& shape) {
  const CsvTable tab = read_csv(path, {"i", "t", "probability"});
  MarginalMatrix m(shape.num_individuals, shape.horizon);
  if (tab.rows.size() != static_cast<std::size_t>(shape.num_individuals) * (shape.horizon + 1))
    throw DataError(path.string() + ": expected I*(T+1) rows");
  for (const auto& r : tab.rows) {
    const auto i = parse_number<Index>(r[0], path), t = parse_number<Index>(r[1], path);
    const auto p = parse_number<double>(r[2], path);
    if (i < 0 || i >= shape.num_individuals || t < 0 || t > shape.horizon || !(p >= 0.0 && p <= 1.0))
      throw DataError(path.string() + ": marginal entry out of range");
    m(i, t) = p;
  }
  return m;
}

// ---------------------------------------------------------------------------
// JSON conversions
// ---------------------------------------------------------------------------

namespace detail {

// Throws ConfigError for keys outside `allowed`, so typos do not pass silently.
inline void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || k == a;
    if (!ok) throw ConfigError(where + ": unknown key '" + k + "'");
  }
}

template <class T>
void get_if(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

inline json range_json(const Range& r) { return json::array({r.lo, r.hi}); }

inline void get_range(const json& j, const char* key, Range& out, const std::string& where) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw ConfigError(where + "." + key + ": expected [lo, hi]");
  out = {v[0].get<double>(), v[1].get<double>()};
}

}  // namespace detail

inline json to_json(const ModelParameters& p) {
  json j;
  for (Param q : kAllParams) j[param_name(q)] = p[q];
  return j;
}

inline ModelParameters params_from_json(const json& j, const std::string& where = "params") {
  detail::check_keys(j, {"alpha", "beta", "beta_f", "gamma", "theta0", "theta1"}, where);
  ModelParameters p;
  for (Param q : kAllParams) {
    if (!j.contains(param_name(q))) throw ConfigError(where + ": missing " + std::string(param_name(q)));
    detail::get_if(j, param_name(q), p[q], where);
  }
  return p;
}

inline json to_json(const HyperParameters& h) {
  json j;
  for (Param q : kAllParams) j[param_name(q)] = json::array({h[q].a, h[q].b});
  return j;
}

inline HyperParameters hypers_from_json(const json& j, const std::string& where = "prior") {
  detail::check_keys(j, {"alpha", "beta", "beta_f", "gamma", "theta0", "theta1"}, where);
  HyperParameters h;
  for (Param q : kAllParams) {
    const json& v = j.contains(param_name(q)) ? j.at(param_name(q)) : json();
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      throw ConfigError(where + "." + param_name(q) + ": expected [a, b]");
    h[q] = {v[0].get<double>(), v[1].get<double>()};
  }
  return h;
}

inline json to_json(const SimulationConfig& c) {
  return json{{"population_size", c.population_size},
              {"num_families", c.num_families},
              {"horizon_days", c.horizon_days},
              {"tests_per_family", c.tests_per_family},
              {"contact_edge_prob", c.contact_edge_prob},
              {"max_family_size", c.max_family_size},
              {"rate_upper", c.rate_upper},
              {"theta0_range", detail::range_json(c.theta0_range)},
              {"theta1_range", detail::range_json(c.theta1_range)},
              {"gamma_range", detail::range_json(c.gamma_range)},
              {"include_day_zero", c.include_day_zero},
              {"seed", c.seed}};
}

inline SimulationConfig simulation_from_json(const json& j, SimulationConfig c = {},
                                             const std::string& where = "simulation") {
  detail::check_keys(j,
                     {"population_size", "num_families", "horizon_days", "tests_per_family", "contact_edge_prob",
                      "max_family_size", "rate_upper", "theta0_range", "theta1_range", "gamma_range",
                      "include_day_zero", "seed"},
                     where);
  detail::get_if(j, "population_size", c.population_size, where);
  detail::get_if(j, "num_families", c.num_families, where);
  detail::get_if(j, "horizon_days", c.horizon_days, where);
  detail::get_if(j, "tests_per_family", c.tests_per_family, where);
  detail::get_if(j, "contact_edge_prob", c.contact_edge_prob, where);
  detail::get_if(j, "max_family_size", c.max_family_size, where);
  detail::get_if(j, "rate_upper", c.rate_upper, where);
  detail::get_range(j, "theta0_range", c.theta0_range, where);
  detail::get_range(j, "theta1_range", c.theta1_range, where);
  detail::get_range(j, "gamma_range", c.gamma_range, where);
  detail::get_if(j, "include_day_zero", c.include_day_zero, where);
  detail::get_if(j, "seed", c.seed, where);
  c.validate();
  return c;
}

inline const char* to_string(MarginalEstimator e) {
  return e == MarginalEstimator::conditional ? "conditional" : "indicator";
}
inline const char* to_string(TestCounting c) {
  return c == TestCounting::sampled_member ? "sampled_member" : "per_member";
}

inline json to_json(const InferenceConfig& c) {
  json init;
  for (Param q : kAllParams) {
    const HyperInitRange& r = c.hyper_init[static_cast<std::size_t>(q)];
    init[param_name(q)] = json::array({r.a_min, r.a_max, r.b_min, r.b_max});
  }
  json j{{"inner_flip_threshold", c.inner_flip_threshold},
         {"inner_max_sweeps", c.inner_max_sweeps},
         {"outer_param_tol", c.outer_param_tol},
         {"outer_max_iters", c.outer_max_iters},
         {"burn_in_sweeps", c.burn_in_sweeps},
         {"accumulation_sweeps", c.accumulation_sweeps},
         {"marginal_estimator", to_string(c.marginal_estimator)},
         {"test_counting", to_string(c.test_counting)},
         {"update_params_while_averaging", c.update_params_while_averaging},
         {"num_chains", c.num_chains},
         {"hyper_init", init},
         {"prior", c.prior ? to_json(*c.prior) : json()},
         {"fixed_params", c.fixed_params ? to_json(*c.fixed_params) : json()},
         {"seed", c.seed}};
  return j;
}

inline InferenceConfig inference_from_json(const json& j, InferenceConfig c = {},
                                           const std::string& where = "inference") {
  detail::check_keys(j,
                     {"inner_flip_threshold", "inner_max_sweeps", "outer_param_tol", "outer_max_iters",
                      "burn_in_sweeps", "accumulation_sweeps", "marginal_estimator", "test_counting",
                      "update_params_while_averaging", "num_chains", "hyper_init", "prior", "fixed_params", "seed"},
                     where);
  detail::get_if(j, "inner_flip_threshold", c.inner_flip_threshold, where);
  detail::get_if(j, "inner_max_sweeps", c.inner_max_sweeps, where);
  detail::get_if(j, "outer_param_tol", c.outer_param_tol, where);
  detail::get_if(j, "outer_max_iters", c.outer_max_iters, where);
  detail::get_if(j, "burn_in_sweeps", c.burn_in_sweeps, where);
  detail::get_if(j, "accumulation_sweeps", c.accumulation_sweeps, where);
  detail::get_if(j, "update_params_while_averaging", c.update_params_while_averaging, where);
  detail::get_if(j, "num_chains", c.num_chains, where);
  detail::get_if(j, "seed", c.seed, where);
  if (j.contains("marginal_estimator")) {
    const std::string s = j.at("marginal_estimator").is_string() ? j.at("marginal_estimator").get<std::string>() : "";
    if (s == "conditional") c.marginal_estimator = MarginalEstimator::conditional;
    else if (s == "indicator") c.marginal_estimator = MarginalEstimator::indicator;
    else throw ConfigError(where + ".marginal_estimator: expected \"conditional\" or \"indicator\"");
  }
  if (j.contains("test_counting")) {
    const std::string s = j.at("test_counting").is_string() ? j.at("test_counting").get<std::string>() : "";
    if (s == "sampled_member") c.test_counting = TestCounting::sampled_member;
    else if (s == "per_member") c.test_counting = TestCounting::per_member;
    else throw ConfigError(where + ".test_counting: expected \"sampled_member\" or \"per_member\"");
  }
  if (j.contains("hyper_init")) {
    const json& h = j.at("hyper_init");
    detail::check_keys(h, {"alpha", "beta", "beta_f", "gamma", "theta0", "theta1"}, where + ".hyper_init");
    for (Param q : kAllParams) {
      if (!h.contains(param_name(q))) continue;
      const json& v = h.at(param_name(q));
      if (!v.is_array() || v.size() != 4)
        throw ConfigError(where + ".hyper_init." + param_name(q) + ": expected [a_min, a_max, b_min, b_max]");
      try {
        c.hyper_init[static_cast<std::size_t>(q)] = {v[0].get<int>(), v[1].get<int>(), v[2].get<int>(), v[3].get<int>()};
      } catch (const json::exception& e) {
        throw ConfigError(where + ".hyper_init." + param_name(q) + ": " + e.what());
      }
    }
  }
  if (j.contains("prior")) {
    if (j.at("prior").is_null()) c.prior.reset();
    else c.prior = hypers_from_json(j.at("prior"), where + ".prior");
  }
  if (j.contains("fixed_params")) {
    if (j.at("fixed_params").is_null()) c.fixed_params.reset();
    else c.fixed_params = params_from_json(j.at("fixed_params"), where + ".fixed_params");
  }
  c.validate();
  return c;
}

inline json to_json(const ExperimentConfig& c) {
  json shapes = json::array();
  for (const auto& s : c.baseline_datasets) shapes.push_back(to_json(s));
  return json{{"simulation", to_json(c.simulation)},
              {"inference", to_json(c.inference)},
              {"mu_values", c.mu_values},
              {"eval_days", c.eval_days},
              {"replicates", c.replicates},
              {"threads", c.threads},
              {"max_attempts_per_replicate", c.max_attempts_per_replicate},
              {"seed", c.seed},
              {"baseline_datasets", shapes}};
}

inline ExperimentConfig experiment_from_json(const json& j, const std::string& where = "experiment") {
  detail::check_keys(j,
                     {"simulation", "inference", "mu_values", "eval_days", "replicates", "threads",
                      "max_attempts_per_replicate", "seed", "baseline_datasets"},
                     where);
  ExperimentConfig c;
  if (j.contains("simulation")) c.simulation = simulation_from_json(j.at("simulation"), {}, where + ".simulation");
  if (j.contains("inference")) c.inference = inference_from_json(j.at("inference"), {}, where + ".inference");
  detail::get_if(j, "mu_values", c.mu_values, where);
  detail::get_if(j, "eval_days", c.eval_days, where);
  detail::get_if(j, "replicates", c.replicates, where);
  detail::get_if(j, "threads", c.threads, where);
  detail::get_if(j, "max_attempts_per_replicate", c.max_attempts_per_replicate, where);
  detail::get_if(j, "seed", c.seed, where);
  if (j.contains("baseline_datasets")) {
    if (!j.at("baseline_datasets").is_array()) throw ConfigError(where + ".baseline_datasets: expected an array");
    c.baseline_datasets.clear();
    for (const auto& s : j.at("baseline_datasets"))
      c.baseline_datasets.push_back(simulation_from_json(s, {}, where + ".baseline_datasets[]"));
  }
  if (c.replicates < 1) throw ConfigError(where + ".replicates must be at least 1");
  if (c.threads < 1) throw ConfigError(where + ".threads must be at least 1");
  if (c.max_attempts_per_replicate < 1) throw ConfigError(where + ".max_attempts_per_replicate must be at least 1");
  return c;
}

// ---------------------------------------------------------------------------
// Inference and evaluation outputs
// ---------------------------------------------------------------------------

// Columns: iteration summary, the six drawn parameters, then (n, n') per parameter.
inline std::string trace_csv(const std::vector<TraceRecord>& trace) {
  std::string out =
      "iteration,inner_sweeps,flip_fraction,param_change,alpha,beta,beta_f,gamma,theta0,theta1,"
      "n_alpha,np_alpha,n_beta,np_beta,n_beta_f,np_beta_f,n_gamma,np_gamma,n_theta0,np_theta0,n_theta1,np_theta1\n";
  for (const auto& r : trace) {
    out += std::to_string(r.iteration) + ',' + std::to_string(r.inner_sweeps) + ',' + format_double(r.flip_fraction) +
           ',' + format_double(r.param_change);
    for (Param q : kAllParams) out += ',' + format_double(r.params[q]);
    for (Param q : kAllParams)
      out += ',' + std::to_string(r.stats[q].trials) + ',' + std::to_string(r.stats[q].successes);
    out += '\n';
  }
  return out;
}

inline std::vector<TraceRecord> read_trace(const fs::path& path) {
  const CsvTable tab = read_csv(path, split_csv_line("iteration,inner_sweeps,flip_fraction,param_change,alpha,beta,"
                                                     "beta_f,gamma,theta0,theta1,n_alpha,np_alpha,n_beta,np_beta,"
                                                     "n_beta_f,np_beta_f,n_gamma,np_gamma,n_theta0,np_theta0,"
                                                     "n_theta1,np_theta1"));
  std::vector<TraceRecord> out;
  for (const auto& r : tab.rows) {
    TraceRecord rec;
    rec.iteration = parse_number<Index>(r[0], path);
    rec.inner_sweeps = parse_number<Index>(r[1], path);
    rec.flip_fraction = parse_number<double>(r[2], path);
    rec.param_change = parse_number<double>(r[3], path);
    std::size_t k = 4;
    for (Param q : kAllParams) rec.params[q] = parse_number<double>(r[k++], path);
    for (Param q : kAllParams) {
      rec.stats[q].trials = parse_number<std::uint64_t>(r[k++], path);
      rec.stats[q].successes = parse_number<std::uint64_t>(r[k++], path);
    }
    out.push_back(rec);
  }
  return out;
}

inline json learned_params_json(const PosteriorEstimate& est) {
  return json{{"params", to_json(est.learned_params)}, {"prior", to_json(est.prior)}, {"total_sweeps", est.total_sweeps}};
}

inline json metrics_json(const AucSummary& s, const std::string& mode) {
  return json{{"mode", mode}, {"auc", s.auc}, {"num_positives", s.num_positives}, {"num_negatives", s.num_negatives}};
}

inline std::string roc_csv(const std::vector<RocPoint>& pts) {
  std::string out = "threshold,false_positive_rate,true_positive_rate\n";
  for (const auto& p : pts)
    out += format_double(p.threshold) + ',' + format_double(p.false_positive_rate) + ',' +
           format_double(p.true_positive_rate) + '\n';
  return out;
}

// ---------------------------------------------------------------------------
// Experiment results
// ---------------------------------------------------------------------------

inline std::string results_header() {
  std::string h = "experiment,replicate,mu,day,auc,num_positives,num_negatives,seed";
  for (Param q : kAllParams) h += std::string(",true_") + param_name(q);
  for (Param q : kAllParams) h += std::string(",learned_") + param_name(q);
  return h;
}

inline std::string results_csv(const std::vector<ExperimentResult>& results) {
  std::string out = results_header() + '\n';
  for (const auto& r : results) {
    out += r.experiment + ',' + std::to_string(r.replicate) + ',' + std::to_string(r.mu) + ',' +
           std::to_string(r.day) + ',' + format_double(r.auc) + ',' + std::to_string(r.num_positives) + ',' +
           std::to_string(r.num_negatives) + ',' + std::to_string(r.seed);
    for (Param q : kAllParams) out += ',' + format_double(r.true_params[q]);
    for (Param q : kAllParams) out += ',' + format_double(r.learned_params[q]);
    out += '\n';
  }
  return out;
}

inline std::vector<ExperimentResult> read_results(const fs::path& path) {
  const CsvTable tab = read_csv(path, split_csv_line(results_header()));
  std::vector<ExperimentResult> out;
  for (const auto& r : tab.rows) {
    ExperimentResult e;
    e.experiment = r[0];
    e.replicate = parse_number<Index>(r[1], path);
    e.mu = parse_number<Index>(r[2], path);
    e.day = parse_number<Index>(r[3], path);
    e.auc = parse_number<double>(r[4], path);
    e.num_positives = parse_number<std::size_t>(r[5], path);
    e.num_negatives = parse_number<std::size_t>(r[6], path);
    e.seed = parse_number<std::uint64_t>(r[7], path);
    std::size_t k = 8;
    for (Param q : kAllParams) e.true_params[q] = parse_number<double>(r[k++], path);
    for (Param q : kAllParams) e.learned_params[q] = parse_number<double>(r[k++], path);
    out.push_back(e);
  }
  return out;
}

inline json summary_json(const std::string& experiment, const std::vector<ExperimentResult>& results,
                         const std::optional<std::string>& error) {
  json rows = json::array();
  for (const auto& s : summarize(results)) {
    json row{{"experiment", s.experiment}, {"replicates", s.replicates}, {"mean_auc", s.mean_auc}};
    if (s.mu >= 0) row["mu"] = s.mu;
    if (s.day >= 0) row["day"] = s.day;
    if (s.dataset >= 0) row["dataset"] = s.dataset;
    rows.push_back(row);
  }
  json j{{"experiment", experiment}, {"rows", rows}, {"complete", !error.has_value()}};
  if (error) j["error"] = *error;
  return j;
}

}  // namespace gchmm::io
