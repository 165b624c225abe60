#pragma once

// The four pipeline commands behind the `gchmm` executable. Each takes a fully
// parsed Invocation, writes its artifacts plus manifest.json into the output
// directory and returns the manifest. Kept out of tools/ so tests can drive
// the commands without spawning processes.

#include <charconv>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "gchmm/io.hpp"

namespace gchmm::cli {

namespace fs = std::filesystem;
using io::json;

inline constexpr const char* kToolVersion = "1.0.0";

enum ExitCode : int { kOk = 0, kFailure = 1, kConfigError = 2, kDataError = 3, kNumericalError = 4 };

// Maps the library's exception types onto the documented exit codes.
inline int exit_code_for(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const ConfigError&) {
    return kConfigError;
  } catch (const DataError&) {
    return kDataError;
  } catch (const fs::filesystem_error&) {
    return kDataError;
  } catch (const ConstraintError&) {
    return kNumericalError;
  } catch (const UndefinedAucError&) {
    return kNumericalError;
  } catch (const DomainError&) {
    return kNumericalError;
  } catch (const json::exception&) {
    return kConfigError;
  } catch (...) {
    return kFailure;
  }
}

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw DataError("sha256 computation failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < len; ++k) {
    out += hex[md[k] >> 4];
    out += hex[md[k] & 15];
  }
  return out;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Everything a command needs. `config` is the parsed --config document, which
// may itself be a manifest from an earlier run; explicit fields override it.
struct Invocation {
  std::string command;
  json config = json::object();
  std::optional<fs::path> config_path;
  fs::path out;
  std::optional<std::uint64_t> seed;
  std::optional<Index> replicates;
  std::optional<Index> threads;
  std::optional<std::string> mode;
  std::optional<std::string> experiment;
  std::optional<fs::path> data;
  std::optional<fs::path> marginals;
};

namespace detail {

struct Resolved {
  json config;     // sections this command uses, with defaults filled in
  json arguments;  // data / marginals / mode / experiment name
};

inline std::optional<std::string> string_arg(const json& args, const char* key) {
  if (!args.contains(key) || args.at(key).is_null()) return std::nullopt;
  if (!args.at(key).is_string()) throw ConfigError(std::string("argument '") + key + "' must be a string");
  return args.at(key).get<std::string>();
}

// A manifest passed as --config contributes its resolved config and arguments.
inline std::pair<json, json> unwrap_config(const Invocation& inv) {
  const json& doc = inv.config;
  if (!doc.is_object()) throw ConfigError("config: expected a JSON object");
  if (doc.contains("resolved_config")) {
    const std::string cmd = doc.value("command", "");
    if (cmd != inv.command) throw ConfigError("manifest was written by '" + cmd + "', not '" + inv.command + "'");
    return {doc.at("resolved_config"), doc.value("arguments", json::object())};
  }
  io::detail::check_keys(doc, {"simulation", "inference", "evaluation", "experiment"}, "config");
  return {doc, json::object()};
}

inline Resolved resolve(const Invocation& inv) {
  auto [doc, args] = unwrap_config(inv);
  Resolved r;
  r.arguments = json::object();
  auto section = [&](const char* key) { return doc.contains(key) ? doc.at(key) : json::object(); };
  auto pick_path = [&](const std::optional<fs::path>& flag, const char* key) -> std::optional<std::string> {
    if (flag) return flag->string();
    return string_arg(args, key);
  };

  if (inv.command == "simulate") {
    SimulationConfig c = io::simulation_from_json(section("simulation"));
    if (inv.seed) c.seed = *inv.seed;
    c.validate();
    r.config = json{{"simulation", io::to_json(c)}};
  } else if (inv.command == "infer") {
    InferenceConfig c = io::inference_from_json(section("inference"));
    if (inv.seed) c.seed = *inv.seed;
    r.config = json{{"inference", io::to_json(c)}};
    const auto data = pick_path(inv.data, "data");
    if (!data) throw ConfigError("infer: --data DIR is required");
    r.arguments["data"] = *data;
  } else if (inv.command == "evaluate") {
    std::string mode = "pooled";
    const json ev = section("evaluation");
    io::detail::check_keys(ev, {"mode"}, "evaluation");
    if (ev.contains("mode")) mode = ev.at("mode").get<std::string>();
    if (inv.mode) mode = *inv.mode;
    r.config = json{{"evaluation", {{"mode", mode}}}};
    const auto data = pick_path(inv.data, "data");
    const auto marg = pick_path(inv.marginals, "marginals");
    if (!data) throw ConfigError("evaluate: --data DIR is required");
    if (!marg) throw ConfigError("evaluate: --marginals FILE is required");
    r.arguments["data"] = *data;
    r.arguments["marginals"] = *marg;
  } else if (inv.command == "experiment") {
    ExperimentConfig c = io::experiment_from_json(section("experiment"));
    if (inv.seed) c.seed = *inv.seed;
    if (inv.replicates) c.replicates = *inv.replicates;
    if (inv.threads) c.threads = *inv.threads;
    if (c.replicates < 1 || c.threads < 1) throw ConfigError("experiment: replicates and threads must be positive");
    r.config = json{{"experiment", io::to_json(c)}};
    std::optional<std::string> name = inv.experiment ? inv.experiment : string_arg(args, "name");
    if (!name) throw ConfigError("experiment: a name (exp1, exp2 or baseline) is required");
    if (*name != "exp1" && *name != "exp2" && *name != "baseline")
      throw ConfigError("experiment: unknown name '" + *name + "' (expected exp1, exp2 or baseline)");
    r.arguments["name"] = *name;
  } else {
    throw ConfigError("unknown command '" + inv.command + "'");
  }
  return r;
}

// Parses "pooled" or "at-day=T".
inline std::optional<Index> parse_mode(const std::string& mode) {
  if (mode == "pooled") return std::nullopt;
  const std::string prefix = "at-day=";
  if (mode.rfind(prefix, 0) == 0) {
    const std::string rest = mode.substr(prefix.size());
    Index t = -1;
    const auto [p, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), t);
    if (ec == std::errc() && p == rest.data() + rest.size() && t >= 0) return t;
  }
  throw ConfigError("mode must be 'pooled' or 'at-day=T', got '" + mode + "'");
}

class ManifestBuilder {
 public:
  ManifestBuilder(const Invocation& inv, const Resolved& r) : out_dir_(inv.out) {
    manifest_ = json{{"command", inv.command},
                     {"tool_version", kToolVersion},
                     {"resolved_config", r.config},
                     {"arguments", r.arguments},
                     {"seed", nullptr},
                     {"inputs", json::array()},
                     {"outputs", json::array()},
                     {"started_at", utc_timestamp()},
                     {"finished_at", nullptr}};
    if (inv.config_path) input(*inv.config_path);
  }

  void seed(std::uint64_t s) { manifest_["seed"] = s; }

  void input(const fs::path& p) {
    manifest_["inputs"].push_back({{"path", p.string()}, {"sha256", sha256_hex(io::read_file(p))}});
  }

  // Writes `content` to out_dir/name and records its checksum.
  void output(const std::string& name, const std::string& content) {
    io::write_file(out_dir_ / name, content);
    manifest_["outputs"].push_back({{"path", name}, {"sha256", sha256_hex(content)}});
  }
  void output(const std::string& name, const json& j) { output(name, j.dump(2) + "\n"); }

  json finish() {
    manifest_["finished_at"] = utc_timestamp();
    io::write_json(out_dir_ / "manifest.json", manifest_);
    return manifest_;
  }

 private:
  fs::path out_dir_;
  json manifest_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

// Writes families.csv, contacts.csv, states.csv, observations.csv,
// params.json, dataset.json and manifest.json.
inline json cmd_simulate(const Invocation& inv) {
  const detail::Resolved r = detail::resolve(inv);
  const SimulationConfig sim = io::simulation_from_json(r.config.at("simulation"));
  detail::ManifestBuilder m(inv, r);
  m.seed(sim.seed);
  const Dataset d = simulate_dataset(sim);
  fs::create_directories(inv.out);
  m.output("dataset.json",
           json{{"num_individuals", sim.population_size}, {"num_families", sim.num_families}, {"horizon", sim.horizon_days}});
  m.output("families.csv", io::families_csv(d.families));
  m.output("contacts.csv", io::contacts_csv(d.network));
  m.output("states.csv", io::states_csv(d.states));
  m.output("observations.csv", io::observations_csv(d.observations));
  m.output("params.json", io::to_json(d.params));
  return m.finish();
}

// Reads dataset.json, families.csv, contacts.csv and observations.csv only;
// the ground-truth states and parameters are never opened.
inline json cmd_infer(const Invocation& inv) {
  const detail::Resolved r = detail::resolve(inv);
  const InferenceConfig ic = io::inference_from_json(r.config.at("inference"));
  const fs::path data = r.arguments.at("data").get<std::string>();
  detail::ManifestBuilder m(inv, r);
  m.seed(ic.seed);
  for (const char* f : {"dataset.json", "families.csv", "contacts.csv", "observations.csv"}) m.input(data / f);

  const io::DatasetShape shape = io::read_shape(data / "dataset.json");
  const FamilyPartition families = io::read_families(data / "families.csv", shape);
  const TemporalContactNetwork network = io::read_contacts(data / "contacts.csv", shape);
  network.validate_against(families);
  const ObservationSet y = io::read_observations(data / "observations.csv", shape);

  const PosteriorEstimate est = run_inference(y, network, families, ic);
  fs::create_directories(inv.out);
  m.output("marginals.csv", io::marginals_csv(est.marginals));
  m.output("learned_params.json", io::learned_params_json(est));
  m.output("trace.csv", io::trace_csv(est.trace));
  return m.finish();
}

// Pooled mode scores every cell with t = 1..T (X_0 is fixed at 0); at-day=T
// scores the single column t = T.
inline json cmd_evaluate(const Invocation& inv) {
  const detail::Resolved r = detail::resolve(inv);
  const std::string mode = r.config.at("evaluation").at("mode").get<std::string>();
  const std::optional<Index> day = detail::parse_mode(mode);
  const fs::path data = r.arguments.at("data").get<std::string>();
  const fs::path marg = r.arguments.at("marginals").get<std::string>();
  detail::ManifestBuilder m(inv, r);
  m.input(data / "dataset.json");
  m.input(data / "states.csv");
  m.input(marg);

  const io::DatasetShape shape = io::read_shape(data / "dataset.json");
  const HealthStateMatrix truth = io::read_states(data / "states.csv", shape);
  const MarginalMatrix marginals = io::read_marginals(marg, shape);
  if (day && *day > shape.horizon) throw ConfigError("evaluate: day " + std::to_string(*day) + " is past the horizon");
  const Index t0 = day ? *day : 1, t1 = day ? *day : shape.horizon;
  const auto cells = score_cells(marginals, truth, t0, t1);

  fs::create_directories(inv.out);
  try {
    const AucSummary s = roc_auc_summary(cells);
    m.output("metrics.json", io::metrics_json(s, mode));
    m.output("roc_points.csv", io::roc_csv(roc_curve(cells)));
  } catch (const UndefinedAucError& e) {
    // Report the degenerate case in the metrics file as well as the exit code.
    std::size_t pos = 0;
    for (const auto& c : cells) pos += c.label;
    m.output("metrics.json", json{{"mode", mode},
                                  {"auc", nullptr},
                                  {"num_positives", pos},
                                  {"num_negatives", cells.size() - pos},
                                  {"error", e.what()}});
    m.finish();
    throw;
  }
  return m.finish();
}

// Runs exp1, exp2 or baseline and writes results.csv and summary.json. When a
// unit fails, the completed rows are still written before the error propagates.
inline json cmd_experiment(const Invocation& inv) {
  const detail::Resolved r = detail::resolve(inv);
  const ExperimentConfig c = io::experiment_from_json(r.config.at("experiment"));
  const std::string name = r.arguments.at("name").get<std::string>();
  detail::ManifestBuilder m(inv, r);
  m.seed(c.seed);

  const ExperimentOutcome o = name == "exp1"   ? run_experiment_1(c)
                              : name == "exp2" ? run_experiment_2(c)
                                               : run_baseline(c);
  std::optional<std::string> error;
  if (o.error) {
    try {
      std::rethrow_exception(o.error);
    } catch (const std::exception& e) {
      error = e.what();
    } catch (...) {
      error = "unknown error";
    }
  }
  fs::create_directories(inv.out);
  m.output("results.csv", io::results_csv(o.results));
  m.output("summary.json", io::summary_json(name, o.results, error));
  json manifest = m.finish();
  if (o.error) std::rethrow_exception(o.error);
  return manifest;
}

inline json run(const Invocation& inv) {
  if (inv.command == "simulate") return cmd_simulate(inv);
  if (inv.command == "infer") return cmd_infer(inv);
  if (inv.command == "evaluate") return cmd_evaluate(inv);
  if (inv.command == "experiment") return cmd_experiment(inv);
  throw ConfigError("unknown command '" + inv.command + "'");
}

}  // namespace gchmm::cli
