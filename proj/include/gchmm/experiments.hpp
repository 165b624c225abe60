#pragma once

// End-to-end experiment drivers: the testing-frequency sweep, the temporal
// partitioning protocol and the linear baseline.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "gchmm/contact_sim.hpp"
#include "gchmm/evaluation.hpp"
#include "gchmm/inference.hpp"

namespace gchmm {

struct ExperimentResult {
  std::string experiment;
  Index replicate = 0;
  Index mu = -1;   // tests per family (exp1), -1 otherwise
  Index day = -1;  // evaluation day (exp2), -1 otherwise
  double auc = 0.0;
  std::size_t num_positives = 0;
  std::size_t num_negatives = 0;
  std::uint64_t seed = 0;  // dataset seed
  ModelParameters true_params;
  ModelParameters learned_params;

  friend bool operator==(const ExperimentResult&, const ExperimentResult&) = default;
};

struct ExperimentConfig {
  SimulationConfig simulation;
  InferenceConfig inference;
  std::vector<Index> mu_values{1, 2, 3, 4, 5, 6, 12, 25, 52, 360};
  std::vector<Index> eval_days{16, 24, 32, 40, 48, 56, 64, 72, 80, 88, 96, 104, 112, 120, 128};
  Index replicates = 5;
  Index threads = 1;
  // Candidate datasets examined per requested replicate before giving up on
  // finding one whose scored cells contain both classes.
  Index max_attempts_per_replicate = 20;
  std::uint64_t seed = 1;
  // Simulation shapes for the baseline; empty means {simulation}.
  std::vector<SimulationConfig> baseline_datasets;
};

struct ExperimentOutcome {
  std::vector<ExperimentResult> results;
  // Set when some unit failed; `results` then holds the completed units.
  std::exception_ptr error;
};

namespace detail {

// Runs tasks[k] for every k on up to `threads` workers. Results keep task
// order; the first exception is captured and remaining tasks still run.
inline ExperimentOutcome run_units(const std::vector<std::function<ExperimentResult()>>& tasks, Index threads) {
  std::vector<std::optional<ExperimentResult>> slots(tasks.size());
  std::exception_ptr first_error;
  std::mutex m;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < tasks.size(); k = next++) {
      try {
        slots[k] = tasks[k]();
      } catch (...) {
        std::lock_guard lock(m);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  const auto n = static_cast<std::size_t>(std::max<Index>(1, threads));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t k = 0; k < std::min(n, tasks.size()); ++k) pool.emplace_back(worker);
  }
  ExperimentOutcome out;
  for (auto& s : slots)
    if (s) out.results.push_back(std::move(*s));
  out.error = first_error;
  return out;
}

inline SimulationConfig with_seed(SimulationConfig c, std::uint64_t seed) {
  c.seed = seed;
  return c;
}

inline bool has_both_classes(const HealthStateMatrix& x, Index t_begin, Index t_end) {
  bool pos = false, neg = false;
  for (Index t = t_begin; t <= t_end; ++t)
    for (std::uint8_t v : x.column(t)) (v ? pos : neg) = true;
  return pos && neg;
}

}  // namespace detail

// Candidate dataset k of an experiment (independent of how many are used).
inline std::uint64_t dataset_seed(const ExperimentConfig& config, std::uint64_t k) {
  return derive_seed(config.seed, Stream::dataset, k);
}

// Testing-frequency sweep. Replicate r is the r-th candidate epidemic with at
// least one infected cell; all mu values share that epidemic and differ only in
// the test schedule. AUC pools every cell (i,t), t = 1..T.
inline ExperimentOutcome run_experiment_1(const ExperimentConfig& config) {
  config.simulation.validate();
  config.inference.validate();
  const Index horizon = config.simulation.horizon_days;

  struct Replicate {
    std::uint64_t seed;
    Dataset data;
  };
  auto reps = std::make_shared<std::vector<Replicate>>();
  const Index budget = config.replicates * config.max_attempts_per_replicate;
  for (Index k = 0; k < budget && static_cast<Index>(reps->size()) < config.replicates; ++k) {
    const std::uint64_t seed = dataset_seed(config, k);
    Dataset d = simulate_dataset(detail::with_seed(config.simulation, seed));
    if (detail::has_both_classes(d.states, 1, horizon)) reps->push_back({seed, std::move(d)});
  }

  std::vector<std::function<ExperimentResult()>> tasks;
  for (Index mu : config.mu_values) {
    if (mu < 1 || mu > config.simulation.test_day_pool_size())
      throw ConfigError("experiment 1: mu value outside [1, number of candidate test days]");
    for (Index r = 0; r < static_cast<Index>(reps->size()); ++r) {
      tasks.emplace_back([&config, reps, mu, r, horizon]() {
        const Replicate& rep = (*reps)[r];
        const ObservationSet y = schedule_and_sample_tests(rep.data.states, rep.data.families, rep.data.params, mu,
                                                           rep.seed, config.simulation.include_day_zero);
        InferenceConfig ic = config.inference;
        ic.seed = derive_seed(rep.seed, Stream::chain, static_cast<std::uint64_t>(mu));
        const PosteriorEstimate est = run_inference(y, rep.data.network, rep.data.families, ic);
        const auto cells = score_cells(est.marginals, rep.data.states, 1, horizon);
        const AucSummary s = roc_auc_summary(cells);
        return ExperimentResult{"exp1", r,  mu, -1, s.auc, s.num_positives, s.num_negatives,
                                rep.seed, rep.data.params, est.learned_params};
      });
    }
  }
  return detail::run_units(tasks, config.threads);
}

// Inference restricted to days 0..day (contacts 0..day-1, tests at or before day).
inline PosteriorEstimate infer_up_to_day(const Dataset& data, Index day, const InferenceConfig& config) {
  const ObservationSet y = data.observations.truncated(day);
  if (y.max_time() > day) throw DataError("truncated observations extend past the evaluation day");
  const TemporalContactNetwork net = data.network.truncated(day);
  return run_inference(y, net, data.families, config);
}

// Temporal partitioning. For each evaluation day t, replicate r is the r-th
// candidate epidemic whose day-t column contains both classes; only that
// column is scored.
inline ExperimentOutcome run_experiment_2(const ExperimentConfig& config) {
  config.simulation.validate();
  config.inference.validate();
  for (Index day : config.eval_days)
    if (day < 1 || day > config.simulation.horizon_days) throw ConfigError("experiment 2: eval day outside 1..T");

  auto cache = std::make_shared<std::map<std::uint64_t, Dataset>>();
  auto candidate = [&](std::uint64_t k) -> const Dataset& {
    auto it = cache->find(k);
    if (it == cache->end())
      it = cache->emplace(k, simulate_dataset(detail::with_seed(config.simulation, dataset_seed(config, k)))).first;
    return it->second;
  };

  std::vector<std::function<ExperimentResult()>> tasks;
  const Index budget = config.replicates * config.max_attempts_per_replicate;
  for (Index day : config.eval_days) {
    Index found = 0;
    for (Index k = 0; k < budget && found < config.replicates; ++k) {
      if (!detail::has_both_classes(candidate(k).states, day, day)) continue;
      const Index r = found++;
      tasks.emplace_back([&config, cache, k = static_cast<std::uint64_t>(k), day, r]() {
        const Dataset& d = cache->at(k);
        InferenceConfig ic = config.inference;
        ic.seed = derive_seed(d.config.seed, Stream::chain, static_cast<std::uint64_t>(day));
        const PosteriorEstimate est = infer_up_to_day(d, day, ic);
        const AucSummary s = roc_auc_summary(score_cells(est.marginals, d.states, day, day));
        return ExperimentResult{"exp2", r,  -1, day, s.auc, s.num_positives, s.num_negatives,
                                d.config.seed, d.params, est.learned_params};
      });
    }
  }
  return detail::run_units(tasks, config.threads);
}

// One row per baseline dataset shape, on its first candidate epidemic with
// both classes present.
inline ExperimentOutcome run_baseline(const ExperimentConfig& config) {
  std::vector<SimulationConfig> shapes = config.baseline_datasets;
  if (shapes.empty()) shapes.push_back(config.simulation);
  std::vector<std::function<ExperimentResult()>> tasks;
  for (std::size_t s = 0; s < shapes.size(); ++s) {
    shapes[s].validate();
    tasks.emplace_back([&config, shape = shapes[s], s]() {
      for (Index k = 0; k < config.max_attempts_per_replicate; ++k) {
        const std::uint64_t seed = dataset_seed(config, static_cast<std::uint64_t>(k));
        const Dataset d = simulate_dataset(detail::with_seed(shape, seed));
        if (!detail::has_both_classes(d.states, 0, d.states.horizon())) continue;
        const BaselineResult b = baseline_linear_classifier(d.states, d.network, d.families,
                                                            derive_seed(seed, Stream::split));
        return ExperimentResult{"baseline", static_cast<Index>(s), shape.tests_per_family, -1, b.test.auc,
                                b.test.num_positives, b.test.num_negatives, seed, d.params, {}};
      }
      throw UndefinedAucError("baseline: no candidate dataset with both classes");
    });
  }
  return detail::run_units(tasks, config.threads);
}

struct SummaryRow {
  std::string experiment;
  Index mu = -1;
  Index day = -1;
  Index dataset = -1;  // baseline dataset index, -1 otherwise
  Index replicates = 0;
  double mean_auc = 0.0;
};

// Replicate means per (mu, day), or per dataset for the baseline, in
// first-appearance order.
inline std::vector<SummaryRow> summarize(const std::vector<ExperimentResult>& results) {
  std::vector<SummaryRow> rows;
  for (const auto& r : results) {
    const Index dataset = r.experiment == "baseline" ? r.replicate : -1;
    auto it = std::ranges::find_if(rows, [&](const SummaryRow& s) {
      return s.experiment == r.experiment && s.mu == r.mu && s.day == r.day && s.dataset == dataset;
    });
    if (it == rows.end()) {
      rows.push_back({r.experiment, r.mu, r.day, dataset, 0, 0.0});
      it = rows.end() - 1;
    }
    it->mean_auc += r.auc;
    it->replicates++;
  }
  for (auto& s : rows) s.mean_auc /= s.replicates;
  return rows;
}

}  // namespace gchmm
