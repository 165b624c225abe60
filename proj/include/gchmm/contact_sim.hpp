#pragma once

// Synthetic populations: family partitions, daily random contact graphs,
// ground-truth parameters, SIS epidemics and scheduled group tests.

#include <algorithm>
#include <cstdint>
#include <iterator>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "gchmm/core_model.hpp"
#include "gchmm/random.hpp"

namespace gchmm {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  friend bool operator==(const Range&, const Range&) = default;
};

struct SimulationConfig {
  Index population_size = 100;
  Index num_families = 33;
  Index horizon_days = 360;
  Index tests_per_family = 360;
  double contact_edge_prob = 0.03;
  Index max_family_size = 5;
  // alpha, beta and beta_f are drawn from (0, rate_upper].
  double rate_upper = 0.005;
  Range theta0_range{0.01, 0.03};
  Range theta1_range{0.8, 1.0};
  Range gamma_range{0.1, 0.5};
  // Test days are drawn from 1..T, or from 0..T when this is set.
  bool include_day_zero = false;
  std::uint64_t seed = 1;

  Index test_day_pool_size() const { return include_day_zero ? horizon_days + 1 : horizon_days; }

  void validate() const {
    auto fail = [](const std::string& m) { throw ConfigError("simulation config: " + m); };
    if (population_size <= 0) fail("population_size must be positive");
    if (num_families <= 0) fail("num_families must be positive");
    if (horizon_days <= 0) fail("horizon_days must be positive");
    if (max_family_size <= 0) fail("max_family_size must be positive");
    if (num_families > population_size) fail("more families than individuals");
    if (population_size > static_cast<std::int64_t>(num_families) * max_family_size)
      fail("population does not fit in families of at most max_family_size");
    if (tests_per_family < 1 || tests_per_family > test_day_pool_size())
      fail("tests_per_family must lie in [1, number of candidate test days]");
    if (!(contact_edge_prob >= 0.0 && contact_edge_prob <= 1.0)) fail("contact_edge_prob must lie in [0,1]");
    if (!(rate_upper > 0.0 && rate_upper < 1.0)) fail("rate_upper must lie in (0,1)");
    for (const auto& [name, r] : {std::pair{"theta0_range", theta0_range}, std::pair{"theta1_range", theta1_range},
                                  std::pair{"gamma_range", gamma_range}}) {
      if (!(r.lo > 0.0 && r.hi <= 1.0 && r.lo <= r.hi)) fail(std::string(name) + " must satisfy 0 < lo <= hi <= 1");
    }
    if (theta0_range.hi >= theta1_range.lo) fail("theta0_range must lie strictly below theta1_range");
  }

  friend bool operator==(const SimulationConfig&, const SimulationConfig&) = default;
};

// Sizes drawn uniformly from 1..max_family_size, then repaired one unit at a
// time (shrink the largest, grow the smallest) until they sum to the population.
inline FamilyPartition generate_families(const SimulationConfig& config) {
  config.validate();
  Rng rng(derive_seed(config.seed, Stream::families));
  std::uniform_int_distribution<Index> size_dist(1, config.max_family_size);
  std::vector<Index> sizes(static_cast<std::size_t>(config.num_families));
  for (auto& s : sizes) s = size_dist(rng);

  Index total = std::accumulate(sizes.begin(), sizes.end(), Index{0});
  while (total > config.population_size) {
    --*std::ranges::max_element(sizes);
    --total;
  }
  while (total < config.population_size) {
    ++*std::ranges::min_element(sizes);
    ++total;
  }

  std::vector<Index> order(static_cast<std::size_t>(config.population_size));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::vector<Index>> families(sizes.size());
  std::size_t next = 0;
  for (std::size_t f = 0; f < sizes.size(); ++f)
    for (Index k = 0; k < sizes[f]; ++k) families[f].push_back(order[next++]);
  return FamilyPartition(config.population_size, std::move(families));
}

// One independent G(n,p) graph per step over all non-family pairs.
inline TemporalContactNetwork generate_network(const SimulationConfig& config, const FamilyPartition& families) {
  config.validate();
  if (families.num_individuals() != config.population_size)
    throw ConfigError("generate_network: family partition does not match population_size");
  Rng rng(derive_seed(config.seed, Stream::network));
  std::bernoulli_distribution edge(config.contact_edge_prob);
  const Index n = config.population_size;
  std::vector<std::vector<Edge>> steps(static_cast<std::size_t>(config.horizon_days));
  for (Index t = 0; t < config.horizon_days; ++t) {
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j)
        if (!families.same_family(i, j) && edge(rng)) steps[t].push_back({i, j});
  }
  return TemporalContactNetwork(n, steps);
}

inline ModelParameters sample_ground_truth_parameters(const SimulationConfig& config) {
  config.validate();
  Rng rng(derive_seed(config.seed, Stream::parameters));
  // (0, upper]: reflect a draw from [0, upper).
  auto rate = [&] { return config.rate_upper - std::uniform_real_distribution<double>(0.0, config.rate_upper)(rng); };
  auto in = [&](const Range& r) { return std::uniform_real_distribution<double>(r.lo, r.hi)(rng); };

  ModelParameters p;
  do {
    p.alpha = rate();
    p.beta = rate();
    p.beta_f = rate();
  } while (!p.rates_ordered());
  p.theta0 = in(config.theta0_range);
  p.theta1 = in(config.theta1_range);
  p.gamma = in(config.gamma_range);
  return p;
}

// Forward (ancestral) sampling of X with X_0 = 0. When `origins` is given, each
// new infection is attributed to a source with weights (alpha, beta_f n', beta c').
inline HealthStateMatrix forward_sample_states(const TemporalContactNetwork& network, const FamilyPartition& families,
                                               const ModelParameters& params, Index horizon, Rng& rng,
                                               OriginMatrix* origins = nullptr) {
  const Index n = families.num_individuals();
  if (network.num_individuals() != n) throw DataError("forward sampling: population size mismatch");
  if (network.num_steps() < horizon) throw DataError("forward sampling: network shorter than horizon");
  HealthStateMatrix x(n, horizon);
  if (origins) *origins = OriginMatrix(n, horizon);

  std::vector<int> family_infected(static_cast<std::size_t>(families.num_families()));
  for (Index t = 0; t < horizon; ++t) {
    std::ranges::fill(family_infected, 0);
    for (Index i = 0; i < n; ++i) family_infected[families.family_of(i)] += x(i, t);
    for (Index i = 0; i < n; ++i) {
      const int now = x(i, t);
      int c = 0;
      for (Index j : network.contacts(t, i)) c += x(j, t);
      const int nf = family_infected[families.family_of(i)] - now;
      const int next = sample_bernoulli(transition_prob(now, 1, c, nf, params), rng);
      x.set(i, t + 1, static_cast<std::uint8_t>(next));
      if (now == 0 && next == 1) {
        // Drawn whether or not origins are recorded so X does not depend on it.
        const double w_out = params.alpha, w_fam = params.beta_f * nf, w_net = params.beta * c;
        const double u = uniform01(rng) * (w_out + w_fam + w_net);
        if (origins)
          origins->set(i, t, u < w_out ? Origin::outside : (u < w_out + w_fam ? Origin::family : Origin::network));
      }
    }
  }
  return x;
}

inline HealthStateMatrix simulate_epidemic(const TemporalContactNetwork& network, const FamilyPartition& families,
                                           const ModelParameters& params, Index horizon, std::uint64_t seed,
                                           OriginMatrix* origins = nullptr) {
  Rng rng(derive_seed(seed, Stream::epidemic));
  return forward_sample_states(network, families, params, horizon, rng, origins);
}

// Per family, `tests_per_family` distinct days drawn uniformly without
// replacement; each result ~ Bernoulli(emission_positive_prob).
inline ObservationSet schedule_and_sample_tests(const HealthStateMatrix& states, const FamilyPartition& families,
                                                const ModelParameters& params, Index tests_per_family,
                                                std::uint64_t seed, bool include_day_zero = false) {
  const Index horizon = states.horizon();
  const Index first = include_day_zero ? 0 : 1;
  std::vector<Index> pool(static_cast<std::size_t>(horizon - first + 1));
  std::iota(pool.begin(), pool.end(), first);
  if (tests_per_family < 1 || tests_per_family > static_cast<Index>(pool.size()))
    throw ConfigError("tests_per_family outside [1, number of candidate days]");

  Rng rng(derive_seed(seed, Stream::tests));
  ObservationSet y(families.num_families(), horizon);
  std::vector<Index> days;
  for (Index f = 0; f < families.num_families(); ++f) {
    days.clear();
    std::sample(pool.begin(), pool.end(), std::back_inserter(days), tests_per_family, rng);
    for (Index t : days) {
      int infected = 0;
      for (Index i : families.members(f)) infected += states(i, t);
      y.add(f, t, sample_bernoulli(emission_positive_prob(families.size_of(f), infected, params), rng));
    }
  }
  return y;
}

struct Dataset {
  SimulationConfig config;
  FamilyPartition families;
  TemporalContactNetwork network;
  ModelParameters params;
  HealthStateMatrix states;
  ObservationSet observations;
  OriginMatrix origins;  // true infection sources, diagnostics only
};

inline Dataset simulate_dataset(const SimulationConfig& config) {
  config.validate();
  Dataset d;
  d.config = config;
  d.families = generate_families(config);
  d.network = generate_network(config, d.families);
  d.params = sample_ground_truth_parameters(config);
  d.states = simulate_epidemic(d.network, d.families, d.params, config.horizon_days, config.seed, &d.origins);
  d.observations = schedule_and_sample_tests(d.states, d.families, d.params, config.tests_per_family, config.seed,
                                             config.include_day_zero);
  return d;
}

}  // namespace gchmm
