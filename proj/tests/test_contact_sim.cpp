#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "gchmm/contact_sim.hpp"

using namespace gchmm;

namespace {

// |observed - n p| within three binomial standard deviations.
void expect_binomial(std::uint64_t successes, std::uint64_t trials, double p) {
  ASSERT_GT(trials, 0u);
  const double sd = std::sqrt(trials * p * (1.0 - p));
  EXPECT_LE(std::abs(static_cast<double>(successes) - trials * p), 3.0 * sd)
      << successes << " of " << trials << " vs p=" << p;
}

SimulationConfig shape(Index n, Index f, Index horizon, double p, std::uint64_t seed) {
  SimulationConfig c;
  c.population_size = n;
  c.num_families = f;
  c.horizon_days = horizon;
  c.tests_per_family = horizon;
  c.contact_edge_prob = p;
  c.seed = seed;
  return c;
}

ModelParameters params(double a, double b, double bf, double g) {
  return {.alpha = a, .beta = b, .beta_f = bf, .gamma = g, .theta0 = 0.02, .theta1 = 0.9};
}

}  // namespace

TEST(Families, ForcedSingleFamily) {
  const FamilyPartition f = generate_families(shape(5, 1, 10, 0.1, 1));
  ASSERT_EQ(f.num_families(), 1);
  EXPECT_EQ(f.size_of(0), 5);
}

TEST(Families, TableShapes) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    for (auto [n, nf] : {std::pair{64, 15}, std::pair{100, 33}}) {
      const FamilyPartition f = generate_families(shape(n, nf, 10, 0.1, seed));
      EXPECT_EQ(f.num_families(), nf);
      Index total = 0;
      for (Index k = 0; k < nf; ++k) {
        EXPECT_GE(f.size_of(k), 1);
        EXPECT_LE(f.size_of(k), 5);
        total += f.size_of(k);
      }
      EXPECT_EQ(total, n);
    }
  }
}

TEST(Families, Deterministic) {
  EXPECT_EQ(generate_families(shape(64, 15, 10, 0.1, 9)), generate_families(shape(64, 15, 10, 0.1, 9)));
}

TEST(Network, FamilyPairsExcluded) {
  SimulationConfig c = shape(2, 1, 50, 1.0, 1);
  const FamilyPartition f = generate_families(c);
  const TemporalContactNetwork n = generate_network(c, f);
  for (Index t = 0; t < 50; ++t) EXPECT_EQ(n.num_edges(t), 0u);
}

TEST(Network, ZeroDensity) {
  SimulationConfig c = shape(5, 5, 20, 0.0, 1);
  const TemporalContactNetwork n = generate_network(c, generate_families(c));
  for (Index t = 0; t < 20; ++t) EXPECT_EQ(n.num_edges(t), 0u);
}

TEST(Network, EdgeFrequencyAndDegree) {
  SimulationConfig c = shape(100, 33, 360, 0.03, 4);
  const FamilyPartition f = generate_families(c);
  const TemporalContactNetwork n = generate_network(c, f);
  n.validate_against(f);
  std::uint64_t pairs = 0;
  for (Index i = 0; i < 100; ++i)
    for (Index j = i + 1; j < 100; ++j)
      if (!f.same_family(i, j)) ++pairs;
  std::uint64_t edges = 0;
  for (Index t = 0; t < 360; ++t) edges += n.num_edges(t);
  expect_binomial(edges, pairs * 360, 0.03);
  const double mean_degree = 2.0 * edges / (360.0 * 100.0);
  double co_members = 0.0;
  for (Index k = 0; k < f.num_families(); ++k) co_members += f.size_of(k) * (f.size_of(k) - 1.0);
  const double expected = 0.03 * (99.0 - co_members / 100.0);
  EXPECT_NEAR(mean_degree, expected, 0.2);
  EXPECT_NEAR(mean_degree, 2.9, 0.2);
}

TEST(Parameters, RangesAndOrdering) {
  for (std::uint64_t seed = 1; seed <= 500; ++seed) {
    const ModelParameters p = sample_ground_truth_parameters(shape(10, 3, 10, 0.1, seed));
    EXPECT_GT(p.alpha, 0.0);
    EXPECT_LT(p.alpha, p.beta);
    EXPECT_LT(p.beta, p.beta_f);
    EXPECT_LE(p.beta_f, 0.005);
    EXPECT_GE(p.theta0, 0.01);
    EXPECT_LE(p.theta0, 0.03);
    EXPECT_GE(p.theta1, 0.8);
    EXPECT_LT(p.theta1, 1.0);
    EXPECT_GE(p.gamma, 0.1);
    EXPECT_LE(p.gamma, 0.5);
  }
  EXPECT_EQ(sample_ground_truth_parameters(shape(10, 3, 10, 0.1, 3)),
            sample_ground_truth_parameters(shape(10, 3, 10, 0.1, 3)));
}

TEST(Epidemic, ZeroRatesStayHealthy) {
  SimulationConfig c = shape(20, 6, 100, 0.2, 1);
  const FamilyPartition f = generate_families(c);
  const TemporalContactNetwork n = generate_network(c, f);
  ModelParameters p = params(0.0, 0.0, 0.0, 0.3);
  EXPECT_EQ(simulate_epidemic(n, f, p, 100, 3).count_infected(), 0u);
}

TEST(Epidemic, OutsideInfectionFrequency) {
  const FamilyPartition f(1, {{0}});
  const TemporalContactNetwork n(1, std::vector<std::vector<Edge>>(20000));
  const ModelParameters p = params(0.5, 0.0, 0.0, 0.3);
  const HealthStateMatrix x = simulate_epidemic(n, f, p, 20000, 8);
  std::uint64_t sus = 0, inf = 0, rec_trials = 0, rec = 0;
  for (Index t = 0; t < 20000; ++t) {
    if (x(0, t) == 0) {
      ++sus;
      inf += x(0, t + 1);
    } else {
      ++rec_trials;
      rec += 1 - x(0, t + 1);
    }
  }
  expect_binomial(inf, sus, 0.5);
  expect_binomial(rec, rec_trials, 0.3);
}

TEST(Epidemic, TransitionFrequenciesOnNetwork) {
  SimulationConfig c = shape(60, 20, 400, 0.05, 2);
  const FamilyPartition f = generate_families(c);
  const TemporalContactNetwork n = generate_network(c, f);
  const ModelParameters p = params(0.01, 0.03, 0.06, 0.25);
  const HealthStateMatrix x = simulate_epidemic(n, f, p, 400, 5);
  // Bucket susceptible steps by their exact infection probability.
  std::map<std::pair<int, int>, std::pair<std::uint64_t, std::uint64_t>> buckets;
  std::uint64_t rec_trials = 0, rec = 0;
  for (Index t = 0; t < 400; ++t) {
    for (Index i = 0; i < 60; ++i) {
      if (x(i, t) == 1) {
        ++rec_trials;
        rec += 1 - x(i, t + 1);
        continue;
      }
      int cc = 0, nf = 0;
      for (Index j : n.contacts(t, i)) cc += x(j, t);
      for (Index j : f.members(f.family_of(i)))
        if (j != i) nf += x(j, t);
      auto& b = buckets[{cc, nf}];
      b.first += x(i, t + 1);
      b.second += 1;
    }
  }
  expect_binomial(rec, rec_trials, 0.25);
  int checked = 0;
  for (const auto& [k, b] : buckets) {
    if (b.second < 500) continue;
    expect_binomial(b.first, b.second, infection_prob(k.first, k.second, p));
    ++checked;
  }
  EXPECT_GE(checked, 2);
}

TEST(Tests, ExhaustiveScheduleAndCounts) {
  SimulationConfig c = shape(12, 4, 30, 0.1, 1);
  const FamilyPartition f = generate_families(c);
  const HealthStateMatrix x(12, 30);
  const ModelParameters p = params(0.001, 0.002, 0.003, 0.2);
  const ObservationSet all = schedule_and_sample_tests(x, f, p, 31, 1, true);
  EXPECT_EQ(all.size(), 4u * 31u);
  for (Index k = 0; k < 4; ++k) EXPECT_EQ(all.schedule(k).size(), 31u);
  const ObservationSet daily = schedule_and_sample_tests(x, f, p, 30, 1);
  EXPECT_EQ(daily.size(), 4u * 30u);
  for (Index k = 0; k < 4; ++k) EXPECT_FALSE(daily.tested(k, 0));
  EXPECT_EQ(schedule_and_sample_tests(x, f, p, 1, 1).size(), 4u);
  EXPECT_THROW(schedule_and_sample_tests(x, f, p, 31, 1), ConfigError);
}

TEST(Tests, FalsePositiveFrequency) {
  const FamilyPartition f(40, [] {
    std::vector<std::vector<Index>> v(10);
    for (Index i = 0; i < 40; ++i) v[i % 10].push_back(i);
    return v;
  }());
  const HealthStateMatrix x(40, 2000);
  const ModelParameters p = params(0.001, 0.002, 0.003, 0.2);
  const ObservationSet y = schedule_and_sample_tests(x, f, p, 2000, 17);
  std::uint64_t pos = 0;
  for (Index k = 0; k < 10; ++k)
    for (Index t : y.schedule(k)) pos += y.result(k, t);
  expect_binomial(pos, y.size(), 0.02);
}

TEST(Dataset, ShapesAndDeterminism) {
  SimulationConfig c = shape(64, 15, 128, 0.05, 3);
  const Dataset a = simulate_dataset(c), b = simulate_dataset(c);
  EXPECT_EQ(a.families, b.families);
  EXPECT_EQ(a.network, b.network);
  EXPECT_EQ(a.states, b.states);
  EXPECT_EQ(a.observations.size(), 15u * 128u);
  EXPECT_EQ(a.states.num_individuals(), 64);
  EXPECT_EQ(a.states.horizon(), 128);
  c.seed = 4;
  EXPECT_NE(simulate_dataset(c).network, a.network);
}

TEST(Config, Validation) {
  SimulationConfig c = shape(10, 11, 10, 0.1, 1);
  EXPECT_THROW(c.validate(), ConfigError);
  c = shape(30, 3, 10, 0.1, 1);
  EXPECT_THROW(c.validate(), ConfigError);
  c = shape(10, 3, 10, 1.5, 1);
  EXPECT_THROW(c.validate(), ConfigError);
}
