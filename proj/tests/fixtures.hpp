#pragma once

// Shared test fixtures: a brute-force posterior over every hidden
// configuration of a tiny instance, and the three-person two-step graph.

#include <cstdint>
#include <vector>

#include "gchmm/inference.hpp"

namespace gchmm::testing {

// P(X, Y) for X_0 = 0, linear transitions and pooled emissions.
inline double joint_probability(const HealthStateMatrix& x, const ObservationSet& y,
                                const TemporalContactNetwork& network, const FamilyPartition& families,
                                const ModelParameters& params) {
  double p = 1.0;
  const Index n = x.num_individuals(), horizon = x.horizon();
  for (Index t = 0; t < horizon; ++t) {
    for (Index i = 0; i < n; ++i) {
      int c = 0;
      for (Index j : network.contacts(t, i)) c += x(j, t);
      int nf = 0;
      for (Index j : families.members(families.family_of(i)))
        if (j != i) nf += x(j, t);
      p *= transition_prob(x(i, t), x(i, t + 1), c, nf, params);
    }
  }
  for (Index t = 0; t <= horizon; ++t) {
    for (Index f = 0; f < families.num_families(); ++f) {
      if (!y.tested(f, t)) continue;
      int infected = 0;
      for (Index j : families.members(f)) infected += x(j, t);
      p *= emission_prob(y.result(f, t), families.size_of(f), infected, params);
    }
  }
  return p;
}

// Bit k of `code` is X_{i,t} with k = (t-1)*I + i.
inline HealthStateMatrix decode(std::uint64_t code, Index n, Index horizon) {
  HealthStateMatrix x(n, horizon);
  for (Index t = 1; t <= horizon; ++t)
    for (Index i = 0; i < n; ++i) x.set(i, t, static_cast<std::uint8_t>((code >> ((t - 1) * n + i)) & 1));
  return x;
}

// Exact P(X_{i,t}=1 | Y) by summing the joint over all 2^(I*T) hidden states.
inline MarginalMatrix exact_marginals(const ObservationSet& y, const TemporalContactNetwork& network,
                                      const FamilyPartition& families, const ModelParameters& params) {
  const Index n = families.num_individuals(), horizon = y.horizon();
  const std::uint64_t configs = std::uint64_t{1} << (n * horizon);
  MarginalMatrix m(n, horizon);
  double z = 0.0;
  for (std::uint64_t code = 0; code < configs; ++code) {
    const HealthStateMatrix x = decode(code, n, horizon);
    const double p = joint_probability(x, y, network, families, params);
    z += p;
    for (Index t = 1; t <= horizon; ++t)
      for (Index i = 0; i < n; ++i)
        if (x(i, t)) m(i, t) += p;
  }
  for (Index t = 1; t <= horizon; ++t)
    for (Index i = 0; i < n; ++i) m(i, t) /= z;
  return m;
}

// P(X_{i,t}=1 | rest) from the full joint with X_{i,t} set each way.
inline double exact_conditional(Index i, Index t, HealthStateMatrix x, const ObservationSet& y,
                                const TemporalContactNetwork& network, const FamilyPartition& families,
                                const ModelParameters& params) {
  x.set(i, t, 1);
  const double p1 = joint_probability(x, y, network, families, params);
  x.set(i, t, 0);
  const double p0 = joint_probability(x, y, network, families, params);
  return p1 / (p0 + p1);
}

// Three people in their own households over two steps. Contacts: {1,3} at
// t=0, {1,3} and {2,3} at t=1 (1-based names). Tests: person 2 at t=0
// (negative), person 3 at t=1 and person 1 at t=2 (both positive).
struct SmallGraph {
  FamilyPartition families;
  TemporalContactNetwork network;
  ObservationSet y;
  ModelParameters params;
};

inline SmallGraph small_graph() {
  SmallGraph g;
  g.families = FamilyPartition(3, {{0}, {1}, {2}});
  g.network = TemporalContactNetwork(3, {{{0, 2}}, {{0, 2}, {1, 2}}});
  g.y = ObservationSet(3, 2);
  g.y.add(1, 0, 0);
  g.y.add(2, 1, 1);
  g.y.add(0, 2, 1);
  g.params = {.alpha = 0.1, .beta = 0.2, .beta_f = 0.3, .gamma = 0.3, .theta0 = 0.1, .theta1 = 0.8};
  return g;
}

}  // namespace gchmm::testing
