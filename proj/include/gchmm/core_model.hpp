#pragma once

// Domain types and the two probability kernels (group-test emission and SIS
// transition) shared by the simulator and the Gibbs sampler.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gchmm/errors.hpp"

namespace gchmm {

using Index = std::int32_t;

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

enum class Param : std::size_t { alpha = 0, beta, beta_f, gamma, theta0, theta1 };

inline constexpr std::size_t kNumParams = 6;
inline constexpr std::array<Param, kNumParams> kAllParams = {
    Param::alpha, Param::beta, Param::beta_f, Param::gamma, Param::theta0, Param::theta1};

inline constexpr const char* param_name(Param p) {
  constexpr std::array<const char*, kNumParams> names = {"alpha",  "beta",   "beta_f",
                                                         "gamma",  "theta0", "theta1"};
  return names[static_cast<std::size_t>(p)];
}

struct ModelParameters {
  double alpha = 0.0;   // outside-population infection, per step
  double beta = 0.0;    // per infected non-family contact, per step
  double beta_f = 0.0;  // per infected family member, per step
  double gamma = 0.0;   // recovery, per step
  double theta0 = 0.0;  // P(positive test | healthy)
  double theta1 = 0.0;  // P(positive test | infected)

  double& operator[](Param p) {
    switch (p) {
      case Param::alpha: return alpha;
      case Param::beta: return beta;
      case Param::beta_f: return beta_f;
      case Param::gamma: return gamma;
      case Param::theta0: return theta0;
      case Param::theta1: return theta1;
    }
    return alpha;
  }
  double operator[](Param p) const { return const_cast<ModelParameters&>(*this)[p]; }

  bool in_unit_interval() const {
    return std::ranges::all_of(kAllParams, [this](Param p) {
      const double v = (*this)[p];
      return v > 0.0 && v < 1.0;
    });
  }
  bool rates_ordered() const { return alpha < beta && beta < beta_f; }
  bool thetas_ordered() const { return theta0 < theta1; }
  bool valid() const { return in_unit_interval() && rates_ordered() && thetas_ordered(); }

  friend bool operator==(const ModelParameters&, const ModelParameters&) = default;
};

inline double max_abs_difference(const ModelParameters& a, const ModelParameters& b) {
  double d = 0.0;
  for (Param p : kAllParams) d = std::max(d, std::abs(a[p] - b[p]));
  return d;
}

struct BetaPrior {
  double a = 1.0;
  double b = 1.0;
  double mean() const { return a / (a + b); }
  friend bool operator==(const BetaPrior&, const BetaPrior&) = default;
};

struct HyperParameters {
  std::array<BetaPrior, kNumParams> priors{};

  BetaPrior& operator[](Param p) { return priors[static_cast<std::size_t>(p)]; }
  const BetaPrior& operator[](Param p) const { return priors[static_cast<std::size_t>(p)]; }

  bool valid() const {
    return std::ranges::all_of(priors, [](const BetaPrior& bp) { return bp.a > 0.0 && bp.b > 0.0; });
  }
  friend bool operator==(const HyperParameters&, const HyperParameters&) = default;
};

// ---------------------------------------------------------------------------
// Hidden states
// ---------------------------------------------------------------------------

// Binary I x (T+1) matrix, stored time-major so that a sweep over t then i is
// a sequential scan.
class HealthStateMatrix {
 public:
  HealthStateMatrix() = default;
  HealthStateMatrix(Index num_individuals, Index horizon)
      : num_individuals_(num_individuals),
        horizon_(horizon),
        states_(static_cast<std::size_t>(num_individuals) * static_cast<std::size_t>(horizon + 1), 0) {
    if (num_individuals <= 0 || horizon <= 0)
      throw DataError("HealthStateMatrix: dimensions must be positive");
  }

  Index num_individuals() const { return num_individuals_; }
  Index horizon() const { return horizon_; }

  std::uint8_t operator()(Index i, Index t) const { return states_[offset(i, t)]; }
  void set(Index i, Index t, std::uint8_t value) {
    if (value > 1) throw DomainError("HealthStateMatrix: state must be 0 or 1");
    states_[offset(i, t)] = value;
  }

  std::span<const std::uint8_t> column(Index t) const {
    return {states_.data() + static_cast<std::size_t>(t) * num_individuals_,
            static_cast<std::size_t>(num_individuals_)};
  }

  std::size_t count_infected() const {
    return static_cast<std::size_t>(std::ranges::count(states_, std::uint8_t{1}));
  }

  // Copy restricted to times 0..t_max.
  HealthStateMatrix truncated(Index t_max) const {
    if (t_max < 1 || t_max > horizon_) throw DataError("HealthStateMatrix: bad truncation horizon");
    HealthStateMatrix out(num_individuals_, t_max);
    std::copy_n(states_.begin(), out.states_.size(), out.states_.begin());
    return out;
  }

  friend bool operator==(const HealthStateMatrix&, const HealthStateMatrix&) = default;

 private:
  std::size_t offset(Index i, Index t) const {
    return static_cast<std::size_t>(t) * static_cast<std::size_t>(num_individuals_) +
           static_cast<std::size_t>(i);
  }

  Index num_individuals_ = 0;
  Index horizon_ = 0;
  std::vector<std::uint8_t> states_;
};

// ---------------------------------------------------------------------------
// Families
// ---------------------------------------------------------------------------

class FamilyPartition {
 public:
  FamilyPartition() = default;

  // Throws DataError unless the families are non-empty, pairwise disjoint and
  // cover 0..num_individuals-1.
  FamilyPartition(Index num_individuals, std::vector<std::vector<Index>> families)
      : families_(std::move(families)), family_of_(static_cast<std::size_t>(num_individuals), -1) {
    if (num_individuals <= 0) throw DataError("FamilyPartition: no individuals");
    for (std::size_t f = 0; f < families_.size(); ++f) {
      if (families_[f].empty()) throw DataError("FamilyPartition: empty family");
      std::ranges::sort(families_[f]);
      for (Index i : families_[f]) {
        if (i < 0 || i >= num_individuals) throw DataError("FamilyPartition: individual out of range");
        if (family_of_[i] != -1) throw DataError("FamilyPartition: families overlap");
        family_of_[i] = static_cast<Index>(f);
      }
    }
    if (std::ranges::find(family_of_, -1) != family_of_.end())
      throw DataError("FamilyPartition: families do not cover every individual");
  }

  Index num_individuals() const { return static_cast<Index>(family_of_.size()); }
  Index num_families() const { return static_cast<Index>(families_.size()); }
  Index family_of(Index i) const { return family_of_[i]; }
  std::span<const Index> members(Index f) const { return families_[f]; }
  Index size_of(Index f) const { return static_cast<Index>(families_[f].size()); }
  bool same_family(Index i, Index j) const { return family_of_[i] == family_of_[j]; }
  const std::vector<std::vector<Index>>& families() const { return families_; }

  friend bool operator==(const FamilyPartition&, const FamilyPartition&) = default;

 private:
  std::vector<std::vector<Index>> families_;
  std::vector<Index> family_of_;
};

// ---------------------------------------------------------------------------
// Contacts
// ---------------------------------------------------------------------------

struct Edge {
  Index i = 0;
  Index j = 0;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Non-family contact sets C_{i,t} for t = 0..T-1, stored per step in CSR form.
class TemporalContactNetwork {
 public:
  TemporalContactNetwork() = default;

  // edges_per_step[t] lists undirected edges at step t; each edge may appear in
  // either orientation but only once.
  TemporalContactNetwork(Index num_individuals, const std::vector<std::vector<Edge>>& edges_per_step)
      : num_individuals_(num_individuals), steps_(static_cast<Index>(edges_per_step.size())) {
    if (num_individuals <= 0) throw DataError("TemporalContactNetwork: no individuals");
    const auto n = static_cast<std::size_t>(num_individuals);
    offsets_.assign(static_cast<std::size_t>(steps_) * (n + 1), 0);
    for (Index t = 0; t < steps_; ++t) {
      std::vector<std::vector<Index>> adj(n);
      for (const Edge& e : edges_per_step[t]) {
        if (e.i < 0 || e.j < 0 || e.i >= num_individuals || e.j >= num_individuals)
          throw DataError("TemporalContactNetwork: endpoint out of range");
        if (e.i == e.j) throw DataError("TemporalContactNetwork: self contact");
        adj[e.i].push_back(e.j);
        adj[e.j].push_back(e.i);
      }
      std::size_t* off = offsets_.data() + static_cast<std::size_t>(t) * (n + 1);
      off[0] = neighbors_.size();
      for (std::size_t i = 0; i < n; ++i) {
        std::ranges::sort(adj[i]);
        if (std::adjacent_find(adj[i].begin(), adj[i].end()) != adj[i].end())
          throw DataError("TemporalContactNetwork: duplicate edge");
        neighbors_.insert(neighbors_.end(), adj[i].begin(), adj[i].end());
        off[i + 1] = neighbors_.size();
      }
    }
  }

  Index num_individuals() const { return num_individuals_; }
  Index num_steps() const { return steps_; }

  std::span<const Index> contacts(Index t, Index i) const {
    const std::size_t* off = offsets_.data() + static_cast<std::size_t>(t) * (num_individuals_ + 1);
    return {neighbors_.data() + off[i], off[i + 1] - off[i]};
  }

  std::size_t num_edges(Index t) const {
    const std::size_t* off = offsets_.data() + static_cast<std::size_t>(t) * (num_individuals_ + 1);
    return (off[num_individuals_] - off[0]) / 2;
  }

  // Undirected edges at step t with i < j, sorted.
  std::vector<Edge> edges(Index t) const {
    std::vector<Edge> out;
    for (Index i = 0; i < num_individuals_; ++i)
      for (Index j : contacts(t, i))
        if (i < j) out.push_back({i, j});
    return out;
  }

  // Network restricted to steps 0..steps-1.
  TemporalContactNetwork truncated(Index steps) const {
    if (steps < 0 || steps > steps_) throw DataError("TemporalContactNetwork: bad truncation");
    std::vector<std::vector<Edge>> e(static_cast<std::size_t>(steps));
    for (Index t = 0; t < steps; ++t) e[t] = edges(t);
    return TemporalContactNetwork(num_individuals_, e);
  }

  // Throws DataError if any contact joins two members of the same family.
  void validate_against(const FamilyPartition& families) const {
    if (families.num_individuals() != num_individuals_)
      throw DataError("contact network and family partition disagree on population size");
    for (Index t = 0; t < steps_; ++t)
      for (Index i = 0; i < num_individuals_; ++i)
        for (Index j : contacts(t, i))
          if (families.same_family(i, j))
            throw DataError("contact network contains a family pair at t=" + std::to_string(t));
  }

  friend bool operator==(const TemporalContactNetwork&, const TemporalContactNetwork&) = default;

 private:
  Index num_individuals_ = 0;
  Index steps_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<Index> neighbors_;
};

// ---------------------------------------------------------------------------
// Observations
// ---------------------------------------------------------------------------

// Group-test results Y_{f,t}, defined exactly on the per-family schedule.
class ObservationSet {
 public:
  static constexpr std::int8_t kUntested = -1;

  ObservationSet() = default;
  ObservationSet(Index num_families, Index horizon)
      : num_families_(num_families),
        horizon_(horizon),
        grid_(static_cast<std::size_t>(num_families) * static_cast<std::size_t>(horizon + 1), kUntested) {
    if (num_families <= 0 || horizon <= 0) throw DataError("ObservationSet: dimensions must be positive");
  }

  Index num_families() const { return num_families_; }
  Index horizon() const { return horizon_; }

  void add(Index f, Index t, int result) {
    if (f < 0 || f >= num_families_ || t < 0 || t > horizon_)
      throw DataError("ObservationSet: (f,t) out of range");
    if (result != 0 && result != 1) throw DataError("ObservationSet: result must be 0 or 1");
    auto& cell = grid_[offset(f, t)];
    if (cell != kUntested) throw DataError("ObservationSet: duplicate observation");
    cell = static_cast<std::int8_t>(result);
    ++size_;
  }

  // -1 if (f,t) is not on the schedule.
  std::int8_t result(Index f, Index t) const { return grid_[offset(f, t)]; }
  bool tested(Index f, Index t) const { return result(f, t) != kUntested; }
  std::size_t size() const { return size_; }

  std::vector<Index> schedule(Index f) const {
    std::vector<Index> days;
    for (Index t = 0; t <= horizon_; ++t)
      if (tested(f, t)) days.push_back(t);
    return days;
  }

  // Latest tested time, or -1 when empty.
  Index max_time() const {
    for (Index t = horizon_; t >= 0; --t)
      for (Index f = 0; f < num_families_; ++f)
        if (tested(f, t)) return t;
    return -1;
  }

  // Observations with t <= t_max, on horizon t_max.
  ObservationSet truncated(Index t_max) const {
    ObservationSet out(num_families_, t_max);
    for (Index t = 0; t <= std::min(t_max, horizon_); ++t)
      for (Index f = 0; f < num_families_; ++f)
        if (tested(f, t)) out.add(f, t, result(f, t));
    return out;
  }

  friend bool operator==(const ObservationSet&, const ObservationSet&) = default;

 private:
  std::size_t offset(Index f, Index t) const {
    return static_cast<std::size_t>(t) * static_cast<std::size_t>(num_families_) + static_cast<std::size_t>(f);
  }

  Index num_families_ = 0;
  Index horizon_ = 0;
  std::vector<std::int8_t> grid_;
  std::size_t size_ = 0;
};

// ---------------------------------------------------------------------------
// Infection origins
// ---------------------------------------------------------------------------

enum class Origin : std::uint8_t { none = 0, outside = 1, family = 2, network = 3 };

// O_{i,t} for t = 0..T-1; non-zero exactly where X_{i,t}=0 and X_{i,t+1}=1.
class OriginMatrix {
 public:
  OriginMatrix() = default;
  OriginMatrix(Index num_individuals, Index horizon)
      : num_individuals_(num_individuals),
        horizon_(horizon),
        origins_(static_cast<std::size_t>(num_individuals) * static_cast<std::size_t>(horizon), Origin::none) {}

  Index num_individuals() const { return num_individuals_; }
  Index horizon() const { return horizon_; }
  Origin operator()(Index i, Index t) const { return origins_[offset(i, t)]; }
  void set(Index i, Index t, Origin o) { origins_[offset(i, t)] = o; }

  std::size_t count(Origin o) const { return static_cast<std::size_t>(std::ranges::count(origins_, o)); }

  friend bool operator==(const OriginMatrix&, const OriginMatrix&) = default;

 private:
  std::size_t offset(Index i, Index t) const {
    return static_cast<std::size_t>(t) * static_cast<std::size_t>(num_individuals_) + static_cast<std::size_t>(i);
  }

  Index num_individuals_ = 0;
  Index horizon_ = 0;
  std::vector<Origin> origins_;
};

// ---------------------------------------------------------------------------
// Kernels
// ---------------------------------------------------------------------------

enum class InfectionMode { exact, linear };

// Upper clamp on the linear infection probability.
inline constexpr double kLinearClampEpsilon = 1e-9;

// P(Y_{f,t}=1 | n_prime of n_f members infected): the per-member test
// probabilities averaged over the pool.
inline double emission_positive_prob(int n_f, int n_prime, const ModelParameters& params) {
  if (n_f <= 0) throw DomainError("emission_positive_prob: family size must be positive");
  if (n_prime < 0 || n_prime > n_f) throw DomainError("emission_positive_prob: infected count outside [0, n_f]");
  return ((n_f - n_prime) * params.theta0 + n_prime * params.theta1) / n_f;
}

inline double emission_prob(int result, int n_f, int n_prime, const ModelParameters& params) {
  const double p = emission_positive_prob(n_f, n_prime, params);
  return result == 1 ? p : 1.0 - p;
}

// Probability that a susceptible with c_prime infected non-family contacts and
// n_prime infected family members becomes infected in one step.
inline double infection_prob(int c_prime, int n_prime, const ModelParameters& params,
                             InfectionMode mode = InfectionMode::linear) {
  if (c_prime < 0 || n_prime < 0) throw DomainError("infection_prob: counts must be nonnegative");
  if (mode == InfectionMode::exact) {
    return 1.0 - (1.0 - params.alpha) * std::pow(1.0 - params.beta, c_prime) *
                     std::pow(1.0 - params.beta_f, n_prime);
  }
  const double p = params.alpha + params.beta * c_prime + params.beta_f * n_prime;
  return std::clamp(p, 0.0, 1.0 - kLinearClampEpsilon);
}

// Entry (x_now, x_next) of the SIS transition matrix, linear infection form.
inline double transition_prob(int x_now, int x_next, int c_prime, int n_prime, const ModelParameters& params) {
  if (x_now == 1) return x_next == 0 ? params.gamma : 1.0 - params.gamma;
  const double p = infection_prob(c_prime, n_prime, params, InfectionMode::linear);
  return x_next == 1 ? p : 1.0 - p;
}

}  // namespace gchmm
