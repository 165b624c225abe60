#pragma once

// Gibbs-sampling inference for the group-tested graph-coupled HMM:
// forward-sampled initialisation, single-site resampling of hidden states,
// infection-origin augmentation, conjugate Beta updates and constrained
// parameter redraws inside a two-level convergence loop.

#include <array>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gchmm/contact_sim.hpp"
#include "gchmm/core_model.hpp"
#include "gchmm/random.hpp"

namespace gchmm {

inline constexpr int kRejectionBudget = 10000;

// Integer ranges for the random initial (a, b) of one Beta prior.
struct HyperInitRange {
  int a_min = 1;
  int a_max = 10;
  int b_min = 1;
  int b_max = 10;
  bool valid() const { return a_min > 0 && a_min <= a_max && b_min > 0 && b_min <= b_max; }
  friend bool operator==(const HyperInitRange&, const HyperInitRange&) = default;
};

// a, b ~ U{1..10}, except that b for the three infection rates is scaled by
// 1000 so their prior means are of order 1e-3, the small-rate regime the
// linear transition assumes. With b ~ U{1..10} the initial forward sample
// infects most of the population and the chain never leaves that mode.
inline std::array<HyperInitRange, kNumParams> default_hyper_init() {
  std::array<HyperInitRange, kNumParams> r{};
  for (Param p : {Param::alpha, Param::beta, Param::beta_f}) r[static_cast<std::size_t>(p)] = {1, 10, 1000, 10000};
  return r;
}

// How per-cell infection probabilities are averaged over the final sweeps:
// the sampled indicators, or the full conditionals computed while sampling
// (Rao-Blackwellised; same expectation, far fewer exact ties at 0).
enum class MarginalEstimator { indicator, conditional };

// Which trials feed the theta updates. per_member counts every tested cell
// (i,t) once. sampled_member draws, per family test, the one member whose
// state produced the result (weights theta_{x_j}^y (1-theta_{x_j})^{1-y}) and
// counts only that member, which matches the pooled emission exactly.
enum class TestCounting { per_member, sampled_member };

struct InferenceConfig {
  double inner_flip_threshold = 0.01;
  Index inner_max_sweeps = 100;
  double outer_param_tol = 1e-3;
  Index outer_max_iters = 50;
  Index burn_in_sweeps = 20;
  Index accumulation_sweeps = 50;
  MarginalEstimator marginal_estimator = MarginalEstimator::conditional;
  TestCounting test_counting = TestCounting::sampled_member;
  // Keep running the parameter step (origins, counts, update, redraw) after
  // every burn-in and accumulation sweep, so the marginals average over
  // parameter uncertainty instead of conditioning on the last draw.
  bool update_params_while_averaging = false;
  // Initial hyperparameters are integers drawn uniformly from these ranges...
  std::array<HyperInitRange, kNumParams> hyper_init = default_hyper_init();
  // ...unless a prior is pinned here.
  std::optional<HyperParameters> prior;
  // When set, parameters are held fixed and only X is sampled.
  std::optional<ModelParameters> fixed_params;
  // Independent chains whose marginals and parameters are averaged. Chain 0
  // uses `seed` itself, so one chain reproduces a single run.
  Index num_chains = 1;
  std::uint64_t seed = 1;

  void validate() const {
    auto fail = [](const std::string& m) { throw ConfigError("inference config: " + m); };
    if (!(inner_flip_threshold > 0.0)) fail("inner_flip_threshold must be positive");
    if (!(outer_param_tol > 0.0)) fail("outer_param_tol must be positive");
    if (inner_max_sweeps <= 0 || outer_max_iters <= 0 || accumulation_sweeps <= 0)
      fail("sweep and iteration counts must be positive");
    if (burn_in_sweeps < 0) fail("burn_in_sweeps must be nonnegative");
    if (num_chains < 1) fail("num_chains must be at least 1");
    for (const auto& r : hyper_init)
      if (!r.valid()) fail("hyperparameter init ranges must be positive and ordered");
    if (prior && !prior->valid()) fail("pinned prior must have positive shapes");
    if (fixed_params && !fixed_params->valid()) fail("fixed parameters violate range or ordering constraints");
  }
};

// ---------------------------------------------------------------------------
// Priors and parameter draws
// ---------------------------------------------------------------------------

namespace detail {

inline std::string describe_means(const HyperParameters& h) {
  std::ostringstream os;
  for (Param p : kAllParams) os << ' ' << param_name(p) << '=' << h[p].mean();
  return os.str();
}

}  // namespace detail

// Draws each parameter from its Beta distribution. The rate group
// (alpha, beta, beta_f) and the test group (theta0, theta1) are redrawn jointly
// until ordered, which samples the product of Betas truncated to the ordered
// region.
inline ModelParameters resample_parameters(const HyperParameters& hypers, Rng& rng) {
  if (!hypers.valid()) throw ConstraintError("resample_parameters: non-positive hyperparameter");
  ModelParameters p;
  auto draw = [&](Param q) {
    p[q] = sample_beta(hypers[q].a, hypers[q].b, rng);
    return p[q] > 0.0 && p[q] < 1.0;
  };
  auto exhausted = [&](const char* group) {
    throw ConstraintError(std::string("parameter ordering for ") + group + " not satisfied after " +
                          std::to_string(kRejectionBudget) + " draws; prior means:" + detail::describe_means(hypers));
  };

  for (int k = 0;; ++k) {
    if (k == kRejectionBudget) exhausted("alpha<beta<beta_f");
    const bool ok = draw(Param::alpha) & draw(Param::beta) & draw(Param::beta_f);
    if (ok && p.rates_ordered()) break;
  }
  for (int k = 0;; ++k) {
    if (k == kRejectionBudget) exhausted("gamma");
    if (draw(Param::gamma)) break;
  }
  for (int k = 0;; ++k) {
    if (k == kRejectionBudget) exhausted("theta0<theta1");
    const bool ok = draw(Param::theta0) & draw(Param::theta1);
    if (ok && p.thetas_ordered()) break;
  }
  return p;
}

// Integer (a, b) per parameter, redrawn until the prior means respect
// alpha<beta<beta_f and theta0<theta1. A prior whose means contradict the
// orderings leaves almost no mass in the ordered region once data arrive.
inline HyperParameters random_hyperparameters(const std::array<HyperInitRange, kNumParams>& ranges, Rng& rng) {
  HyperParameters h;
  for (int attempt = 0; attempt < kRejectionBudget; ++attempt) {
    for (std::size_t k = 0; k < kNumParams; ++k) {
      h.priors[k].a = std::uniform_int_distribution<int>(ranges[k].a_min, ranges[k].a_max)(rng);
      h.priors[k].b = std::uniform_int_distribution<int>(ranges[k].b_min, ranges[k].b_max)(rng);
    }
    const double ma = h[Param::alpha].mean(), mb = h[Param::beta].mean(), mf = h[Param::beta_f].mean();
    if (ma < mb && mb < mf && h[Param::theta0].mean() < h[Param::theta1].mean()) return h;
  }
  throw ConstraintError("random_hyperparameters: init ranges never give ordered prior means");
}

inline std::array<HyperInitRange, kNumParams> uniform_hyper_init(int lo, int hi) {
  std::array<HyperInitRange, kNumParams> r{};
  r.fill({lo, hi, lo, hi});
  return r;
}

struct Initialization {
  HyperParameters hypers;
  ModelParameters params;
};

// Random integer hyperparameters, then parameters drawn from them subject to
// the ordering constraints.
inline Initialization initialize(Rng& rng, const std::array<HyperInitRange, kNumParams>& ranges = default_hyper_init()) {
  Initialization init;
  init.hypers = random_hyperparameters(ranges, rng);
  init.params = resample_parameters(init.hypers, rng);
  return init;
}

inline Initialization initialize(std::uint64_t seed,
                                 const std::array<HyperInitRange, kNumParams>& ranges = default_hyper_init()) {
  Rng rng(derive_seed(seed, Stream::chain));
  return initialize(rng, ranges);
}

inline HealthStateMatrix forward_initialize_states(const TemporalContactNetwork& network,
                                                   const FamilyPartition& families, const ModelParameters& params,
                                                   Index horizon, Rng& rng) {
  return forward_sample_states(network, families, params, horizon, rng);
}

// ---------------------------------------------------------------------------
// Single-site conditional
// ---------------------------------------------------------------------------

namespace detail {

// Reads counts straight from X.
struct DirectView {
  const HealthStateMatrix& x;
  const TemporalContactNetwork& network;
  const FamilyPartition& families;

  int state(Index i, Index t) const { return x(i, t); }
  int infected_contacts(Index i, Index t) const {
    int c = 0;
    for (Index j : network.contacts(t, i)) c += x(j, t);
    return c;
  }
  int family_infected(Index f, Index t) const {
    int n = 0;
    for (Index j : families.members(f)) n += x(j, t);
    return n;
  }
};

// P(X_{i,t}=1 | everything else): the product of i's own transition, the
// transitions of every child of X_{i,t} (self, family members and contacts at
// t+1) and the family test at t, evaluated at X_{i,t}=0 and 1. Children that
// are infected at t contribute a gamma-row factor independent of X_{i,t} and
// are skipped.
template <class View>
double conditional_infected(Index i, Index t, const View& view, const ObservationSet& y,
                            const TemporalContactNetwork& network, const FamilyPartition& families,
                            const ModelParameters& params, Index horizon) {
  const Index f = families.family_of(i);
  const int current = view.state(i, t);
  const int fam_now_others = view.family_infected(f, t) - current;
  std::array<double, 2> weight{1.0, 1.0};

  int prev = 0, prev_contacts = 0, prev_family = 0;
  if (t >= 1) {
    prev = view.state(i, t - 1);
    prev_contacts = view.infected_contacts(i, t - 1);
    prev_family = view.family_infected(f, t - 1) - prev;
  }
  const bool tested = y.tested(f, t);

  for (int v = 0; v <= 1; ++v) {
    double w = 1.0;
    if (t >= 1) w *= transition_prob(prev, v, prev_contacts, prev_family, params);
    const int fam_now = fam_now_others + v;
    if (t < horizon) {
      w *= transition_prob(v, view.state(i, t + 1), view.infected_contacts(i, t), fam_now_others, params);
      for (Index j : families.members(f)) {
        if (j == i || view.state(j, t) == 1) continue;
        w *= transition_prob(0, view.state(j, t + 1), view.infected_contacts(j, t), fam_now, params);
      }
      for (Index j : network.contacts(t, i)) {
        if (view.state(j, t) == 1) continue;
        const int c_j = view.infected_contacts(j, t) - current + v;
        w *= transition_prob(0, view.state(j, t + 1), c_j, view.family_infected(families.family_of(j), t), params);
      }
    }
    if (tested) w *= emission_prob(y.result(f, t), families.size_of(f), fam_now, params);
    weight[v] = w;
  }
  const double total = weight[0] + weight[1];
  if (!(total > 0.0)) throw ConstraintError("gibbs conditional: both states have zero probability");
  return weight[1] / total;
}

inline void check_dimensions(const HealthStateMatrix& x, const ObservationSet& y,
                             const TemporalContactNetwork& network, const FamilyPartition& families) {
  if (x.num_individuals() != families.num_individuals() || network.num_individuals() != families.num_individuals())
    throw DataError("population size mismatch between states, network and families");
  if (network.num_steps() < x.horizon()) throw DataError("contact network shorter than the horizon");
  if (y.num_families() != families.num_families()) throw DataError("observations and families disagree on F");
  if (y.horizon() != x.horizon()) throw DataError("observations and states disagree on the horizon");
}

}  // namespace detail

// lambda = P(X_{i,t}=1 | X \ X_{i,t}, Y), computed directly from x.
inline double gibbs_conditional(Index i, Index t, const HealthStateMatrix& x, const ObservationSet& y,
                                const TemporalContactNetwork& network, const FamilyPartition& families,
                                const ModelParameters& params) {
  detail::check_dimensions(x, y, network, families);
  if (t < 1 || t > x.horizon()) throw DomainError("gibbs_conditional: t must lie in 1..T (X_0 is pinned)");
  if (i < 0 || i >= x.num_individuals()) throw DomainError("gibbs_conditional: individual out of range");
  return detail::conditional_infected(i, t, detail::DirectView{x, network, families}, y, network, families, params,
                                      x.horizon());
}

// ---------------------------------------------------------------------------
// Sampler state
// ---------------------------------------------------------------------------

class MarginalMatrix {
 public:
  MarginalMatrix() = default;
  MarginalMatrix(Index num_individuals, Index horizon)
      : num_individuals_(num_individuals),
        horizon_(horizon),
        values_(static_cast<std::size_t>(num_individuals) * static_cast<std::size_t>(horizon + 1), 0.0) {}

  Index num_individuals() const { return num_individuals_; }
  Index horizon() const { return horizon_; }
  double operator()(Index i, Index t) const { return values_[offset(i, t)]; }
  double& operator()(Index i, Index t) { return values_[offset(i, t)]; }

  friend bool operator==(const MarginalMatrix&, const MarginalMatrix&) = default;

 private:
  std::size_t offset(Index i, Index t) const {
    return static_cast<std::size_t>(t) * static_cast<std::size_t>(num_individuals_) + static_cast<std::size_t>(i);
  }
  Index num_individuals_ = 0;
  Index horizon_ = 0;
  std::vector<double> values_;
};

// Current sample plus cached infected-contact and infected-family counts, kept
// in sync on every state change. Not thread-safe; run one state per chain.
class GibbsState {
 public:
  GibbsState(const TemporalContactNetwork& network, const FamilyPartition& families, const ObservationSet& y,
             HealthStateMatrix x, ModelParameters params, HyperParameters hypers, std::uint64_t seed)
      : params(params),
        hypers(hypers),
        rng(seed),
        network_(&network),
        families_(&families),
        y_(&y),
        x_(std::move(x)),
        accumulator_(static_cast<std::size_t>(x_.num_individuals()) * (x_.horizon() + 1), 0),
        conditional_sum_(accumulator_.size(), 0.0) {
    detail::check_dimensions(x_, y, network, families);
    for (Index i = 0; i < x_.num_individuals(); ++i)
      if (x_(i, 0) != 0) throw DataError("GibbsState: X_0 must be all zeros");
    rebuild_caches();
  }

  const HealthStateMatrix& x() const { return x_; }
  Index num_individuals() const { return x_.num_individuals(); }
  Index horizon() const { return x_.horizon(); }

  int infected_contacts(Index i, Index t) const { return contacts_infected_[cell(i, t)]; }
  int family_infected(Index f, Index t) const {
    return family_infected_[static_cast<std::size_t>(t) * families_->num_families() + f];
  }
  int state(Index i, Index t) const { return x_(i, t); }

  void set_state(Index i, Index t, int v) {
    const int delta = v - x_(i, t);
    if (delta == 0) return;
    x_.set(i, t, static_cast<std::uint8_t>(v));
    family_infected_[static_cast<std::size_t>(t) * families_->num_families() + families_->family_of(i)] += delta;
    if (t < horizon())
      for (Index j : network_->contacts(t, i)) contacts_infected_[cell(j, t)] += delta;
  }

  double conditional(Index i, Index t) const {
    return detail::conditional_infected(i, t, *this, *y_, *network_, *families_, params, horizon());
  }

  // One systematic scan: t = 1..T ascending, i ascending within t. Returns the
  // fraction of resampled entries that changed. With `record_conditionals`
  // each lambda is also added to the running conditional sums.
  double sweep(bool record_conditionals = false) {
    std::size_t flips = 0;
    for (Index t = 1; t <= horizon(); ++t) {
      for (Index i = 0; i < num_individuals(); ++i) {
        const double lambda = conditional(i, t);
        if (record_conditionals) conditional_sum_[cell(i, t)] += lambda;
        const int v = sample_bernoulli(lambda, rng);
        if (v != x_(i, t)) {
          set_state(i, t, v);
          ++flips;
        }
      }
    }
    ++sweep_count;
    if (record_conditionals) ++recorded_;
    return static_cast<double>(flips) / (static_cast<double>(num_individuals()) * horizon());
  }

  void accumulate() {
    for (Index t = 0; t <= horizon(); ++t)
      for (Index i = 0; i < num_individuals(); ++i) accumulator_[cell(i, t)] += x_(i, t);
    ++accumulated_;
  }
  Index accumulated_sweeps() const { return accumulated_; }
  std::uint32_t accumulated(Index i, Index t) const { return accumulator_[cell(i, t)]; }

  Index recorded_sweeps() const { return recorded_; }

  MarginalMatrix marginals(MarginalEstimator estimator = MarginalEstimator::indicator) const {
    MarginalMatrix m(num_individuals(), horizon());
    const bool by_conditional = estimator == MarginalEstimator::conditional;
    const Index n = by_conditional ? recorded_ : accumulated_;
    if (n == 0) return m;
    for (Index t = 0; t <= horizon(); ++t)
      for (Index i = 0; i < num_individuals(); ++i)
        m(i, t) = (by_conditional ? conditional_sum_[cell(i, t)] : static_cast<double>(accumulator_[cell(i, t)])) / n;
    return m;
  }

  // Public sampler state.
  OriginMatrix origins;
  ModelParameters params;
  HyperParameters hypers;
  Rng rng;
  Index sweep_count = 0;
  Index outer_iteration = 0;

 private:
  std::size_t cell(Index i, Index t) const {
    return static_cast<std::size_t>(t) * static_cast<std::size_t>(num_individuals()) + static_cast<std::size_t>(i);
  }

  void rebuild_caches() {
    const Index n = num_individuals();
    contacts_infected_.assign(static_cast<std::size_t>(n) * (horizon() + 1), 0);
    family_infected_.assign(static_cast<std::size_t>(families_->num_families()) * (horizon() + 1), 0);
    for (Index t = 0; t <= horizon(); ++t) {
      for (Index i = 0; i < n; ++i) {
        if (!x_(i, t)) continue;
        family_infected_[static_cast<std::size_t>(t) * families_->num_families() + families_->family_of(i)] += 1;
        if (t < horizon())
          for (Index j : network_->contacts(t, i)) contacts_infected_[cell(j, t)] += 1;
      }
    }
  }

  const TemporalContactNetwork* network_;
  const FamilyPartition* families_;
  const ObservationSet* y_;
  HealthStateMatrix x_;
  std::vector<int> contacts_infected_;
  std::vector<int> family_infected_;
  std::vector<std::uint32_t> accumulator_;
  Index accumulated_ = 0;
  std::vector<double> conditional_sum_;
  Index recorded_ = 0;
};

inline double gibbs_sweep(GibbsState& state) { return state.sweep(); }

// ---------------------------------------------------------------------------
// Origins and sufficient statistics
// ---------------------------------------------------------------------------

// For every 0->1 transition, O ~ Categorical(alpha, beta_f n', beta c') over
// (outside, family, network).
inline OriginMatrix sample_origins(const HealthStateMatrix& x, const TemporalContactNetwork& network,
                                   const FamilyPartition& families, const ModelParameters& params, Rng& rng) {
  const Index n = x.num_individuals(), horizon = x.horizon();
  if (network.num_steps() < horizon) throw DataError("sample_origins: network shorter than horizon");
  const detail::DirectView view{x, network, families};
  OriginMatrix o(n, horizon);
  for (Index t = 0; t < horizon; ++t) {
    for (Index i = 0; i < n; ++i) {
      if (x(i, t) != 0 || x(i, t + 1) != 1) continue;
      const double w_out = params.alpha;
      const double w_fam = params.beta_f * view.family_infected(families.family_of(i), t);
      const double w_net = params.beta * view.infected_contacts(i, t);
      const double u = uniform01(rng) * (w_out + w_fam + w_net);
      o.set(i, t, u < w_out ? Origin::outside : (u < w_out + w_fam ? Origin::family : Origin::network));
    }
  }
  return o;
}

inline OriginMatrix sample_origins(const HealthStateMatrix& x, const TemporalContactNetwork& network,
                                   const FamilyPartition& families, const ModelParameters& params,
                                   std::uint64_t seed) {
  Rng rng(seed);
  return sample_origins(x, network, families, params, rng);
}

struct TrialCount {
  std::uint64_t successes = 0;  // n'_Z
  std::uint64_t trials = 0;     // n_Z
  friend bool operator==(const TrialCount&, const TrialCount&) = default;
};

struct SufficientStatistics {
  std::array<TrialCount, kNumParams> counts{};
  TrialCount& operator[](Param p) { return counts[static_cast<std::size_t>(p)]; }
  const TrialCount& operator[](Param p) const { return counts[static_cast<std::size_t>(p)]; }
  friend bool operator==(const SufficientStatistics&, const SufficientStatistics&) = default;
};

// Counts over transition instances (i,t), t < T, and tested cells (i,t):
//   alpha : trials = susceptible instances, successes = O=outside
//   beta  : trials = susceptible instances with >= 1 infected contact, successes = O=network
//   beta_f: trials = susceptible instances with >= 1 infected family member, successes = O=family
//   gamma : trials = infected instances, successes = 1->0 transitions
//   theta0: trials = healthy cells whose family is tested, successes = positive tests
//   theta1: trials = infected cells whose family is tested, successes = positive tests
inline SufficientStatistics count_sufficient_statistics(const HealthStateMatrix& x, const OriginMatrix& origins,
                                                        const ObservationSet& y,
                                                        const TemporalContactNetwork& network,
                                                        const FamilyPartition& families) {
  detail::check_dimensions(x, y, network, families);
  if (origins.num_individuals() != x.num_individuals() || origins.horizon() != x.horizon())
    throw DataError("count_sufficient_statistics: origin matrix has wrong shape");
  const detail::DirectView view{x, network, families};
  const Index n = x.num_individuals(), horizon = x.horizon();
  SufficientStatistics s;
  for (Index t = 0; t < horizon; ++t) {
    for (Index i = 0; i < n; ++i) {
      const Origin o = origins(i, t);
      if (x(i, t) == 0) {
        const bool infected_next = x(i, t + 1) == 1;
        if (infected_next == (o == Origin::none))
          throw DataError("count_sufficient_statistics: origins inconsistent with states");
        s[Param::alpha].trials++;
        if (o == Origin::outside) s[Param::alpha].successes++;
        if (view.infected_contacts(i, t) > 0) s[Param::beta].trials++;
        if (o == Origin::network) s[Param::beta].successes++;
        if (view.family_infected(families.family_of(i), t) > 0) s[Param::beta_f].trials++;
        if (o == Origin::family) s[Param::beta_f].successes++;
      } else {
        if (o != Origin::none) throw DataError("count_sufficient_statistics: origin set for an infected individual");
        s[Param::gamma].trials++;
        if (x(i, t + 1) == 0) s[Param::gamma].successes++;
      }
    }
  }
  for (Index t = 0; t <= horizon; ++t) {
    for (Index i = 0; i < n; ++i) {
      const std::int8_t result = y.result(families.family_of(i), t);
      if (result == ObservationSet::kUntested) continue;
      TrialCount& c = x(i, t) == 0 ? s[Param::theta0] : s[Param::theta1];
      c.trials++;
      if (result == 1) c.successes++;
    }
  }
  return s;
}

// Same as above, but the theta counts use one sampled member per family test.
inline SufficientStatistics count_sufficient_statistics(const HealthStateMatrix& x, const OriginMatrix& origins,
                                                        const ObservationSet& y,
                                                        const TemporalContactNetwork& network,
                                                        const FamilyPartition& families, const ModelParameters& params,
                                                        Rng& rng) {
  SufficientStatistics s = count_sufficient_statistics(x, origins, y, network, families);
  s[Param::theta0] = {};
  s[Param::theta1] = {};
  for (Index t = 0; t <= y.horizon(); ++t) {
    for (Index f = 0; f < families.num_families(); ++f) {
      const std::int8_t result = y.result(f, t);
      if (result == ObservationSet::kUntested) continue;
      int infected = 0;
      for (Index i : families.members(f)) infected += x(i, t);
      const double l1 = infected * (result ? params.theta1 : 1.0 - params.theta1);
      const double l0 = (families.size_of(f) - infected) * (result ? params.theta0 : 1.0 - params.theta0);
      TrialCount& c = sample_bernoulli(l1 / (l0 + l1), rng) ? s[Param::theta1] : s[Param::theta0];
      c.trials++;
      if (result == 1) c.successes++;
    }
  }
  return s;
}

// Conjugate Beta-Bernoulli update: a' = a + n', b' = b + n - n'.
inline HyperParameters update_hyperparameters(const HyperParameters& hypers, const SufficientStatistics& counts) {
  HyperParameters out = hypers;
  for (Param p : kAllParams) {
    const TrialCount& c = counts[p];
    if (c.successes > c.trials)
      throw ConstraintError(std::string("update_hyperparameters: n' > n for ") + param_name(p));
    out[p].a += static_cast<double>(c.successes);
    out[p].b += static_cast<double>(c.trials - c.successes);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

struct TraceRecord {
  Index iteration = 0;
  Index inner_sweeps = 0;
  double flip_fraction = 0.0;
  double param_change = 0.0;
  ModelParameters params;
  SufficientStatistics stats;
};

struct PosteriorEstimate {
  MarginalMatrix marginals;
  ModelParameters learned_params;
  HyperParameters prior;
  std::vector<TraceRecord> trace;
  Index total_sweeps = 0;
};

inline Index run_inner_loop(GibbsState& state, const InferenceConfig& config, double& last_flip) {
  Index sweeps = 0;
  do {
    last_flip = state.sweep();
    ++sweeps;
  } while (last_flip >= config.inner_flip_threshold && sweeps < config.inner_max_sweeps);
  return sweeps;
}

// Algorithm: initialise (prior, parameters, forward-sampled X); repeat
// {Gibbs sweeps until the flip rate drops below threshold; sample origins;
// count; conjugate update of the prior; redraw parameters} until the largest
// parameter change is below tolerance or the iteration cap; then burn in and
// average K sweeps into per-cell infection probabilities.
inline PosteriorEstimate run_single_chain(const ObservationSet& y, const TemporalContactNetwork& network,
                                          const FamilyPartition& families, const InferenceConfig& config) {
  config.validate();
  const Index horizon = y.horizon();
  Rng rng(derive_seed(config.seed, Stream::chain));

  PosteriorEstimate out;
  out.prior = config.prior ? *config.prior : random_hyperparameters(config.hyper_init, rng);
  ModelParameters params = config.fixed_params ? *config.fixed_params : resample_parameters(out.prior, rng);

  HealthStateMatrix x0 = forward_initialize_states(network, families, params, horizon, rng);
  GibbsState state(network, families, y, std::move(x0), params, out.prior, derive_seed(config.seed, Stream::chain, 1));

  auto parameter_step = [&](TraceRecord& rec) {
    state.origins = sample_origins(state.x(), network, families, state.params, state.rng);
    rec.stats = config.test_counting == TestCounting::per_member
                    ? count_sufficient_statistics(state.x(), state.origins, y, network, families)
                    : count_sufficient_statistics(state.x(), state.origins, y, network, families, state.params,
                                                  state.rng);
    state.hypers = update_hyperparameters(out.prior, rec.stats);
    const ModelParameters next = resample_parameters(state.hypers, state.rng);
    rec.param_change = max_abs_difference(next, state.params);
    rec.params = next;
    state.params = next;
  };

  double flip = 0.0;
  if (config.fixed_params) {
    TraceRecord rec;
    rec.inner_sweeps = run_inner_loop(state, config, flip);
    rec.flip_fraction = flip;
    rec.params = params;
    out.trace.push_back(rec);
  } else {
    for (Index iter = 0; iter < config.outer_max_iters; ++iter) {
      state.outer_iteration = iter;
      TraceRecord rec;
      rec.iteration = iter;
      rec.inner_sweeps = run_inner_loop(state, config, flip);
      rec.flip_fraction = flip;
      parameter_step(rec);
      out.trace.push_back(rec);
      if (rec.param_change < config.outer_param_tol) break;
    }
  }

  const bool moving = config.update_params_while_averaging && !config.fixed_params;
  ModelParameters param_sum;
  for (Index k = 0; k < config.burn_in_sweeps + config.accumulation_sweeps; ++k) {
    const bool recording = k >= config.burn_in_sweeps;
    state.sweep(recording);
    if (recording) state.accumulate();
    if (moving) {
      TraceRecord rec;
      parameter_step(rec);
    }
    if (recording)
      for (Param p : kAllParams) param_sum[p] += state.params[p];
  }
  out.marginals = state.marginals(config.marginal_estimator);
  // With moving parameters, report their average over the accumulation
  // sweeps; an average of ordered draws is itself ordered.
  if (moving)
    for (Param p : kAllParams) param_sum[p] /= config.accumulation_sweeps;
  out.learned_params = moving ? param_sum : state.params;
  out.total_sweeps = state.sweep_count;
  return out;
}

// Runs config.num_chains chains. Marginals and learned parameters are chain
// averages; prior and trace are those of chain 0.
inline PosteriorEstimate run_inference(const ObservationSet& y, const TemporalContactNetwork& network,
                                       const FamilyPartition& families, const InferenceConfig& config) {
  config.validate();
  PosteriorEstimate out = run_single_chain(y, network, families, config);
  if (config.num_chains == 1) return out;
  ModelParameters param_sum = out.learned_params;
  for (Index c = 1; c < config.num_chains; ++c) {
    InferenceConfig cc = config;
    cc.seed = derive_seed(config.seed, Stream::chain, 1000 + static_cast<std::uint64_t>(c));
    const PosteriorEstimate e = run_single_chain(y, network, families, cc);
    for (Index t = 0; t <= out.marginals.horizon(); ++t)
      for (Index i = 0; i < out.marginals.num_individuals(); ++i) out.marginals(i, t) += e.marginals(i, t);
    for (Param p : kAllParams) param_sum[p] += e.learned_params[p];
    out.total_sweeps += e.total_sweeps;
  }
  const double n = static_cast<double>(config.num_chains);
  for (Index t = 0; t <= out.marginals.horizon(); ++t)
    for (Index i = 0; i < out.marginals.num_individuals(); ++i) out.marginals(i, t) /= n;
  for (Param p : kAllParams) param_sum[p] /= n;
  out.learned_params = param_sum;
  return out;
}

}  // namespace gchmm
