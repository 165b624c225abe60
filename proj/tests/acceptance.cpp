// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Experiment settings come from configs/.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <thread>

#include "fixtures.hpp"
#include "gchmm/cli.hpp"

using namespace gchmm;
namespace fs = std::filesystem;
using io::json;

namespace {

fs::path source_dir() { return GCHMM_SOURCE_DIR; }

Index worker_threads() { return static_cast<Index>(std::max(1u, std::thread::hardware_concurrency())); }

ExperimentConfig load_experiment(const char* file) {
  return io::experiment_from_json(io::read_json(source_dir() / "configs" / file).at("experiment"));
}

bool within_3sigma(std::uint64_t k, std::uint64_t n, double p) {
  return std::abs(static_cast<double>(k) - n * p) <= 3.0 * std::sqrt(n * p * (1.0 - p));
}

std::map<Index, double> mean_auc(const std::vector<ExperimentResult>& rs, bool by_mu) {
  std::map<Index, std::pair<double, int>> acc;
  for (const auto& r : rs) {
    auto& a = acc[by_mu ? r.mu : r.day];
    a.first += r.auc;
    a.second++;
  }
  std::map<Index, double> out;
  for (const auto& [k, a] : acc) out[k] = a.first / a.second;
  return out;
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

// 1. Gibbs against exact enumeration on the three-person graph.
Verdict oracle_equivalence() {
  const auto g = testing::small_graph();
  double worst_conditional = 0.0;
  for (std::uint64_t code = 0; code < 64; ++code) {
    const HealthStateMatrix x = testing::decode(code, 3, 2);
    for (Index t = 1; t <= 2; ++t)
      for (Index i = 0; i < 3; ++i)
        worst_conditional = std::max(worst_conditional,
                                     std::abs(gibbs_conditional(i, t, x, g.y, g.network, g.families, g.params) -
                                              testing::exact_conditional(i, t, x, g.y, g.network, g.families, g.params)));
  }
  const MarginalMatrix exact = testing::exact_marginals(g.y, g.network, g.families, g.params);
  GibbsState s(g.network, g.families, g.y, HealthStateMatrix(3, 2), g.params, HyperParameters{}, 2024);
  for (int k = 0; k < 1000; ++k) s.sweep();
  for (int k = 0; k < 49000; ++k) {
    s.sweep();
    s.accumulate();
  }
  const MarginalMatrix est = s.marginals(MarginalEstimator::indicator);
  double worst_marginal = 0.0;
  for (Index t = 1; t <= 2; ++t)
    for (Index i = 0; i < 3; ++i) worst_marginal = std::max(worst_marginal, std::abs(est(i, t) - exact(i, t)));
  char buf[160];
  std::snprintf(buf, sizeof buf, "max conditional error %.2e (tol 1e-10), max marginal error %.4f after 50000 sweeps (tol 0.01)",
                worst_conditional, worst_marginal);
  return {worst_conditional <= 1e-10 && worst_marginal <= 0.01, buf};
}

// 2. Closed-form conjugate updates and count identities on random tiny traces.
Verdict conjugacy_and_counts() {
  int failures = 0;
  for (std::uint64_t k = 0; k < 1000; ++k) {
    Rng rng(derive_seed(77, Stream::dataset, k));
    SimulationConfig c;
    c.population_size = 2 + static_cast<Index>(rng() % 7);
    c.num_families = 1 + static_cast<Index>(rng() % c.population_size);
    if (c.population_size > c.num_families * c.max_family_size) c.num_families = (c.population_size + 4) / 5;
    c.horizon_days = 2 + static_cast<Index>(rng() % 10);
    c.tests_per_family = 1 + static_cast<Index>(rng() % c.horizon_days);
    c.contact_edge_prob = uniform01(rng);
    c.rate_upper = 0.3;
    c.seed = rng();
    const Dataset d = simulate_dataset(c);
    const OriginMatrix o = sample_origins(d.states, d.network, d.families, d.params, rng);
    const SufficientStatistics s = count_sufficient_statistics(d.states, o, d.observations, d.network, d.families);
    std::uint64_t infections = 0;
    for (Index t = 0; t < c.horizon_days; ++t)
      for (Index i = 0; i < c.population_size; ++i) infections += d.states(i, t) == 0 && d.states(i, t + 1) == 1;
    bool ok = s[Param::alpha].successes + s[Param::beta].successes + s[Param::beta_f].successes == infections;
    ok &= s[Param::alpha].trials + s[Param::gamma].trials ==
          static_cast<std::uint64_t>(c.population_size) * static_cast<std::uint64_t>(c.horizon_days);
    HyperParameters h;
    for (auto& bp : h.priors) bp = {1.0 + static_cast<double>(rng() % 10), 1.0 + static_cast<double>(rng() % 10)};
    const HyperParameters u = update_hyperparameters(h, s);
    for (Param p : kAllParams) {
      ok &= s[p].successes <= s[p].trials;
      ok &= u[p].a == h[p].a + static_cast<double>(s[p].successes);
      ok &= u[p].b == h[p].b + static_cast<double>(s[p].trials - s[p].successes);
    }
    failures += !ok;
  }
  return {failures == 0, std::to_string(1000 - failures) + "/1000 traces satisfy the update and count identities"};
}

// 3. Temporal partitioning on the second dataset shape.
Verdict experiment_2() {
  ExperimentConfig c = load_experiment("exp2.json");
  c.eval_days = {16, 128};
  c.replicates = 5;
  c.threads = worker_threads();
  const ExperimentOutcome o = run_experiment_2(c);
  if (o.error) return {false, "experiment failed"};
  const auto m = mean_auc(o.results, false);
  char buf[160];
  std::snprintf(buf, sizeof buf, "mean AUC day 16 = %.3f (need >= 0.90), day 128 = %.3f (need >= 0.70), %zu runs",
                m.at(16), m.at(128), o.results.size());
  return {m.at(16) >= 0.90 && m.at(128) >= 0.70, buf};
}

// 4. Testing-frequency trend on the first dataset shape.
Verdict experiment_1() {
  ExperimentConfig c = load_experiment("exp1.json");
  c.mu_values = {1, 12, 52, 360};
  c.replicates = 3;
  c.threads = worker_threads();
  const ExperimentOutcome o = run_experiment_1(c);
  if (o.error) return {false, "experiment failed"};
  const auto m = mean_auc(o.results, true);
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "mean AUC mu=1 %.3f, mu=12 %.3f, mu=52 %.3f, mu=360 %.3f (need mu=360 >= 0.70 and gap >= 0.10)",
                m.at(1), m.at(12), m.at(52), m.at(360));
  return {m.at(360) >= 0.70 && m.at(360) - m.at(1) >= 0.10, buf};
}

// 5. Linear baseline near chance; perfect on a separable fixture.
Verdict baseline() {
  ExperimentConfig c = load_experiment("baseline.json");
  c.threads = worker_threads();
  const ExperimentOutcome o = run_baseline(c);
  if (o.error || o.results.size() != 2) return {false, "baseline failed"};
  BaselineFeatures fx;
  Rng rng(1);
  for (int k = 0; k < 400; ++k) {
    const int y = k % 4 == 0;
    fx.rows.push_back({3.0 * y + uniform01(rng), 3.0 * y + uniform01(rng), uniform01(rng)});
    fx.labels.push_back(y);
  }
  const double sep = baseline_linear_classifier(fx, 5).test.auc;
  bool ok = sep == 1.0;
  for (const auto& r : o.results) ok &= r.auc >= 0.45 && r.auc <= 0.60;
  char buf[160];
  std::snprintf(buf, sizeof buf, "dataset AUCs %.3f, %.3f (need [0.45, 0.60]); separable fixture %.3f (need 1.0)",
                o.results[0].auc, o.results[1].auc, sep);
  return {ok, buf};
}

// 6. Every stage replayed from its manifest reproduces its outputs byte for byte.
Verdict determinism(const fs::path& work) {
  auto run = [](cli::Invocation inv) { return cli::run(inv); };
  auto replay = [](const std::string& cmd, const fs::path& manifest, const fs::path& out) {
    cli::Invocation inv;
    inv.command = cmd;
    inv.config_path = manifest;
    inv.config = io::read_json(manifest);
    inv.out = out;
    return cli::run(inv);
  };
  std::vector<std::pair<std::string, fs::path>> stages;

  cli::Invocation sim;
  sim.command = "simulate";
  sim.config = io::read_json(source_dir() / "configs" / "dataset2.json");
  sim.out = work / "a" / "data";
  run(sim);
  stages.push_back({"simulate", sim.out});

  cli::Invocation inf;
  inf.command = "infer";
  inf.config = io::read_json(source_dir() / "configs" / "inference.json");
  inf.config["inference"]["num_chains"] = 1;
  inf.config["inference"]["outer_max_iters"] = 5;
  inf.data = sim.out;
  inf.out = work / "a" / "infer";
  run(inf);
  stages.push_back({"infer", inf.out});

  cli::Invocation ev;
  ev.command = "evaluate";
  ev.data = sim.out;
  ev.marginals = inf.out / "marginals.csv";
  ev.mode = "pooled";
  ev.out = work / "a" / "eval";
  run(ev);
  stages.push_back({"evaluate", ev.out});

  cli::Invocation ex;
  ex.command = "experiment";
  ex.experiment = "baseline";
  ex.config = io::read_json(source_dir() / "configs" / "baseline.json");
  ex.out = work / "a" / "baseline";
  run(ex);
  stages.push_back({"experiment", ex.out});

  int identical = 0, compared = 0;
  for (const auto& [cmd, dir] : stages) {
    const fs::path again = work / "b" / dir.filename();
    const json m1 = io::read_json(dir / "manifest.json");
    const json m2 = replay(cmd, dir / "manifest.json", again);
    bool same = m1.at("outputs") == m2.at("outputs") && m1.at("resolved_config") == m2.at("resolved_config");
    for (const auto& o : m1.at("outputs")) {
      const std::string f = o.at("path").get<std::string>();
      same &= io::read_file(dir / f) == io::read_file(again / f);
    }
    identical += same;
    ++compared;
  }
  return {identical == compared, std::to_string(identical) + "/" + std::to_string(compared) +
                                     " stages byte-identical on manifest replay"};
}

// 7. Property checks across modules.
Verdict properties(const fs::path& work) {
  std::vector<std::string> failed;
  auto check = [&](bool ok, const char* name) {
    if (!ok) failed.push_back(name);
  };
  Rng rng(31);

  bool rows = true, bounds = true;
  for (int k = 0; k < 5000; ++k) {
    ModelParameters p{.alpha = 0.05 * uniform01(rng), .beta = 0.05 * uniform01(rng), .beta_f = 0.05 * uniform01(rng),
                      .gamma = uniform01(rng), .theta0 = 0.02, .theta1 = 0.9};
    const int c = static_cast<int>(rng() % 25), n = static_cast<int>(rng() % 5);
    for (int now = 0; now <= 1; ++now)
      rows &= std::abs(transition_prob(now, 0, c, n, p) + transition_prob(now, 1, c, n, p) - 1.0) < 1e-15;
    const double lin = infection_prob(c, n, p), ex = infection_prob(c, n, p, InfectionMode::exact);
    const double s = p.alpha + c * p.beta + n * p.beta_f;
    bounds &= ex <= lin + 1e-15 && lin - ex <= 0.5 * s * s + 1e-15;
  }
  check(rows, "transition rows sum to 1");
  check(bounds, "linear vs exact infection bounds");

  bool mono = true;
  const ModelParameters tp{.alpha = 0.001, .beta = 0.002, .beta_f = 0.003, .gamma = 0.2, .theta0 = 0.02, .theta1 = 0.9};
  for (int nf = 1; nf <= 8; ++nf)
    for (int k = 0; k < nf; ++k) mono &= emission_positive_prob(nf, k, tp) < emission_positive_prob(nf, k + 1, tp);
  check(mono, "emission monotone in infected count");

  bool invariant = true;
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<ScoredInstance> a, b;
    for (int k = 0; k < 60; ++k) {
      const double sc = std::round(uniform01(rng) * 10) / 10;
      const int y = k % 4 == 0;
      a.push_back({sc, y});
      b.push_back({std::exp(5 * sc) + 2, y});
    }
    invariant &= std::abs(roc_auc(a) - roc_auc(b)) < 1e-12;
  }
  check(invariant, "AUC invariant under monotone transforms");

  // Ground-truth isolation: infer with states.csv and params.json deleted.
  {
    cli::Invocation sim;
    sim.command = "simulate";
    sim.config = json::parse(R"({"simulation": {"population_size": 20, "num_families": 6, "horizon_days": 30,
                                 "tests_per_family": 10, "contact_edge_prob": 0.1, "rate_upper": 0.05}})");
    sim.out = work / "iso" / "data";
    cli::run(sim);
    cli::Invocation inf;
    inf.command = "infer";
    inf.config = json::parse(R"({"inference": {"outer_max_iters": 4, "burn_in_sweeps": 5, "accumulation_sweeps": 20}})");
    inf.data = sim.out;
    inf.out = work / "iso" / "with";
    cli::run(inf);
    fs::remove(sim.out / "states.csv");
    fs::remove(sim.out / "params.json");
    inf.out = work / "iso" / "without";
    bool ok = true;
    try {
      cli::run(inf);
      for (const char* f : {"marginals.csv", "learned_params.json", "trace.csv"})
        ok &= io::read_file(work / "iso" / "with" / f) == io::read_file(work / "iso" / "without" / f);
    } catch (...) {
      ok = false;
    }
    check(ok, "infer never reads ground truth");
  }

  // Monte Carlo frequencies: transitions, test false positives, origins.
  {
    SimulationConfig c;
    c.population_size = 60;
    c.num_families = 20;
    c.horizon_days = 400;
    c.tests_per_family = 400;
    c.contact_edge_prob = 0.05;
    c.seed = 2;
    const FamilyPartition f = generate_families(c);
    const TemporalContactNetwork n = generate_network(c, f);
    const ModelParameters p{.alpha = 0.01, .beta = 0.03, .beta_f = 0.06, .gamma = 0.25, .theta0 = 0.02, .theta1 = 0.9};
    const HealthStateMatrix x = simulate_epidemic(n, f, p, 400, 5);
    std::uint64_t rec_n = 0, rec_k = 0, out_n = 0, out_k = 0;
    for (Index t = 0; t < 400; ++t)
      for (Index i = 0; i < 60; ++i) {
        if (x(i, t)) {
          ++rec_n;
          rec_k += 1 - x(i, t + 1);
          continue;
        }
        int cc = 0, nf = 0;
        for (Index j : n.contacts(t, i)) cc += x(j, t);
        for (Index j : f.members(f.family_of(i))) nf += j != i && x(j, t);
        if (cc == 0 && nf == 0) {
          ++out_n;
          out_k += x(i, t + 1);
        }
      }
    check(within_3sigma(rec_k, rec_n, p.gamma), "recovery frequency within 3 sigma");
    check(within_3sigma(out_k, out_n, p.alpha), "outside infection frequency within 3 sigma");

    const ObservationSet y = schedule_and_sample_tests(HealthStateMatrix(60, 400), f, p, 400, 9);
    std::uint64_t pos = 0;
    for (Index k = 0; k < f.num_families(); ++k)
      for (Index t : y.schedule(k)) pos += y.result(k, t);
    check(within_3sigma(pos, y.size(), p.theta0), "false positive frequency within 3 sigma");
  }

  std::string detail = "7 property groups";
  for (const auto& s : failed) detail += "; FAILED " + s;
  return {failed.empty(), detail};
}

}  // namespace

int main() {
  const fs::path work = fs::temp_directory_path() / ("gchmm_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(work);
  fs::create_directories(work);

  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"oracle equivalence", oracle_equivalence},
      {"conjugacy and count identities", conjugacy_and_counts},
      {"experiment 2 reproduction", experiment_2},
      {"experiment 1 trend", experiment_1},
      {"baseline near chance", baseline},
      {"determinism", [&] { return determinism(work / "det"); }},
      {"property suites", [&] { return properties(work / "prop"); }},
  };

  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[k].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %zu (%s): %s [%.1fs]\n", v.pass ? "PASS" : "FAIL", k + 1, criteria[k].first,
                v.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !v.pass;
  }
  fs::remove_all(work);
  return failures == 0 ? 0 : 1;
}
