#pragma once

// ROC/AUC scoring and the linear-separator baseline.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "gchmm/core_model.hpp"
#include "gchmm/errors.hpp"
#include "gchmm/inference.hpp"
#include "gchmm/random.hpp"

namespace gchmm {

// Marginal-derived scores lie in [0,1]; the baseline scores by raw decision
// value, which the rank statistic treats the same way.
struct ScoredInstance {
  double score = 0.0;
  int label = 0;
};

struct RocPoint {
  double threshold = 0.0;
  double false_positive_rate = 0.0;
  double true_positive_rate = 0.0;
};

struct AucSummary {
  double auc = 0.0;
  std::size_t num_positives = 0;
  std::size_t num_negatives = 0;
};

// Mann-Whitney form of the AUC: the fraction of (positive, negative) pairs in
// which the positive scores higher, ties counted one half. Computed from
// mid-ranks in O(n log n).
inline AucSummary roc_auc_summary(std::span<const ScoredInstance> instances) {
  AucSummary s;
  for (const auto& x : instances) (x.label == 1 ? s.num_positives : s.num_negatives)++;
  if (s.num_positives == 0 || s.num_negatives == 0)
    throw UndefinedAucError("AUC is undefined: instances contain a single class");

  std::vector<std::size_t> order(instances.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::ranges::sort(order, [&](std::size_t a, std::size_t b) { return instances[a].score < instances[b].score; });

  double positive_rank_sum = 0.0;
  for (std::size_t k = 0; k < order.size();) {
    std::size_t end = k;
    while (end < order.size() && instances[order[end]].score == instances[order[k]].score) ++end;
    const double mid_rank = 0.5 * static_cast<double>(k + 1 + end);  // mean of ranks k+1..end
    for (std::size_t m = k; m < end; ++m)
      if (instances[order[m]].label == 1) positive_rank_sum += mid_rank;
    k = end;
  }
  const double np = static_cast<double>(s.num_positives), nn = static_cast<double>(s.num_negatives);
  s.auc = (positive_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
  return s;
}

inline double roc_auc(std::span<const ScoredInstance> instances) { return roc_auc_summary(instances).auc; }

// ROC curve vertices from (0,0) to (1,1), one per distinct score threshold.
inline std::vector<RocPoint> roc_curve(std::span<const ScoredInstance> instances) {
  const AucSummary s = roc_auc_summary(instances);
  std::vector<ScoredInstance> sorted(instances.begin(), instances.end());
  std::ranges::sort(sorted, [](const auto& a, const auto& b) { return a.score > b.score; });
  std::vector<RocPoint> pts{{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
  std::size_t tp = 0, fp = 0;
  for (std::size_t k = 0; k < sorted.size();) {
    const double thr = sorted[k].score;
    while (k < sorted.size() && sorted[k].score == thr) (sorted[k++].label == 1 ? tp : fp)++;
    pts.push_back({thr, static_cast<double>(fp) / s.num_negatives, static_cast<double>(tp) / s.num_positives});
  }
  return pts;
}

// All cells (i,t) with t in [t_begin, t_end], scored by the marginals.
inline std::vector<ScoredInstance> score_cells(const MarginalMatrix& marginals, const HealthStateMatrix& truth,
                                               Index t_begin, Index t_end) {
  if (marginals.num_individuals() != truth.num_individuals() || t_end > marginals.horizon() ||
      t_end > truth.horizon() || t_begin < 0 || t_begin > t_end)
    throw DataError("score_cells: marginals and ground truth have incompatible shapes");
  std::vector<ScoredInstance> out;
  out.reserve(static_cast<std::size_t>(truth.num_individuals()) * (t_end - t_begin + 1));
  for (Index t = t_begin; t <= t_end; ++t)
    for (Index i = 0; i < truth.num_individuals(); ++i) out.push_back({marginals(i, t), truth(i, t)});
  return out;
}

// ---------------------------------------------------------------------------
// Linear baseline
// ---------------------------------------------------------------------------

struct BaselineFeatures {
  // Row-major (cell, 3): infected contacts (family and non-family) at t-1, t, t+1.
  std::vector<std::array<double, 3>> rows;
  std::vector<int> labels;
};

// Missing boundary features (t-1 at t=0, t+1 at t=T) are imputed with the
// feature mean over the cells where they exist.
inline BaselineFeatures build_baseline_features(const HealthStateMatrix& states, const TemporalContactNetwork& network,
                                                const FamilyPartition& families) {
  const Index n = states.num_individuals(), horizon = states.horizon();
  auto infected_contacts = [&](Index i, Index s) {
    int c = 0;
    for (Index j : families.members(families.family_of(i)))
      if (j != i) c += states(j, s);
    if (s < network.num_steps())
      for (Index j : network.contacts(s, i)) c += states(j, s);
    return static_cast<double>(c);
  };

  BaselineFeatures fx;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (Index i = 0; i < n; ++i) {
    for (Index t = 0; t <= horizon; ++t) {
      fx.rows.push_back({t > 0 ? infected_contacts(i, t - 1) : nan, infected_contacts(i, t),
                         t < horizon ? infected_contacts(i, t + 1) : nan});
      fx.labels.push_back(states(i, t));
    }
  }
  for (std::size_t k = 0; k < 3; ++k) {
    double sum = 0.0;
    std::size_t cnt = 0;
    for (const auto& r : fx.rows)
      if (!std::isnan(r[k])) {
        sum += r[k];
        ++cnt;
      }
    const double mean = cnt ? sum / cnt : 0.0;
    for (auto& r : fx.rows)
      if (std::isnan(r[k])) r[k] = mean;
  }
  return fx;
}

struct LinearSeparator {
  std::array<double, 3> weights{};
  double bias = 0.0;
  std::array<double, 3> center{};
  std::array<double, 3> scale{1.0, 1.0, 1.0};

  double decision(const std::array<double, 3>& x) const {
    double s = bias;
    for (std::size_t k = 0; k < 3; ++k) s += weights[k] * (x[k] - center[k]) / scale[k];
    return s;
  }
};

struct LinearSeparatorOptions {
  double learning_rate = 0.1;
  double l2 = 1e-3;
  int epochs = 300;
};

// Full-batch subgradient descent on the class-balanced, L2-regularised hinge
// loss over standardised features.
inline LinearSeparator train_linear_separator(std::span<const std::array<double, 3>> x, std::span<const int> y,
                                              const LinearSeparatorOptions& opt = {}) {
  LinearSeparator m;
  const std::size_t n = x.size();
  for (std::size_t k = 0; k < 3; ++k) {
    double mean = 0.0, var = 0.0;
    for (const auto& r : x) mean += r[k];
    mean /= n;
    for (const auto& r : x) var += (r[k] - mean) * (r[k] - mean);
    m.center[k] = mean;
    m.scale[k] = var > 0.0 ? std::sqrt(var / n) : 1.0;
  }
  const auto positives = static_cast<double>(std::ranges::count(y, 1));
  const double w_pos = 0.5 * n / std::max(positives, 1.0);
  const double w_neg = 0.5 * n / std::max(static_cast<double>(n) - positives, 1.0);

  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    std::array<double, 3> grad{};
    double grad_b = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double sign = y[r] == 1 ? 1.0 : -1.0;
      if (sign * m.decision(x[r]) < 1.0) {
        const double w = y[r] == 1 ? w_pos : w_neg;
        for (std::size_t k = 0; k < 3; ++k) grad[k] -= w * sign * (x[r][k] - m.center[k]) / m.scale[k];
        grad_b -= w * sign;
      }
    }
    for (std::size_t k = 0; k < 3; ++k) m.weights[k] -= opt.learning_rate * (grad[k] / n + opt.l2 * m.weights[k]);
    m.bias -= opt.learning_rate * grad_b / n;
  }
  return m;
}

struct BaselineResult {
  AucSummary test;
  LinearSeparator model;
  std::uint64_t split_seed_used = 0;
};

// Random 80/20 split (redrawn until both halves contain both classes), train,
// and score the held-out part by the decision value.
inline BaselineResult baseline_linear_classifier(const BaselineFeatures& fx, std::uint64_t split_seed,
                                                 const LinearSeparatorOptions& opt = {}) {
  const std::size_t n = fx.rows.size();
  if (std::ranges::count(fx.labels, 1) < 2 || std::ranges::count(fx.labels, 0) < 2)
    throw UndefinedAucError("baseline: need at least two instances of each class");
  for (std::uint64_t attempt = 0; attempt < 1000; ++attempt) {
    Rng rng(derive_seed(split_seed, Stream::split, attempt));
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::size_t n_train = (n * 4) / 5;

    std::vector<std::array<double, 3>> xtr, xte;
    std::vector<int> ytr, yte;
    for (std::size_t k = 0; k < n; ++k) {
      auto& xs = k < n_train ? xtr : xte;
      auto& ys = k < n_train ? ytr : yte;
      xs.push_back(fx.rows[idx[k]]);
      ys.push_back(fx.labels[idx[k]]);
    }
    auto both = [](const std::vector<int>& v) { return std::ranges::count(v, 1) > 0 && std::ranges::count(v, 0) > 0; };
    if (!both(ytr) || !both(yte)) continue;

    BaselineResult res;
    res.model = train_linear_separator(xtr, ytr, opt);
    std::vector<ScoredInstance> scored;
    for (std::size_t k = 0; k < xte.size(); ++k) scored.push_back({res.model.decision(xte[k]), yte[k]});
    res.test = roc_auc_summary(scored);
    res.split_seed_used = attempt;
    return res;
  }
  throw UndefinedAucError("baseline: could not draw a split with both classes on each side");
}

inline BaselineResult baseline_linear_classifier(const HealthStateMatrix& states, const TemporalContactNetwork& network,
                                                 const FamilyPartition& families, std::uint64_t split_seed) {
  return baseline_linear_classifier(build_baseline_features(states, network, families), split_seed);
}

}  // namespace gchmm
