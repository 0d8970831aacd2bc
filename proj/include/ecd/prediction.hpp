#pragma once

// Downstream tasks built on a fitted model: graph-based stance detection and
// next-activation prediction, with the activity-frequency baselines (MostPop,
// MostPop*) and the 1-hop average polarity baseline.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ecd/evaluation.hpp"
#include "ecd/inference.hpp"
#include "ecd/model.hpp"
#include "ecd/rng.hpp"
#include "ecd/types.hpp"

namespace ecd {

struct StanceScore {
  int node = 0;
  double score = 0.0;     // in [-1, 1]
  bool zero_mass = false; // node had no theta mass; score defaulted to 0
};

// Stance of every node: eta weighted by the node's community mixture.
inline std::vector<StanceScore> stance_scores(const ModelParams& fitted) {
  fitted.validate();
  const Mat mix = node_mixture(fitted);
  std::vector<StanceScore> out(mix.rows);
  for (int u = 0; u < mix.rows; ++u) {
    double total = 0.0, score = 0.0;
    for (int c = 0; c < mix.cols; ++c) {
      total += mix.at(u, c);
      score += fitted.eta[c] * mix.at(u, c);
    }
    out[u] = {u, total > 0.0 ? score : 0.0, total <= 0.0};
  }
  return out;
}

// Mean polarity over all activations (v, i) where `user` follows v. Returns 0
// and clears *had_data when no followee has any visible activation.
inline double one_hop_average(const SocialGraph& graph, const CascadeSet& cascades,
                              int user, bool* had_data = nullptr) {
  if (user < 0 || user >= graph.num_nodes())
    throw input_error("one_hop_average: user out of range");
  std::vector<char> followee(graph.num_nodes(), 0);
  for (int v : graph.followees_of(user)) followee[v] = 1;
  double sum = 0.0;
  int count = 0;
  for (const Item& item : cascades.items)
    for (int v : item.activated)
      if (followee[v]) {
        sum += item.polarity;
        ++count;
      }
  if (had_data) *had_data = count > 0;
  return count > 0 ? sum / count : 0.0;
}

struct ActivationQuery {
  int user = 0;
  std::string item_id;
  std::vector<int> observed;  // training-visible activated nodes, user not among them
};

// max_{v in observed} sum_c pi_flow(c) P(s(user, v, p) | c).
inline double next_activation_score(const ModelParams& fitted, const HyperParams& hyper,
                                    const ActivationQuery& query, double polarity) {
  if (query.observed.empty())
    throw input_error("next_activation_score: observed set must be nonempty");
  for (int v : query.observed)
    if (v == query.user) throw input_error("next_activation_score: user already observed");
  const Priors pri = priors(fitted, hyper);
  const int k = fitted.num_communities();
  double best = 0.0;
  for (int v : query.observed) {
    double total = 0.0;
    for (int c = 0; c < k; ++c)
      total += pri.pi_flow[c] * sharing_link_likelihood(fitted, query.user, v, polarity, c);
    best = std::max(best, total);
  }
  return best;
}

// Per-user activation counts split by item polarity sign, the sufficient
// statistics behind MostPop and MostPop*.
struct ActivityCounts {
  std::vector<double> total;     // per user
  std::vector<double> positive;  // activations on items with p > 0
  std::vector<double> negative;  // activations on items with p < 0
  double grand_total = 0.0;
  double grand_positive = 0.0;
  double grand_negative = 0.0;

  static ActivityCounts from(const CascadeSet& cascades, int num_nodes) {
    ActivityCounts a;
    a.total.assign(num_nodes, 0.0);
    a.positive.assign(num_nodes, 0.0);
    a.negative.assign(num_nodes, 0.0);
    for (const Item& item : cascades.items)
      for (int u : item.activated) {
        a.total[u] += 1.0;
        a.grand_total += 1.0;
        if (item.polarity > 0.0) {
          a.positive[u] += 1.0;
          a.grand_positive += 1.0;
        } else if (item.polarity < 0.0) {
          a.negative[u] += 1.0;
          a.grand_negative += 1.0;
        }
      }
    return a;
  }

  double mostpop(int user) const {
    return grand_total > 0.0 ? total[user] / grand_total : 0.0;
  }
  double mostpop_star(int user, double polarity, bool* had_data = nullptr) const {
    const double grand = polarity > 0.0 ? grand_positive : (polarity < 0.0 ? grand_negative : 0.0);
    if (had_data) *had_data = grand > 0.0;
    if (grand <= 0.0) return 0.0;
    const double mine = polarity > 0.0 ? positive[user] : negative[user];
    return mine / grand;
  }
};

inline double mostpop_score(const CascadeSet& cascades_train, int user, int num_nodes) {
  if (cascades_train.items.empty()) throw input_error("mostpop: empty training cascades");
  return ActivityCounts::from(cascades_train, num_nodes).mostpop(user);
}

inline double mostpop_star_score(const CascadeSet& cascades_train, int user, int num_nodes,
                                 double polarity, bool* had_data = nullptr) {
  if (cascades_train.items.empty()) throw input_error("mostpop*: empty training cascades");
  return ActivityCounts::from(cascades_train, num_nodes).mostpop_star(user, polarity, had_data);
}

// Per-item masking for the next-activation benchmark. Cascades of size >= 2
// lose round(fraction * size) nodes, at least 1 and never all of them;
// singleton cascades stay visible.
struct MaskedCascades {
  CascadeSet train;                            // visible activations, order kept
  std::vector<std::pair<int, int>> positives;  // (item index, masked node)
};

inline MaskedCascades mask_cascades(const CascadeSet& cascades, double fraction, Rng& rng) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw input_error("mask_cascades: fraction must be in (0,1)");
  MaskedCascades out;
  out.train.items.reserve(cascades.items.size());
  for (int i = 0; i < static_cast<int>(cascades.items.size()); ++i) {
    const Item& item = cascades.items[i];
    const int m = static_cast<int>(item.activated.size());
    Item visible;
    visible.id = item.id;
    visible.polarity = item.polarity;
    if (m < 2) {
      visible.activated = item.activated;
      out.train.items.push_back(std::move(visible));
      continue;
    }
    const int k = std::min(m - 1, std::max(1, static_cast<int>(std::lround(fraction * m))));
    std::vector<int> idx(m);
    for (int t = 0; t < m; ++t) idx[t] = t;
    for (int t = 0; t < k; ++t) {
      const int j = t + static_cast<int>(rng.below(m - t));
      std::swap(idx[t], idx[j]);
    }
    std::vector<char> masked(m, 0);
    for (int t = 0; t < k; ++t) {
      masked[idx[t]] = 1;
      out.positives.emplace_back(i, item.activated[idx[t]]);
    }
    for (int t = 0; t < m; ++t)
      if (!masked[t]) visible.activated.push_back(item.activated[t]);
    out.train.items.push_back(std::move(visible));
  }
  return out;
}

struct BenchmarkResult {
  std::string method;
  double mask_fraction = 0.0;
  double auc = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  bool negatives_capped = false;
};

// Masks the cascades, refits on the visible data, then scores every masked
// (user, item) pair as a positive and every non-activated pair as a negative.
// The seed drives the mask, the fit and the optional negative subsample.
inline std::vector<BenchmarkResult> run_next_activation_benchmark(
    const SocialGraph& graph, const CascadeSet& cascades, double mask_fraction,
    HyperParams hyper, std::uint64_t seed, std::size_t max_negatives = SIZE_MAX) {
  Rng rng(seed);
  const MaskedCascades masked = mask_cascades(cascades, mask_fraction, rng);
  if (masked.positives.empty())
    throw input_error("next-activation benchmark: masking produced no test positives");

  hyper.seed = seed;
  const FitReport fit_report = fit(graph, masked.train, hyper);
  const ModelParams& fitted = fit_report.fitted;
  const Priors pri = priors(fitted, hyper);
  const int n = graph.num_nodes();
  const int k = fitted.num_communities();

  // test pairs: positives first, then negatives (optionally capped)
  std::vector<std::pair<int, int>> pairs = masked.positives;
  std::vector<int> labels(pairs.size(), 1);
  std::vector<char> in_cascade(n, 0);
  std::vector<std::pair<int, int>> negatives;
  for (int i = 0; i < static_cast<int>(cascades.items.size()); ++i) {
    if (masked.train.items[i].activated.empty()) continue;  // nothing observable
    std::fill(in_cascade.begin(), in_cascade.end(), 0);
    for (int u : cascades.items[i].activated) in_cascade[u] = 1;
    for (int u = 0; u < n; ++u)
      if (!in_cascade[u]) negatives.emplace_back(i, u);
  }
  bool capped = false;
  if (negatives.size() > max_negatives) {
    capped = true;
    for (std::size_t t = 0; t < max_negatives; ++t) {
      const std::size_t j = t + rng.below(negatives.size() - t);
      std::swap(negatives[t], negatives[j]);
    }
    negatives.resize(max_negatives);
  }
  pairs.insert(pairs.end(), negatives.begin(), negatives.end());
  labels.resize(pairs.size(), 0);

  // ECD scores: per item precompute w_c = pi_flow(c) * max(0, p eta_c)
  std::vector<double> ecd_scores(pairs.size(), 0.0);
  {
    std::vector<double> w(k);
    int current_item = -1;
    const std::vector<int>* observed = nullptr;
    double polarity = 0.0;
    for (std::size_t t = 0; t < pairs.size(); ++t) {
      const auto [i, u] = pairs[t];
      if (i != current_item) {
        current_item = i;
        observed = &masked.train.items[i].activated;
        polarity = cascades.items[i].polarity;
        for (int c = 0; c < k; ++c)
          w[c] = pri.pi_flow[c] * polarity_gate(polarity, fitted.eta[c]);
      }
      double best = 0.0;
      for (int v : *observed) {
        double total = 0.0;
        for (int c = 0; c < k; ++c)
          total += w[c] * fitted.theta.at(c, u) * fitted.theta.at(c, v);
        best = std::max(best, total);
      }
      ecd_scores[t] = best;
    }
  }

  const ActivityCounts counts = ActivityCounts::from(masked.train, n);
  std::vector<double> mostpop_scores(pairs.size()), mostpop_star_scores(pairs.size());
  for (std::size_t t = 0; t < pairs.size(); ++t) {
    const auto [i, u] = pairs[t];
    mostpop_scores[t] = counts.mostpop(u);
    mostpop_star_scores[t] = counts.mostpop_star(u, cascades.items[i].polarity);
  }

  const std::size_t n_pos = masked.positives.size();
  const std::size_t n_neg = pairs.size() - n_pos;
  auto result = [&](const std::string& name, const std::vector<double>& scores) {
    return BenchmarkResult{name, mask_fraction, roc_auc(scores, labels),
                           n_pos, n_neg, capped};
  };
  return {result("ecd", ecd_scores), result("mostpop", mostpop_scores),
          result("mostpop_star", mostpop_star_scores)};
}

struct StanceBenchmarkResult {
  double ecd_auc = 0.0;
  double one_hop_auc = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::vector<int> holdout;  // the evaluated (sign-labeled) nodes
};

// Cold-start stance protocol: all activations of a random fraction of nodes
// are hidden from training (their social links stay visible), the model is
// refit, and held-out nodes with a nonzero true polarity sign are scored.
inline StanceBenchmarkResult run_stance_benchmark(const SocialGraph& graph,
                                                  const CascadeSet& cascades,
                                                  std::span<const double> true_node_polarity,
                                                  double holdout_fraction,
                                                  HyperParams hyper, std::uint64_t seed) {
  const int n = graph.num_nodes();
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0))
    throw input_error("stance benchmark: holdout fraction must be in (0,1)");
  if (static_cast<int>(true_node_polarity.size()) != n)
    throw input_error("stance benchmark: polarity vector size mismatch");

  Rng rng(seed);
  const int holdout_count = std::max(1, static_cast<int>(std::lround(holdout_fraction * n)));
  std::vector<int> order(n);
  for (int u = 0; u < n; ++u) order[u] = u;
  for (int t = 0; t < holdout_count; ++t) {
    const int j = t + static_cast<int>(rng.below(n - t));
    std::swap(order[t], order[j]);
  }
  std::vector<char> held(n, 0);
  for (int t = 0; t < holdout_count; ++t) held[order[t]] = 1;

  CascadeSet train;
  train.items.reserve(cascades.items.size());
  for (const Item& item : cascades.items) {
    Item visible;
    visible.id = item.id;
    visible.polarity = item.polarity;
    for (int u : item.activated)
      if (!held[u]) visible.activated.push_back(u);
    train.items.push_back(std::move(visible));
  }

  hyper.seed = seed;
  const FitReport fit_report = fit(graph, train, hyper);
  const std::vector<StanceScore> stances = stance_scores(fit_report.fitted);

  StanceBenchmarkResult result;
  std::vector<double> ecd_scores, hop_scores;
  std::vector<int> labels;
  for (int t = 0; t < holdout_count; ++t) {
    const int u = order[t];
    if (true_node_polarity[u] == 0.0) continue;  // no ideological side to predict
    result.holdout.push_back(u);
    ecd_scores.push_back(stances[u].score);
    hop_scores.push_back(one_hop_average(graph, train, u));
    labels.push_back(true_node_polarity[u] > 0.0 ? 1 : 0);
  }
  for (int y : labels) (y != 0 ? result.n_pos : result.n_neg) += 1;
  result.ecd_auc = roc_auc(ecd_scores, labels);
  result.one_hop_auc = roc_auc(hop_scores, labels);
  return result;
}

}  // namespace ecd
