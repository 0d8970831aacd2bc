#pragma once

// Reconstruction and community-quality metrics: permutation-matched MAE
// between true and fitted parameters, Pearson correlation of node polarities,
// conductance and purity of hard-assigned communities, and a rank-based
// ROC-AUC shared with the prediction tasks.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "ecd/model.hpp"
#include "ecd/types.hpp"

namespace ecd {

struct ReconstructionReport {
  double mae_eta = 0.0;
  double mae_theta = 0.0;
  double mae_phi = 0.0;
  double rho_node_polarity = 0.0;
  std::vector<int> matching;  // matching[c] = fitted community paired with true c
};

struct CommunityAssessment {
  int community = 0;
  double eta = 0.0;
  int size = 0;
  double conductance = 0.0;
  double purity = 0.0;
};

// Pearson correlation; 0 when either side has no variance.
inline double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty())
    throw input_error("pearson: size mismatch or empty input");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

namespace detail {

// Classical O(n^3) min-cost assignment on a square matrix (potentials +
// augmenting shortest paths). Used when K is too large for exhaustive
// permutation search.
inline std::vector<int> min_cost_assignment(const Mat& cost) {
  const int n = cost.rows;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = 0;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost.at(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> assignment(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] > 0) assignment[p[j] - 1] = j - 1;
  return assignment;
}

}  // namespace detail

// Matches fitted communities to true ones by minimizing |d eta| plus the mean
// row-wise |d theta|; exhaustive over permutations for K <= 8, optimal
// assignment on the same pairwise cost beyond that. MAEs are computed under
// the best matching. The node-polarity correlation uses per-node mixtures and
// is permutation-invariant; pass true_node_polarity to correlate against
// externally known polarities (e.g. generator ground truth) instead of ones
// derived from true_params.
inline ReconstructionReport match_and_mae(
    const ModelParams& true_params, const ModelParams& fitted,
    std::optional<std::span<const double>> true_node_polarity = std::nullopt) {
  const int k = true_params.num_communities();
  const int n = true_params.num_nodes();
  if (fitted.num_communities() != k || fitted.num_nodes() != n)
    throw input_error("match_and_mae: shape mismatch");

  Mat cost(k, k, 0.0);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      double theta_err = 0.0;
      for (int u = 0; u < n; ++u)
        theta_err += std::abs(true_params.theta.at(i, u) - fitted.theta.at(j, u));
      cost.at(i, j) = std::abs(true_params.eta[i] - fitted.eta[j]) + theta_err / n;
    }
  }

  std::vector<int> best(k);
  if (k <= 8) {
    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    double best_cost = std::numeric_limits<double>::infinity();
    do {
      double total = 0.0;
      for (int i = 0; i < k; ++i) total += cost.at(i, perm[i]);
      if (total < best_cost) {
        best_cost = total;
        best = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    best = detail::min_cost_assignment(cost);
  }

  ReconstructionReport report;
  report.matching = best;
  for (int c = 0; c < k; ++c) {
    const int m = best[c];
    report.mae_eta += std::abs(true_params.eta[c] - fitted.eta[m]);
    for (int u = 0; u < n; ++u) {
      report.mae_theta += std::abs(true_params.theta.at(c, u) - fitted.theta.at(m, u));
      report.mae_phi += std::abs(true_params.phi.at(c, u) - fitted.phi.at(m, u));
    }
  }
  report.mae_eta /= k;
  report.mae_theta /= static_cast<double>(k) * n;
  report.mae_phi /= static_cast<double>(k) * n;

  const std::vector<double> fitted_pol = node_polarities(fitted);
  if (true_node_polarity) {
    report.rho_node_polarity = pearson(*true_node_polarity, fitted_pol);
  } else {
    const std::vector<double> true_pol = node_polarities(true_params);
    report.rho_node_polarity = pearson(true_pol, fitted_pol);
  }
  return report;
}

// cut(S, V\S) / min(vol(S), vol(V\S)) on the undirected simple view of the
// graph; 0 when the member set has no boundary.
inline double conductance(const SocialGraph& graph, std::span<const int> members) {
  const int n = graph.num_nodes();
  std::vector<char> in_set(n, 0);
  int size = 0;
  for (int u : members) {
    if (u < 0 || u >= n) throw input_error("conductance: node out of range");
    if (!in_set[u]) {
      in_set[u] = 1;
      ++size;
    }
  }
  if (size == 0 || size == n)
    throw input_error("conductance: members must be a nonempty proper subset");

  std::vector<std::pair<int, int>> und;
  und.reserve(graph.num_edges());
  for (auto [u, v] : graph.edges()) und.emplace_back(std::min(u, v), std::max(u, v));
  std::sort(und.begin(), und.end());
  und.erase(std::unique(und.begin(), und.end()), und.end());

  double cut = 0.0, vol_in = 0.0, vol_out = 0.0;
  for (auto [a, b] : und) {
    vol_in += in_set[a] + in_set[b];
    vol_out += (1 - in_set[a]) + (1 - in_set[b]);
    if (in_set[a] != in_set[b]) cut += 1.0;
  }
  if (cut == 0.0) return 0.0;
  return cut / std::min(vol_in, vol_out);
}

// Fraction of side-assigned members on the majority ideological side, a
// member's side being the sign of the mean polarity of the items they
// activated on. Members with no activations or an exact-zero mean are
// excluded; an unassigned community has purity 0.
inline double purity(const CascadeSet& cascades, std::span<const int> members) {
  if (members.empty()) throw input_error("purity: members must be nonempty");
  int max_node = 0;
  for (int u : members) max_node = std::max(max_node, u);
  std::vector<double> sum(max_node + 1, 0.0);
  std::vector<int> count(max_node + 1, 0);
  std::vector<char> is_member(max_node + 1, 0);
  for (int u : members) is_member[u] = 1;
  for (const Item& item : cascades.items)
    for (int u : item.activated)
      if (u <= max_node && is_member[u]) {
        sum[u] += item.polarity;
        ++count[u];
      }
  int positive = 0, negative = 0;
  for (int u : members) {
    if (count[u] == 0) continue;
    const double mean = sum[u] / count[u];
    if (mean > 0.0)
      ++positive;
    else if (mean < 0.0)
      ++negative;
  }
  const int assigned = positive + negative;
  if (assigned == 0) return 0.0;
  return static_cast<double>(std::max(positive, negative)) / assigned;
}

// Hard-assigns nodes to argmax_c theta_{c,u} (ties to the lowest index) and
// scores every non-empty community. A community holding all nodes has no
// boundary, hence conductance 0.
inline std::vector<CommunityAssessment> assess_communities(const SocialGraph& graph,
                                                           const CascadeSet& cascades,
                                                           const ModelParams& fitted) {
  fitted.validate();
  const int k = fitted.num_communities();
  const int n = fitted.num_nodes();
  if (n != graph.num_nodes()) throw input_error("assess_communities: node count mismatch");

  std::vector<std::vector<int>> members(k);
  for (int u = 0; u < n; ++u) {
    int best = 0;
    for (int c = 1; c < k; ++c)
      if (fitted.theta.at(c, u) > fitted.theta.at(best, u)) best = c;
    members[best].push_back(u);
  }

  std::vector<CommunityAssessment> out;
  for (int c = 0; c < k; ++c) {
    if (members[c].empty()) continue;
    CommunityAssessment a;
    a.community = c;
    a.eta = fitted.eta[c];
    a.size = static_cast<int>(members[c].size());
    a.conductance = a.size == n ? 0.0 : conductance(graph, members[c]);
    a.purity = purity(cascades, members[c]);
    out.push_back(a);
  }
  return out;
}

// Probability that a random positive outranks a random negative, ties counted
// one half (rank-based Mann-Whitney).
inline double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size() || scores.empty())
    throw input_error("roc_auc: size mismatch or empty input");
  std::size_t n_pos = 0;
  for (int y : labels) n_pos += y != 0 ? 1 : 0;
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw input_error("roc_auc: both classes must be present");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based average
    for (std::size_t t = i; t < j; ++t)
      if (labels[order[t]] != 0) pos_rank_sum += avg_rank;
    i = j;
  }
  const double u_stat = pos_rank_sum - 0.5 * static_cast<double>(n_pos) * (n_pos + 1);
  return u_stat / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

}  // namespace ecd
