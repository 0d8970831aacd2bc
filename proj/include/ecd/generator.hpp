#pragma once

// Seeded synthetic-data generator. Memberships are sampled from side-specific
// Dirichlets, then links and item cascades are generated by the model's own
// stochastic processes, so the output comes with usable ground truth.
//
// Membership sampling, per node u:
//   alpha_pos_c = max(0,  eta_c) * sigma_s + eps
//   alpha_neg_c = max(0, -eta_c) * sigma_s + eps
//   alpha_soc_c = (1 - |eta_c|) * sigma_0
//   P ~ Dir(alpha_pos), Ndraw ~ Dir(alpha_neg), S ~ Dir(alpha_soc)
//   Up, Un ~ Bernoulli(delta)
//   theta_mix_u = Up * P + (1 - Up) * Un * Ndraw
//   phi_mix_u   = (1 - Up * Un) * S
//
// The per-node mixtures are stacked and each community row is normalized over
// nodes (rows must be categorical distributions over users; all-zero rows get
// an epsilon fill before normalizing). Ground-truth node polarity is computed
// from the raw per-node mixtures, before row normalization.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "ecd/model.hpp"
#include "ecd/rng.hpp"
#include "ecd/types.hpp"

namespace ecd {

struct GeneratorConfig {
  int num_nodes = 256;
  std::vector<double> eta = {-1.0, -0.5, 0.0, 0.5, 1.0};
  double sigma_s = 10.0;  // concentration of the echo-chamber Dirichlets
  double sigma_0 = 10.0;  // concentration of the social Dirichlet
  double delta = 0.3;     // Bernoulli membership-mixing probability
  double mu = 0.25;       // Beta(mu, mu) shape for item polarities
  int num_links = 2048;
  int num_items = 2048;
  double social_prior = 8.0;  // s
  double echo_prior = 16.0;   // h
  double epsilon = 1e-5;
  int max_cascade_size = 64;
  std::uint64_t seed = 1;

  void validate() const {
    if (num_nodes <= 0 || num_links <= 0 || num_items <= 0 || max_cascade_size <= 0)
      throw input_error("GeneratorConfig: counts must be positive");
    if (eta.empty()) throw input_error("GeneratorConfig: eta must be nonempty");
    for (double e : eta)
      if (!(std::abs(e) <= 1.0)) throw input_error("GeneratorConfig: |eta| must be <= 1");
    if (!(delta >= 0.0 && delta <= 1.0)) throw input_error("GeneratorConfig: delta in [0,1]");
    if (!(mu > 0.0)) throw input_error("GeneratorConfig: mu must be > 0");
    if (!(sigma_s > 0.0) || !(sigma_0 > 0.0))
      throw input_error("GeneratorConfig: concentrations must be > 0");
    if (!(social_prior > 0.0) || !(echo_prior > 0.0) || !(epsilon > 0.0))
      throw input_error("GeneratorConfig: prior strengths must be > 0");
  }

  // (s, h) presets matching the three generation regimes.
  static GeneratorConfig polarized() { return with_priors(8.0, 16.0); }
  static GeneratorConfig social() { return with_priors(16.0, 8.0); }
  static GeneratorConfig balanced() { return with_priors(8.0, 8.0); }

 private:
  static GeneratorConfig with_priors(double s, double h) {
    GeneratorConfig cfg;
    cfg.social_prior = s;
    cfg.echo_prior = h;
    return cfg;
  }
};

// Row-normalized parameters plus the raw per-node mixtures they came from.
struct SampledMemberships {
  ModelParams params;
  Mat theta_mix;  // N x K, per-node mixture before row normalization
  Mat phi_mix;    // N x K
};

// Ground truth emitted with every generated dataset. The arc list keeps
// duplicates (the graph view dedups them); traces record the generating
// community of every arc and item, in order.
struct GroundTruth {
  ModelParams params;
  SocialGraph graph;
  CascadeSet cascades;
  std::vector<std::pair<int, int>> arcs;
  std::vector<double> node_polarity;  // from raw per-node mixtures
  std::vector<int> link_communities;
  std::vector<int> item_communities;
};

namespace detail {

// Normalize each community row over nodes; all-zero rows are epsilon-filled
// first so every row is a valid categorical distribution.
inline Mat rows_from_node_mixtures(const Mat& mix_nk, double epsilon) {
  Mat rows(mix_nk.cols, mix_nk.rows, 0.0);
  for (int c = 0; c < rows.rows; ++c) {
    double sum = 0.0;
    for (int u = 0; u < rows.cols; ++u) {
      rows.at(c, u) = mix_nk.at(u, c);
      sum += rows.at(c, u);
    }
    if (sum <= 0.0) {
      for (int u = 0; u < rows.cols; ++u) rows.at(c, u) = epsilon;
      sum = epsilon * rows.cols;
    }
    for (int u = 0; u < rows.cols; ++u) rows.at(c, u) /= sum;
  }
  return rows;
}

}  // namespace detail

inline SampledMemberships sample_memberships(const GeneratorConfig& config, Rng& rng) {
  config.validate();
  const int k = static_cast<int>(config.eta.size());
  const int n = config.num_nodes;

  std::vector<double> alpha_pos(k), alpha_neg(k), alpha_soc(k);
  for (int c = 0; c < k; ++c) {
    alpha_pos[c] = polarity_gate(1.0, config.eta[c]) * config.sigma_s + config.epsilon;
    alpha_neg[c] = polarity_gate(-1.0, config.eta[c]) * config.sigma_s + config.epsilon;
    alpha_soc[c] = (1.0 - std::abs(config.eta[c])) * config.sigma_0;
  }

  SampledMemberships out;
  out.theta_mix = Mat(n, k, 0.0);
  out.phi_mix = Mat(n, k, 0.0);
  for (int u = 0; u < n; ++u) {
    const auto pos = rng.dirichlet(alpha_pos);
    const auto neg = rng.dirichlet(alpha_neg);
    const auto soc = rng.dirichlet(alpha_soc);
    const double up = rng.bernoulli(config.delta) ? 1.0 : 0.0;
    const double un = rng.bernoulli(config.delta) ? 1.0 : 0.0;
    for (int c = 0; c < k; ++c) {
      out.theta_mix.at(u, c) = up * pos[c] + (1.0 - up) * un * neg[c];
      out.phi_mix.at(u, c) = (1.0 - up * un) * soc[c];
    }
  }

  out.params.eta = config.eta;
  out.params.theta = detail::rows_from_node_mixtures(out.theta_mix, config.epsilon);
  out.params.phi = detail::rows_from_node_mixtures(out.phi_mix, config.epsilon);
  return out;
}

namespace detail {

inline int draw_node(std::span<const double> row, Rng& rng, int community) {
  double total = 0.0;
  for (double w : row) total += w;
  if (!(total > 0.0))
    throw generation_error("community " + std::to_string(community) +
                           " has empty engagement support");
  return static_cast<int>(rng.categorical(row));
}

}  // namespace detail

// Link generative process: community ~ Cat(pi_link); echo-chamber coin
// Bernoulli(|eta_c|) picks theta_c vs phi_c; endpoints drawn independently,
// self-loop draws rejected and redrawn.
inline std::vector<std::pair<int, int>> generate_links(const ModelParams& params,
                                                       double s, double h, double epsilon,
                                                       int count, Rng& rng,
                                                       std::vector<int>* trace = nullptr) {
  const Priors pri = priors(params.eta, s, h, epsilon);
  std::vector<std::pair<int, int>> arcs;
  arcs.reserve(count);
  constexpr int kRedrawCap = 10000;
  for (int i = 0; i < count; ++i) {
    const int c = static_cast<int>(rng.categorical(pri.pi_link));
    const bool echo = rng.bernoulli(std::abs(params.eta[c]));
    const auto row = echo ? params.theta.row(c) : params.phi.row(c);
    int u = detail::draw_node(row, rng, c);
    int v = detail::draw_node(row, rng, c);
    int redraws = 0;
    while (u == v) {
      if (++redraws > kRedrawCap)
        throw generation_error("community " + std::to_string(c) +
                               ": could not draw a non-loop link");
      u = detail::draw_node(row, rng, c);
      v = detail::draw_node(row, rng, c);
    }
    arcs.emplace_back(u, v);
    if (trace) trace->push_back(c);
  }
  return arcs;
}

// Item generative process: the rejection loop redraws (polarity, community,
// acceptance coin) until the polarity gate fires, so items a configuration
// cannot explain (e.g. negative polarities when every eta is positive) are
// never emitted; the cap only triggers when all |eta| are ~0. The cascade then
// grows along follow arcs, the next activation drawn from theta_c restricted
// to the frontier, until the frontier dies or the size cap is reached.
inline CascadeSet generate_items(const ModelParams& params, const SocialGraph& graph,
                                 const GeneratorConfig& config, Rng& rng,
                                 std::vector<int>* trace = nullptr) {
  const Priors pri = priors(params.eta, config.social_prior, config.echo_prior, config.epsilon);
  const int n = graph.num_nodes();
  constexpr int kRejectionCap = 10000;

  CascadeSet out;
  out.items.reserve(config.num_items);
  std::vector<char> activated(n, 0), in_frontier(n, 0);
  std::vector<int> frontier;
  std::vector<double> weights;

  for (int i = 0; i < config.num_items; ++i) {
    Item item;
    item.id = std::to_string(i);

    int c = -1;
    for (int attempt = 0;; ++attempt) {
      if (attempt >= kRejectionCap)
        throw generation_error("item polarity gate never fired; all |eta| may be ~0");
      item.polarity = 2.0 * rng.beta(config.mu, config.mu) - 1.0;
      const int candidate = static_cast<int>(rng.categorical(pri.pi_flow));
      if (rng.bernoulli(polarity_gate(item.polarity, params.eta[candidate]))) {
        c = candidate;
        break;
      }
    }
    if (trace) trace->push_back(c);

    const auto theta_row = params.theta.row(c);
    const int seed_node = detail::draw_node(theta_row, rng, c);

    std::fill(activated.begin(), activated.end(), 0);
    std::fill(in_frontier.begin(), in_frontier.end(), 0);
    frontier.clear();
    item.activated.clear();

    auto add_node = [&](int w) {
      item.activated.push_back(w);
      activated[w] = 1;
      for (int f : graph.followers_of(w)) {
        if (!activated[f] && !in_frontier[f]) {
          in_frontier[f] = 1;
          frontier.push_back(f);
        }
      }
    };
    add_node(seed_node);

    while (static_cast<int>(item.activated.size()) < config.max_cascade_size &&
           !frontier.empty()) {
      weights.clear();
      double total = 0.0;
      for (int w : frontier) {
        weights.push_back(theta_row[w]);
        total += theta_row[w];
      }
      if (!(total > 0.0)) break;  // no engaged node left: treated as empty frontier
      const auto pick = rng.categorical(weights);
      const int next = frontier[pick];
      frontier[pick] = frontier.back();
      frontier.pop_back();
      in_frontier[next] = 0;
      add_node(next);
    }
    out.items.push_back(std::move(item));
  }
  return out;
}

// Full pipeline with a single seeded stream: memberships, then links, then
// items. Identical (config, seed) gives bit-identical output.
inline GroundTruth generate_dataset(const GeneratorConfig& config) {
  config.validate();
  Rng rng(config.seed);
  GroundTruth gt;

  SampledMemberships sampled = sample_memberships(config, rng);
  gt.params = std::move(sampled.params);
  gt.node_polarity.assign(config.num_nodes, 0.0);
  for (int u = 0; u < config.num_nodes; ++u)
    for (int c = 0; c < static_cast<int>(config.eta.size()); ++c)
      gt.node_polarity[u] += config.eta[c] * sampled.theta_mix.at(u, c);

  gt.arcs = generate_links(gt.params, config.social_prior, config.echo_prior,
                           config.epsilon, config.num_links, rng, &gt.link_communities);
  gt.graph = SocialGraph::from_arcs(config.num_nodes, gt.arcs);
  gt.cascades = generate_items(gt.params, gt.graph, config, rng, &gt.item_communities);
  return gt;
}

}  // namespace ecd
