#pragma once

// Probability kernels of the generative model. Pure functions; safe to call
// concurrently.
//
//   cascade:       P(D_i | c)      = max(0, p_i eta_c) * prod_{u in D_i} theta_{c,u}
//   sharing link:  P(s(u,v,p) | c) = max(0, p eta_c) * theta_{c,u} theta_{c,v}
//   social link:   P((u,v) | c)    = |eta_c| theta_{c,u} theta_{c,v}
//                                    + (1 - |eta_c|) phi_{c,u} phi_{c,v}
//
// Community priors come from Dirichlet parameters collapsed to their
// normalized means:
//
//   alpha_flow_c = h |eta_c| + eps          pi_flow = alpha_flow / sum
//   alpha_link_c = s (1 - |eta_c|) + h |eta_c|   pi_link = alpha_link / sum

#include <cmath>
#include <stdexcept>
#include <vector>

#include "ecd/types.hpp"

namespace ecd {

// Floor applied inside log-space computations; products of many engagement
// terms underflow long before they stop being informative.
inline constexpr double kLogFloor = 1e-12;

inline double floored_log(double x) { return std::log(x > kLogFloor ? x : kLogFloor); }

namespace detail {
inline void check_community(const ModelParams& params, int c) {
  if (c < 0 || c >= params.num_communities())
    throw std::out_of_range("community index out of range");
}
inline void check_node(const ModelParams& params, int u) {
  if (u < 0 || u >= params.num_nodes())
    throw std::out_of_range("node index out of range");
}
}  // namespace detail

// max(0, p * eta): zero under sign mismatch and when either factor is zero.
inline double polarity_gate(double p, double eta) {
  const double g = p * eta;
  return g > 0.0 ? g : 0.0;
}

inline double cascade_likelihood(const ModelParams& params, const Item& item, int c) {
  detail::check_community(params, c);
  double value = polarity_gate(item.polarity, params.eta[c]);
  for (int u : item.activated) {
    detail::check_node(params, u);
    value *= params.theta.at(c, u);
  }
  return value;
}

inline double log_cascade_likelihood(const ModelParams& params, const Item& item, int c) {
  detail::check_community(params, c);
  double value = floored_log(polarity_gate(item.polarity, params.eta[c]));
  for (int u : item.activated) {
    detail::check_node(params, u);
    value += floored_log(params.theta.at(c, u));
  }
  return value;
}

inline double sharing_link_likelihood(const ModelParams& params, int u, int v, double p, int c) {
  detail::check_community(params, c);
  detail::check_node(params, u);
  detail::check_node(params, v);
  return polarity_gate(p, params.eta[c]) * params.theta.at(c, u) * params.theta.at(c, v);
}

inline double sharing_link_likelihood(const ModelParams& params, const SharingLink& link, int c) {
  return sharing_link_likelihood(params, link.u, link.v, link.polarity, c);
}

inline double log_sharing_link_likelihood(const ModelParams& params, const SharingLink& link, int c) {
  return floored_log(sharing_link_likelihood(params, link, c));
}

inline double link_likelihood(const ModelParams& params, int u, int v, int c) {
  detail::check_community(params, c);
  detail::check_node(params, u);
  detail::check_node(params, v);
  const double a = std::abs(params.eta[c]);
  return a * params.theta.at(c, u) * params.theta.at(c, v) +
         (1.0 - a) * params.phi.at(c, u) * params.phi.at(c, v);
}

inline double log_link_likelihood(const ModelParams& params, int u, int v, int c) {
  return floored_log(link_likelihood(params, u, v, c));
}

// Normalized community priors plus the Dirichlet parameters behind them (the
// gradient of log pi with respect to eta needs the alphas).
struct Priors {
  std::vector<double> pi_link;
  std::vector<double> pi_flow;
  std::vector<double> alpha_link;
  std::vector<double> alpha_flow;
  double alpha_link_total = 0.0;
  double alpha_flow_total = 0.0;
};

inline Priors priors(std::span<const double> eta, double s, double h, double epsilon) {
  const int k = static_cast<int>(eta.size());
  Priors p;
  p.alpha_link.resize(k);
  p.alpha_flow.resize(k);
  for (int c = 0; c < k; ++c) {
    const double a = std::abs(eta[c]);
    p.alpha_flow[c] = h * a + epsilon;
    p.alpha_link[c] = s * (1.0 - a) + h * a;
    p.alpha_flow_total += p.alpha_flow[c];
    p.alpha_link_total += p.alpha_link[c];
  }
  p.pi_link.resize(k);
  p.pi_flow.resize(k);
  for (int c = 0; c < k; ++c) {
    p.pi_link[c] = p.alpha_link[c] / p.alpha_link_total;
    p.pi_flow[c] = p.alpha_flow[c] / p.alpha_flow_total;
  }
  return p;
}

inline Priors priors(const ModelParams& params, const HyperParams& hyper) {
  hyper.validate();
  return priors(params.eta, hyper.social_prior, hyper.echo_prior, hyper.epsilon);
}

// Per-node community mixture: theta columns renormalized per node. Rows of
// theta are distributions over nodes, so a raw column is not a distribution;
// this is the per-user view used for node polarities and stance scores.
// Nodes with zero total mass get a zero mixture (flagged by callers).
inline Mat node_mixture(const ModelParams& params) {
  const int k = params.num_communities();
  const int n = params.num_nodes();
  Mat mix(n, k, 0.0);
  for (int u = 0; u < n; ++u) {
    double total = 0.0;
    for (int c = 0; c < k; ++c) total += params.theta.at(c, u);
    if (total > 0.0)
      for (int c = 0; c < k; ++c) mix.at(u, c) = params.theta.at(c, u) / total;
  }
  return mix;
}

// Node polarity: eta weighted by the node's community mixture.
inline std::vector<double> node_polarities(const ModelParams& params) {
  const Mat mix = node_mixture(params);
  std::vector<double> pol(mix.rows, 0.0);
  for (int u = 0; u < mix.rows; ++u)
    for (int c = 0; c < mix.cols; ++c) pol[u] += params.eta[c] * mix.at(u, c);
  return pol;
}

}  // namespace ecd
