#pragma once

// Stochastic Generalized EM over social links and sharing links.
//
// Each outer iteration freezes the current parameters, then runs H inner
// steps. Every step samples a balanced batch X, computes closed-form
// posteriors with the frozen parameters (E step)
//
//   gamma_{l,c} = P(l|c) pi_link(c) / sum_c' P(l|c') pi_link(c')
//   xi_{s,c}    = P(s|c) pi_flow(c) / sum_c' P(s|c') pi_flow(c')
//
// and ascends the gradient of the expected complete-data log likelihood at
// the live parameters (M step):
//
//   Q = sum_l sum_c gamma_{l,c} (log P(l|c) + log pi_link(c))
//     + sum_s sum_c xi_{s,c}    (log P(s|c) + log pi_flow(c))
//
// Unconstrained parameterization: eta = tanh(eta_raw), theta rows are
// softmax(theta_raw) over nodes, phi rows are sigmoid(phi_raw) renormalized
// over nodes. Gradients are exact, including the dependence of the priors on
// eta; max(0, x) and |x| use subgradient 0 at the kink.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <unordered_set>
#include <vector>

#include "ecd/model.hpp"
#include "ecd/rng.hpp"
#include "ecd/types.hpp"

namespace ecd {

struct RawParams {
  std::vector<double> eta_raw;  // K, pre-tanh
  Mat theta_raw;                // K x N, pre-softmax logits
  Mat phi_raw;                  // K x N, pre-sigmoid scores

  int num_communities() const { return static_cast<int>(eta_raw.size()); }
  int num_nodes() const { return theta_raw.cols; }
};

// Initialization: small logits give near-uniform memberships; mixed-sign
// eta_raw breaks community symmetry.
inline RawParams init_raw(int k, int n, Rng& rng) {
  RawParams raw;
  raw.eta_raw.resize(k);
  raw.theta_raw = Mat(k, n);
  raw.phi_raw = Mat(k, n);
  for (int c = 0; c < k; ++c) raw.eta_raw[c] = rng.uniform(-0.5, 0.5);
  for (auto& x : raw.theta_raw.data) x = rng.uniform(-0.01, 0.01);
  for (auto& x : raw.phi_raw.data) x = rng.uniform(-0.01, 0.01);
  return raw;
}

namespace detail {

// Transformed parameters plus the sigmoid intermediates the phi chain rule
// needs. A phi row whose sigmoids all underflow to zero falls back to
// uniform; that branch is flat, so its gradient is zero.
struct TransformCache {
  ModelParams params;
  Mat sigma;                         // sigmoid(phi_raw)
  std::vector<double> sigma_row_sum; // per community; 0 marks the fallback rows
};

inline TransformCache transform_cache(const RawParams& raw) {
  const int k = raw.num_communities();
  const int n = raw.num_nodes();
  if (k == 0 || n == 0 || raw.phi_raw.rows != k || raw.phi_raw.cols != n)
    throw input_error("RawParams: inconsistent shapes");
  auto check_finite = [](double x) {
    if (!std::isfinite(x)) throw numeric_error("non-finite raw parameter");
  };
  TransformCache out;
  out.params.eta.resize(k);
  out.params.theta = Mat(k, n);
  out.params.phi = Mat(k, n);
  out.sigma = Mat(k, n);
  out.sigma_row_sum.assign(k, 0.0);

  for (int c = 0; c < k; ++c) {
    check_finite(raw.eta_raw[c]);
    out.params.eta[c] = std::tanh(raw.eta_raw[c]);
  }
  for (int c = 0; c < k; ++c) {
    const auto logits = raw.theta_raw.row(c);
    double max_logit = logits[0];
    for (double x : logits) {
      check_finite(x);
      max_logit = std::max(max_logit, x);
    }
    double z = 0.0;
    for (int u = 0; u < n; ++u) {
      const double e = std::exp(logits[u] - max_logit);
      out.params.theta.at(c, u) = e;
      z += e;
    }
    for (int u = 0; u < n; ++u) out.params.theta.at(c, u) /= z;
  }
  for (int c = 0; c < k; ++c) {
    double sum = 0.0;
    for (int u = 0; u < n; ++u) {
      const double x = raw.phi_raw.at(c, u);
      check_finite(x);
      const double sig = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                                  : std::exp(x) / (1.0 + std::exp(x));
      out.sigma.at(c, u) = sig;
      sum += sig;
    }
    out.sigma_row_sum[c] = sum;
    if (sum > 0.0) {
      for (int u = 0; u < n; ++u) out.params.phi.at(c, u) = out.sigma.at(c, u) / sum;
    } else {
      for (int u = 0; u < n; ++u) out.params.phi.at(c, u) = 1.0 / n;
    }
  }
  return out;
}

}  // namespace detail

inline ModelParams transform(const RawParams& raw) {
  return detail::transform_cache(raw).params;
}

struct Batch {
  std::vector<std::pair<int, int>> links;
  std::vector<SharingLink> shares;
  std::size_t size() const { return links.size() + shares.size(); }
};

struct Posteriors {
  Mat gamma;  // |links| x K
  Mat xi;     // |shares| x K
};

// Materialize the sharing-link multigraph: one link per unordered co-sharing
// pair per item, u < v canonical. cap_per_item bounds the quadratic blowup on
// huge cascades (pairs subsampled without replacement, seeded by cap_seed).
inline std::vector<SharingLink> build_sharing_links(const CascadeSet& cascades,
                                                    std::size_t cap_per_item = SIZE_MAX,
                                                    std::uint64_t cap_seed = 0) {
  std::vector<SharingLink> shares;
  for (int i = 0; i < static_cast<int>(cascades.items.size()); ++i) {
    const Item& item = cascades.items[i];
    const auto& d = item.activated;
    const std::size_t m = d.size();
    if (m < 2) continue;
    const std::size_t pairs = m * (m - 1) / 2;
    if (pairs <= cap_per_item) {
      for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = a + 1; b < m; ++b) {
          const int u = std::min(d[a], d[b]);
          const int v = std::max(d[a], d[b]);
          shares.push_back({u, v, item.polarity, i});
        }
    } else {
      // reservoir sample cap_per_item pairs, enumeration order fixed
      Rng rng(cap_seed ^ (0x9e3779b97f4a7c15ULL * (i + 1)));
      std::vector<SharingLink> reservoir;
      reservoir.reserve(cap_per_item);
      std::size_t seen = 0;
      for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = a + 1; b < m; ++b) {
          const int u = std::min(d[a], d[b]);
          const int v = std::max(d[a], d[b]);
          if (reservoir.size() < cap_per_item) {
            reservoir.push_back({u, v, item.polarity, i});
          } else {
            const std::size_t j = rng.below(++seen + cap_per_item);
            if (j < cap_per_item) reservoir[j] = {u, v, item.polarity, i};
          }
        }
      shares.insert(shares.end(), reservoir.begin(), reservoir.end());
    }
  }
  return shares;
}

// Balanced batch: batch_size/2 links and batch_size/2 shares. A pool smaller
// than its half is oversampled with replacement; otherwise sampling is
// without replacement. Indices are used in ascending order so reductions are
// deterministic.
inline Batch sample_batch(std::span<const std::pair<int, int>> link_pool,
                          std::span<const SharingLink> share_pool,
                          int batch_size, Rng& rng) {
  if (link_pool.empty() || share_pool.empty())
    throw input_error("sample_batch: empty evidence pool");
  if (batch_size < 2) throw input_error("sample_batch: batch_size must be >= 2");
  const std::size_t half = static_cast<std::size_t>(batch_size) / 2;

  auto draw_indices = [&rng](std::size_t pool, std::size_t count) {
    std::vector<std::size_t> idx;
    idx.reserve(count);
    if (pool >= count) {
      // Floyd's subset sampling
      std::unordered_set<std::size_t> chosen;
      for (std::size_t j = pool - count; j < pool; ++j) {
        const std::size_t t = rng.below(j + 1);
        if (!chosen.insert(t).second) chosen.insert(j);
      }
      idx.assign(chosen.begin(), chosen.end());
    } else {
      for (std::size_t i = 0; i < count; ++i) idx.push_back(rng.below(pool));
    }
    std::sort(idx.begin(), idx.end());
    return idx;
  };

  Batch batch;
  for (auto i : draw_indices(link_pool.size(), half)) batch.links.push_back(link_pool[i]);
  for (auto i : draw_indices(share_pool.size(), half)) batch.shares.push_back(share_pool[i]);
  return batch;
}

namespace detail {

// E step on already-transformed parameters. A row whose total likelihood is
// exactly zero falls back to the prior (the limit of epsilon-smoothing).
inline Posteriors posteriors_from(const ModelParams& params, const Priors& pri,
                                  const Batch& batch) {
  const int k = params.num_communities();
  Posteriors post;
  post.gamma = Mat(static_cast<int>(batch.links.size()), k);
  post.xi = Mat(static_cast<int>(batch.shares.size()), k);

  for (int r = 0; r < post.gamma.rows; ++r) {
    const auto [u, v] = batch.links[r];
    double denom = 0.0;
    for (int c = 0; c < k; ++c) {
      const double w = link_likelihood(params, u, v, c) * pri.pi_link[c];
      post.gamma.at(r, c) = w;
      denom += w;
    }
    for (int c = 0; c < k; ++c)
      post.gamma.at(r, c) = denom > 0.0 ? post.gamma.at(r, c) / denom : pri.pi_link[c];
  }
  for (int r = 0; r < post.xi.rows; ++r) {
    const SharingLink& s = batch.shares[r];
    double denom = 0.0;
    for (int c = 0; c < k; ++c) {
      const double w = sharing_link_likelihood(params, s, c) * pri.pi_flow[c];
      post.xi.at(r, c) = w;
      denom += w;
    }
    for (int c = 0; c < k; ++c)
      post.xi.at(r, c) = denom > 0.0 ? post.xi.at(r, c) / denom : pri.pi_flow[c];
  }
  return post;
}

inline void check_posterior_shapes(const RawParams& raw, const Batch& batch,
                                   const Posteriors& post) {
  const int k = raw.num_communities();
  if (post.gamma.rows != static_cast<int>(batch.links.size()) ||
      post.xi.rows != static_cast<int>(batch.shares.size()) ||
      (post.gamma.rows > 0 && post.gamma.cols != k) ||
      (post.xi.rows > 0 && post.xi.cols != k))
    throw input_error("posterior shape does not match batch");
}

}  // namespace detail

inline Posteriors e_step(const RawParams& raw, const HyperParams& hyper, const Batch& batch) {
  const auto cache = detail::transform_cache(raw);
  const Priors pri = priors(cache.params.eta, hyper.social_prior, hyper.echo_prior, hyper.epsilon);
  return detail::posteriors_from(cache.params, pri, batch);
}

namespace detail {

inline double q_value_on(const ModelParams& params, const Priors& pri,
                         const Batch& batch, const Posteriors& post) {
  const int k = params.num_communities();
  double q = 0.0;
  for (int r = 0; r < post.gamma.rows; ++r) {
    const auto [u, v] = batch.links[r];
    for (int c = 0; c < k; ++c) {
      const double w = post.gamma.at(r, c);
      if (w == 0.0) continue;  // 0 * log convention
      q += w * (floored_log(link_likelihood(params, u, v, c)) + floored_log(pri.pi_link[c]));
    }
  }
  for (int r = 0; r < post.xi.rows; ++r) {
    const SharingLink& s = batch.shares[r];
    for (int c = 0; c < k; ++c) {
      const double w = post.xi.at(r, c);
      if (w == 0.0) continue;
      q += w * (floored_log(sharing_link_likelihood(params, s, c)) + floored_log(pri.pi_flow[c]));
    }
  }
  return q;
}

}  // namespace detail

inline double q_value(const RawParams& raw, const HyperParams& hyper,
                      const Batch& batch, const Posteriors& post) {
  detail::check_posterior_shapes(raw, batch, post);
  const auto cache = detail::transform_cache(raw);
  const Priors pri = priors(cache.params.eta, hyper.social_prior, hyper.echo_prior, hyper.epsilon);
  return detail::q_value_on(cache.params, pri, batch, post);
}

namespace detail {

inline double sign0(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// Exact gradient of q_value with respect to the raw parameters, posteriors
// held fixed. Terms whose probability sits at the log floor are flat and
// contribute nothing, matching what finite differences of q_value see.
inline RawParams q_gradient_on(const TransformCache& cache, const HyperParams& hyper,
                               const Batch& batch, const Posteriors& post) {
  const ModelParams& params = cache.params;
  const int k = params.num_communities();
  const int n = params.num_nodes();
  const Priors pri = priors(params.eta, hyper.social_prior, hyper.echo_prior, hyper.epsilon);

  Mat g_theta(k, n), g_phi(k, n);          // model-space gradients
  std::vector<double> g_eta(k, 0.0);
  std::vector<double> gamma_mass(k, 0.0);  // sum of posteriors, for prior terms
  std::vector<double> xi_mass(k, 0.0);

  for (int r = 0; r < post.gamma.rows; ++r) {
    const auto [u, v] = batch.links[r];
    for (int c = 0; c < k; ++c) {
      const double w = post.gamma.at(r, c);
      gamma_mass[c] += w;
      if (w == 0.0) continue;
      const double a = std::abs(params.eta[c]);
      const double tu = params.theta.at(c, u), tv = params.theta.at(c, v);
      const double fu = params.phi.at(c, u), fv = params.phi.at(c, v);
      const double p_link = a * tu * tv + (1.0 - a) * fu * fv;
      if (p_link <= kLogFloor) continue;
      const double scale = w / p_link;
      g_theta.at(c, u) += scale * a * tv;
      g_theta.at(c, v) += scale * a * tu;
      g_phi.at(c, u) += scale * (1.0 - a) * fv;
      g_phi.at(c, v) += scale * (1.0 - a) * fu;
      g_eta[c] += scale * sign0(params.eta[c]) * (tu * tv - fu * fv);
    }
  }
  for (int r = 0; r < post.xi.rows; ++r) {
    const SharingLink& s = batch.shares[r];
    for (int c = 0; c < k; ++c) {
      const double w = post.xi.at(r, c);
      xi_mass[c] += w;
      if (w == 0.0) continue;
      const double gate = polarity_gate(s.polarity, params.eta[c]);
      const double tu = params.theta.at(c, s.u), tv = params.theta.at(c, s.v);
      const double p_share = gate * tu * tv;
      if (p_share <= kLogFloor) continue;
      const double scale = w / p_share;
      g_theta.at(c, s.u) += scale * gate * tv;
      g_theta.at(c, s.v) += scale * gate * tu;
      if (gate > 0.0) g_eta[c] += scale * s.polarity * tu * tv;
    }
  }

  // d log pi(c') / d eta_c through the Dirichlet parameters
  for (int cp = 0; cp < k; ++cp) {
    if (gamma_mass[cp] > 0.0 && pri.pi_link[cp] > kLogFloor) {
      const double base = gamma_mass[cp] / (pri.alpha_link_total * pri.pi_link[cp]);
      for (int c = 0; c < k; ++c) {
        const double dalpha = (hyper.echo_prior - hyper.social_prior) * sign0(params.eta[c]);
        g_eta[c] += base * dalpha * ((c == cp ? 1.0 : 0.0) - pri.pi_link[cp]);
      }
    }
    if (xi_mass[cp] > 0.0 && pri.pi_flow[cp] > kLogFloor) {
      const double base = xi_mass[cp] / (pri.alpha_flow_total * pri.pi_flow[cp]);
      for (int c = 0; c < k; ++c) {
        const double dalpha = hyper.echo_prior * sign0(params.eta[c]);
        g_eta[c] += base * dalpha * ((c == cp ? 1.0 : 0.0) - pri.pi_flow[cp]);
      }
    }
  }

  // chain through tanh / softmax / sigmoid-renormalize
  RawParams grad;
  grad.eta_raw.resize(k);
  grad.theta_raw = Mat(k, n);
  grad.phi_raw = Mat(k, n);
  for (int c = 0; c < k; ++c)
    grad.eta_raw[c] = g_eta[c] * (1.0 - params.eta[c] * params.eta[c]);
  for (int c = 0; c < k; ++c) {
    double dot = 0.0;
    for (int u = 0; u < n; ++u) dot += g_theta.at(c, u) * params.theta.at(c, u);
    for (int u = 0; u < n; ++u)
      grad.theta_raw.at(c, u) = params.theta.at(c, u) * (g_theta.at(c, u) - dot);
  }
  for (int c = 0; c < k; ++c) {
    const double row_sum = cache.sigma_row_sum[c];
    if (row_sum <= 0.0) continue;  // uniform-fallback plateau
    double dot = 0.0;
    for (int u = 0; u < n; ++u) dot += g_phi.at(c, u) * params.phi.at(c, u);
    for (int u = 0; u < n; ++u) {
      const double sig = cache.sigma.at(c, u);
      grad.phi_raw.at(c, u) = (g_phi.at(c, u) - dot) * sig * (1.0 - sig) / row_sum;
    }
  }
  return grad;
}

}  // namespace detail

inline RawParams q_gradient(const RawParams& raw, const HyperParams& hyper,
                            const Batch& batch, const Posteriors& post) {
  detail::check_posterior_shapes(raw, batch, post);
  const auto cache = detail::transform_cache(raw);
  return detail::q_gradient_on(cache, hyper, batch, post);
}

struct FitOptions {
  std::size_t share_cap_per_item = SIZE_MAX;
  // Stop when the per-iteration mean Q improves by less than this relative
  // tolerance. The batch means are noisy and sign symmetry breaks through
  // long plateaus, so the shortfall must persist for `patience` consecutive
  // iterations and the check only engages after `warmup_iters`.
  double convergence_tol = 1e-4;
  int warmup_iters = 50;
  int patience = 3;
};

struct FitReport {
  ModelParams fitted;
  std::vector<double> q_trace;  // one Q value per optimization step
  int iterations = 0;
  bool converged = false;
  double wall_seconds = 0.0;
};

// ECD fit. Posteriors always use the parameters frozen at the top of the
// iteration; gradients are taken at the live parameters. The update ascends
// the batch-mean objective: raw += lr * grad(Q) / |X|.
inline FitReport fit(const SocialGraph& graph, const CascadeSet& cascades,
                     const HyperParams& hyper, const FitOptions& options = {}) {
  hyper.validate();
  if (graph.num_edges() == 0) throw input_error("fit: graph has no edges");
  const std::vector<SharingLink> shares =
      build_sharing_links(cascades, options.share_cap_per_item, hyper.seed);
  if (shares.empty())
    throw input_error("fit: no sharing links (no cascade has two or more nodes)");
  const auto links = graph.edges();

  const auto t_start = std::chrono::steady_clock::now();
  Rng rng(hyper.seed);
  RawParams raw = init_raw(hyper.num_communities, graph.num_nodes(), rng);

  FitReport report;
  double prev_avg = 0.0;
  int stall = 0;
  for (int iter = 0; iter < hyper.max_iters; ++iter) {
    const auto frozen = detail::transform_cache(raw);
    const Priors frozen_priors =
        priors(frozen.params.eta, hyper.social_prior, hyper.echo_prior, hyper.epsilon);

    double q_sum = 0.0;
    for (int step = 0; step < hyper.steps_per_iter; ++step) {
      const Batch batch = sample_batch(links, shares, hyper.batch_size, rng);
      const Posteriors post = detail::posteriors_from(frozen.params, frozen_priors, batch);
      const auto live = detail::transform_cache(raw);
      const Priors live_priors =
          priors(live.params.eta, hyper.social_prior, hyper.echo_prior, hyper.epsilon);
      const double q = detail::q_value_on(live.params, live_priors, batch, post);
      const RawParams grad = detail::q_gradient_on(live, hyper, batch, post);

      const double scale = hyper.learning_rate / static_cast<double>(batch.size());
      for (int c = 0; c < hyper.num_communities; ++c) raw.eta_raw[c] += scale * grad.eta_raw[c];
      for (std::size_t i = 0; i < raw.theta_raw.data.size(); ++i)
        raw.theta_raw.data[i] += scale * grad.theta_raw.data[i];
      for (std::size_t i = 0; i < raw.phi_raw.data.size(); ++i)
        raw.phi_raw.data[i] += scale * grad.phi_raw.data[i];

      report.q_trace.push_back(q);
      q_sum += q;
    }
    report.iterations = iter + 1;

    const double avg = q_sum / hyper.steps_per_iter;
    if (iter > 0 && avg - prev_avg < options.convergence_tol * std::abs(prev_avg))
      ++stall;
    else
      stall = 0;
    if (iter + 1 >= options.warmup_iters && stall >= options.patience) {
      report.converged = true;
      break;
    }
    prev_avg = avg;
  }

  report.fitted = transform(raw);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return report;
}

}  // namespace ecd
