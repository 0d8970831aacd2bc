#pragma once

// Domain types shared by the generator, the inference algorithm and the
// evaluation/prediction code. All of them are immutable after construction;
// the probability kernels in model.hpp are pure functions over them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ecd/errors.hpp"

namespace ecd {

// Minimal dense row-major matrix of doubles.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Mat() = default;
  Mat(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
  std::span<double> row(int r) { return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)}; }
  std::span<const double> row(int r) const { return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)}; }

  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

// Directed follow graph G = (V, E). An arc (u, v) means "u is followed by v":
// content produced by u is visible to v. Arcs are deduplicated at
// construction; the number of dropped duplicates is kept as a warning counter.
class SocialGraph {
 public:
  SocialGraph() = default;

  // Validates indices and the no-self-loop invariant, dedups, builds CSR
  // adjacency in both directions.
  static SocialGraph from_arcs(int num_nodes, std::span<const std::pair<int, int>> arcs) {
    if (num_nodes <= 0) throw input_error("SocialGraph: num_nodes must be positive");
    SocialGraph g;
    g.num_nodes_ = num_nodes;
    std::vector<std::pair<int, int>> sorted;
    sorted.reserve(arcs.size());
    for (auto [u, v] : arcs) {
      if (u < 0 || u >= num_nodes || v < 0 || v >= num_nodes)
        throw input_error("SocialGraph: node index out of range");
      if (u == v) throw input_error("SocialGraph: self-loop rejected");
      sorted.emplace_back(u, v);
    }
    std::sort(sorted.begin(), sorted.end());
    const auto last = std::unique(sorted.begin(), sorted.end());
    g.duplicates_dropped_ = static_cast<int>(sorted.end() - last);
    sorted.erase(last, sorted.end());
    g.edges_ = std::move(sorted);
    g.build_adjacency();
    return g;
  }

  int num_nodes() const { return num_nodes_; }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  int duplicates_dropped() const { return duplicates_dropped_; }
  std::span<const std::pair<int, int>> edges() const { return edges_; }

  // v such that (u, v) in E: the accounts following u.
  std::span<const int> followers_of(int u) const {
    return {fwd_adj_.data() + fwd_off_[u], static_cast<std::size_t>(fwd_off_[u + 1] - fwd_off_[u])};
  }
  // u such that (u, v) in E: the accounts v follows.
  std::span<const int> followees_of(int v) const {
    return {rev_adj_.data() + rev_off_[v], static_cast<std::size_t>(rev_off_[v + 1] - rev_off_[v])};
  }

 private:
  void build_adjacency() {
    fwd_off_.assign(num_nodes_ + 1, 0);
    rev_off_.assign(num_nodes_ + 1, 0);
    for (auto [u, v] : edges_) {
      ++fwd_off_[u + 1];
      ++rev_off_[v + 1];
    }
    for (int i = 0; i < num_nodes_; ++i) {
      fwd_off_[i + 1] += fwd_off_[i];
      rev_off_[i + 1] += rev_off_[i];
    }
    fwd_adj_.resize(edges_.size());
    rev_adj_.resize(edges_.size());
    std::vector<int> fpos(fwd_off_.begin(), fwd_off_.end() - 1);
    std::vector<int> rpos(rev_off_.begin(), rev_off_.end() - 1);
    for (auto [u, v] : edges_) {
      fwd_adj_[fpos[u]++] = v;
      rev_adj_[rpos[v]++] = u;
    }
  }

  int num_nodes_ = 0;
  int duplicates_dropped_ = 0;
  std::vector<std::pair<int, int>> edges_;
  std::vector<int> fwd_off_, fwd_adj_;  // u -> followers
  std::vector<int> rev_off_, rev_adj_;  // v -> followees
};

// One propagated item: polarity in [-1, 1] plus its cascade, the nodes that
// activated on it in activation order.
struct Item {
  std::string id;
  double polarity = 0.0;
  std::vector<int> activated;

  void validate(int num_nodes) const {
    if (!(std::abs(polarity) <= 1.0))
      throw input_error("Item " + id + ": polarity out of [-1,1]");
    std::vector<char> seen(num_nodes, 0);
    for (int u : activated) {
      if (u < 0 || u >= num_nodes)
        throw input_error("Item " + id + ": activated node out of range");
      if (seen[u]) throw input_error("Item " + id + ": duplicate activated node");
      seen[u] = 1;
    }
  }
};

struct CascadeSet {
  std::vector<Item> items;

  void validate(int num_nodes) const {
    for (const auto& item : items) item.validate(num_nodes);
  }
  std::size_t total_activations() const {
    std::size_t n = 0;
    for (const auto& item : items) n += item.activated.size();
    return n;
  }
};

// Co-sharing evidence unit: u and v (u < v) both activated on an item with
// the given polarity. The multiset of all such pairs is the sharing-link
// multigraph induced by the cascades.
struct SharingLink {
  int u = 0;
  int v = 0;
  double polarity = 0.0;
  int item_index = 0;
};

// Model parameters: community polarities eta (K), polarized engagement theta
// and social engagement phi (both K x N, each row a categorical distribution
// over nodes).
struct ModelParams {
  std::vector<double> eta;
  Mat theta;
  Mat phi;

  int num_communities() const { return static_cast<int>(eta.size()); }
  int num_nodes() const { return theta.cols; }

  void validate() const {
    const int k = num_communities();
    if (k == 0 || theta.rows != k || phi.rows != k || theta.cols != phi.cols)
      throw input_error("ModelParams: inconsistent shapes");
    for (double e : eta)
      if (!(std::abs(e) <= 1.0)) throw input_error("ModelParams: |eta| must be <= 1");
    auto check_rows = [](const Mat& m, const char* name) {
      for (int c = 0; c < m.rows; ++c) {
        double sum = 0.0;
        for (double x : m.row(c)) {
          if (!(x >= 0.0)) throw input_error(std::string("ModelParams: negative entry in ") + name);
          sum += x;
        }
        if (std::abs(sum - 1.0) > 1e-9)
          throw input_error(std::string("ModelParams: row of ") + name + " does not sum to 1");
      }
    };
    check_rows(theta, "theta");
    check_rows(phi, "phi");
  }
};

// Hyper-parameters shared by priors and the fit loop.
struct HyperParams {
  int num_communities = 8;
  double social_prior = 8.0;     // s
  double echo_prior = 16.0;      // h
  double epsilon = 1e-5;
  double learning_rate = 0.05;   // lambda
  int steps_per_iter = 50;       // H
  int batch_size = 512;
  int max_iters = 200;
  std::uint64_t seed = 1;

  void validate() const {
    if (num_communities < 1) throw input_error("HyperParams: K must be >= 1");
    if (!(social_prior > 0.0)) throw input_error("HyperParams: s must be > 0");
    if (!(echo_prior > 0.0)) throw input_error("HyperParams: h must be > 0");
    if (!(epsilon > 0.0)) throw input_error("HyperParams: epsilon must be > 0");
    if (batch_size < 2) throw input_error("HyperParams: batch_size must be >= 2");
    if (steps_per_iter < 1) throw input_error("HyperParams: steps_per_iter must be >= 1");
    if (max_iters < 0) throw input_error("HyperParams: max_iters must be >= 0");
  }
};

}  // namespace ecd
