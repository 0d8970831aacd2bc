#include <doctest.h>

#include <cmath>
#include <set>

#include "ecd/generator.hpp"

using namespace ecd;

namespace {

GeneratorConfig small_polarized(std::uint64_t seed) {
  GeneratorConfig config = GeneratorConfig::polarized();
  config.num_nodes = 64;
  config.num_links = 512;
  config.num_items = 128;
  config.max_cascade_size = 16;
  config.seed = seed;
  return config;
}

}  // namespace

TEST_CASE("membership mixing degenerate deltas") {
  GeneratorConfig config = small_polarized(5);

  SUBCASE("delta = 0: no polarized membership, phi = social draw") {
    config.delta = 0.0;
    Rng rng(config.seed);
    const SampledMemberships s = sample_memberships(config, rng);
    for (double x : s.theta_mix.data) CHECK(x == 0.0);
    for (int u = 0; u < config.num_nodes; ++u) {
      double row = 0.0;
      for (int c = 0; c < 5; ++c) row += s.phi_mix.at(u, c);
      CHECK(row == doctest::Approx(1.0).epsilon(1e-9));  // S sums to 1
    }
  }

  SUBCASE("delta = 1: positive-side membership only, phi = 0") {
    config.delta = 1.0;
    Rng rng(config.seed);
    const SampledMemberships s = sample_memberships(config, rng);
    for (double x : s.phi_mix.data) CHECK(x == 0.0);
    for (int u = 0; u < config.num_nodes; ++u) {
      double row = 0.0;
      for (int c = 0; c < 5; ++c) row += s.theta_mix.at(u, c);
      CHECK(row == doctest::Approx(1.0).epsilon(1e-9));
      // negative-side communities got (near) nothing: alpha there is epsilon
      CHECK(s.theta_mix.at(u, 0) < 1e-3);
      CHECK(s.theta_mix.at(u, 1) < 1e-3);
    }
  }
}

TEST_CASE("sampled rows are stochastic and concentrated") {
  GeneratorConfig config = GeneratorConfig::polarized();
  config.seed = 42;
  Rng rng(config.seed);
  const SampledMemberships s = sample_memberships(config, rng);
  s.params.validate();

  const double uniform_entropy = std::log(static_cast<double>(config.num_nodes));
  auto entropy = [](std::span<const double> row) {
    double h = 0.0;
    for (double x : row)
      if (x > 0.0) h -= x * std::log(x);
    return h;
  };
  // chamber theta rows live on one membership branch and concentrate hard;
  // social phi rows span most nodes, so they sit only somewhat below uniform
  CHECK(entropy(s.params.theta.row(0)) < uniform_entropy - 0.5);
  CHECK(entropy(s.params.theta.row(4)) < uniform_entropy - 0.5);
  CHECK(entropy(s.params.phi.row(2)) < uniform_entropy - 0.05);
}

TEST_CASE("link generation respects engagement support") {
  ModelParams p;
  p.theta = Mat(1, 4);
  p.phi = Mat(1, 4);

  SUBCASE("pure echo chamber: links stay inside the theta support") {
    p.eta = {1.0};
    p.theta.at(0, 0) = 0.5;
    p.theta.at(0, 1) = 0.5;
    p.phi.at(0, 2) = 0.5;
    p.phi.at(0, 3) = 0.5;
    Rng rng(1);
    const auto arcs = generate_links(p, 8.0, 16.0, 1e-5, 200, rng);
    CHECK(arcs.size() == 200);
    for (auto [u, v] : arcs) {
      CHECK(u != v);
      CHECK(u <= 1);
      CHECK(v <= 1);
    }
  }

  SUBCASE("zero polarity: links drawn from phi only") {
    p.eta = {0.0};
    p.theta.at(0, 0) = 0.5;
    p.theta.at(0, 1) = 0.5;
    p.phi.at(0, 2) = 0.5;
    p.phi.at(0, 3) = 0.5;
    Rng rng(1);
    const auto arcs = generate_links(p, 8.0, 16.0, 1e-5, 200, rng);
    for (auto [u, v] : arcs) {
      CHECK(u >= 2);
      CHECK(v >= 2);
    }
  }

  SUBCASE("empty engagement row is a generation error") {
    p.eta = {1.0};
    // theta row all zero
    p.phi.at(0, 2) = 1.0;
    Rng rng(1);
    CHECK_THROWS_AS(generate_links(p, 8.0, 16.0, 1e-5, 10, rng), generation_error);
  }
}

TEST_CASE("default scale: 2048 links over 256 nodes is 8 per node") {
  const GeneratorConfig config = GeneratorConfig::polarized();
  CHECK(config.num_links == 2048);
  CHECK(config.num_nodes == 256);
  CHECK(config.num_items == 2048);
  CHECK(config.eta == std::vector<double>{-1.0, -0.5, 0.0, 0.5, 1.0});
  CHECK(config.delta == 0.3);
  CHECK(config.mu == 0.25);
}

TEST_CASE("single positive community only accepts positive items") {
  GeneratorConfig config;
  config.num_nodes = 32;
  config.eta = {1.0};
  config.num_links = 128;
  config.num_items = 64;
  config.max_cascade_size = 8;
  config.seed = 9;
  const GroundTruth gt = generate_dataset(config);
  CHECK(gt.cascades.items.size() == 64);
  for (const Item& item : gt.cascades.items) CHECK(item.polarity > 0.0);
}

TEST_CASE("cascade stops when the frontier has no engaged node") {
  ModelParams p;
  p.eta = {1.0};
  p.theta = Mat(1, 3);
  p.phi = Mat(1, 3);
  p.theta.at(0, 0) = 1.0;  // only node 0 is engaged
  p.phi.at(0, 0) = 1.0;
  const std::vector<std::pair<int, int>> arcs = {{0, 1}, {1, 2}};
  const SocialGraph graph = SocialGraph::from_arcs(3, arcs);
  GeneratorConfig config;
  config.num_nodes = 3;
  config.eta = {1.0};
  config.num_items = 16;
  config.num_links = 1;
  config.max_cascade_size = 10;
  Rng rng(2);
  const CascadeSet cascades = generate_items(p, graph, config, rng);
  for (const Item& item : cascades.items) {
    CHECK(item.activated.size() == 1);
    CHECK(item.activated[0] == 0);
  }
}

TEST_CASE("rejection cap fires when no community can accept items") {
  ModelParams p;
  p.eta = {0.0};
  p.theta = Mat(1, 2, 0.5);
  p.phi = Mat(1, 2, 0.5);
  const std::vector<std::pair<int, int>> arcs = {{0, 1}};
  const SocialGraph graph = SocialGraph::from_arcs(2, arcs);
  GeneratorConfig config;
  config.num_nodes = 2;
  config.eta = {0.0};
  config.num_items = 1;
  config.num_links = 1;
  Rng rng(3);
  CHECK_THROWS_AS(generate_items(p, graph, config, rng), generation_error);
}

TEST_CASE("trace sign alignment: generating community always matches item sign") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const GroundTruth gt = generate_dataset(small_polarized(seed));
    REQUIRE(gt.item_communities.size() == gt.cascades.items.size());
    for (std::size_t i = 0; i < gt.cascades.items.size(); ++i) {
      const double eta_c = gt.params.eta[gt.item_communities[i]];
      CHECK(gt.cascades.items[i].polarity * eta_c > 0.0);
    }
  }
}

TEST_CASE("cascades are connected through follow edges from their seed") {
  const GroundTruth gt = generate_dataset(small_polarized(13));
  for (const Item& item : gt.cascades.items) {
    std::set<int> seen;
    for (std::size_t k = 0; k < item.activated.size(); ++k) {
      const int w = item.activated[k];
      if (k > 0) {
        bool reachable = false;
        for (int v : gt.graph.followees_of(w))
          if (seen.count(v)) {
            reachable = true;
            break;
          }
        CHECK(reachable);
      }
      seen.insert(w);
    }
  }
}

TEST_CASE("generation is deterministic and counts match the config") {
  const GeneratorConfig config = small_polarized(77);
  const GroundTruth a = generate_dataset(config);
  const GroundTruth b = generate_dataset(config);

  CHECK(a.arcs.size() == static_cast<std::size_t>(config.num_links));
  CHECK(a.cascades.items.size() == static_cast<std::size_t>(config.num_items));

  CHECK(a.arcs == b.arcs);
  CHECK(a.params.eta == b.params.eta);
  CHECK(a.params.theta.data == b.params.theta.data);
  CHECK(a.params.phi.data == b.params.phi.data);
  CHECK(a.node_polarity == b.node_polarity);
  CHECK(a.link_communities == b.link_communities);
  CHECK(a.item_communities == b.item_communities);
  REQUIRE(a.cascades.items.size() == b.cascades.items.size());
  for (std::size_t i = 0; i < a.cascades.items.size(); ++i) {
    CHECK(a.cascades.items[i].polarity == b.cascades.items[i].polarity);
    CHECK(a.cascades.items[i].activated == b.cascades.items[i].activated);
  }
}
