#pragma once

// Command implementations behind the `ecd` tool: dataset generation, model
// fitting, evaluation and the prediction benchmarks, plus bundle loading.
// Each command writes its files and prints a one-line summary per artifact;
// callers translate exceptions into nonzero exits.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ecd/evaluation.hpp"
#include "ecd/generator.hpp"
#include "ecd/inference.hpp"
#include "ecd/io.hpp"
#include "ecd/prediction.hpp"

namespace ecd {

struct DatasetBundle {
  std::string dir;
  std::string edges_path;
  std::string cascades_path;
  std::string ground_truth_path;  // empty when absent
  std::string trace_path;
  std::string manifest_path;
};

inline DatasetBundle bundle_paths(const std::string& dir) {
  namespace fs = std::filesystem;
  DatasetBundle b;
  b.dir = dir;
  b.edges_path = (fs::path(dir) / "edges.tsv").string();
  b.cascades_path = (fs::path(dir) / "cascades.txt").string();
  b.ground_truth_path = (fs::path(dir) / "ground_truth.txt").string();
  b.trace_path = (fs::path(dir) / "trace.txt").string();
  b.manifest_path = (fs::path(dir) / "manifest.json").string();
  return b;
}

struct LoadedBundle {
  SocialGraph graph;
  CascadeSet cascades;
  std::optional<GroundTruthFile> ground_truth;
};

// Missing-link repair: every activated node with no earlier activated
// in-neighbor gets an arc from the earliest-activated node of its cascade.
// Returns the number of arcs added.
inline int repair_graph(SocialGraph& graph, const CascadeSet& cascades) {
  std::vector<std::pair<int, int>> extra;
  std::vector<char> seen(graph.num_nodes(), 0);
  for (const Item& item : cascades.items) {
    std::fill(seen.begin(), seen.end(), 0);
    for (std::size_t k = 0; k < item.activated.size(); ++k) {
      const int w = item.activated[k];
      if (k > 0) {
        bool reachable = false;
        for (int v : graph.followees_of(w))
          if (seen[v]) {
            reachable = true;
            break;
          }
        if (!reachable && item.activated[0] != w)
          extra.emplace_back(item.activated[0], w);
      }
      seen[w] = 1;
    }
  }
  if (extra.empty()) return 0;
  std::vector<std::pair<int, int>> arcs(graph.edges().begin(), graph.edges().end());
  arcs.insert(arcs.end(), extra.begin(), extra.end());
  const int before = graph.num_edges();
  graph = SocialGraph::from_arcs(graph.num_nodes(), arcs);
  return graph.num_edges() - before;
}

inline LoadedBundle load_bundle(const std::string& dir, bool repair = false) {
  namespace fs = std::filesystem;
  const DatasetBundle paths = bundle_paths(dir);
  const EdgesFile edges = read_edges(paths.edges_path);
  LoadedBundle bundle;
  bundle.cascades = read_cascades(paths.cascades_path);
  int num_nodes = edges.num_nodes;
  for (const Item& item : bundle.cascades.items)
    for (int u : item.activated) num_nodes = std::max(num_nodes, u + 1);
  bundle.graph = SocialGraph::from_arcs(num_nodes, edges.arcs);
  bundle.cascades.validate(num_nodes);
  if (fs::exists(paths.ground_truth_path))
    bundle.ground_truth = read_ground_truth(paths.ground_truth_path);
  if (bundle.graph.duplicates_dropped() > 0)
    std::cerr << "ecd: warning: dropped " << bundle.graph.duplicates_dropped()
              << " duplicate edges\n";
  if (repair) {
    const int added = repair_graph(bundle.graph, bundle.cascades);
    if (added > 0) std::cout << "repaired graph: added " << added << " edges\n";
  }
  return bundle;
}

// ---- generate ----------------------------------------------------------------

inline DatasetBundle cmd_generate(const GeneratorConfig& config, const std::string& out_dir) {
  namespace fs = std::filesystem;
  config.validate();
  fs::create_directories(out_dir);
  const GroundTruth gt = generate_dataset(config);
  const DatasetBundle paths = bundle_paths(out_dir);
  write_edges(paths.edges_path, gt.arcs, config.num_nodes);
  write_cascades(paths.cascades_path, gt.cascades);
  write_ground_truth(paths.ground_truth_path, gt.params, gt.node_polarity);
  write_trace(paths.trace_path, gt);
  write_manifest(paths.manifest_path, config);
  std::cout << "generated " << gt.arcs.size() << " links, " << gt.cascades.items.size()
            << " items (" << gt.cascades.total_activations() << " activations) into "
            << out_dir << "\n";
  return paths;
}

// ---- fit ----------------------------------------------------------------------

struct FitCommandOptions {
  std::string data_dir;
  std::string out_dir;
  HyperParams hyper;
  std::size_t share_cap_per_item = SIZE_MAX;
  bool repair = false;
};

inline FitReport cmd_fit(const FitCommandOptions& options) {
  namespace fs = std::filesystem;
  const LoadedBundle bundle = load_bundle(options.data_dir, options.repair);
  FitOptions fit_options;
  fit_options.share_cap_per_item = options.share_cap_per_item;
  const FitReport report = fit(bundle.graph, bundle.cascades, options.hyper, fit_options);
  fs::create_directories(options.out_dir);
  write_model((fs::path(options.out_dir) / "model.txt").string(), report.fitted, options.hyper);
  write_q_trace((fs::path(options.out_dir) / "q_trace.txt").string(), report.q_trace);
  std::cout << "fit: " << report.iterations << " iterations, "
            << (report.converged ? "converged" : "max iterations") << ", "
            << fmt_g17(report.wall_seconds) << "s\n";
  return report;
}

// ---- eval ---------------------------------------------------------------------

struct EvalCommandOptions {
  std::string model_path;
  std::string data_dir;
  std::string ground_truth_path;  // optional override
  std::string mode = "reconstruction";
  std::string out_path;
};

inline void cmd_eval(const EvalCommandOptions& options) {
  const ModelFile model = read_model(options.model_path);

  if (options.mode == "reconstruction") {
    std::optional<GroundTruthFile> gt;
    if (!options.ground_truth_path.empty()) {
      gt = read_ground_truth(options.ground_truth_path);
    } else {
      const LoadedBundle bundle = load_bundle(options.data_dir);
      gt = bundle.ground_truth;
    }
    if (!gt) throw input_error("reconstruction mode requires ground truth");
    if (gt->params.num_nodes() != model.params.num_nodes())
      throw input_error("model and ground truth disagree on node count");
    const ReconstructionReport report =
        match_and_mae(gt->params, model.params, std::span<const double>(gt->node_polarity));
    auto out = detail::open_out(options.out_path);
    out << "# ecd reconstruction report\n";
    out << "mae_eta " << fmt_g17(report.mae_eta) << '\n';
    out << "mae_theta " << fmt_g17(report.mae_theta) << '\n';
    out << "mae_phi " << fmt_g17(report.mae_phi) << '\n';
    out << "rho_node_polarity " << fmt_g17(report.rho_node_polarity) << '\n';
    out << "matching";
    for (int m : report.matching) out << ' ' << m;
    out << '\n';
    std::cout << "reconstruction: rho " << fmt_g17(report.rho_node_polarity) << " -> "
              << options.out_path << "\n";
    return;
  }

  if (options.mode == "assessment") {
    const LoadedBundle bundle = load_bundle(options.data_dir);
    if (bundle.graph.num_nodes() != model.params.num_nodes())
      throw input_error("model and bundle disagree on node count");
    auto assessments = assess_communities(bundle.graph, bundle.cascades, model.params);
    std::sort(assessments.begin(), assessments.end(),
              [](const CommunityAssessment& a, const CommunityAssessment& b) {
                if (std::abs(a.eta) != std::abs(b.eta)) return std::abs(a.eta) > std::abs(b.eta);
                return a.community < b.community;
              });
    auto out = detail::open_out(options.out_path);
    out << "# community\teta\tsize\tconductance\tpurity\n";
    for (const auto& a : assessments)
      out << a.community << '\t' << fmt_g17(a.eta) << '\t' << a.size << '\t'
          << fmt_g17(a.conductance) << '\t' << fmt_g17(a.purity) << '\n';
    std::cout << "assessment: " << assessments.size() << " non-empty communities -> "
              << options.out_path << "\n";
    return;
  }

  throw input_error("unknown eval mode '" + options.mode + "'");
}

// ---- predict ------------------------------------------------------------------

struct PredictCommandOptions {
  std::string model_path;  // stance task
  std::string data_dir;
  std::string task = "stance";
  std::string out_path;
  std::vector<double> mask_fractions = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  HyperParams hyper;  // next-activation refits
  std::size_t max_negatives = SIZE_MAX;
  bool repair = false;
};

inline void cmd_predict(const PredictCommandOptions& options) {
  const LoadedBundle bundle = load_bundle(options.data_dir, options.repair);

  if (options.task == "stance") {
    const ModelFile model = read_model(options.model_path);
    if (model.params.num_nodes() != bundle.graph.num_nodes())
      throw input_error("model and bundle disagree on node count");
    const auto scores = stance_scores(model.params);
    auto out = detail::open_out(options.out_path);
    out << "# node\tscore\tzero_mass\n";
    for (const StanceScore& s : scores)
      out << s.node << '\t' << fmt_g17(s.score) << '\t' << (s.zero_mass ? 1 : 0) << '\n';
    if (bundle.ground_truth) {
      std::vector<double> values;
      std::vector<int> labels;
      for (const StanceScore& s : scores) {
        const double truth = bundle.ground_truth->node_polarity[s.node];
        if (truth == 0.0) continue;
        values.push_back(s.score);
        labels.push_back(truth > 0.0 ? 1 : 0);
      }
      const double auc = roc_auc(values, labels);
      out << "# roc_auc " << fmt_g17(auc) << " n_labeled " << values.size() << '\n';
      std::cout << "stance: roc_auc " << fmt_g17(auc) << " -> " << options.out_path << "\n";
    } else {
      std::cout << "stance: scores -> " << options.out_path << "\n";
    }
    return;
  }

  if (options.task == "next-activation") {
    auto out = detail::open_out(options.out_path);
    out << "# method\tmask_fraction\tauc\tn_pos\tn_neg\tnegatives_capped\n";
    for (double fraction : options.mask_fractions) {
      const auto results = run_next_activation_benchmark(
          bundle.graph, bundle.cascades, fraction, options.hyper, options.hyper.seed,
          options.max_negatives);
      for (const BenchmarkResult& r : results)
        out << r.method << '\t' << fmt_g17(r.mask_fraction) << '\t' << fmt_g17(r.auc) << '\t'
            << r.n_pos << '\t' << r.n_neg << '\t' << (r.negatives_capped ? 1 : 0) << '\n';
      std::cout << "next-activation: fraction " << fmt_g17(fraction) << " done\n";
    }
    std::cout << "next-activation report -> " << options.out_path << "\n";
    return;
  }

  throw input_error("unknown predict task '" + options.task + "'");
}

}  // namespace ecd
