#pragma once

// Text file formats. Everything is line-oriented, `#` starts a comment, and
// floating-point numbers are written with 17 significant digits so that
// serialize -> parse reproduces doubles exactly.
//
//   edges.tsv         u<TAB>v per line, "u is followed by v"
//   cascades.txt      <item id> <polarity> <activated nodes...>
//   model.txt         eta/theta/phi rows plus the hyper-parameters used
//   ground_truth.txt  generating parameters plus true node polarities
//   trace.txt         generating community of every link and item
//   q_trace.txt       one Q value per optimization step
//   manifest.json     generator config + seed; regenerates the bundle

#include <cctype>
#include <cstdio>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ecd/generator.hpp"
#include "ecd/inference.hpp"
#include "ecd/types.hpp"

namespace ecd {

inline std::string fmt_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace detail {

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary: no newline translation
  if (!out) throw input_error("cannot open for writing: " + path);
  return out;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open for reading: " + path);
  return in;
}

inline bool is_comment_or_blank(const std::string& line) {
  for (char ch : line) {
    if (ch == '#') return true;
    if (!std::isspace(static_cast<unsigned char>(ch))) return false;
  }
  return true;
}

inline double parse_double(const std::string& token, int line_no) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0')
    throw parse_error("malformed number '" + token + "'", line_no);
  return v;
}

inline long long parse_int(const std::string& token, int line_no) {
  char* end = nullptr;
  const long long v = std::strtoll(token.c_str(), &end, 10);
  if (end == token.c_str() || *end != '\0')
    throw parse_error("malformed integer '" + token + "'", line_no);
  return v;
}

inline std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) tokens.push_back(tok);
  return tokens;
}

}  // namespace detail

// ---- edges ----------------------------------------------------------------

inline void write_edges(const std::string& path,
                        std::span<const std::pair<int, int>> arcs, int num_nodes) {
  auto out = detail::open_out(path);
  out << "# ecd edges\n# nodes " << num_nodes << "\n";
  for (auto [u, v] : arcs) out << u << '\t' << v << '\n';
}

struct EdgesFile {
  int num_nodes = 0;  // from the "# nodes" header, else max index + 1
  std::vector<std::pair<int, int>> arcs;
};

inline EdgesFile read_edges(const std::string& path) {
  auto in = detail::open_in(path);
  EdgesFile file;
  int max_index = -1;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::is_comment_or_blank(line)) {
      const auto tokens = detail::split_ws(line);
      if (tokens.size() >= 3 && tokens[0] == "#" && tokens[1] == "nodes")
        file.num_nodes = static_cast<int>(detail::parse_int(tokens[2], line_no));
      continue;
    }
    const auto tokens = detail::split_ws(line);
    if (tokens.size() != 2) throw parse_error("expected 'u<TAB>v'", line_no);
    const int u = static_cast<int>(detail::parse_int(tokens[0], line_no));
    const int v = static_cast<int>(detail::parse_int(tokens[1], line_no));
    file.arcs.emplace_back(u, v);
    max_index = std::max({max_index, u, v});
  }
  if (file.num_nodes == 0) file.num_nodes = max_index + 1;
  if (file.num_nodes <= 0) throw parse_error("edges file is empty", line_no);
  return file;
}

// ---- cascades ---------------------------------------------------------------

inline void write_cascades(const std::string& path, const CascadeSet& cascades) {
  auto out = detail::open_out(path);
  out << "# ecd cascades\n";
  for (const Item& item : cascades.items) {
    out << item.id << ' ' << fmt_g17(item.polarity);
    for (int u : item.activated) out << ' ' << u;
    out << '\n';
  }
}

inline CascadeSet read_cascades(const std::string& path) {
  auto in = detail::open_in(path);
  CascadeSet cascades;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::is_comment_or_blank(line)) continue;
    const auto tokens = detail::split_ws(line);
    if (tokens.size() < 2)
      throw parse_error("expected '<id> <polarity> <nodes...>'", line_no);
    Item item;
    item.id = tokens[0];
    item.polarity = detail::parse_double(tokens[1], line_no);
    if (!(std::abs(item.polarity) <= 1.0))
      throw parse_error("polarity out of [-1,1]", line_no);
    for (std::size_t t = 2; t < tokens.size(); ++t)
      item.activated.push_back(static_cast<int>(detail::parse_int(tokens[t], line_no)));
    cascades.items.push_back(std::move(item));
  }
  return cascades;
}

// ---- model / ground truth ---------------------------------------------------

namespace detail {

inline void write_params_block(std::ofstream& out, const ModelParams& params) {
  out << "communities " << params.num_communities() << "\n";
  out << "nodes " << params.num_nodes() << "\n";
  out << "eta";
  for (double e : params.eta) out << ' ' << fmt_g17(e);
  out << '\n';
  for (int c = 0; c < params.num_communities(); ++c) {
    out << "theta " << c;
    for (double x : params.theta.row(c)) out << ' ' << fmt_g17(x);
    out << '\n';
  }
  for (int c = 0; c < params.num_communities(); ++c) {
    out << "phi " << c;
    for (double x : params.phi.row(c)) out << ' ' << fmt_g17(x);
    out << '\n';
  }
}

struct ParamsReader {
  int communities = 0;
  int nodes = 0;
  ModelParams params;
  bool eta_seen = false;
  std::vector<char> theta_seen, phi_seen;

  // returns true when the line belonged to the parameter block
  bool consume(const std::vector<std::string>& tokens, int line_no) {
    const std::string& key = tokens[0];
    if (key == "communities") {
      communities = static_cast<int>(parse_int(tokens.at(1), line_no));
      return true;
    }
    if (key == "nodes") {
      nodes = static_cast<int>(parse_int(tokens.at(1), line_no));
      return true;
    }
    if (key != "eta" && key != "theta" && key != "phi") return false;
    if (communities <= 0 || nodes <= 0)
      throw parse_error("parameter rows before communities/nodes header", line_no);
    if (params.eta.empty()) {
      params.eta.assign(communities, 0.0);
      params.theta = Mat(communities, nodes);
      params.phi = Mat(communities, nodes);
      theta_seen.assign(communities, 0);
      phi_seen.assign(communities, 0);
    }
    if (key == "eta") {
      if (static_cast<int>(tokens.size()) != communities + 1)
        throw parse_error("eta row has wrong arity", line_no);
      for (int c = 0; c < communities; ++c)
        params.eta[c] = parse_double(tokens[c + 1], line_no);
      eta_seen = true;
      return true;
    }
    if (static_cast<int>(tokens.size()) != nodes + 2)
      throw parse_error(key + " row has wrong arity", line_no);
    const int c = static_cast<int>(parse_int(tokens[1], line_no));
    if (c < 0 || c >= communities) throw parse_error("community index out of range", line_no);
    Mat& m = key == "theta" ? params.theta : params.phi;
    for (int u = 0; u < nodes; ++u) m.at(c, u) = parse_double(tokens[u + 2], line_no);
    (key == "theta" ? theta_seen : phi_seen)[c] = 1;
    return true;
  }

  ModelParams finish() const {
    if (!eta_seen) throw parse_error("missing eta row");
    for (int c = 0; c < communities; ++c)
      if (!theta_seen[c] || !phi_seen[c])
        throw parse_error("missing theta/phi row for community " + std::to_string(c));
    return params;
  }
};

}  // namespace detail

inline void write_model(const std::string& path, const ModelParams& params,
                        const HyperParams& hyper) {
  auto out = detail::open_out(path);
  out << "# ecd model\n";
  detail::write_params_block(out, params);
  out << "hyper social_prior " << fmt_g17(hyper.social_prior)
      << " echo_prior " << fmt_g17(hyper.echo_prior)
      << " epsilon " << fmt_g17(hyper.epsilon)
      << " learning_rate " << fmt_g17(hyper.learning_rate)
      << " steps_per_iter " << hyper.steps_per_iter
      << " batch_size " << hyper.batch_size
      << " max_iters " << hyper.max_iters
      << " seed " << hyper.seed << '\n';
}

struct ModelFile {
  ModelParams params;
  HyperParams hyper;
};

inline ModelFile read_model(const std::string& path) {
  auto in = detail::open_in(path);
  ModelFile file;
  detail::ParamsReader reader;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::is_comment_or_blank(line)) continue;
    const auto tokens = detail::split_ws(line);
    if (reader.consume(tokens, line_no)) continue;
    if (tokens[0] == "hyper") {
      if (tokens.size() % 2 != 1) throw parse_error("hyper line has odd arity", line_no);
      for (std::size_t t = 1; t + 1 < tokens.size(); t += 2) {
        const std::string& key = tokens[t];
        const std::string& value = tokens[t + 1];
        if (key == "social_prior") file.hyper.social_prior = detail::parse_double(value, line_no);
        else if (key == "echo_prior") file.hyper.echo_prior = detail::parse_double(value, line_no);
        else if (key == "epsilon") file.hyper.epsilon = detail::parse_double(value, line_no);
        else if (key == "learning_rate") file.hyper.learning_rate = detail::parse_double(value, line_no);
        else if (key == "steps_per_iter") file.hyper.steps_per_iter = static_cast<int>(detail::parse_int(value, line_no));
        else if (key == "batch_size") file.hyper.batch_size = static_cast<int>(detail::parse_int(value, line_no));
        else if (key == "max_iters") file.hyper.max_iters = static_cast<int>(detail::parse_int(value, line_no));
        else if (key == "seed") file.hyper.seed = static_cast<std::uint64_t>(detail::parse_int(value, line_no));
        else throw parse_error("unknown hyper key '" + key + "'", line_no);
      }
      continue;
    }
    throw parse_error("unknown record '" + tokens[0] + "'", line_no);
  }
  file.params = reader.finish();
  file.hyper.num_communities = file.params.num_communities();
  return file;
}

inline void write_ground_truth(const std::string& path, const ModelParams& params,
                               std::span<const double> node_polarity) {
  auto out = detail::open_out(path);
  out << "# ecd ground truth\n";
  detail::write_params_block(out, params);
  out << "node_polarity";
  for (double p : node_polarity) out << ' ' << fmt_g17(p);
  out << '\n';
}

struct GroundTruthFile {
  ModelParams params;
  std::vector<double> node_polarity;
};

inline GroundTruthFile read_ground_truth(const std::string& path) {
  auto in = detail::open_in(path);
  GroundTruthFile file;
  detail::ParamsReader reader;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::is_comment_or_blank(line)) continue;
    const auto tokens = detail::split_ws(line);
    if (reader.consume(tokens, line_no)) continue;
    if (tokens[0] == "node_polarity") {
      for (std::size_t t = 1; t < tokens.size(); ++t)
        file.node_polarity.push_back(detail::parse_double(tokens[t], line_no));
      continue;
    }
    throw parse_error("unknown record '" + tokens[0] + "'", line_no);
  }
  file.params = reader.finish();
  if (static_cast<int>(file.node_polarity.size()) != file.params.num_nodes())
    throw parse_error("node_polarity arity does not match nodes");
  return file;
}

// ---- traces -----------------------------------------------------------------

inline void write_trace(const std::string& path, const GroundTruth& gt) {
  auto out = detail::open_out(path);
  out << "# ecd generation trace\n";
  for (std::size_t i = 0; i < gt.arcs.size(); ++i)
    out << "link " << gt.link_communities[i] << ' ' << gt.arcs[i].first << ' '
        << gt.arcs[i].second << '\n';
  for (std::size_t i = 0; i < gt.cascades.items.size(); ++i)
    out << "item " << gt.item_communities[i] << ' ' << gt.cascades.items[i].id << '\n';
}

inline void write_q_trace(const std::string& path, std::span<const double> q_trace) {
  auto out = detail::open_out(path);
  out << "# ecd q trace\n";
  for (double q : q_trace) out << fmt_g17(q) << '\n';
}

// ---- manifest ---------------------------------------------------------------

inline nlohmann::json config_to_json(const GeneratorConfig& config) {
  return nlohmann::json{{"num_nodes", config.num_nodes},
                        {"eta", config.eta},
                        {"sigma_s", config.sigma_s},
                        {"sigma_0", config.sigma_0},
                        {"delta", config.delta},
                        {"mu", config.mu},
                        {"num_links", config.num_links},
                        {"num_items", config.num_items},
                        {"social_prior", config.social_prior},
                        {"echo_prior", config.echo_prior},
                        {"epsilon", config.epsilon},
                        {"max_cascade_size", config.max_cascade_size},
                        {"seed", config.seed}};
}

inline GeneratorConfig config_from_json(const nlohmann::json& j) {
  GeneratorConfig config;
  config.num_nodes = j.at("num_nodes").get<int>();
  config.eta = j.at("eta").get<std::vector<double>>();
  config.sigma_s = j.at("sigma_s").get<double>();
  config.sigma_0 = j.at("sigma_0").get<double>();
  config.delta = j.at("delta").get<double>();
  config.mu = j.at("mu").get<double>();
  config.num_links = j.at("num_links").get<int>();
  config.num_items = j.at("num_items").get<int>();
  config.social_prior = j.at("social_prior").get<double>();
  config.echo_prior = j.at("echo_prior").get<double>();
  config.epsilon = j.at("epsilon").get<double>();
  config.max_cascade_size = j.at("max_cascade_size").get<int>();
  config.seed = j.at("seed").get<std::uint64_t>();
  return config;
}

inline void write_manifest(const std::string& path, const GeneratorConfig& config) {
  auto out = detail::open_out(path);
  nlohmann::json manifest{
      {"format", "ecd-dataset-manifest/1"},
      {"config", config_to_json(config)},
      {"files",
       {{"edges", "edges.tsv"},
        {"cascades", "cascades.txt"},
        {"ground_truth", "ground_truth.txt"},
        {"trace", "trace.txt"}}}};
  out << manifest.dump(2) << '\n';
}

inline GeneratorConfig read_manifest(const std::string& path) {
  auto in = detail::open_in(path);
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(std::string("manifest: ") + e.what());
  }
  if (manifest.value("format", "") != "ecd-dataset-manifest/1")
    throw parse_error("manifest: unknown format tag");
  return config_from_json(manifest.at("config"));
}

}  // namespace ecd
