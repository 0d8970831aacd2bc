// ecd — echo-chamber community detection from links and cascades.
//
// Subcommands: generate, fit, eval, predict. See README.md for the file
// formats and a full walkthrough.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ecd/cli.hpp"

namespace {

std::string default_out_dir() {
  const char* env = std::getenv("ECD_OUT_DIR");
  return env && *env ? env : ".";
}

ecd::GeneratorConfig preset_config(const std::string& name) {
  if (name.empty() || name == "polarized") return ecd::GeneratorConfig::polarized();
  if (name == "social") return ecd::GeneratorConfig::social();
  if (name == "balanced") return ecd::GeneratorConfig::balanced();
  throw ecd::input_error("unknown preset '" + name + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"echo-chamber community detection from links and cascades"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "generate a synthetic dataset bundle");
  std::string gen_out = default_out_dir();
  std::string gen_preset, gen_manifest;
  ecd::GeneratorConfig flags;
  gen->add_option("--out", gen_out, "output directory");
  gen->add_option("--preset", gen_preset, "polarized | social | balanced");
  gen->add_option("--from-manifest", gen_manifest, "regenerate from a manifest.json");
  gen->add_option("--nodes", flags.num_nodes, "number of nodes");
  gen->add_option("--eta", flags.eta, "community polarities")->delimiter(',');
  gen->add_option("--sigma-s", flags.sigma_s, "echo-chamber membership concentration");
  gen->add_option("--sigma-0", flags.sigma_0, "social membership concentration");
  gen->add_option("--delta", flags.delta, "membership mixing probability");
  gen->add_option("--mu", flags.mu, "Beta shape for item polarities");
  gen->add_option("--links", flags.num_links, "number of links");
  gen->add_option("--items", flags.num_items, "number of items");
  gen->add_option("--social-prior", flags.social_prior, "s");
  gen->add_option("--echo-prior", flags.echo_prior, "h");
  gen->add_option("--epsilon", flags.epsilon, "prior regularization");
  gen->add_option("--max-cascade", flags.max_cascade_size, "cascade size cap");
  gen->add_option("--seed", flags.seed, "random seed");

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "fit the model to a dataset bundle");
  ecd::FitCommandOptions fit_options;
  fit_options.out_dir = default_out_dir();
  fit_cmd->add_option("--data", fit_options.data_dir, "dataset bundle directory")->required();
  fit_cmd->add_option("--out", fit_options.out_dir, "output directory");
  fit_cmd->add_option("--communities", fit_options.hyper.num_communities, "K");
  fit_cmd->add_option("--social-prior", fit_options.hyper.social_prior, "s");
  fit_cmd->add_option("--echo-prior", fit_options.hyper.echo_prior, "h");
  fit_cmd->add_option("--epsilon", fit_options.hyper.epsilon, "prior regularization");
  fit_cmd->add_option("--lr", fit_options.hyper.learning_rate, "learning rate");
  fit_cmd->add_option("--steps-per-iter", fit_options.hyper.steps_per_iter, "H");
  fit_cmd->add_option("--batch-size", fit_options.hyper.batch_size, "batch size");
  fit_cmd->add_option("--max-iters", fit_options.hyper.max_iters, "iteration cap");
  fit_cmd->add_option("--seed", fit_options.hyper.seed, "random seed");
  fit_cmd->add_option("--share-cap", fit_options.share_cap_per_item,
                      "sharing links kept per item");
  fit_cmd->add_flag("--repair-graph", fit_options.repair,
                    "add missing links implied by cascades");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a fitted model");
  ecd::EvalCommandOptions eval_options;
  eval_cmd->add_option("--model", eval_options.model_path, "model file")->required();
  eval_cmd->add_option("--data", eval_options.data_dir, "dataset bundle directory")->required();
  eval_cmd->add_option("--ground-truth", eval_options.ground_truth_path,
                       "ground truth file (defaults to the bundle's)");
  eval_cmd->add_option("--mode", eval_options.mode, "reconstruction | assessment");
  eval_cmd->add_option("--out", eval_options.out_path, "report file")->required();

  // predict
  auto* pred_cmd = app.add_subcommand("predict", "run a prediction task");
  ecd::PredictCommandOptions pred_options;
  pred_cmd->add_option("--data", pred_options.data_dir, "dataset bundle directory")->required();
  pred_cmd->add_option("--task", pred_options.task, "stance | next-activation");
  pred_cmd->add_option("--model", pred_options.model_path, "model file (stance task)");
  pred_cmd->add_option("--out", pred_options.out_path, "report file")->required();
  pred_cmd->add_option("--mask-fractions", pred_options.mask_fractions,
                       "masked activation fractions")->delimiter(',');
  pred_cmd->add_option("--communities", pred_options.hyper.num_communities, "K");
  pred_cmd->add_option("--social-prior", pred_options.hyper.social_prior, "s");
  pred_cmd->add_option("--echo-prior", pred_options.hyper.echo_prior, "h");
  pred_cmd->add_option("--epsilon", pred_options.hyper.epsilon, "prior regularization");
  pred_cmd->add_option("--lr", pred_options.hyper.learning_rate, "learning rate");
  pred_cmd->add_option("--steps-per-iter", pred_options.hyper.steps_per_iter, "H");
  pred_cmd->add_option("--batch-size", pred_options.hyper.batch_size, "batch size");
  pred_cmd->add_option("--max-iters", pred_options.hyper.max_iters, "iteration cap");
  pred_cmd->add_option("--seed", pred_options.hyper.seed, "random seed");
  pred_cmd->add_option("--max-negatives", pred_options.max_negatives,
                       "cap on negative test pairs");
  pred_cmd->add_flag("--repair-graph", pred_options.repair,
                     "add missing links implied by cascades");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      ecd::GeneratorConfig config;
      if (!gen_manifest.empty()) {
        config = ecd::read_manifest(gen_manifest);
      } else {
        config = preset_config(gen_preset);
        // explicit flags override the preset
        if (gen->count("--nodes")) config.num_nodes = flags.num_nodes;
        if (gen->count("--eta")) config.eta = flags.eta;
        if (gen->count("--sigma-s")) config.sigma_s = flags.sigma_s;
        if (gen->count("--sigma-0")) config.sigma_0 = flags.sigma_0;
        if (gen->count("--delta")) config.delta = flags.delta;
        if (gen->count("--mu")) config.mu = flags.mu;
        if (gen->count("--links")) config.num_links = flags.num_links;
        if (gen->count("--items")) config.num_items = flags.num_items;
        if (gen->count("--social-prior")) config.social_prior = flags.social_prior;
        if (gen->count("--echo-prior")) config.echo_prior = flags.echo_prior;
        if (gen->count("--epsilon")) config.epsilon = flags.epsilon;
        if (gen->count("--max-cascade")) config.max_cascade_size = flags.max_cascade_size;
        if (gen->count("--seed")) config.seed = flags.seed;
      }
      ecd::cmd_generate(config, gen_out);
    } else if (fit_cmd->parsed()) {
      ecd::cmd_fit(fit_options);
    } else if (eval_cmd->parsed()) {
      ecd::cmd_eval(eval_options);
    } else if (pred_cmd->parsed()) {
      if (pred_options.task == "stance" && pred_options.model_path.empty())
        throw ecd::input_error("stance task requires --model");
      ecd::cmd_predict(pred_options);
    }
  } catch (const std::exception& e) {
    std::cerr << "ecd: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
