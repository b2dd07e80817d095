#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "egt/commands.hpp"
#include "egt/error.hpp"
#include "egt/model_config.hpp"
#include "json.hpp"

namespace {

struct Overrides {
  std::string config;
  std::string out;
  std::string seeds;
  std::string variant;
  std::string pe;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "run configuration file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "output directory (overrides run.out)");
  cmd->add_option("--seeds,--seed", o.seeds, "comma-separated seed list (overrides run.seeds)");
  cmd->add_option("--variant", o.variant, "egt | egt_simple | transformer | egt_constrained");
  cmd->add_option("--pe", o.pe, "none | svd | laplacian");
}

egt::RunSpec resolve(const Overrides& o) {
  egt::RunSpec spec = egt::load_run_spec(o.config);
  if (!o.out.empty()) {
    spec.out_dir = o.out;
  }
  if (!o.seeds.empty()) {
    spec.seeds = egt::parse_seed_list(o.seeds);
  }
  if (!o.variant.empty()) {
    spec.model.variant = egt::parse_variant(o.variant);
    spec.ablate_variants = {spec.model.variant};
  }
  if (!o.pe.empty()) {
    spec.model.pe.kind = egt::parse_pe(o.pe);
    spec.ablate_pe = {spec.model.pe.kind};
  }
  egt::validate(spec);
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Edge-augmented graph transformer: data generation, training and evaluation"};
  app.require_subcommand(1);

  Overrides generate_o;
  Overrides train_o;
  Overrides ablate_o;
  add_common(app.add_subcommand("generate", "write train/val/test SBM corpora"), generate_o);
  add_common(app.add_subcommand("train", "train one model per seed and summarise"), train_o);
  add_common(app.add_subcommand("ablate", "train every variant x encoding combination"), ablate_o);

  std::string checkpoint;
  std::string corpus;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a corpus file");
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  eval->add_option("--corpus", corpus, "corpus file (.jsonl)")->required()->check(CLI::ExistingFile);

  std::uint64_t grad_seed = 0;
  auto* gradcheck = app.add_subcommand("gradcheck", "compare tape gradients with finite differences");
  gradcheck->add_option("--seed", grad_seed, "initialisation seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("generate")) {
      egt::cmd_generate(resolve(generate_o), std::cout);
    } else if (app.got_subcommand("train")) {
      egt::cmd_train(resolve(train_o), std::cout);
    } else if (app.got_subcommand("ablate")) {
      egt::cmd_ablate(resolve(ablate_o), std::cout);
    } else if (app.got_subcommand("eval")) {
      egt::cmd_eval(checkpoint, corpus, std::cout);
    } else if (app.got_subcommand("gradcheck")) {
      if (!egt::cmd_gradcheck(grad_seed, std::cout).passed) {
        std::cout << nlohmann::json{{"record", "error"}, {"message", "gradient check failed"}}.dump() << '\n';
        return 1;
      }
    }
  } catch (const std::exception& e) {
    std::cout << nlohmann::json{{"record", "error"}, {"message", e.what()}}.dump() << '\n';
    return 1;
  }
  return 0;
}
