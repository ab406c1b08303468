// Command-line front end: generate, train, eval, diagnose.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "dirt/commands.hpp"

namespace {

/// Fills options that were not given on the command line from a flat
/// key=value file. Keys are long option names without the leading dashes.
void apply_config(CLI::App& command, const std::string& path) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("--config", "cannot open " + path);
  for (const auto& item : CLI::ConfigINI().from_config(in)) {
    if (item.name == "config") continue;
    CLI::Option* option = command.get_option_no_throw("--" + item.name);
    if (option == nullptr) throw CLI::ValidationError("--config", "unknown key '" + item.name + "' in " + path);
    if (option->count() > 0) continue;
    for (const auto& value : item.inputs) option->add_result(value);
    option->run_callback();
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DIRT: item response theory with learned deep diagnosis"};
  app.require_subcommand(1);

  // generate
  dirt::GenConfig gen;
  std::string gen_config, gen_out, gen_mode = "concept-irt";
  auto* generate = app.add_subcommand("generate", "Write a synthetic corpus and its ground truth");
  generate->add_option("--config", gen_config, "Flat key=value file");
  generate->add_option("--out", gen_out, "Output directory")->required();
  generate->add_option("--seed", gen.seed);
  generate->add_option("--mode", gen_mode, "irt or concept-irt");
  generate->add_option("--students", gen.students);
  generate->add_option("--questions", gen.questions);
  generate->add_option("--concepts", gen.concepts);
  generate->add_option("--vocab-size", gen.vocab_size);
  generate->add_option("--dim", gen.dim);
  generate->add_option("--mean-records", gen.mean_records);
  generate->add_option("--min-records", gen.min_records);
  generate->add_option("--mean-concepts", gen.mean_concepts);
  generate->add_option("--max-concepts", gen.max_concepts);
  generate->add_option("--topic-share", gen.topic_share);
  generate->add_option("--rare-questions", gen.rare_questions);
  generate->add_option("--rare-records", gen.rare_records);
  generate->add_option("--focus-concepts", gen.focus_concepts);
  generate->add_option("--focus-share", gen.focus_share);
  generate->add_option("--ability-sd", gen.ability_sd);
  generate->add_option("--concept-sd", gen.concept_sd);
  generate->add_option("--difficulty-noise", gen.difficulty_noise);

  // train
  dirt::TrainOptions train;
  std::string train_config, train_model = "dirt", train_resume, train_log;
  std::size_t epochs = 0;
  double fit_lr = train.experiment.fit.learning_rate;
  bool minibatch_classical = false;
  auto* train_cmd = app.add_subcommand("train", "Fit a model and write a checkpoint");
  train_cmd->add_option("--config", train_config, "Flat key=value file");
  train_cmd->add_option("--model", train_model, "dirt, dirtna, irt, mirt or dina");
  train_cmd->add_option("--data", train.data, "Corpus directory")->required();
  train_cmd->add_option("--out,--checkpoint", train.checkpoint, "Checkpoint path")->required();
  train_cmd->add_option("--seed", train.seed);
  train_cmd->add_option("--ratio", train.ratio);
  auto* epochs_opt = train_cmd->add_option("--epochs", epochs, "Epochs (full-batch iterations for classical models)");
  train_cmd->add_option("--batch-size", train.experiment.train.batch_size);
  train_cmd->add_option("--dropout", train.experiment.train.dropout);
  train_cmd->add_option("--lr", train.experiment.train.learning_rate);
  train_cmd->add_option("--patience", train.experiment.train.patience);
  train_cmd->add_option("--validation-fraction", train.experiment.train.validation_fraction);
  train_cmd->add_option("--hidden", train.experiment.dirt.hidden);
  train_cmd->add_option("--seq-len", train.experiment.dirt.seq_len);
  train_cmd->add_option("--dnn-width", train.experiment.dirt.dnn_width);
  train_cmd->add_flag("--literal-discrimination", train.experiment.dirt.literal_discrimination);
  train_cmd->add_flag("--train-embeddings", train.experiment.dirt.train_embeddings);
  train_cmd->add_flag("--monotone-proficiency", train.experiment.dirt.monotone_proficiency,
                      "Constrain the network so higher proficiency never lowers the latent trait");
  train_cmd->add_option("--fit-lr", fit_lr, "Learning rate of full-batch classical fits");
  train_cmd->add_flag("--minibatch-classical", minibatch_classical, "Train classical models like DIRT");
  train_cmd->add_option("--rare-quota", train.rare_quota);
  train_cmd->add_option("--resume", train_resume, "Continue from a checkpoint");
  train_cmd->add_option("--log-file", train_log);

  // eval
  dirt::EvalOptions eval;
  std::string eval_config;
  std::vector<std::string> compare;
  auto* eval_cmd = app.add_subcommand("eval", "Run the sparsity or rare-question protocol");
  eval_cmd->add_option("--config", eval_config, "Flat key=value file");
  eval_cmd->add_option("--checkpoint", eval.checkpoint)->required();
  eval_cmd->add_option("--data", eval.data)->required();
  eval_cmd->add_option("--protocol", eval.protocol, "sweep or rare");
  eval_cmd->add_option("--out", eval.out, "Table path; a JSON twin is written beside it");
  eval_cmd->add_option("--ratios", eval.ratios)->delimiter(',');
  eval_cmd->add_option("--caps", eval.caps)->delimiter(',');
  eval_cmd->add_option("--compare", compare, "Extra model kinds")->delimiter(',');

  // diagnose
  dirt::DiagnoseOptions diag;
  std::string diag_config;
  auto* diag_cmd = app.add_subcommand("diagnose", "Export per-question diagnosis and proficiencies");
  diag_cmd->add_option("--config", diag_config, "Flat key=value file");
  diag_cmd->add_option("--checkpoint", diag.checkpoint)->required();
  diag_cmd->add_option("--data", diag.data)->required();
  diag_cmd->add_option("--student", diag.student)->required();
  diag_cmd->add_option("--questions", diag.questions)->delimiter(',');
  diag_cmd->add_option("--out", diag.out, "Output path (.json for JSON)");

  try {
    app.parse(argc, argv);
    if (generate->parsed()) apply_config(*generate, gen_config);
    if (train_cmd->parsed()) apply_config(*train_cmd, train_config);
    if (eval_cmd->parsed()) apply_config(*eval_cmd, eval_config);
    if (diag_cmd->parsed()) apply_config(*diag_cmd, diag_config);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? dirt::kExitOk : dirt::kExitUsage;
  }

  try {
    if (generate->parsed()) {
      gen.mode = dirt::parse_generator_mode(gen_mode);
      return dirt::cmd_generate(gen, gen_out, std::cout, std::cerr);
    }
    if (train_cmd->parsed()) {
      train.kind = dirt::parse_model_kind(train_model);
      if (epochs_opt->count() > 0) {
        train.experiment.train.max_epochs = epochs;
        train.experiment.fit.iterations = epochs;
      }
      train.experiment.fit.learning_rate = fit_lr;
      train.experiment.classical_full_batch = !minibatch_classical;
      if (!train_resume.empty()) train.resume = train_resume;
      if (!train_log.empty()) train.log_file = train_log;
      train.log_level = dirt::log_level_from_env();
      return dirt::cmd_train(train, std::cout, std::cerr);
    }
    if (eval_cmd->parsed()) {
      for (const auto& name : compare) eval.compare.push_back(dirt::parse_model_kind(name));
      return dirt::cmd_eval(eval, std::cout, std::cerr);
    }
    if (diag_cmd->parsed()) return dirt::cmd_diagnose(diag, std::cout, std::cerr);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return dirt::kExitUsage;
  }
  return dirt::kExitUsage;
}
