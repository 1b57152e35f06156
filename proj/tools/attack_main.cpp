// Command-line front end: train desk-scale victims, run attack
// experiments, evaluate accuracy, and check transferability of saved
// reports.

#include <cstdio>
#include <exception>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "evoq/dataset.hpp"
#include "evoq/experiment.hpp"
#include "evoq/report.hpp"
#include "evoq/train.hpp"
#include "evoq/weights_io.hpp"

namespace {

using namespace evoq;

struct DataArgs {
  std::string data;
  std::string labels;
  std::string format = "idx";
};

void add_data_options(CLI::App* cmd, DataArgs& args) {
  cmd->add_option("--data", args.data, "Image file (IDX, optionally .gz)")
      ->required();
  cmd->add_option("--labels", args.labels,
                  "Label file (IDX; unused for --format cifar)");
  cmd->add_option("--format", args.format, "Dataset container: idx or cifar")
      ->check(CLI::IsMember({"idx", "cifar"}));
}

Dataset load_dataset(const DataArgs& args) {
  if (args.format == "cifar") return load_cifar_raw(args.data);
  if (args.labels.empty()) {
    throw std::invalid_argument("--labels is required for IDX datasets");
  }
  return load_mnist_idx(args.data, args.labels);
}

int run_command(const std::string& model_path, const DataArgs& data_args,
                const std::string& attack_name, const std::string& eps_text,
                std::uint64_t budget, int pop, int tournament, double lambda,
                double p0, const std::string& init_mode,
                const std::string& defense, int count, std::uint64_t seed,
                const std::string& out_dir, int threads) {
  ExperimentConfig cfg;
  cfg.model_path = model_path;
  cfg.eps_text = eps_text;
  cfg.attack_kind = parse_attack_kind(attack_name);
  cfg.attack.eps = parse_epsilon(eps_text);
  cfg.attack.lambda = lambda;
  cfg.attack.pop_size = pop;
  cfg.attack.tournament = tournament;
  cfg.attack.p0 = p0;
  cfg.attack.init_mode = init_mode == "sparse" ? InitMode::SparseStripes
                                               : InitMode::FullStripes;
  if (!defense.empty()) cfg.defense = DefenseSpec::parse(defense);
  cfg.image_count = count;
  cfg.budget = budget;
  cfg.master_seed = seed;
  cfg.threads = threads;

  auto model = std::make_shared<Model>(load_model(model_path));
  Dataset data = load_dataset(data_args);
  ExperimentReport report = run_experiment(cfg, model, data);
  export_report(report, out_dir);

  if (!report.warning.empty()) {
    std::fprintf(stderr, "warning: %s\n", report.warning.c_str());
  }
  std::printf(
      "attack=%s eps=%s defense=%s images=%d ASR=%.4f median_queries=%.1f "
      "budget=%llu verification_queries=%llu wall=%.1fs\n",
      report.attack_name.c_str(), report.eps_text.c_str(),
      report.defense_name.c_str(), report.attacked_count, report.asr,
      report.median_queries,
      static_cast<unsigned long long>(report.effective_budget),
      static_cast<unsigned long long>(report.verification_queries),
      report.wall_seconds);
  std::printf("report written to %s\n", out_dir.c_str());
  return 0;
}

int train_command(const DataArgs& data_args, const DataArgs& test_args,
                  bool have_test, const std::string& arch, int hidden,
                  const std::string& channels_text, int epochs, int batch,
                  double lr, double momentum, double weight_decay,
                  std::uint64_t seed, const std::string& out_path,
                  bool verbose) {
  Dataset train = load_dataset(data_args);
  if (train.size() == 0) throw std::invalid_argument("empty training set");

  Shape3 input{train.images[0].channels, train.images[0].height,
               train.images[0].width};
  int classes = 10;

  ModelSpec spec;
  if (arch == "dense") {
    spec = ModelSpec::digit_dense(input, classes, hidden);
  } else {
    int c1 = 32, c2 = 64, c3 = 128;
    if (!channels_text.empty()) {
      if (std::sscanf(channels_text.c_str(), "%d,%d,%d", &c1, &c2, &c3) != 3) {
        throw std::invalid_argument("--channels expects 'a,b,c'");
      }
    }
    spec = ModelSpec::digit_cnn(input, classes, c1, c2, c3);
  }

  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = batch;
  cfg.learning_rate = lr;
  cfg.momentum = momentum;
  cfg.weight_decay = weight_decay;
  cfg.seed = seed;
  cfg.verbose = verbose;

  Weights weights = train_fixture(spec, train, cfg);
  Model model{spec, std::move(weights)};
  save_model(out_path, model);

  double train_acc = evaluate_accuracy(model, train);
  std::printf("trained %s fixture: %zu images, train accuracy %.4f\n",
              arch.c_str(), train.size(), train_acc);
  if (have_test) {
    Dataset test = load_dataset(test_args);
    std::printf("test accuracy %.4f (%zu images)\n",
                evaluate_accuracy(model, test), test.size());
  }
  std::printf("weights written to %s\n", out_path.c_str());
  return 0;
}

int eval_command(const std::string& model_path, const DataArgs& data_args,
                 const std::string& defense, int count) {
  auto model = std::make_shared<Model>(load_model(model_path));
  Dataset data = load_dataset(data_args);
  if (count > 0 && static_cast<std::size_t>(count) < data.size()) {
    data.images.resize(count);
    data.labels.resize(count);
  }
  ModelOracle oracle(model);
  QueryOracle* view = &oracle;
  std::optional<DefendedOracle> defended;
  if (!defense.empty()) {
    defended.emplace(oracle, DefenseSpec::parse(defense));
    view = &*defended;
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (predict_label(view->predict_logits(data.images[i])) ==
        data.labels[i]) {
      ++correct;
    }
  }
  std::printf("accuracy %.4f (%zu/%zu images, defense=%s)\n",
              static_cast<double>(correct) / data.size(), correct,
              data.size(), defense.empty() ? "none" : defense.c_str());
  return 0;
}

int transfer_command(const std::string& report_path,
                     const std::string& target_path) {
  ExperimentReport source = load_report_json(report_path);
  auto target = std::make_shared<Model>(load_model(target_path));
  ModelOracle oracle(target);
  TransferResult t = run_transferability(source, oracle);
  std::printf(
      "eps=%s TSR=%.4f transferred=%d evaluated=%d "
      "skipped_misclassified_originals=%d\n",
      source.eps_text.c_str(), t.tsr, t.transferred, t.evaluated,
      t.skipped_originals);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"evoq: query-efficient black-box adversarial attack toolkit"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Attack a model over a dataset");
  std::string model_path, eps_text, attack_name = "query", defense,
              out_dir = "attack_out", init_mode = "full";
  DataArgs run_data;
  std::uint64_t budget = 42000, seed = 7;
  int pop = 70, tournament = 25, count = 200, threads = 0;
  double lambda = 1.0, p0 = 0.1;
  run->add_option("--model", model_path, "Victim weight file")->required();
  add_data_options(run, run_data);
  run->add_option("--attack", attack_name, "query or random-search")
      ->check(CLI::IsMember({"query", "random-search"}));
  run->add_option("--eps", eps_text, "L-inf radius, 'k/255' or decimal")
      ->required();
  run->add_option("--budget", budget, "Query budget per image");
  run->add_option("--pop", pop, "Population size N");
  run->add_option("--tournament", tournament, "Tournament size T");
  run->add_option("--lambda", lambda, "L2 regularization strength");
  run->add_option("--p0", p0, "Initial mutation proportion");
  run->add_option("--init", init_mode, "Init stripes: full or sparse")
      ->check(CLI::IsMember({"full", "sparse"}));
  run->add_option("--defense", defense,
                  "Input transform: jpeg:Q, bitdepth:D, smooth:W");
  run->add_option("--count", count, "Number of images to attack");
  run->add_option("--seed", seed, "Master seed");
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--threads", threads, "Worker threads (0 = auto)");

  // train-fixture
  auto* train = app.add_subcommand("train-fixture",
                                   "Train a desk-scale victim model");
  DataArgs train_data, test_data;
  std::string arch = "dense", channels_text, weights_out = "fixture.evoq";
  int hidden = 256, epochs = 10, batch = 64;
  double lr = 0.1, momentum = 0.9, weight_decay = 1e-6;
  std::uint64_t train_seed = 1;
  bool verbose = false;
  add_data_options(train, train_data);
  train->add_option("--test-data", test_data.data, "Held-out images");
  train->add_option("--test-labels", test_data.labels, "Held-out labels");
  train->add_option("--arch", arch, "dense or cnn")
      ->check(CLI::IsMember({"dense", "cnn"}));
  train->add_option("--hidden", hidden, "Hidden width for dense");
  train->add_option("--channels", channels_text,
                    "Conv widths for cnn, e.g. 32,64,128");
  train->add_option("--epochs", epochs, "Training epochs");
  train->add_option("--batch", batch, "Minibatch size");
  train->add_option("--lr", lr, "Learning rate");
  train->add_option("--momentum", momentum, "SGD momentum");
  train->add_option("--weight-decay", weight_decay, "L2 weight decay");
  train->add_option("--seed", train_seed, "Training seed");
  train->add_option("--out", weights_out, "Output weight file");
  train->add_flag("--verbose", verbose, "Print per-epoch loss");

  // eval
  auto* eval = app.add_subcommand("eval", "Report model accuracy");
  std::string eval_model, eval_defense;
  DataArgs eval_data;
  int eval_count = 0;
  eval->add_option("--model", eval_model, "Weight file")->required();
  add_data_options(eval, eval_data);
  eval->add_option("--defense", eval_defense, "Optional input transform");
  eval->add_option("--count", eval_count, "Limit image count (0 = all)");

  // transfer
  auto* transfer = app.add_subcommand(
      "transfer", "Replay a report's adversarials against another model");
  std::string report_path, target_path;
  transfer->add_option("--source-report", report_path, "report.json path")
      ->required();
  transfer->add_option("--target", target_path, "Target weight file")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return run_command(model_path, run_data, attack_name, eps_text, budget,
                         pop, tournament, lambda, p0, init_mode, defense,
                         count, seed, out_dir, threads);
    }
    if (train->parsed()) {
      bool have_test = !test_data.data.empty();
      test_data.format = train_data.format;
      return train_command(train_data, test_data, have_test, arch, hidden,
                           channels_text, epochs, batch, lr, momentum,
                           weight_decay, train_seed, weights_out, verbose);
    }
    if (eval->parsed()) {
      return eval_command(eval_model, eval_data, eval_defense, eval_count);
    }
    if (transfer->parsed()) {
      return transfer_command(report_path, target_path);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
