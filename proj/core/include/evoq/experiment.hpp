#ifndef EVOQ_EXPERIMENT_HPP
#define EVOQ_EXPERIMENT_HPP

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "evoq/attack.hpp"
#include "evoq/baseline.hpp"
#include "evoq/dataset.hpp"
#include "evoq/defenses.hpp"
#include "evoq/model.hpp"

namespace evoq {

enum class AttackKind { Query, RandomSearch };

AttackKind parse_attack_kind(std::string_view text);
std::string attack_kind_name(AttackKind kind);

// Accepts "k/255" or a plain decimal.
Epsilon parse_epsilon(std::string_view text);

struct ExperimentConfig {
  std::string model_path;  // echoed into reports
  std::string eps_text;    // original epsilon spelling, echoed into reports
  AttackKind attack_kind = AttackKind::Query;
  AttackConfig attack;     // eps, lambda, N, T, p0, thresholds, init mode
  std::optional<DefenseSpec> defense;
  int image_count = 200;
  std::uint64_t budget = 42000;  // rounded down to a whole number of
                                 // generations (N * G)
  std::uint64_t master_seed = 7;
  int threads = 0;  // 0 = hardware concurrency
};

struct AttackRow {
  int row_index = 0;      // position in the evaluation set
  int dataset_index = 0;  // position in the source dataset
  int true_label = 0;
  bool success = false;
  int adversarial_label = -1;
  std::uint64_t queries_used = 0;
  int generations = 0;
  double final_fitness = 0.0;
  double linf = 0.0;
  double l2 = 0.0;
  Image original;
  Image adversarial;
  std::string error;  // nonempty marks a failed row, excluded from stats
};

struct ExperimentReport {
  // config echo
  std::string model_path;
  std::string attack_name;
  std::string defense_name;  // "none" when undefended
  std::string eps_text;
  double eps_value = 0.0;
  double lambda = 0.0;
  int pop_size = 0;
  int tournament = 0;
  double p0 = 0.0;
  std::vector<std::uint64_t> p_halving_thresholds;
  std::string init_mode;
  std::uint64_t master_seed = 0;
  int requested_count = 0;
  std::uint64_t requested_budget = 0;
  std::uint64_t effective_budget = 0;
  int generations_budget = 0;
  Shape3 input_shape{};

  // results
  std::vector<AttackRow> rows;
  int attacked_count = 0;  // rows without an error marker
  int success_count = 0;
  double asr = 0.0;
  // Median of queries_used over all attacked images; failures count at the
  // full effective budget. Even counts average the two middle values.
  double median_queries = 0.0;
  std::uint64_t verification_queries = 0;
  std::string warning;  // e.g. evaluation set exhausted below image_count

  // runtime metadata (excluded from reproducibility comparisons)
  std::string started_at;
  double wall_seconds = 0.0;
  int threads_used = 0;
};

struct EvalSelection {
  Dataset set;
  std::vector<int> dataset_indices;
  std::uint64_t verification_queries = 0;
  bool exhausted = false;  // dataset ran out before reaching m
};

// Uniformly samples without replacement, keeping images the oracle labels
// correctly, until m images are collected or the dataset is exhausted.
// Verification queries are charged to the given oracle only.
EvalSelection select_eval_set(QueryOracle& oracle, const Dataset& data, int m,
                              std::uint64_t seed);

// Runs the configured attack over the selected evaluation set, one fresh
// oracle (and defense wrapper) per image, per-image seed = master_seed +
// row index. Rows execute on a worker pool; results are deterministic for a
// fixed config. A module error inside one image's attack marks that row and
// leaves the rest of the run intact.
ExperimentReport run_experiment(const ExperimentConfig& cfg,
                                std::shared_ptr<const Model> model,
                                const Dataset& data);

struct TransferResult {
  double tsr = 0.0;
  int transferred = 0;
  int evaluated = 0;          // source successes whose originals the target
                              // classifies correctly
  int skipped_originals = 0;  // source successes dropped by that check
  double eps_value = 0.0;
};

// Fraction of source-successful adversarial images that the target oracle
// also misclassifies (one query per adversarial, plus one per original for
// the correctness precheck). Throws std::invalid_argument if the source
// report has no successes.
TransferResult run_transferability(const ExperimentReport& source,
                                   QueryOracle& target);

}  // namespace evoq

#endif  // EVOQ_EXPERIMENT_HPP
