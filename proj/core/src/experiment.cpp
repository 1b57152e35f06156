#include "evoq/experiment.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <stdexcept>
#include <thread>

namespace evoq {

AttackKind parse_attack_kind(std::string_view text) {
  if (text == "query") return AttackKind::Query;
  if (text == "random-search") return AttackKind::RandomSearch;
  throw std::invalid_argument("unknown attack kind '" + std::string(text) +
                              "' (expected 'query' or 'random-search')");
}

std::string attack_kind_name(AttackKind kind) {
  return kind == AttackKind::Query ? "query" : "random-search";
}

Epsilon parse_epsilon(std::string_view text) {
  auto parse_double = [](std::string_view s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw std::invalid_argument("bad epsilon '" + std::string(s) + "'");
    }
    return v;
  };
  auto slash = text.find('/');
  if (slash == std::string_view::npos) {
    return Epsilon(parse_double(text));
  }
  double num = parse_double(text.substr(0, slash));
  double den = parse_double(text.substr(slash + 1));
  if (den <= 0.0) {
    throw std::invalid_argument("bad epsilon denominator in '" +
                                std::string(text) + "'");
  }
  return Epsilon(num / den);
}

EvalSelection select_eval_set(QueryOracle& oracle, const Dataset& data, int m,
                              std::uint64_t seed) {
  if (data.size() == 0) {
    throw std::invalid_argument("select_eval_set: empty dataset");
  }
  if (m < 1) throw std::invalid_argument("select_eval_set: m must be >= 1");

  Rng rng(seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);

  EvalSelection sel;
  std::uint64_t before = oracle.query_count();
  for (std::size_t idx : order) {
    if (static_cast<int>(sel.set.size()) >= m) break;
    LogitVector logits = oracle.predict_logits(data.images[idx]);
    if (predict_label(logits) == data.labels[idx]) {
      sel.set.images.push_back(data.images[idx]);
      sel.set.labels.push_back(data.labels[idx]);
      sel.dataset_indices.push_back(static_cast<int>(idx));
    }
  }
  sel.verification_queries = oracle.query_count() - before;
  sel.exhausted = static_cast<int>(sel.set.size()) < m;
  return sel;
}

namespace {

double median_with_failures(const ExperimentReport& report) {
  std::vector<double> q;
  q.reserve(report.rows.size());
  for (const auto& row : report.rows) {
    if (!row.error.empty()) continue;
    q.push_back(row.success
                    ? static_cast<double>(row.queries_used)
                    : static_cast<double>(report.effective_budget));
  }
  if (q.empty()) return 0.0;
  std::sort(q.begin(), q.end());
  std::size_t n = q.size();
  if (n % 2 == 1) return q[n / 2];
  return 0.5 * (q[n / 2 - 1] + q[n / 2]);
}

std::string timestamp_utc() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg,
                                std::shared_ptr<const Model> model,
                                const Dataset& data) {
  if (!model) throw std::invalid_argument("run_experiment: null model");
  if (cfg.image_count < 1) {
    throw std::invalid_argument("run_experiment: image_count must be >= 1");
  }

  AttackConfig attack_cfg = cfg.attack;
  attack_cfg.validate();
  const std::uint64_t n = static_cast<std::uint64_t>(attack_cfg.pop_size);
  const int generations = static_cast<int>(cfg.budget / n);
  if (generations < 1) {
    throw std::invalid_argument(
        "run_experiment: budget below one generation (N queries)");
  }
  attack_cfg.max_generations = generations;
  const std::uint64_t effective_budget = n * generations;

  auto start = std::chrono::steady_clock::now();

  ExperimentReport report;
  report.model_path = cfg.model_path;
  report.attack_name = attack_kind_name(cfg.attack_kind);
  report.defense_name = cfg.defense ? cfg.defense->to_string() : "none";
  report.eps_text = cfg.eps_text;
  report.eps_value = attack_cfg.eps.value();
  report.lambda = attack_cfg.lambda;
  report.pop_size = attack_cfg.pop_size;
  report.tournament = attack_cfg.tournament;
  report.p0 = attack_cfg.p0;
  report.p_halving_thresholds = attack_cfg.p_halving_thresholds;
  report.init_mode = attack_cfg.init_mode == InitMode::FullStripes
                         ? "full_stripes"
                         : "sparse_stripes";
  report.master_seed = cfg.master_seed;
  report.requested_count = cfg.image_count;
  report.requested_budget = cfg.budget;
  report.effective_budget = effective_budget;
  report.generations_budget = generations;
  report.input_shape = model->spec.input;
  report.started_at = timestamp_utc();

  // Evaluation-set verification runs through the defended view when a
  // defense is configured, on its own counter, so attack budgets start
  // fresh.
  EvalSelection sel;
  {
    ModelOracle verify_oracle(model);
    if (cfg.defense) {
      DefendedOracle defended(verify_oracle, *cfg.defense);
      sel = select_eval_set(defended, data, cfg.image_count, cfg.master_seed);
    } else {
      sel = select_eval_set(verify_oracle, data, cfg.image_count,
                            cfg.master_seed);
    }
  }
  report.verification_queries = sel.verification_queries;
  if (sel.exhausted) {
    report.warning = "evaluation set exhausted: only " +
                     std::to_string(sel.set.size()) + " of " +
                     std::to_string(cfg.image_count) +
                     " correctly classified images available";
  }

  const std::size_t rows = sel.set.size();
  report.rows.resize(rows);

  int thread_count = cfg.threads > 0
                         ? cfg.threads
                         : static_cast<int>(std::max(
                               1u, std::thread::hardware_concurrency()));
  thread_count = std::min<int>(thread_count, static_cast<int>(rows));
  if (thread_count < 1) thread_count = 1;

  std::atomic<std::size_t> next_row{0};
  auto worker = [&]() {
    while (true) {
      std::size_t i = next_row.fetch_add(1);
      if (i >= rows) break;
      AttackRow row;
      row.row_index = static_cast<int>(i);
      row.dataset_index = sel.dataset_indices[i];
      row.true_label = sel.set.labels[i];
      row.original = sel.set.images[i];
      try {
        ModelOracle base(model);
        QueryOracle* oracle = &base;
        std::optional<DefendedOracle> defended;
        if (cfg.defense) {
          defended.emplace(base, *cfg.defense);
          oracle = &*defended;
        }
        AttackResult result;
        if (cfg.attack_kind == AttackKind::Query) {
          AttackConfig per_image = attack_cfg;
          per_image.seed = cfg.master_seed + i;
          result = attack(*oracle, sel.set.images[i], sel.set.labels[i],
                          per_image);
        } else {
          BaselineConfig bl;
          bl.eps = attack_cfg.eps;
          bl.p0 = attack_cfg.p0;
          bl.p_halving_thresholds = attack_cfg.p_halving_thresholds;
          bl.budget = effective_budget - 1;  // init + proposals = budget
          bl.seed = cfg.master_seed + i;
          result = random_search_attack(*oracle, sel.set.images[i],
                                        sel.set.labels[i], bl);
        }
        row.success = result.success;
        row.adversarial_label = result.adversarial_label;
        row.queries_used = result.queries_used;
        row.generations = result.generations_run;
        row.final_fitness = result.final_fitness;
        row.linf = linf_dist(result.adversarial, sel.set.images[i]);
        row.l2 = l2_dist(result.adversarial, sel.set.images[i]);
        row.adversarial = std::move(result.adversarial);
      } catch (const std::exception& e) {
        row.error = e.what();
      }
      report.rows[i] = std::move(row);
    }
  };

  if (thread_count == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(thread_count);
    for (int t = 0; t < thread_count; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (const auto& row : report.rows) {
    if (!row.error.empty()) continue;
    ++report.attacked_count;
    if (row.success) ++report.success_count;
  }
  report.asr = report.attacked_count == 0
                   ? 0.0
                   : static_cast<double>(report.success_count) /
                         static_cast<double>(report.attacked_count);
  report.median_queries = median_with_failures(report);
  report.threads_used = thread_count;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return report;
}

TransferResult run_transferability(const ExperimentReport& source,
                                   QueryOracle& target) {
  TransferResult result;
  result.eps_value = source.eps_value;
  int successes = 0;
  for (const auto& row : source.rows) {
    if (!row.error.empty() || !row.success) continue;
    ++successes;
    LogitVector on_original = target.predict_logits(row.original);
    if (predict_label(on_original) != row.true_label) {
      ++result.skipped_originals;
      continue;
    }
    ++result.evaluated;
    LogitVector on_adversarial = target.predict_logits(row.adversarial);
    if (predict_label(on_adversarial) != row.true_label) {
      ++result.transferred;
    }
  }
  if (successes == 0) {
    throw std::invalid_argument(
        "run_transferability: source report has no successful attacks");
  }
  result.tsr = result.evaluated == 0
                   ? 0.0
                   : static_cast<double>(result.transferred) /
                         static_cast<double>(result.evaluated);
  return result;
}

}  // namespace evoq
