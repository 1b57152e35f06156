#include "evoq/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "evoq/netpbm.hpp"
#include "json.hpp"

namespace evoq {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json image_to_json(const Image& img) {
  return ordered_json{{"channels", img.channels},
                      {"height", img.height},
                      {"width", img.width},
                      {"data", img.data}};
}

Image image_from_json(const json& j) {
  Image img(j.at("channels").get<int>(), j.at("height").get<int>(),
            j.at("width").get<int>());
  img.data = j.at("data").get<std::vector<double>>();
  if (static_cast<int>(img.data.size()) != img.size()) {
    throw std::runtime_error("report: image data length mismatch");
  }
  return img;
}

}  // namespace

std::string report_to_json(const ExperimentReport& report) {
  ordered_json j;
  j["format_version"] = 1;
  j["config"] = ordered_json{
      {"model", report.model_path},
      {"attack", report.attack_name},
      {"defense", report.defense_name},
      {"eps_text", report.eps_text},
      {"eps", report.eps_value},
      {"lambda", report.lambda},
      {"pop_size", report.pop_size},
      {"tournament", report.tournament},
      {"p0", report.p0},
      {"p_halving_thresholds", report.p_halving_thresholds},
      {"init_mode", report.init_mode},
      {"seed", report.master_seed},
      {"requested_count", report.requested_count},
      {"requested_budget", report.requested_budget},
      {"effective_budget", report.effective_budget},
      {"generations_budget", report.generations_budget},
      {"input_shape",
       ordered_json{{"channels", report.input_shape.channels},
                    {"height", report.input_shape.height},
                    {"width", report.input_shape.width}}},
  };
  // Failed attacks count at the full effective budget in median_queries.
  j["summary"] = ordered_json{
      {"attacked", report.attacked_count},
      {"successes", report.success_count},
      {"asr", report.asr},
      {"median_queries", report.median_queries},
      {"median_rule", "failures at effective_budget; even counts averaged"},
      {"verification_queries", report.verification_queries},
      {"warning", report.warning},
  };
  j["runtime"] = ordered_json{
      {"started_at", report.started_at},
      {"wall_seconds", report.wall_seconds},
      {"threads", report.threads_used},
  };
  ordered_json rows = ordered_json::array();
  for (const auto& row : report.rows) {
    ordered_json r{
        {"row_index", row.row_index},
        {"dataset_index", row.dataset_index},
        {"true_label", row.true_label},
        {"success", row.success},
        {"adversarial_label", row.adversarial_label},
        {"queries_used", row.queries_used},
        {"generations", row.generations},
        {"final_fitness", row.final_fitness},
        {"linf", row.linf},
        {"l2", row.l2},
        {"error", row.error},
    };
    r["original"] = image_to_json(row.original);
    if (row.error.empty()) {
      r["adversarial"] = image_to_json(row.adversarial);
    } else {
      r["adversarial"] = nullptr;
    }
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  return j.dump(2) + "\n";
}

ExperimentReport report_from_json(const std::string& json_text) {
  json j = json::parse(json_text);
  ExperimentReport report;
  const json& cfg = j.at("config");
  report.model_path = cfg.at("model").get<std::string>();
  report.attack_name = cfg.at("attack").get<std::string>();
  report.defense_name = cfg.at("defense").get<std::string>();
  report.eps_text = cfg.at("eps_text").get<std::string>();
  report.eps_value = cfg.at("eps").get<double>();
  report.lambda = cfg.at("lambda").get<double>();
  report.pop_size = cfg.at("pop_size").get<int>();
  report.tournament = cfg.at("tournament").get<int>();
  report.p0 = cfg.at("p0").get<double>();
  report.p_halving_thresholds =
      cfg.at("p_halving_thresholds").get<std::vector<std::uint64_t>>();
  report.init_mode = cfg.at("init_mode").get<std::string>();
  report.master_seed = cfg.at("seed").get<std::uint64_t>();
  report.requested_count = cfg.at("requested_count").get<int>();
  report.requested_budget = cfg.at("requested_budget").get<std::uint64_t>();
  report.effective_budget = cfg.at("effective_budget").get<std::uint64_t>();
  report.generations_budget = cfg.at("generations_budget").get<int>();
  const json& shape = cfg.at("input_shape");
  report.input_shape = {shape.at("channels").get<int>(),
                        shape.at("height").get<int>(),
                        shape.at("width").get<int>()};

  const json& summary = j.at("summary");
  report.attacked_count = summary.at("attacked").get<int>();
  report.success_count = summary.at("successes").get<int>();
  report.asr = summary.at("asr").get<double>();
  report.median_queries = summary.at("median_queries").get<double>();
  report.verification_queries =
      summary.at("verification_queries").get<std::uint64_t>();
  report.warning = summary.at("warning").get<std::string>();

  const json& runtime = j.at("runtime");
  report.started_at = runtime.at("started_at").get<std::string>();
  report.wall_seconds = runtime.at("wall_seconds").get<double>();
  report.threads_used = runtime.at("threads").get<int>();

  for (const json& r : j.at("rows")) {
    AttackRow row;
    row.row_index = r.at("row_index").get<int>();
    row.dataset_index = r.at("dataset_index").get<int>();
    row.true_label = r.at("true_label").get<int>();
    row.success = r.at("success").get<bool>();
    row.adversarial_label = r.at("adversarial_label").get<int>();
    row.queries_used = r.at("queries_used").get<std::uint64_t>();
    row.generations = r.at("generations").get<int>();
    row.final_fitness = r.at("final_fitness").get<double>();
    row.linf = r.at("linf").get<double>();
    row.l2 = r.at("l2").get<double>();
    row.error = r.at("error").get<std::string>();
    row.original = image_from_json(r.at("original"));
    if (!r.at("adversarial").is_null()) {
      row.adversarial = image_from_json(r.at("adversarial"));
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

ExperimentReport load_report_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open report: " + path);
  std::string text((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  return report_from_json(text);
}

std::string report_to_csv(const ExperimentReport& report) {
  char line[512];
  std::snprintf(line, sizeof(line), "%s,%s,%s,%s,%.6f,%.1f,%llu,%d\n",
                report.model_path.c_str(), report.eps_text.c_str(),
                report.attack_name.c_str(), report.defense_name.c_str(),
                report.asr, report.median_queries,
                static_cast<unsigned long long>(report.effective_budget),
                report.attacked_count);
  return std::string("model,eps,attack,defense,ASR,median_queries,budget,M\n") +
         line;
}

void export_report(const ExperimentReport& report, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw std::runtime_error("export_report: cannot create " + dir + ": " +
                             ec.message());
  }

  auto write_text = [&](const std::string& name, const std::string& text) {
    fs::path p = fs::path(dir) / name;
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("export_report: cannot open " + p.string());
    f << text;
    if (!f) throw std::runtime_error("export_report: write failed " + p.string());
  };

  write_text("report.json", report_to_json(report));
  write_text("summary.csv", report_to_csv(report));

  char name[64];
  for (const auto& row : report.rows) {
    const char* ext = row.original.channels == 3 ? "ppm" : "pgm";
    std::snprintf(name, sizeof(name), "%03d_original.%s", row.row_index, ext);
    write_pnm((fs::path(dir) / name).string(), row.original);
    if (!row.error.empty()) continue;
    std::snprintf(name, sizeof(name), "%03d_adversarial.%s", row.row_index,
                  ext);
    write_pnm((fs::path(dir) / name).string(), row.adversarial);
    Image diff = row.original;
    for (std::size_t i = 0; i < diff.data.size(); ++i) {
      diff.data[i] = std::abs(row.adversarial.data[i] - row.original.data[i]);
    }
    std::snprintf(name, sizeof(name), "%03d_difference.%s", row.row_index,
                  ext);
    write_pnm((fs::path(dir) / name).string(), diff);
  }
}

}  // namespace evoq
