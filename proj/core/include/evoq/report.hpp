#ifndef EVOQ_REPORT_HPP
#define EVOQ_REPORT_HPP

#include <string>

#include "evoq/experiment.hpp"

namespace evoq {

// Serializes the full report (config echo, summary, per-row results with
// original and adversarial pixel data). Runtime metadata lives under the
// "runtime" key; everything else is reproducible byte-for-byte for a fixed
// config and seed.
std::string report_to_json(const ExperimentReport& report);

ExperimentReport report_from_json(const std::string& json_text);
ExperimentReport load_report_json(const std::string& path);

// One-line summary with columns model,eps,attack,defense,ASR,
// median_queries,budget,M.
std::string report_to_csv(const ExperimentReport& report);

// Writes report.json, summary.csv and per-image artifacts
// (NNN_original / NNN_adversarial / NNN_difference as PGM or PPM; the
// difference image holds |adversarial - original|). Creates dir if needed.
void export_report(const ExperimentReport& report, const std::string& dir);

}  // namespace evoq

#endif  // EVOQ_REPORT_HPP
