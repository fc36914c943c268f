#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hyba/blackbox.hpp"
#include "hyba/scheduler.hpp"

namespace hyba {

/// One row of outcomes.csv.
struct OutcomeRecord {
  std::uint64_t seed_id = 0;
  FoundBy found_by = FoundBy::failed;
  bool success = false;
  std::uint64_t queries_used = 0;
  std::string strategy;
  std::string estimator;
  double epsilon = 0.0;
  std::uint64_t run_seed = 0;

  friend bool operator==(const OutcomeRecord&, const OutcomeRecord&) = default;
};

inline constexpr const char* kOutcomesFile = "outcomes.csv";
inline constexpr const char* kConfigFile = "config.json";

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text);

/// RFC-4180 field quoting and row splitting.
std::string csv_escape(std::string_view field);
std::vector<std::string> csv_split(std::string_view line);

void write_outcomes_csv(const std::filesystem::path& path, const std::vector<OutcomeRecord>& rows);
/// ParseError names the offending line number.
std::vector<OutcomeRecord> read_outcomes_csv(const std::filesystem::path& path);

struct RunResults {
  std::vector<OutcomeRecord> outcomes;
  nlohmann::json config;
};

/// Creates `dir` if needed and writes outcomes.csv and config.json.
void write_results(const std::filesystem::path& dir, const RunResults& results);
RunResults read_results(const std::filesystem::path& dir);

/// Table-2 style summary of an attack run.
struct AttackSummary {
  std::size_t seeds = 0;
  std::size_t aes = 0;
  std::size_t direct_transfers = 0;
  std::uint64_t total_queries = 0;
  double success_rate = 0.0;
  double queries_per_seed = 0.0;
  /// total_queries / aes.
  double queries_per_ae = 0.0;
  /// Queries on seeds not solved by direct transfer, per AE found by the
  /// gradient attack.
  double queries_per_search = 0.0;
  double transfer_rate = 0.0;
};
AttackSummary summarize(const std::vector<OutcomeRecord>& rows);
nlohmann::json to_json(const AttackSummary& s);

nlohmann::json to_json(const BatchReport& report);
/// Columns: queries, aes_found, strategy, run_seed.
void write_curve_csv(const std::filesystem::path& path, const std::vector<BatchReport>& reports);

/// Writes `text` to `path`, creating parent directories. Throws ArtifactError.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace hyba
