#include "hyba/results.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "hyba/error.hpp"

namespace hyba {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ParseError("not a number: '" + std::string(text) + "'");
  }
  return v;
}

namespace {

std::uint64_t parse_u64(std::string_view text) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || text.empty()) {
    throw ParseError("not an unsigned integer: '" + std::string(text) + "'");
  }
  return v;
}

bool parse_bool(std::string_view text) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw ParseError("not a boolean: '" + std::string(text) + "'");
}

constexpr const char* kOutcomeHeader =
    "seed_id,found_by,success,queries_used,strategy,estimator,epsilon,run_seed";

// Splits CSV text into records. Quoted fields may span lines. Each record
// carries the 1-based line number it starts on.
struct Record {
  std::size_t line;
  std::vector<std::string> fields;
};

std::vector<Record> parse_csv(std::string_view text) {
  std::vector<Record> records;
  std::size_t line = 1;
  std::size_t i = 0;
  while (i < text.size()) {
    Record rec{line, {}};
    std::string field;
    bool quoted = false;
    bool done = false;
    while (!done) {
      if (i >= text.size()) {
        if (quoted) throw ParseError("csv line " + std::to_string(rec.line) + ": unterminated quote");
        rec.fields.push_back(std::move(field));
        done = true;
        break;
      }
      const char c = text[i++];
      if (quoted) {
        if (c == '"') {
          if (i < text.size() && text[i] == '"') {
            field += '"';
            ++i;
          } else {
            quoted = false;
          }
        } else {
          if (c == '\n') ++line;
          field += c;
        }
      } else if (c == '"') {
        if (!field.empty()) {
          throw ParseError("csv line " + std::to_string(line) + ": stray quote inside field");
        }
        quoted = true;
      } else if (c == ',') {
        rec.fields.push_back(std::move(field));
        field.clear();
      } else if (c == '\r') {
        // tolerated before \n
      } else if (c == '\n') {
        ++line;
        rec.fields.push_back(std::move(field));
        done = true;
      } else {
        field += c;
      }
    }
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> csv_split(std::string_view line) {
  auto recs = parse_csv(line);
  if (recs.empty()) return {""};
  if (recs.size() != 1) throw ParseError("csv_split: more than one record");
  return std::move(recs.front().fields);
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw ArtifactError("cannot create directory " + path.parent_path().string());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArtifactError("cannot write " + path.string());
  out << text;
  if (!out) throw ArtifactError("write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_outcomes_csv(const std::filesystem::path& path, const std::vector<OutcomeRecord>& rows) {
  std::string text = std::string(kOutcomeHeader) + "\n";
  for (const auto& r : rows) {
    text += std::to_string(r.seed_id) + ',' + std::string(to_string(r.found_by)) + ',' +
            (r.success ? "true" : "false") + ',' + std::to_string(r.queries_used) + ',' +
            csv_escape(r.strategy) + ',' + csv_escape(r.estimator) + ',' +
            format_double(r.epsilon) + ',' + std::to_string(r.run_seed) + '\n';
  }
  write_text_file(path, text);
}

std::vector<OutcomeRecord> read_outcomes_csv(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  const std::vector<Record> records = parse_csv(text);
  if (records.empty()) throw ParseError(path.string() + ": empty file");
  std::string header;
  for (std::size_t i = 0; i < records[0].fields.size(); ++i) {
    header += (i ? "," : "") + records[0].fields[i];
  }
  if (header != kOutcomeHeader) throw ParseError(path.string() + " line 1: unexpected header");

  std::vector<OutcomeRecord> rows;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const Record& rec = records[i];
    if (rec.fields.size() == 1 && rec.fields[0].empty()) continue;
    const std::string where = path.string() + " line " + std::to_string(rec.line);
    if (rec.fields.size() != 8) {
      throw ParseError(where + ": expected 8 fields, got " + std::to_string(rec.fields.size()));
    }
    try {
      OutcomeRecord r;
      r.seed_id = parse_u64(rec.fields[0]);
      r.found_by = found_by_from_string(rec.fields[1]);
      r.success = parse_bool(rec.fields[2]);
      r.queries_used = parse_u64(rec.fields[3]);
      r.strategy = rec.fields[4];
      r.estimator = rec.fields[5];
      r.epsilon = parse_double(rec.fields[6]);
      r.run_seed = parse_u64(rec.fields[7]);
      rows.push_back(std::move(r));
    } catch (const ParseError& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  return rows;
}

void write_results(const std::filesystem::path& dir, const RunResults& results) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ArtifactError("cannot create run directory " + dir.string() + ": " + ec.message());
  write_outcomes_csv(dir / kOutcomesFile, results.outcomes);
  write_text_file(dir / kConfigFile, results.config.dump(2) + "\n");
}

RunResults read_results(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ArtifactError("no run directory " + dir.string());
  RunResults r;
  r.outcomes = read_outcomes_csv(dir / kOutcomesFile);
  try {
    r.config = nlohmann::json::parse(read_text_file(dir / kConfigFile));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError((dir / kConfigFile).string() + ": " + e.what());
  }
  return r;
}

AttackSummary summarize(const std::vector<OutcomeRecord>& rows) {
  AttackSummary s;
  std::uint64_t search_queries = 0;
  std::size_t search_aes = 0;
  s.seeds = rows.size();
  for (const auto& r : rows) {
    s.total_queries += r.queries_used;
    if (r.success) ++s.aes;
    if (r.found_by == FoundBy::direct_transfer) {
      ++s.direct_transfers;
    } else {
      search_queries += r.queries_used;
      if (r.success) ++search_aes;
    }
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const auto ratio = [&](double num, double den) { return den > 0 ? num / den : nan; };
  s.success_rate = ratio(static_cast<double>(s.aes), static_cast<double>(s.seeds));
  s.queries_per_seed = ratio(static_cast<double>(s.total_queries), static_cast<double>(s.seeds));
  s.queries_per_ae = ratio(static_cast<double>(s.total_queries), static_cast<double>(s.aes));
  s.queries_per_search = ratio(static_cast<double>(search_queries), static_cast<double>(search_aes));
  s.transfer_rate = ratio(static_cast<double>(s.direct_transfers), static_cast<double>(s.seeds));
  return s;
}

namespace {

nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json to_json(const AttackSummary& s) {
  return {{"seeds", s.seeds},
          {"aes", s.aes},
          {"direct_transfers", s.direct_transfers},
          {"total_queries", s.total_queries},
          {"success_rate", number_or_null(s.success_rate)},
          {"queries_per_seed", number_or_null(s.queries_per_seed)},
          {"queries_per_ae", number_or_null(s.queries_per_ae)},
          {"queries_per_search", number_or_null(s.queries_per_search)},
          {"transfer_rate", number_or_null(s.transfer_rate)}};
}

nlohmann::json to_json(const BatchReport& report) {
  nlohmann::json top = nlohmann::json::object();
  for (const auto& [pct, q] : report.queries_to_top) {
    top[format_double(pct)] = q ? nlohmann::json(*q) : nlohmann::json(nullptr);
  }
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& p : report.curve) curve.push_back({p.queries, p.aes_found});
  nlohmann::json per_seed = nlohmann::json::array();
  for (const auto& r : report.per_seed) {
    per_seed.push_back({{"seed_id", r.seed_id},
                        {"queries", r.queries},
                        {"success", r.success},
                        {"found_by", std::string(to_string(r.found_by))}});
  }
  return {{"strategy", std::string(to_string(report.strategy))},
          {"run_seed", report.run_seed},
          {"num_seeds", report.num_seeds},
          {"total_queries", report.total_queries},
          {"aes_found", report.aes_found},
          {"phase1_end", report.phase1_end ? nlohmann::json(*report.phase1_end)
                                           : nlohmann::json(nullptr)},
          {"queries_to_top_percent", std::move(top)},
          {"ordering", report.ordering},
          {"phase2_ordering", report.phase2_ordering},
          {"curve", std::move(curve)},
          {"per_seed", std::move(per_seed)}};
}

void write_curve_csv(const std::filesystem::path& path, const std::vector<BatchReport>& reports) {
  std::string text = "queries,aes_found,strategy,run_seed\n";
  for (const auto& r : reports) {
    const std::string suffix =
        "," + std::string(to_string(r.strategy)) + "," + std::to_string(r.run_seed) + "\n";
    for (const auto& p : r.curve) {
      text += std::to_string(p.queries) + "," + std::to_string(p.aes_found) + suffix;
    }
  }
  write_text_file(path, text);
}

}  // namespace hyba
