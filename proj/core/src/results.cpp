#include "xcl/results.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <utility>

#include "json.hpp"
#include "xcl/errors.hpp"
#include "xcl/text_io.hpp"

namespace xcl {
namespace {

void check_rows(const std::vector<ResultRow>& rows) {
  for (const auto& r : rows) {
    if (!std::isfinite(r.value)) {
      throw NumericError("non-finite result " + r.method + "/" + r.metric + " for seed " + std::to_string(r.seed));
    }
  }
}

}  // namespace

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  check_rows(rows);
  out << kResultHeader << '\n';
  for (const auto& r : rows) {
    out << r.experiment << ',' << r.seed << ',' << r.method << ',' << r.metric << ','
        << text::format_double(r.value) << ',' << r.config_hash << '\n';
  }
}

std::vector<ResultRow> read_results_csv(std::istream& in) {
  text::LineReader reader(in);
  const std::string header = reader.next("result header");
  if (header != kResultHeader) throw ParseError("expected header '" + std::string(kResultHeader) + "'", reader.line_number());
  std::vector<ResultRow> rows;
  std::string line;
  while (reader.next_if_any(line)) {
    if (line.empty()) continue;
    const auto f = text::split(line, ',');
    if (f.size() != 6) throw ParseError("expected 6 fields, got " + std::to_string(f.size()), reader.line_number());
    ResultRow r;
    r.experiment = std::string(f[0]);
    const long long seed = reader.parse_int(f[1]);
    if (seed < 0) throw ParseError("negative seed", reader.line_number());
    r.seed = static_cast<std::uint64_t>(seed);
    r.method = std::string(f[2]);
    r.metric = std::string(f[3]);
    r.value = reader.parse_double(f[4]);
    r.config_hash = std::string(f[5]);
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_results_json(std::ostream& out, const std::vector<ResultRow>& rows) {
  check_rows(rows);
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    arr.push_back({{"experiment", r.experiment},
                   {"seed", r.seed},
                   {"method", r.method},
                   {"metric", r.metric},
                   {"value", r.value},
                   {"config_hash", r.config_hash}});
  }
  out << arr.dump(2) << '\n';
}

std::vector<ResultRow> read_results_json(std::istream& in) {
  nlohmann::json arr;
  try {
    arr = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), 1);
  }
  if (!arr.is_array()) throw ParseError("expected a JSON array of result rows", 1);
  std::vector<ResultRow> rows;
  try {
    for (const auto& o : arr) {
      rows.push_back({o.at("experiment").get<std::string>(), o.at("seed").get<std::uint64_t>(),
                      o.at("method").get<std::string>(), o.at("metric").get<std::string>(),
                      o.at("value").get<double>(), o.at("config_hash").get<std::string>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad result row: ") + e.what(), 1);
  }
  return rows;
}

void store_results(const std::string& path, const std::vector<ResultRow>& rows, bool json) {
  namespace fs = std::filesystem;
  check_rows(rows);
  std::vector<ResultRow> merged;
  if (fs::exists(path)) {
    std::ifstream in(path);
    merged = json ? read_results_json(in) : read_results_csv(in);
  }
  std::set<std::string> hashes;
  std::set<std::pair<std::string, std::uint64_t>> replaced;
  for (const auto& r : rows) {
    hashes.insert(r.config_hash);
    replaced.emplace(r.experiment, r.seed);
  }
  for (const auto& old : merged) {
    if (!hashes.empty() && !hashes.count(old.config_hash)) {
      throw ConfigError("refusing to append to '" + path + "': it holds results of config " + old.config_hash);
    }
  }
  std::erase_if(merged, [&](const ResultRow& r) { return replaced.count({r.experiment, r.seed}) > 0; });
  merged.insert(merged.end(), rows.begin(), rows.end());
  std::stable_sort(merged.begin(), merged.end(),
                   [](const ResultRow& a, const ResultRow& b) { return a.seed < b.seed; });

  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    if (json) {
      write_results_json(out, merged);
    } else {
      write_results_csv(out, merged);
    }
    if (!out.flush()) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

}  // namespace xcl
