#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace xcl {

/// One table cell: a metric of one method in one seeded run.
struct ResultRow {
  std::string experiment;
  std::uint64_t seed = 0;
  std::string method;
  std::string metric;
  double value = 0.0;
  std::string config_hash;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

inline constexpr const char* kResultHeader = "experiment,seed,method,metric,value,config_hash";

/// Throws NumericError on a non-finite value.
void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_results_csv(std::istream& in);
void write_results_json(std::ostream& out, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_results_json(std::istream& in);

/// Writes `rows` to `path` (CSV, or a JSON array when `json`), merging with
/// rows already there: rows of the same (experiment, seed) are replaced, the
/// rest kept, and the result ordered by seed. An existing file written under a
/// different config hash is refused with ConfigError. The file is replaced
/// atomically (temp file + rename).
void store_results(const std::string& path, const std::vector<ResultRow>& rows, bool json);

}  // namespace xcl
