#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace destring {

struct StorageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One line per literal outcome. `duration` counts interpreter steps, which
// keeps record files byte-identical across runs.
struct ResultRecord {
  std::string app;
  std::string class_desc;
  std::string method;  // name(sig)ret
  int literal_index = 0;
  std::u16string literal;
  int candidate_count = 0;
  std::string condition;  // chosen candidate condition or "none"
  int slice_size = 0;
  std::string status;  // ok | rejected | timeout | unsupported-opcode |
                       // runtime-error | no-candidates | empty-output | scanned
  std::u16string output;
  uint64_t duration = 0;

  std::string key() const {
    return app + "\t" + class_desc + "\t" + method + "\t" + std::to_string(literal_index);
  }
  bool operator==(const ResultRecord&) const = default;
};

std::string serialize_record(const ResultRecord& r);
ResultRecord parse_record(const std::string& line);

// Append-only record store over a line-delimited text file. Re-inserting an
// existing key is a no-op.
class RecordStore {
 public:
  // Opens (creating if needed) and indexes existing records.
  explicit RecordStore(const std::string& path);
  ~RecordStore();

  void record(const ResultRecord& r);
  size_t size() const;

  static std::vector<ResultRecord> read_all(const std::string& path);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

using Histogram = std::array<uint64_t, 128>;

enum class DistributionSide { Before, After };

// ASCII code-unit histogram over literals (Before) or Ok outputs (After);
// code units above 127 are ignored.
Histogram char_distribution(const std::vector<ResultRecord>& records, DistributionSide side);

// Statement-count histogram over records with status "ok".
std::map<int, uint64_t> slice_size_distribution(const std::vector<ResultRecord>& records);

// Percentage of literals with at least one candidate, per app.
std::map<std::string, double> obfuscation_fraction(const std::vector<ResultRecord>& records);

// Shannon entropy of a histogram, in bits.
double histogram_entropy(const Histogram& h);

std::string histogram_csv(const Histogram& h);
std::string size_histogram_csv(const std::map<int, uint64_t>& h);
std::string fraction_csv(const std::map<std::string, double>& fractions);

}  // namespace destring
