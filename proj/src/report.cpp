#include "destring/report.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

#include "destring/util.hpp"

namespace destring {

namespace {

// Tab-separated fields; strings carry Smali-style escapes so a record always
// occupies exactly one line.
std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

}  // namespace

std::string serialize_record(const ResultRecord& r) {
  std::ostringstream out;
  out << r.app << '\t' << r.class_desc << '\t' << r.method << '\t' << r.literal_index << '\t'
      << escape_smali(r.literal) << '\t' << r.candidate_count << '\t' << r.condition << '\t'
      << r.slice_size << '\t' << r.status << '\t' << escape_smali(r.output) << '\t'
      << r.duration;
  return out.str();
}

ResultRecord parse_record(const std::string& line) {
  std::vector<std::string> f = split_fields(line);
  if (f.size() != 11) throw StorageError("malformed record line (" +
                                         std::to_string(f.size()) + " fields)");
  ResultRecord r;
  r.app = f[0];
  r.class_desc = f[1];
  r.method = f[2];
  r.literal_index = std::stoi(f[3]);
  r.literal = unescape_smali(f[4]);
  r.candidate_count = std::stoi(f[5]);
  r.condition = f[6];
  r.slice_size = std::stoi(f[7]);
  r.status = f[8];
  r.output = unescape_smali(f[9]);
  r.duration = std::stoull(f[10]);
  return r;
}

struct RecordStore::Impl {
  std::string path;
  std::ofstream out;
  std::set<std::string> keys;
};

RecordStore::RecordStore(const std::string& path) : impl_(std::make_unique<Impl>()) {
  impl_->path = path;
  bool fresh = true;
  {
    std::ifstream probe(path, std::ios::binary);
    fresh = !probe || probe.peek() == std::ifstream::traits_type::eof();
  }
  for (const ResultRecord& r : read_all(path)) impl_->keys.insert(r.key());
  impl_->out.open(path, std::ios::app | std::ios::binary);
  if (!impl_->out) throw StorageError("cannot open record store " + path);
  if (fresh) {
    std::time_t now = std::time(nullptr);
    char stamp[32] = "unknown";
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    impl_->out << "# destring records v1\n# run: " << stamp << "\n";
    impl_->out.flush();
  }
}

RecordStore::~RecordStore() = default;

void RecordStore::record(const ResultRecord& r) {
  if (!impl_->keys.insert(r.key()).second) return;  // idempotent re-insert
  impl_->out << serialize_record(r) << '\n';
  impl_->out.flush();
  if (!impl_->out) throw StorageError("write failed on " + impl_->path);
}

size_t RecordStore::size() const { return impl_->keys.size(); }

std::vector<ResultRecord> RecordStore::read_all(const std::string& path) {
  std::vector<ResultRecord> out;
  std::ifstream in(path, std::ios::binary);
  if (!in) return out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    out.push_back(parse_record(line));
  }
  return out;
}

Histogram char_distribution(const std::vector<ResultRecord>& records,
                            DistributionSide side) {
  Histogram h{};
  for (const ResultRecord& r : records) {
    if (side == DistributionSide::After && r.status != "ok") continue;
    const std::u16string& s = side == DistributionSide::Before ? r.literal : r.output;
    for (char16_t u : s)
      if (u < 128) ++h[u];
  }
  return h;
}

std::map<int, uint64_t> slice_size_distribution(const std::vector<ResultRecord>& records) {
  std::map<int, uint64_t> h;
  for (const ResultRecord& r : records)
    if (r.status == "ok") ++h[r.slice_size];
  return h;
}

std::map<std::string, double> obfuscation_fraction(const std::vector<ResultRecord>& records) {
  std::map<std::string, std::pair<uint64_t, uint64_t>> counts;  // app -> (with, total)
  for (const ResultRecord& r : records) {
    auto& [with, total] = counts[r.app];
    ++total;
    if (r.candidate_count > 0) ++with;
  }
  std::map<std::string, double> out;
  for (const auto& [app, c] : counts)
    out[app] = c.second == 0 ? 0.0 : 100.0 * static_cast<double>(c.first) / c.second;
  return out;
}

double histogram_entropy(const Histogram& h) {
  uint64_t total = 0;
  for (uint64_t c : h) total += c;
  if (total == 0) return 0.0;
  double e = 0.0;
  for (uint64_t c : h) {
    if (c == 0) continue;
    double p = static_cast<double>(c) / total;
    e -= p * std::log2(p);
  }
  return e;
}

std::string histogram_csv(const Histogram& h) {
  std::ostringstream out;
  out << "bin,count\n";
  for (size_t i = 0; i < h.size(); ++i) out << i << ',' << h[i] << '\n';
  return out.str();
}

std::string size_histogram_csv(const std::map<int, uint64_t>& h) {
  std::ostringstream out;
  out << "bin,count\n";
  for (const auto& [size, count] : h) out << size << ',' << count << '\n';
  return out.str();
}

std::string fraction_csv(const std::map<std::string, double>& fractions) {
  std::ostringstream out;
  out << "app,percent\n";
  for (const auto& [app, pct] : fractions) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", pct);
    out << app << ',' << buf << '\n';
  }
  return out.str();
}

}  // namespace destring
