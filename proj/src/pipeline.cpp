#include "destring/pipeline.hpp"

#include <atomic>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <thread>

#include "destring/oracle.hpp"
#include "destring/parser.hpp"
#include "destring/printer.hpp"
#include "destring/util.hpp"

namespace destring {

namespace {

struct WorkItem {
  const std::string* class_desc;
  const MethodDef* method;
};

std::string method_id(const MethodDef& m) { return m.name + m.signature; }

std::string sanitize_filename(std::string s) {
  for (char& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
  return s;
}

ResultRecord record_from_outcome(const PipelineConfig& config, const LiteralOutcome& o) {
  ResultRecord r;
  r.app = config.app_id;
  r.class_desc = o.literal.method.class_desc;
  r.method = o.literal.method.name + o.literal.method.signature;
  r.literal_index = o.literal.stmt_index;
  r.literal = o.literal.value;
  r.candidate_count = o.candidate_count;
  r.condition = o.chosen ? condition_name(o.chosen->condition) : "none";
  r.slice_size = o.slice_size;
  r.status = o.status_string();
  if (o.resolved && o.exec && o.exec->output) r.output = *o.exec->output;
  r.duration = o.steps;
  return r;
}

}  // namespace

std::vector<ResultRecord> analyze_program(const SmaliProgram& program,
                                          const PipelineConfig& config,
                                          bool execute_slices) {
  std::vector<WorkItem> work;
  for (const auto& [desc, cls] : program.classes) {
    if (is_excluded_class(desc, config.exclude_prefixes)) continue;
    for (const MethodDef& m : cls.methods) work.push_back({&desc, &m});
  }

  std::vector<std::vector<ResultRecord>> results(work.size());
  std::atomic<size_t> next{0};

  auto worker = [&] {
    while (true) {
      size_t item = next.fetch_add(1);
      if (item >= work.size()) return;
      const std::string& desc = *work[item].class_desc;
      const MethodDef& method = *work[item].method;
      std::vector<ResultRecord>& out = results[item];

      std::vector<LiteralSite> literals = find_string_literals(desc, method);
      if (literals.empty()) continue;
      Cfg cfg;
      try {
        cfg = build_cfg(method);
      } catch (const CfgError& e) {
        for (const LiteralSite& lit : literals) {
          LiteralOutcome o;
          o.literal = lit;
          ResultRecord r = record_from_outcome(config, o);
          r.status = "rejected";
          out.push_back(std::move(r));
        }
        continue;
      }
      for (const LiteralSite& lit : literals) {
        std::vector<DeobCandidate> candidates =
            find_deob_candidates(method, cfg, lit, config.max_conditionals);
        if (!execute_slices) {
          LiteralOutcome o;
          o.literal = lit;
          o.candidate_count = static_cast<int>(candidates.size());
          ResultRecord r = record_from_outcome(config, o);
          r.status = "scanned";
          out.push_back(std::move(r));
          continue;
        }
        LiteralOutcome o = run_candidates(program, desc, method, cfg, lit, candidates,
                                          config.limits, config.budget);
        if (config.dump_slices && o.slice) {
          std::string name = sanitize_filename(desc + "_" + method_id(method)) + "_" +
                             std::to_string(lit.stmt_index) + ".slice";
          std::filesystem::path dir =
              std::filesystem::path(config.out_path).parent_path() / "slices";
          std::error_code ec;
          std::filesystem::create_directories(dir, ec);
          std::ofstream dump(dir / name, std::ios::binary);
          dump << print_slice(*o.slice);
        }
        out.push_back(record_from_outcome(config, o));
      }
    }
  };

  unsigned jobs = config.jobs > 0 ? static_cast<unsigned>(config.jobs)
                                  : std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min<unsigned>(jobs, std::max<size_t>(work.size(), 1));
  std::vector<std::thread> threads;
  for (unsigned t = 0; t < jobs; ++t) threads.emplace_back(worker);
  for (std::thread& t : threads) t.join();

  std::vector<ResultRecord> flat;
  for (std::vector<ResultRecord>& chunk : results)
    for (ResultRecord& r : chunk) flat.push_back(std::move(r));
  return flat;
}

namespace {

int run_analysis(const PipelineConfig& config, std::ostream& log, bool execute_slices) {
  LoadResult loaded = load_program(config.inputs);
  for (const LoadFailure& f : loaded.failures)
    log << "warning: " << f.path << ": " << f.error << "\n";
  if (loaded.program.classes.empty()) {
    log << "error: no classes loaded\n";
    return 1;
  }
  std::vector<ResultRecord> records = analyze_program(loaded.program, config, execute_slices);
  RecordStore store(config.out_path);
  for (const ResultRecord& r : records) store.record(r);
  size_t ok = 0;
  for (const ResultRecord& r : records)
    if (r.status == "ok") ++ok;
  log << "analyzed " << loaded.program.classes.size() << " classes, " << records.size()
      << " literals";
  if (execute_slices) log << ", " << ok << " deobfuscated";
  log << "\n";
  return 0;
}

int run_obfuscate(const PipelineConfig& config, std::ostream& log) {
  auto kind = scheme_from_name(config.scheme);
  if (!kind) throw ConfigError("unknown scheme " + config.scheme);
  LoadResult loaded = load_program(config.inputs);
  for (const LoadFailure& f : loaded.failures)
    log << "warning: " << f.path << ": " << f.error << "\n";
  if (loaded.program.classes.empty()) {
    log << "error: no classes loaded\n";
    return 1;
  }
  ObfuscationScheme scheme;
  scheme.kind = *kind;
  scheme.junk_conditionals = config.junk_conditionals;
  auto [obf, gt] = obfuscate_program(loaded.program, scheme, config.seed);
  write_program_tree(obf, config.out_path);
  std::ofstream gt_out(std::filesystem::path(config.out_path) / "groundtruth.txt",
                       std::ios::binary);
  if (!gt_out) throw StorageError("cannot write ground truth file");
  gt_out << gt.serialize();
  log << "obfuscated " << gt.entries.size() << " literals (" << scheme_name(*kind)
      << ", seed " << config.seed << ")\n";
  return 0;
}

int run_report(const PipelineConfig& config, std::ostream& log) {
  if (config.inputs.empty()) throw ConfigError("report mode needs a record file input");
  std::vector<ResultRecord> records = RecordStore::read_all(config.inputs[0]);
  std::filesystem::create_directories(config.out_path);
  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream out(std::filesystem::path(config.out_path) / name, std::ios::binary);
    if (!out) throw StorageError("cannot write report file " + name);
    out << content;
  };
  write("char_before.csv", histogram_csv(char_distribution(records, DistributionSide::Before)));
  write("char_after.csv", histogram_csv(char_distribution(records, DistributionSide::After)));
  write("slice_sizes.csv", size_histogram_csv(slice_size_distribution(records)));
  write("obfuscation_fraction.csv", fraction_csv(obfuscation_fraction(records)));
  log << "report over " << records.size() << " records written to " << config.out_path
      << "\n";
  return 0;
}

}  // namespace

int run_pipeline(const PipelineConfig& config, std::ostream& log) {
  PipelineConfig cfg = config;
  if (cfg.app_id.empty() && !cfg.inputs.empty())
    cfg.app_id = std::filesystem::path(cfg.inputs[0]).filename().string();
  if (cfg.out_path.empty()) throw ConfigError("--out is required");
  if (cfg.inputs.empty()) throw ConfigError("--input is required");

  switch (cfg.mode) {
    case Mode::Deobfuscate: return run_analysis(cfg, log, true);
    case Mode::ScanOnly: return run_analysis(cfg, log, false);
    case Mode::Obfuscate: return run_obfuscate(cfg, log);
    case Mode::Report: return run_report(cfg, log);
  }
  return 1;
}

}  // namespace destring
