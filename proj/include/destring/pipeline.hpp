#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "destring/report.hpp"
#include "destring/scanner.hpp"
#include "destring/slicer.hpp"
#include "destring/vm.hpp"

namespace destring {

enum class Mode { Deobfuscate, ScanOnly, Obfuscate, Report };

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PipelineConfig {
  std::vector<std::string> inputs;
  std::vector<std::string> exclude_prefixes = default_exclusions();
  int max_conditionals = 5;   // conditional-statement budget of the candidate search
  PathLimits limits;
  ExecBudget budget;          // 5 s wall clock by default
  std::string out_path;       // record file, or output directory for
                              // obfuscate/report modes
  Mode mode = Mode::Deobfuscate;
  std::string scheme = "xor-two-keys";
  int junk_conditionals = 2;
  uint64_t seed = 1;
  bool dump_slices = false;
  std::string app_id;  // defaults to the basename of the first input
  int jobs = 0;        // worker threads; 0 = hardware concurrency
};

// Runs scan -> candidates -> slice -> execute for every literal of every
// non-excluded method. Methods are analyzed by a worker pool; the returned
// records are in deterministic (class, method, literal) order regardless of
// scheduling. When `execute_slices` is false the pipeline stops after
// candidate detection (scan-only).
std::vector<ResultRecord> analyze_program(const SmaliProgram& program,
                                          const PipelineConfig& config, bool execute_slices);

// Full CLI entry: returns the process exit code. Per-literal failures are
// data; only configuration and I/O problems are errors.
int run_pipeline(const PipelineConfig& config, std::ostream& log);

}  // namespace destring
