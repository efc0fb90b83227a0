#include <iostream>

#include <CLI11.hpp>

#include "destring/pipeline.hpp"

using namespace destring;

int main(int argc, char** argv) {
  CLI::App app{"destring: recovers obfuscated string literals in Smali programs\n"
               "by slicing out and executing their deobfuscation logic"};

  PipelineConfig config;
  std::string mode = "deobfuscate";
  double timeout_secs = 5.0;
  std::vector<std::string> exclude;

  app.add_option("--input,-i", config.inputs, ".smali files or directories (record file in report mode)")
      ->envname("DESTRING_INPUT")
      ->required();
  app.add_option("--out,-o", config.out_path,
                 "record file (deobfuscate/scan-only) or output directory (obfuscate/report)")
      ->envname("DESTRING_OUT")
      ->required();
  app.add_option("--mode", mode, "deobfuscate | scan-only | obfuscate | report")
      ->envname("DESTRING_MODE")
      ->check(CLI::IsMember({"deobfuscate", "scan-only", "obfuscate", "report"}));
  app.add_option("--exclude-prefixes", exclude,
                 "package prefixes to skip (replaces the built-in library list)")
      ->envname("DESTRING_EXCLUDE_PREFIXES")
      ->delimiter(',');
  app.add_option("--max-conditionals", config.max_conditionals,
                 "conditional budget of the candidate search")
      ->envname("DESTRING_MAX_CONDITIONALS");
  app.add_option("--max-paths", config.limits.max_paths, "execution path cap per slice")
      ->envname("DESTRING_MAX_PATHS");
  app.add_option("--bfs-queue-cap", config.limits.bfs_queue_cap,
                 "frontier size that switches path search to depth-first")
      ->envname("DESTRING_BFS_QUEUE_CAP");
  app.add_option("--timeout-secs", timeout_secs, "wall-clock budget per slice execution")
      ->envname("DESTRING_TIMEOUT_SECS");
  app.add_option("--max-steps", config.budget.max_steps,
                 "interpreter step budget per slice execution")
      ->envname("DESTRING_MAX_STEPS");
  app.add_option("--scheme", config.scheme,
                 "obfuscation scheme (obfuscate mode): xor-two-keys | caesar-shift | "
                 "byte-array-decode | static-table-lookup")
      ->envname("DESTRING_SCHEME");
  app.add_option("--junk-conditionals", config.junk_conditionals,
                 "opaque conditionals inserted per literal (obfuscate mode)")
      ->envname("DESTRING_JUNK_CONDITIONALS");
  app.add_option("--seed", config.seed, "obfuscation seed")->envname("DESTRING_SEED");
  app.add_flag("--dump-slices", config.dump_slices, "dump winning slices next to the record file")
      ->envname("DESTRING_DUMP_SLICES");
  app.add_option("--app-id", config.app_id, "app identifier stored in records")
      ->envname("DESTRING_APP_ID");
  app.add_option("--jobs,-j", config.jobs, "worker threads (0 = all cores)")
      ->envname("DESTRING_JOBS");

  CLI11_PARSE(app, argc, argv);

  if (!exclude.empty()) config.exclude_prefixes = exclude;
  config.budget.wall_clock =
      std::chrono::milliseconds(static_cast<int64_t>(timeout_secs * 1000.0));
  if (mode == "deobfuscate") config.mode = Mode::Deobfuscate;
  else if (mode == "scan-only") config.mode = Mode::ScanOnly;
  else if (mode == "obfuscate") config.mode = Mode::Obfuscate;
  else config.mode = Mode::Report;

  try {
    return run_pipeline(config, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
