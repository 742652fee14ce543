#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace nctk {

// Settings shared by all subcommands. Resolution order: command-line flag,
// then config file, then environment (paths only), then these defaults.
struct RunConfig {
  std::optional<std::filesystem::path> corpus;
  std::optional<std::filesystem::path> index;
  std::optional<std::filesystem::path> wordnet;
  std::optional<std::filesystem::path> catch_all_rules;
  std::optional<std::filesystem::path> wordlist;
  std::vector<int> n_values{3, 4, 5};
  std::uint32_t cap = 6;
  std::int64_t max_freq = 250;
  std::optional<std::size_t> take_k;
  std::uint64_t seed = 0;
  std::size_t fewshot_k = 10;
  unsigned threads = 1;
  std::size_t memory_budget_mb = 512;
  std::string scorer;  // command line of the external scorer, whitespace separated
  std::int64_t scorer_timeout_ms = 30000;

  // "key = value" lines; '#' starts a comment line. Relative paths resolve
  // against the file's directory. Unknown keys are a UsageError.
  void load_file(const std::filesystem::path& file);
  // NCTK_CORPUS, NCTK_INDEX, NCTK_WORDNET fill paths still unset.
  void load_env();

  // Sorted "key=value" lines of every setting.
  std::string canonical() const;
};

// Runs one subcommand. Returns 0 on success, 1 on data errors, 2 on usage
// errors. Nothing is written to the process streams except through out/err.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nctk
