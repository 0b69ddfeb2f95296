#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "kcrc/bench.hpp"

namespace kcrc::cli {

enum class Subcommand { synth, eval, sweep, bench, metrics };
enum class Experiment { same_direction, timing };

inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 1;
inline constexpr int kExitNumerical = 2;

struct CliCommand {
  Subcommand subcommand = Subcommand::metrics;

  // Inputs are CSV paths or "idx:IMAGES:LABELS".
  std::string train;
  std::string test;
  std::string out;

  MethodConfig method;
  bool kernel_given = false;    // unset: kcrc-lcd in eval and sweep uses dist-exp
  std::vector<Method> methods;  // sweep
  std::vector<Index> sizes;     // sweep, atoms per class
  std::vector<Index> lcd_ks;    // sweep

  // synth and bench
  std::optional<Index> m;
  std::optional<Index> per_class;
  double noise_variance = 0.15;
  Experiment experiment = Experiment::same_direction;
  std::vector<Index> m_list{2, 8, 32, 128, 256};
  Index queries = 50;

  Index repeats = 5;
  std::uint64_t seed = 42;
  unsigned threads = 1;
};

struct ParseResult {
  std::optional<CliCommand> command;  // empty: stop with exit_code
  int exit_code = kExitOk;
};

/// Parses and validates argv (argv[0] is the program name). Help and usage
/// errors are written to `out` / `err` and reported through exit_code.
ParseResult parse_args(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Executes a parsed command: 0 on success, 1 on data errors, 2 on numerical failures.
int run(const CliCommand& cmd, std::ostream& out, std::ostream& err);

/// parse_args followed by run.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// "idx:IMAGES:LABELS" loads an IDX pair, anything else a CSV file.
Dictionary load_dataset(const std::string& spec);

}  // namespace kcrc::cli
