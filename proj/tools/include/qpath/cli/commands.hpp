#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

namespace qpath::cli {

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,  // solver failure or a failed verification check
  kExitUsage = 2,    // bad arguments or unusable input files
};

struct TraceArgs {
  std::filesystem::path data;
  double lambda = 0;
  bool bias = true;
  std::optional<double> tol;
  std::filesystem::path out;
};

struct AtArgs {
  std::filesystem::path path;
  std::filesystem::path data;
  std::optional<double> tau;
  std::optional<double> cost_pos;
  std::optional<double> cost_neg;
  std::optional<std::filesystem::path> out;
};

struct SweepArgs {
  std::filesystem::path path;
  std::filesystem::path data;
  std::filesystem::path test;
  long long grid = 0;
  std::filesystem::path out;
};

struct VerifyArgs {
  std::filesystem::path data;
  double lambda = 0;
  bool bias = true;
  long long grid = 101;
  std::uint64_t seed = 0;
};

/// Largest dataset accepted by `verify` (it runs dense reference solves).
inline constexpr std::size_t kVerifyMaxN = 500;

int cmd_trace(const TraceArgs& args, std::ostream& out, std::ostream& err);
int cmd_at(const AtArgs& args, std::ostream& out, std::ostream& err);
int cmd_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err);
int cmd_verify(const VerifyArgs& args, std::ostream& out, std::ostream& err);

/// Parses argv (subcommands trace, at, sweep, verify) and dispatches.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qpath::cli
