#pragma once

#include "wcreg/cli/config.hpp"
#include "wcreg/functional.hpp"
#include "wcreg/linear_operator.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace wcreg::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDivergence = 3;
inline constexpr int kExitCertificate = 4;

struct RunOptions
{
  std::string command;
  std::optional<std::filesystem::path> config;
  std::filesystem::path out = "out";
  std::optional<std::uint64_t> seed;
  bool override_constraints = false;
  /// diagnose: trace CSV to certify
  std::filesystem::path trace;
  /// phantom: overrides for [phantom] kind / n
  std::optional<std::string> phantom_kind;
  std::optional<std::size_t> phantom_n;
};

/// Forward problem assembled from the [problem] and [operator] sections.
struct InverseProblem
{
  LinearOperator a;
  DenseArray x_true;
  DenseArray y_clean;
  DenseArray y_noisy;
  std::string description;
};

InverseProblem build_problem(const Config& config, std::uint64_t seed);
Functional build_regulariser(const Config& config);

/// Each command writes its files under `out` and returns an exit code; errors propagate
/// as exceptions.
int cmd_solve(const Config& config, const std::filesystem::path& out, bool override_constraints);
int cmd_regpath(const Config& config, const std::filesystem::path& out);
int cmd_train_toy(const Config& config, const std::filesystem::path& out);
int cmd_counterexample(const Config& config, const std::filesystem::path& out);
int cmd_diagnose(const std::filesystem::path& trace, const std::filesystem::path& out);
int cmd_phantom(const Config& config, const std::filesystem::path& out);

/// Loads the config, applies flag overrides, dispatches, and maps exceptions to exit
/// codes (2 config, 3 divergence, 4 certificate failure). Messages go to stderr.
int run(const RunOptions& options);

} // namespace wcreg::cli
