#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dirt/model.hpp"
#include "dirt/synthetic.hpp"
#include "dirt/training.hpp"

// The four user-facing commands as library calls. Each returns a process exit
// status and reports failures on `err` instead of throwing.

namespace dirt {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumeric = 3 };

enum class LogLevel { Quiet, Info, Debug };
/// DIRT_LOG_LEVEL: quiet, info (default) or debug.
LogLevel log_level_from_env();

int cmd_generate(const GenConfig& config, const std::filesystem::path& out_dir, std::ostream& out, std::ostream& err);

struct TrainOptions {
  ModelKind kind = ModelKind::Dirt;
  std::filesystem::path data;
  std::filesystem::path checkpoint;
  /// Drives the split, the initialization and the training stream.
  std::uint64_t seed = 0;
  double ratio = 0.8;
  /// Training records kept per rare-flagged question when the corpus ships a ground truth.
  std::size_t rare_quota = 1;
  ExperimentConfig experiment;
  /// Continue from this checkpoint's parameters and split instead of a fresh start.
  std::optional<std::filesystem::path> resume;
  /// Per-epoch log; defaults to the checkpoint path with ".log" appended.
  std::optional<std::filesystem::path> log_file;
  LogLevel log_level = LogLevel::Info;
};

int cmd_train(const TrainOptions& options, std::ostream& out, std::ostream& err);

struct EvalOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path data;
  std::string protocol = "sweep";
  /// TSV table; a JSON twin is written next to it. Empty prints the table only.
  std::filesystem::path out;
  std::vector<double> ratios{0.6, 0.7, 0.8, 0.9};
  std::vector<std::size_t> caps{1, 2, 3, 4};
  /// Extra model kinds trained with the checkpoint's settings for comparison.
  std::vector<ModelKind> compare;
};

int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err);

struct DiagnoseOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path data;
  std::string student;
  /// Empty means every question the student answered.
  std::vector<std::string> questions;
  /// ".json" suffix selects JSON, anything else TSV. Empty writes TSV to `out`.
  std::filesystem::path out;
};

int cmd_diagnose(const DiagnoseOptions& options, std::ostream& out, std::ostream& err);

}  // namespace dirt
