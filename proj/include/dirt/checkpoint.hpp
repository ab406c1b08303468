#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dirt/corpus.hpp"
#include "dirt/dirt_model.hpp"
#include "dirt/model.hpp"

// Checkpoint layout: a plain-text header
//
//   DIRT-CHECKPOINT
//   format-version 1
//   model-kind <kind>
//   dims d0=<n> d1=<n> N=<n> hidden=<n> P=<n>
//   meta <key> <value>            (any number)
//   students <count>  then one id per line
//   questions <count> then one id per line
//   tensor <name> <rank> <extents...>   (any number)
//   end-header
//
// followed by the tensors' values as little-endian IEEE doubles, in header order.

namespace dirt {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  int format_version = kCheckpointVersion;
  ModelKind kind = ModelKind::Dirt;
  std::size_t d0 = 0;
  std::size_t d1 = 0;
  std::size_t seq_len = 0;
  std::size_t hidden = 0;
  std::size_t concepts = 0;
  /// Training seed, split and config echo. Keys and values contain no whitespace.
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> students;
  std::vector<std::string> questions;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const std::string* find_meta(std::string_view key) const;
  std::string meta_or(std::string_view key, std::string fallback) const;
  /// Replaces an existing key in place or appends it.
  void set_meta(std::string key, std::string value);

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

/// Shortest text that parses back to exactly `value`.
std::string format_exact(double value);
double parse_exact(std::string_view text);

/// Snapshot of every model tensor, the corpus ids and, for DIRT models, the
/// architecture settings as `dirt.*` meta keys.
Checkpoint make_checkpoint(const Model& model, const Corpus& corpus);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
/// Throws DataError on malformed files and on a format version other than the current one.
Checkpoint load_checkpoint(const std::filesystem::path& path);

void put_dirt_config(Checkpoint& checkpoint, const DirtConfig& config);
DirtConfig get_dirt_config(const Checkpoint& checkpoint);

/// Rebuilds the model on `corpus` and copies the stored tensors in. Throws
/// DataError when the corpus ids or tensor shapes disagree with the checkpoint.
std::unique_ptr<Model> restore_model(const Checkpoint& checkpoint, const Corpus& corpus);

}  // namespace dirt
