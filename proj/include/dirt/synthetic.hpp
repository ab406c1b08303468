#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dirt/corpus.hpp"

// Synthetic corpora with known generating parameters. Every concept owns a
// disjoint topic vocabulary whose word vectors cluster around a concept
// centroid, so question text carries concept information.

namespace dirt {

enum class GeneratorMode {
  /// Responses follow the logistic model with one trait per student.
  Irt,
  /// The trait for a (student, question) pair is 6 * mean(alpha over the
  /// question's concepts) - 3, with alpha in [0, 1] per student and concept.
  ConceptIrt,
};

std::string_view to_string(GeneratorMode mode);
GeneratorMode parse_generator_mode(std::string_view name);

struct GenConfig {
  std::size_t students = 500;
  std::size_t questions = 2000;
  std::size_t concepts = 50;
  std::size_t vocab_size = 2000;
  std::size_t dim = 50;
  double mean_records = 62.09;
  std::size_t min_records = 15;
  double mean_concepts = 1.49;
  std::size_t max_concepts = 4;
  double text_mean = 19.0;
  double text_sd = 7.4;
  std::size_t text_min = 3;
  std::size_t text_max = 60;
  /// Probability that a text token comes from one of the question's topic vocabularies.
  double topic_share = 0.6;
  GeneratorMode mode = GeneratorMode::ConceptIrt;
  /// Questions answered by exactly `rare_records` random students and flagged
  /// rare in the ground truth.
  std::size_t rare_questions = 0;
  std::size_t rare_records = 10;
  /// Concept-irt only: each student draws most records from questions on a
  /// small set of focus concepts.
  std::size_t focus_concepts = 5;
  double focus_share = 0.95;
  /// Concept-irt only: alpha = sigmoid(g + u) with a per-student general
  /// level g ~ N(0, ability_sd) and per-concept deviations u ~ N(0, concept_sd).
  double ability_sd = 0.5;
  double concept_sd = 1.5;
  double difficulty_noise = 0.25;
  std::uint64_t seed = 0;
};

struct TrueQuestion {
  std::string id;
  double a = 0.0;
  double b = 0.0;
  /// Generator concept order, i.e. indices into GroundTruth::concept_ids.
  std::vector<int> concepts;
  bool rare = false;

  friend bool operator==(const TrueQuestion&, const TrueQuestion&) = default;
};

struct GroundTruth {
  GeneratorMode mode = GeneratorMode::ConceptIrt;
  std::vector<std::string> concept_ids;
  std::vector<double> concept_difficulty;
  std::vector<double> concept_discrimination;
  std::vector<TrueQuestion> questions;
  std::vector<std::string> student_ids;
  /// Irt mode: one trait per student.
  std::vector<double> theta;
  /// Concept-irt mode: students x concepts, generator concept order.
  std::vector<std::vector<double>> alpha;

  /// -1 when unknown.
  int student_index(std::string_view id) const;
  int question_index(std::string_view id) const;
  int concept_index(std::string_view id) const;
  /// Rebuilds the id lookups; call after filling the vectors by hand.
  void reindex();

  friend bool operator==(const GroundTruth& a, const GroundTruth& b);

 private:
  std::unordered_map<std::string, int> students_, questions_, concepts_;
};

struct GeneratedData {
  Corpus corpus;
  GroundTruth truth;
};

inline constexpr const char* kGroundTruthFile = "ground_truth.tsv";

/// Throws std::invalid_argument on an inconsistent config.
GeneratedData generate(const GenConfig& config);

/// The three corpus files plus the ground-truth file.
void write_generated(const GeneratedData& data, const std::filesystem::path& directory);
void write_ground_truth(const GroundTruth& truth, const std::filesystem::path& path);
/// Throws DataError naming file and line on malformed input.
GroundTruth load_ground_truth(const std::filesystem::path& path);

/// Trait the generator used for this pair.
double oracle_theta(const GroundTruth& truth, int student, int question);
/// Generating probability of a correct answer. Throws std::out_of_range on unknown ids.
double oracle_predict(const GroundTruth& truth, std::string_view student, std::string_view question);

/// Rare-flagged questions as corpus indices, for the rare-question split.
RareQuestionPlan rare_question_plan(const GroundTruth& truth, const Corpus& corpus, std::size_t train_quota = 1);

/// Ratio r of a count on {0, ..., limit} with P(k) proportional to r^k and the
/// given mean. r < 1 is a truncated geometric law; r > 1 tilts mass upward
/// when the mean exceeds limit / 2.
double truncated_geometric_ratio(double mean, std::size_t limit);

}  // namespace dirt
