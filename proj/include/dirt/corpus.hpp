#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dirt/tensor.hpp"

namespace dirt {

/// Word id reserved for padding; it always maps to the zero vector.
inline constexpr long kPaddingToken = 0;

struct KnowledgeConcept {
  std::string id;
  int index = 0;

  friend bool operator==(const KnowledgeConcept&, const KnowledgeConcept&) = default;
};

struct Question {
  std::string id;
  std::vector<long> tokens;
  /// Distinct concept indices in file order.
  std::vector<int> concepts;

  friend bool operator==(const Question&, const Question&) = default;
};

/// One student-question interaction, with both sides resolved to corpus indices.
struct ResponseRecord {
  int student = 0;
  int question = 0;
  int score = 0;

  friend bool operator==(const ResponseRecord&, const ResponseRecord&) = default;
};

/// Pre-trained word vectors. Row 0 of matrix() is the zero vector shared by
/// padding and every token the table does not know.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  /// `values` holds tokens.size() rows of `dim` values.
  EmbeddingTable(std::size_t dim, std::vector<long> tokens, std::vector<double> values);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t vocab_size() const noexcept { return tokens_.size(); }
  const std::vector<long>& tokens() const noexcept { return tokens_; }

  int row_of(long token) const;
  std::span<const double> vector(long token) const { return matrix_.row(static_cast<std::size_t>(row_of(token))); }
  const Tensor& matrix() const noexcept { return matrix_; }

  friend bool operator==(const EmbeddingTable& a, const EmbeddingTable& b) {
    return a.dim_ == b.dim_ && a.tokens_ == b.tokens_ && a.matrix_ == b.matrix_;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<long> tokens_;
  std::unordered_map<long, int> rows_;
  Tensor matrix_;
};

/// Cross-referenced students, questions, concepts, responses and word vectors.
/// Immutable after construction.
class Corpus {
 public:
  Corpus() = default;
  Corpus(std::vector<std::string> students, std::vector<KnowledgeConcept> concepts,
         std::vector<Question> questions, std::vector<ResponseRecord> records, EmbeddingTable embeddings);

  const std::vector<std::string>& students() const noexcept { return students_; }
  const std::vector<KnowledgeConcept>& concepts() const noexcept { return concepts_; }
  const std::vector<Question>& questions() const noexcept { return questions_; }
  const std::vector<ResponseRecord>& records() const noexcept { return records_; }
  const EmbeddingTable& embeddings() const noexcept { return embeddings_; }

  std::size_t student_count() const noexcept { return students_.size(); }
  std::size_t question_count() const noexcept { return questions_.size(); }
  std::size_t concept_count() const noexcept { return concepts_.size(); }

  /// -1 when the id is unknown.
  int student_index(std::string_view id) const;
  int question_index(std::string_view id) const;
  int concept_index(std::string_view id) const;

  friend bool operator==(const Corpus& a, const Corpus& b) {
    return a.students_ == b.students_ && a.concepts_ == b.concepts_ && a.questions_ == b.questions_ &&
           a.records_ == b.records_ && a.embeddings_ == b.embeddings_;
  }

 private:
  std::vector<std::string> students_;
  std::vector<KnowledgeConcept> concepts_;
  std::vector<Question> questions_;
  std::vector<ResponseRecord> records_;
  EmbeddingTable embeddings_;
  std::unordered_map<std::string, int> student_index_;
  std::unordered_map<std::string, int> question_index_;
  std::unordered_map<std::string, int> concept_index_;
};

/// Canonical file names inside a corpus directory.
struct CorpusFiles {
  static constexpr const char* questions = "questions.tsv";
  static constexpr const char* records = "records.tsv";
  static constexpr const char* embeddings = "embeddings.txt";
};

/// Parses the three corpus files. Students are indexed by first appearance in
/// the records file, concepts by first appearance in the questions file.
/// Throws DataError naming file and line on any malformed or dangling entry.
Corpus load_corpus(const std::filesystem::path& questions_path, const std::filesystem::path& records_path,
                   const std::filesystem::path& embeddings_path);
Corpus load_corpus(const std::filesystem::path& directory);

void write_corpus(const Corpus& corpus, const std::filesystem::path& directory);

/// The dataset statistics table: entity counts plus text and concept shape.
struct CorpusStats {
  std::size_t records = 0;
  std::size_t students = 0;
  std::size_t questions = 0;
  std::size_t concepts = 0;
  double text_within_limit = 0.0;  ///< fraction of questions with at most `limit` tokens
  double questions_per_student = 0.0;
  double concepts_per_question = 0.0;
};

CorpusStats corpus_stats(const Corpus& corpus, std::size_t text_limit = 30);

/// Exactly `length` token ids: the prefix of the text, padded with kPaddingToken.
std::vector<long> prepare_tokens(const Question& question, std::size_t length);

struct DatasetSplit {
  std::vector<ResponseRecord> train;
  std::vector<ResponseRecord> test;
  double ratio = 0.0;
  /// Positions of train/test records in the input list, ascending.
  std::vector<std::size_t> train_index;
  std::vector<std::size_t> test_index;
};

/// Per-student stratified shuffle split. Each student's first shuffled record
/// is always kept for training; the remaining records are ranked by a key that
/// spreads every student's records evenly over [0, 1), and the lowest-ranked
/// round(ratio * n) records overall form the training set. For a fixed seed the
/// ranking does not depend on the ratio, so training sets are nested.
DatasetSplit split_records(std::span<const ResponseRecord> records, double ratio, std::uint64_t seed);

/// Questions whose training presence is capped by construction.
struct RareQuestionPlan {
  std::vector<int> questions;
  std::size_t train_quota = 1;
};

/// As above, except records of the planned questions bypass the ratio: for each
/// such question, `train_quota` records (seeded choice) go to training and the
/// rest to test.
DatasetSplit split_records(std::span<const ResponseRecord> records, double ratio, std::uint64_t seed,
                           const RareQuestionPlan& plan);

/// Test records whose question occurs between 1 and `max_occurrences` times in
/// the training set.
std::vector<ResponseRecord> rare_question_subset(const DatasetSplit& split, std::size_t max_occurrences);

}  // namespace dirt
