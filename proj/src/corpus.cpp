#include "dirt/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <unordered_set>

#include "dirt/errors.hpp"
#include "dirt/random.hpp"

namespace dirt {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// EmbeddingTable

EmbeddingTable::EmbeddingTable(std::size_t dim, std::vector<long> tokens, std::vector<double> values)
    : dim_(dim), tokens_(std::move(tokens)) {
  if (dim_ == 0) throw DataError("embedding dimension must be positive");
  if (values.size() != tokens_.size() * dim_) {
    throw DataError("embedding table: " + std::to_string(values.size()) + " values for " +
                    std::to_string(tokens_.size()) + " tokens of dimension " + std::to_string(dim_));
  }
  std::vector<double> data(dim_, 0.0);
  data.insert(data.end(), values.begin(), values.end());
  matrix_ = Tensor({tokens_.size() + 1, dim_}, std::move(data));
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i] == kPaddingToken) throw DataError("embedding table: token id 0 is reserved for padding");
    if (!rows_.emplace(tokens_[i], static_cast<int>(i + 1)).second)
      throw DataError("embedding table: duplicate token id " + std::to_string(tokens_[i]));
  }
}

int EmbeddingTable::row_of(long token) const {
  auto it = rows_.find(token);
  return it == rows_.end() ? 0 : it->second;
}

// ---------------------------------------------------------------------------
// Corpus

Corpus::Corpus(std::vector<std::string> students, std::vector<KnowledgeConcept> concepts,
               std::vector<Question> questions, std::vector<ResponseRecord> records, EmbeddingTable embeddings)
    : students_(std::move(students)),
      concepts_(std::move(concepts)),
      questions_(std::move(questions)),
      records_(std::move(records)),
      embeddings_(std::move(embeddings)) {
  for (std::size_t i = 0; i < students_.size(); ++i)
    if (!student_index_.emplace(students_[i], static_cast<int>(i)).second)
      throw DataError("duplicate student id '" + students_[i] + "'");
  for (std::size_t i = 0; i < concepts_.size(); ++i) {
    if (concepts_[i].index != static_cast<int>(i)) throw DataError("concept indices must be 0..P-1 in order");
    if (!concept_index_.emplace(concepts_[i].id, static_cast<int>(i)).second)
      throw DataError("duplicate concept id '" + concepts_[i].id + "'");
  }
  for (std::size_t i = 0; i < questions_.size(); ++i) {
    const Question& q = questions_[i];
    if (!question_index_.emplace(q.id, static_cast<int>(i)).second)
      throw DataError("duplicate question id '" + q.id + "'");
    if (q.tokens.empty()) throw DataError("question '" + q.id + "' has no tokens");
    if (q.concepts.empty()) throw DataError("question '" + q.id + "' has no concepts");
    for (int c : q.concepts)
      if (c < 0 || static_cast<std::size_t>(c) >= concepts_.size())
        throw DataError("question '" + q.id + "' references concept index " + std::to_string(c));
  }
  for (const auto& r : records_) {
    if (r.student < 0 || static_cast<std::size_t>(r.student) >= students_.size() || r.question < 0 ||
        static_cast<std::size_t>(r.question) >= questions_.size())
      throw DataError("record references an unknown student or question index");
    if (r.score != 0 && r.score != 1) throw DataError("record score must be 0 or 1");
  }
}

namespace {

int lookup(const std::unordered_map<std::string, int>& map, std::string_view id) {
  auto it = map.find(std::string(id));
  return it == map.end() ? -1 : it->second;
}

}  // namespace

int Corpus::student_index(std::string_view id) const { return lookup(student_index_, id); }
int Corpus::question_index(std::string_view id) const { return lookup(question_index_, id); }
int Corpus::concept_index(std::string_view id) const { return lookup(concept_index_, id); }

// ---------------------------------------------------------------------------
// Parsing

namespace {

class LineReader {
 public:
  explicit LineReader(const fs::path& path) : path_(path), in_(path) {
    if (!in_) throw DataError("cannot open " + path.string());
  }

  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw DataError(path_.filename().string() + ":" + std::to_string(line_no_) + ": " + message);
  }

 private:
  fs::path path_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
};

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::vector<std::string_view> split_ws(std::string_view text) {
  std::vector<std::string_view> parts;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < text.size() && text[i] != ' ' && text[i] != '\t') ++i;
    if (i > start) parts.push_back(text.substr(start, i - start));
  }
  return parts;
}

template <class T>
bool parse_number(std::string_view text, T& out) {
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

bool valid_id(std::string_view id) {
  return !id.empty() && id.find_first_of("\t\n\r") == std::string_view::npos;
}

EmbeddingTable read_embeddings(const fs::path& path) {
  LineReader reader(path);
  std::string line;
  if (!reader.next(line)) reader.fail("missing header line 'vocab_size d0'");
  const auto header = split_ws(line);
  std::size_t vocab = 0, dim = 0;
  if (header.size() != 2 || !parse_number(header[0], vocab) || !parse_number(header[1], dim) || dim == 0)
    reader.fail("header must be 'vocab_size d0'");
  std::vector<long> tokens;
  std::vector<double> values;
  tokens.reserve(vocab);
  values.reserve(vocab * dim);
  while (reader.next(line)) {
    const auto fields = split_ws(line);
    long token = 0;
    if (fields.empty() || !parse_number(fields[0], token)) reader.fail("bad token id");
    if (fields.size() != dim + 1) {
      reader.fail("embedding dimension mismatch: expected " + std::to_string(dim) + " values, got " +
                  std::to_string(fields.size() - 1));
    }
    if (token == kPaddingToken) reader.fail("token id 0 is reserved for padding");
    for (std::size_t i = 1; i <= dim; ++i) {
      double v = 0.0;
      if (!parse_number(fields[i], v) || !std::isfinite(v)) reader.fail("bad embedding value '" + std::string(fields[i]) + "'");
      values.push_back(v);
    }
    tokens.push_back(token);
  }
  if (tokens.size() != vocab) {
    throw DataError(path.filename().string() + ": header declares " + std::to_string(vocab) + " tokens, found " +
                    std::to_string(tokens.size()));
  }
  try {
    return EmbeddingTable(dim, std::move(tokens), std::move(values));
  } catch (const DataError& e) {
    throw DataError(path.filename().string() + ": " + e.what());
  }
}

}  // namespace

Corpus load_corpus(const fs::path& questions_path, const fs::path& records_path, const fs::path& embeddings_path) {
  EmbeddingTable embeddings = read_embeddings(embeddings_path);

  std::vector<KnowledgeConcept> concepts;
  std::unordered_map<std::string, int> concept_index;
  std::vector<Question> questions;
  std::unordered_map<std::string, int> question_index;
  {
    LineReader reader(questions_path);
    std::string line;
    while (reader.next(line)) {
      const auto fields = split(line, '\t');
      if (fields.size() != 3) reader.fail("expected 'question_id<TAB>tokens<TAB>concepts'");
      Question q;
      if (!valid_id(fields[0])) reader.fail("empty question id");
      q.id = std::string(fields[0]);
      for (auto tok : split_ws(fields[1])) {
        long id = 0;
        if (!parse_number(tok, id)) reader.fail("bad token id '" + std::string(tok) + "'");
        q.tokens.push_back(id);
      }
      if (q.tokens.empty()) reader.fail("question '" + q.id + "' has no tokens");
      for (auto cid : split(fields[2], ',')) {
        if (cid.empty()) reader.fail("empty concept id in question '" + q.id + "'");
        const std::string key(cid);
        auto [it, inserted] = concept_index.emplace(key, static_cast<int>(concepts.size()));
        if (inserted) concepts.push_back(KnowledgeConcept{key, it->second});
        if (std::find(q.concepts.begin(), q.concepts.end(), it->second) != q.concepts.end())
          reader.fail("question '" + q.id + "' lists concept '" + key + "' twice");
        q.concepts.push_back(it->second);
      }
      if (!question_index.emplace(q.id, static_cast<int>(questions.size())).second)
        reader.fail("duplicate question id '" + q.id + "'");
      questions.push_back(std::move(q));
    }
  }

  std::vector<std::string> students;
  std::unordered_map<std::string, int> student_index;
  std::vector<ResponseRecord> records;
  {
    LineReader reader(records_path);
    std::string line;
    while (reader.next(line)) {
      const auto fields = split(line, '\t');
      if (fields.size() != 3) reader.fail("expected 'student_id<TAB>question_id<TAB>score'");
      if (!valid_id(fields[0])) reader.fail("empty student id");
      auto qit = question_index.find(std::string(fields[1]));
      if (qit == question_index.end()) reader.fail("unknown question '" + std::string(fields[1]) + "'");
      int score = 0;
      if (!parse_number(fields[2], score) || (score != 0 && score != 1))
        reader.fail("score must be 0 or 1, got '" + std::string(fields[2]) + "'");
      auto [sit, inserted] = student_index.emplace(std::string(fields[0]), static_cast<int>(students.size()));
      if (inserted) students.emplace_back(fields[0]);
      records.push_back(ResponseRecord{sit->second, qit->second, score});
    }
  }

  return Corpus(std::move(students), std::move(concepts), std::move(questions), std::move(records),
                std::move(embeddings));
}

Corpus load_corpus(const fs::path& directory) {
  return load_corpus(directory / CorpusFiles::questions, directory / CorpusFiles::records,
                     directory / CorpusFiles::embeddings);
}

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

}  // namespace

void write_corpus(const Corpus& corpus, const fs::path& directory) {
  fs::create_directories(directory);
  {
    auto out = open_out(directory / CorpusFiles::questions);
    for (const auto& q : corpus.questions()) {
      out << q.id << '\t';
      for (std::size_t i = 0; i < q.tokens.size(); ++i) out << (i ? " " : "") << q.tokens[i];
      out << '\t';
      for (std::size_t i = 0; i < q.concepts.size(); ++i) out << (i ? "," : "") << corpus.concepts()[q.concepts[i]].id;
      out << '\n';
    }
  }
  {
    auto out = open_out(directory / CorpusFiles::records);
    for (const auto& r : corpus.records())
      out << corpus.students()[r.student] << '\t' << corpus.questions()[r.question].id << '\t' << r.score << '\n';
  }
  {
    auto out = open_out(directory / CorpusFiles::embeddings);
    const auto& table = corpus.embeddings();
    out << table.vocab_size() << ' ' << table.dim() << '\n';
    char buf[32];
    for (long token : table.tokens()) {
      out << token;
      for (double v : table.vector(token)) {
        std::snprintf(buf, sizeof buf, " %.17g", v);
        out << buf;
      }
      out << '\n';
    }
  }
}

CorpusStats corpus_stats(const Corpus& corpus, std::size_t text_limit) {
  CorpusStats s;
  s.records = corpus.records().size();
  s.students = corpus.student_count();
  s.questions = corpus.question_count();
  s.concepts = corpus.concept_count();
  std::size_t within = 0, concepts = 0;
  for (const auto& q : corpus.questions()) {
    within += q.tokens.size() <= text_limit;
    concepts += q.concepts.size();
  }
  if (s.questions) {
    s.text_within_limit = static_cast<double>(within) / static_cast<double>(s.questions);
    s.concepts_per_question = static_cast<double>(concepts) / static_cast<double>(s.questions);
  }
  if (s.students) s.questions_per_student = static_cast<double>(s.records) / static_cast<double>(s.students);
  return s;
}

std::vector<long> prepare_tokens(const Question& question, std::size_t length) {
  if (length == 0) throw std::invalid_argument("prepare_tokens: length must be at least 1");
  std::vector<long> out(length, kPaddingToken);
  std::copy_n(question.tokens.begin(), std::min(length, question.tokens.size()), out.begin());
  return out;
}

// ---------------------------------------------------------------------------
// Splitting

namespace {

DatasetSplit split_impl(std::span<const ResponseRecord> records, double ratio, std::uint64_t seed,
                        const RareQuestionPlan* plan) {
  if (records.empty()) throw DataError("split_records: no records to split");
  if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("split_records: ratio must lie in (0, 1)");

  std::unordered_set<int> rare;
  if (plan) rare.insert(plan->questions.begin(), plan->questions.end());

  std::map<int, std::vector<std::size_t>> by_student;
  std::map<int, std::vector<std::size_t>> by_rare_question;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (rare.count(records[i].question)) by_rare_question[records[i].question].push_back(i);
    else by_student[records[i].student].push_back(i);
  }

  Rng rng(seed);
  std::vector<char> in_train(records.size(), 0);
  std::vector<std::pair<double, std::size_t>> ranked;
  std::size_t forced = 0, regular = 0;
  for (auto& [student, positions] : by_student) {
    shuffle(std::span(positions), rng);
    const double offset = uniform01(rng);
    in_train[positions[0]] = 1;
    ++forced;
    const std::size_t rest = positions.size() - 1;
    for (std::size_t j = 1; j < positions.size(); ++j)
      ranked.emplace_back((static_cast<double>(j - 1) + offset) / static_cast<double>(rest), positions[j]);
    regular += positions.size();
  }
  std::sort(ranked.begin(), ranked.end());
  const auto target = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(regular)));
  const std::size_t extra = target > forced ? std::min(target - forced, ranked.size()) : 0;
  for (std::size_t i = 0; i < extra; ++i) in_train[ranked[i].second] = 1;

  if (plan) {
    for (int q : plan->questions) {
      auto it = by_rare_question.find(q);
      if (it == by_rare_question.end()) continue;
      auto& positions = it->second;
      shuffle(std::span(positions), rng);
      for (std::size_t j = 0; j < std::min(plan->train_quota, positions.size()); ++j) in_train[positions[j]] = 1;
    }
  }

  DatasetSplit split;
  split.ratio = ratio;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (in_train[i]) {
      split.train.push_back(records[i]);
      split.train_index.push_back(i);
    } else {
      split.test.push_back(records[i]);
      split.test_index.push_back(i);
    }
  }
  return split;
}

}  // namespace

DatasetSplit split_records(std::span<const ResponseRecord> records, double ratio, std::uint64_t seed) {
  return split_impl(records, ratio, seed, nullptr);
}

DatasetSplit split_records(std::span<const ResponseRecord> records, double ratio, std::uint64_t seed,
                           const RareQuestionPlan& plan) {
  return split_impl(records, ratio, seed, &plan);
}

std::vector<ResponseRecord> rare_question_subset(const DatasetSplit& split, std::size_t max_occurrences) {
  if (max_occurrences == 0) throw std::invalid_argument("rare_question_subset: max_occurrences must be >= 1");
  std::unordered_map<int, std::size_t> seen;
  for (const auto& r : split.train) ++seen[r.question];
  std::vector<ResponseRecord> out;
  for (const auto& r : split.test) {
    auto it = seen.find(r.question);
    if (it != seen.end() && it->second <= max_occurrences) out.push_back(r);
  }
  return out;
}

}  // namespace dirt
