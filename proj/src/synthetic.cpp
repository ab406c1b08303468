#include "dirt/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "dirt/classical.hpp"
#include "dirt/errors.hpp"
#include "dirt/random.hpp"

namespace dirt {

namespace fs = std::filesystem;

std::string_view to_string(GeneratorMode mode) { return mode == GeneratorMode::Irt ? "irt" : "concept-irt"; }

GeneratorMode parse_generator_mode(std::string_view name) {
  if (name == "irt") return GeneratorMode::Irt;
  if (name == "concept-irt") return GeneratorMode::ConceptIrt;
  throw std::invalid_argument("unknown generator mode '" + std::string(name) + "' (expected irt or concept-irt)");
}

int GroundTruth::student_index(std::string_view id) const {
  auto it = students_.find(std::string(id));
  return it == students_.end() ? -1 : it->second;
}

int GroundTruth::question_index(std::string_view id) const {
  auto it = questions_.find(std::string(id));
  return it == questions_.end() ? -1 : it->second;
}

int GroundTruth::concept_index(std::string_view id) const {
  auto it = concepts_.find(std::string(id));
  return it == concepts_.end() ? -1 : it->second;
}

void GroundTruth::reindex() {
  students_.clear();
  questions_.clear();
  concepts_.clear();
  for (std::size_t i = 0; i < student_ids.size(); ++i) students_.emplace(student_ids[i], static_cast<int>(i));
  for (std::size_t i = 0; i < questions.size(); ++i) questions_.emplace(questions[i].id, static_cast<int>(i));
  for (std::size_t i = 0; i < concept_ids.size(); ++i) concepts_.emplace(concept_ids[i], static_cast<int>(i));
}

bool operator==(const GroundTruth& a, const GroundTruth& b) {
  return a.mode == b.mode && a.concept_ids == b.concept_ids && a.concept_difficulty == b.concept_difficulty &&
         a.concept_discrimination == b.concept_discrimination && a.questions == b.questions &&
         a.student_ids == b.student_ids && a.theta == b.theta && a.alpha == b.alpha;
}

double truncated_geometric_ratio(double mean, std::size_t limit) {
  if (limit == 0 || mean <= 0.0) return 0.0;
  if (mean >= static_cast<double>(limit)) throw std::invalid_argument("truncated geometric: mean must be below the limit");
  auto mean_of = [limit](double log_r) {
    // Weights r^k, normalized against the largest term to avoid overflow.
    const double top = log_r > 0.0 ? log_r * static_cast<double>(limit) : 0.0;
    double total = 0.0, weighted = 0.0;
    for (std::size_t k = 0; k <= limit; ++k) {
      const double w = std::exp(log_r * static_cast<double>(k) - top);
      total += w;
      weighted += w * static_cast<double>(k);
    }
    return weighted / total;
  };
  double lo = -40.0, hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mean_of(mid) < mean ? lo : hi) = mid;
  }
  return std::exp(0.5 * (lo + hi));
}

namespace {

void check_config(const GenConfig& c) {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("generator config: " + msg); };
  if (c.students == 0 || c.questions == 0 || c.concepts == 0 || c.vocab_size == 0 || c.dim == 0)
    fail("students, questions, concepts, vocab-size and dim must all be at least 1");
  if (c.max_concepts == 0) fail("max-concepts must be at least 1");
  if (c.mean_concepts < 1.0) fail("mean-concepts must be at least 1");
  if (c.mean_concepts > static_cast<double>(std::min(c.max_concepts, c.concepts)))
    fail("mean-concepts exceeds the concepts available per question");
  if (c.vocab_size < c.concepts) fail("vocab-size must give every concept at least one topic word");
  if (c.rare_questions >= c.questions) fail("rare-questions must leave at least one regular question");
  if (c.rare_questions > 0 && (c.rare_records == 0 || c.rare_records > c.students))
    fail("rare-records must lie in [1, students]");
  if (c.text_min == 0 || c.text_min > c.text_max) fail("text length bounds must satisfy 1 <= min <= max");
  if (!(c.mean_records >= 1.0)) fail("mean-records must be at least 1");
  if (!(c.topic_share >= 0.0 && c.topic_share <= 1.0) || !(c.focus_share >= 0.0 && c.focus_share <= 1.0))
    fail("shares must lie in [0, 1]");
  if (c.text_sd < 0.0 || c.ability_sd < 0.0 || c.concept_sd < 0.0 || c.difficulty_noise < 0.0)
    fail("spreads must be non-negative");
}

std::size_t poisson(Rng& rng, double lambda) {
  const double limit = std::exp(-lambda);
  std::size_t k = 0;
  double product = uniform01(rng);
  while (product > limit) {
    ++k;
    product *= uniform01(rng);
  }
  return k;
}

/// Sampler for counts on {0, ..., limit} with P(k) proportional to r^k.
class CountSampler {
 public:
  CountSampler(double mean, std::size_t limit) : cdf_(limit + 1, 1.0) {
    if (limit == 0 || mean <= 0.0) {
      cdf_.assign(1, 1.0);
      return;
    }
    const double r = truncated_geometric_ratio(std::min(mean, static_cast<double>(limit) - 1e-9), limit);
    const double log_r = std::log(r);
    const double top = log_r > 0.0 ? log_r * static_cast<double>(limit) : 0.0;
    double total = 0.0;
    for (std::size_t k = 0; k <= limit; ++k) total += std::exp(log_r * static_cast<double>(k) - top);
    double acc = 0.0;
    for (std::size_t k = 0; k <= limit; ++k) {
      acc += std::exp(log_r * static_cast<double>(k) - top) / total;
      cdf_[k] = acc;
    }
    cdf_.back() = 1.0;
  }

  std::size_t operator()(Rng& rng) const {
    const double u = uniform01(rng);
    return static_cast<std::size_t>(std::upper_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin());
  }

 private:
  std::vector<double> cdf_;
};

std::string format(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

double oracle_theta(const GroundTruth& truth, int student, int question) {
  if (student < 0 || static_cast<std::size_t>(student) >= truth.student_ids.size() || question < 0 ||
      static_cast<std::size_t>(question) >= truth.questions.size())
    throw std::out_of_range("oracle: index out of range");
  if (truth.mode == GeneratorMode::Irt) return truth.theta[student];
  const auto& q = truth.questions[question];
  double total = 0.0;
  for (int c : q.concepts) total += truth.alpha[student][c];
  return 6.0 * total / static_cast<double>(q.concepts.size()) - 3.0;
}

double oracle_predict(const GroundTruth& truth, std::string_view student, std::string_view question) {
  const int s = truth.student_index(student);
  const int q = truth.question_index(question);
  if (s < 0) throw std::out_of_range("oracle: unknown student '" + std::string(student) + "'");
  if (q < 0) throw std::out_of_range("oracle: unknown question '" + std::string(question) + "'");
  const auto& tq = truth.questions[q];
  return irt_predict(oracle_theta(truth, s, q), tq.a, tq.b);
}

GeneratedData generate(const GenConfig& config) {
  check_config(config);
  Rng rng(config.seed);
  const std::size_t P = config.concepts;
  const std::size_t Q = config.questions;
  const std::size_t L = config.students;
  const bool concept_mode = config.mode == GeneratorMode::ConceptIrt;

  GroundTruth truth;
  truth.mode = config.mode;
  for (std::size_t c = 0; c < P; ++c) {
    truth.concept_ids.push_back("k" + std::to_string(c));
    truth.concept_difficulty.push_back(std::clamp(standard_normal(rng), -2.5, 2.5));
    truth.concept_discrimination.push_back(uniform(rng, 0.6, 1.6));
  }

  // Vocabulary: a topic block per concept, the rest shared.
  const std::size_t topic_size = std::max<std::size_t>(1, config.vocab_size * 4 / 5 / P);
  const std::size_t common_size = config.vocab_size - topic_size * P;
  auto topic_word = [&](std::size_t c, std::size_t i) { return static_cast<long>(1 + c * topic_size + i); };
  auto common_word = [&](std::size_t i) { return static_cast<long>(1 + P * topic_size + i); };

  const std::size_t d = config.dim;
  std::vector<double> centroids(P * d);
  for (auto& v : centroids) v = 0.5 * standard_normal(rng);
  std::vector<long> tokens(config.vocab_size);
  std::iota(tokens.begin(), tokens.end(), 1L);
  std::vector<double> vectors(config.vocab_size * d);
  for (std::size_t c = 0; c < P; ++c)
    for (std::size_t i = 0; i < topic_size; ++i) {
      double* row = vectors.data() + static_cast<std::size_t>(topic_word(c, i) - 1) * d;
      for (std::size_t j = 0; j < d; ++j) row[j] = centroids[c * d + j] + 0.15 * standard_normal(rng);
    }
  for (std::size_t i = 0; i < common_size; ++i) {
    double* row = vectors.data() + static_cast<std::size_t>(common_word(i) - 1) * d;
    for (std::size_t j = 0; j < d; ++j) row[j] = 0.5 * standard_normal(rng);
  }

  // Questions.
  const std::size_t max_v = std::min(config.max_concepts, P);
  std::vector<std::vector<long>> texts(Q);
  std::vector<int> concept_order(P);
  std::iota(concept_order.begin(), concept_order.end(), 0);
  for (std::size_t q = 0; q < Q; ++q) {
    TrueQuestion tq;
    tq.id = "q" + std::to_string(q);
    tq.rare = q >= Q - config.rare_questions;
    const std::size_t v = std::min(max_v, 1 + poisson(rng, config.mean_concepts - 1.0));
    // Partial shuffle picks v distinct concepts.
    for (std::size_t i = 0; i < v; ++i) {
      const std::size_t j = i + uniform_index(rng, P - i);
      std::swap(concept_order[i], concept_order[j]);
      tq.concepts.push_back(concept_order[i]);
    }
    if (concept_mode) {
      double diff = 0.0, disc = 0.0;
      for (int c : tq.concepts) {
        diff += truth.concept_difficulty[c];
        disc += truth.concept_discrimination[c];
      }
      tq.a = disc / static_cast<double>(v);
      tq.b = std::clamp(diff / static_cast<double>(v) + config.difficulty_noise * standard_normal(rng), -3.5, 3.5);
    } else {
      tq.a = uniform(rng, 0.5, 2.0);
      tq.b = std::clamp(standard_normal(rng), -3.0, 3.0);
    }
    const double raw_length = std::round(config.text_mean + config.text_sd * standard_normal(rng));
    const auto length = static_cast<std::size_t>(
        std::clamp(raw_length, static_cast<double>(config.text_min), static_cast<double>(config.text_max)));
    for (std::size_t t = 0; t < length; ++t) {
      if (common_size == 0 || uniform01(rng) < config.topic_share) {
        const std::size_t c = static_cast<std::size_t>(tq.concepts[uniform_index(rng, v)]);
        texts[q].push_back(topic_word(c, uniform_index(rng, topic_size)));
      } else {
        texts[q].push_back(common_word(uniform_index(rng, common_size)));
      }
    }
    truth.questions.push_back(std::move(tq));
  }

  // Students.
  for (std::size_t s = 0; s < L; ++s) {
    truth.student_ids.push_back("s" + std::to_string(s));
    if (concept_mode) {
      const double general = config.ability_sd * standard_normal(rng);
      std::vector<double> alpha(P);
      for (auto& a : alpha) a = stable_sigmoid(general + config.concept_sd * standard_normal(rng));
      truth.alpha.push_back(std::move(alpha));
    } else {
      truth.theta.push_back(standard_normal(rng));
    }
  }

  // Which questions each student answers.
  const std::size_t regular = Q - config.rare_questions;
  std::vector<std::vector<int>> by_concept(P);
  for (std::size_t q = 0; q < regular; ++q)
    for (int c : truth.questions[q].concepts) by_concept[c].push_back(static_cast<int>(q));
  const std::size_t min_records = std::min(config.min_records, regular);
  const CountSampler extra(config.mean_records - static_cast<double>(min_records), regular - min_records);

  std::vector<std::vector<int>> answered(L);
  std::vector<char> used(Q), in_pool(Q);
  for (std::size_t s = 0; s < L; ++s) {
    const std::size_t n = min_records + extra(rng);
    std::fill(used.begin(), used.end(), 0);
    std::vector<int> pool;
    if (concept_mode && config.focus_concepts > 0 && config.focus_share > 0.0) {
      std::fill(in_pool.begin(), in_pool.end(), 0);
      for (std::size_t i = 0; i < std::min(config.focus_concepts, P); ++i) {
        const std::size_t j = i + uniform_index(rng, P - i);
        std::swap(concept_order[i], concept_order[j]);
        for (int q : by_concept[concept_order[i]])
          if (!in_pool[q]) {
            in_pool[q] = 1;
            pool.push_back(q);
          }
      }
      std::sort(pool.begin(), pool.end());
    }
    std::size_t pool_left = pool.size();
    for (std::size_t k = 0; k < n; ++k) {
      int q;
      if (pool_left > 0 && uniform01(rng) < config.focus_share) {
        do q = pool[uniform_index(rng, pool.size())];
        while (used[q]);
      } else {
        do q = static_cast<int>(uniform_index(rng, regular));
        while (used[q]);
      }
      used[q] = 1;
      if (!pool.empty() && in_pool[q]) --pool_left;
      answered[s].push_back(q);
    }
  }
  std::vector<int> everyone(L);
  for (std::size_t q = regular; q < Q; ++q) {
    std::iota(everyone.begin(), everyone.end(), 0);
    for (std::size_t i = 0; i < config.rare_records; ++i) {
      const std::size_t j = i + uniform_index(rng, L - i);
      std::swap(everyone[i], everyone[j]);
      answered[everyone[i]].push_back(static_cast<int>(q));
    }
  }

  // Corpus in loader order: concepts indexed by first appearance in the questions file.
  std::vector<int> corpus_concept(P, -1);
  std::vector<KnowledgeConcept> concepts;
  std::vector<Question> questions;
  for (std::size_t q = 0; q < Q; ++q) {
    Question question{truth.questions[q].id, texts[q], {}};
    for (int c : truth.questions[q].concepts) {
      if (corpus_concept[c] < 0) {
        corpus_concept[c] = static_cast<int>(concepts.size());
        concepts.push_back({truth.concept_ids[c], corpus_concept[c]});
      }
      question.concepts.push_back(corpus_concept[c]);
    }
    questions.push_back(std::move(question));
  }
  std::vector<ResponseRecord> records;
  for (std::size_t s = 0; s < L; ++s)
    for (int q : answered[s]) {
      const auto& tq = truth.questions[q];
      const double p = irt_predict(oracle_theta(truth, static_cast<int>(s), q), tq.a, tq.b);
      records.push_back({static_cast<int>(s), q, uniform01(rng) < p ? 1 : 0});
    }

  truth.reindex();
  GeneratedData out{Corpus(truth.student_ids, std::move(concepts), std::move(questions), std::move(records),
                           EmbeddingTable(d, std::move(tokens), std::move(vectors))),
                    std::move(truth)};
  return out;
}

void write_ground_truth(const GroundTruth& truth, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "mode\t" << to_string(truth.mode) << '\n';
  for (std::size_t c = 0; c < truth.concept_ids.size(); ++c)
    out << "concept\t" << truth.concept_ids[c] << '\t' << format(truth.concept_difficulty[c]) << '\t'
        << format(truth.concept_discrimination[c]) << '\n';
  for (const auto& q : truth.questions) {
    out << "question\t" << q.id << '\t' << format(q.a) << '\t' << format(q.b) << '\t';
    for (std::size_t i = 0; i < q.concepts.size(); ++i) out << (i ? "," : "") << truth.concept_ids[q.concepts[i]];
    if (q.rare) out << "\trare";
    out << '\n';
  }
  for (std::size_t s = 0; s < truth.student_ids.size(); ++s) {
    out << "student\t" << truth.student_ids[s];
    if (truth.mode == GeneratorMode::Irt) {
      out << '\t' << format(truth.theta[s]);
    } else {
      for (double a : truth.alpha[s]) out << '\t' << format(a);
    }
    out << '\n';
  }
  if (!out) throw DataError("failed writing " + path.string());
}

GroundTruth load_ground_truth(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  GroundTruth truth;
  std::string line;
  std::size_t line_no = 0;
  bool have_mode = false;
  auto fail = [&](const std::string& msg) -> void {
    throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + msg);
  };
  auto number = [&](const std::string& text) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != text.size() || text.empty()) fail("bad number '" + text + "'");
    return v;
  };
  std::unordered_map<std::string, int> concept_lookup;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string part; std::getline(ss, part, '\t');) f.push_back(part);
    if (f[0] == "mode") {
      if (f.size() != 2) fail("expected 'mode<TAB>name'");
      try {
        truth.mode = parse_generator_mode(f[1]);
      } catch (const std::invalid_argument& e) {
        fail(e.what());
      }
      have_mode = true;
    } else if (f[0] == "concept") {
      if (f.size() != 4) fail("expected 'concept<TAB>id<TAB>difficulty<TAB>discrimination'");
      concept_lookup.emplace(f[1], static_cast<int>(truth.concept_ids.size()));
      truth.concept_ids.push_back(f[1]);
      truth.concept_difficulty.push_back(number(f[2]));
      truth.concept_discrimination.push_back(number(f[3]));
    } else if (f[0] == "question") {
      if (f.size() != 5 && !(f.size() == 6 && f[5] == "rare")) fail("expected 'question<TAB>id<TAB>a<TAB>b<TAB>concepts[<TAB>rare]'");
      TrueQuestion q{f[1], number(f[2]), number(f[3]), {}, f.size() == 6};
      std::stringstream cs(f[4]);
      for (std::string id; std::getline(cs, id, ',');) {
        auto it = concept_lookup.find(id);
        if (it == concept_lookup.end()) fail("unknown concept '" + id + "'");
        q.concepts.push_back(it->second);
      }
      if (q.concepts.empty()) fail("question without concepts");
      truth.questions.push_back(std::move(q));
    } else if (f[0] == "student") {
      if (!have_mode) fail("student line before the mode line");
      truth.student_ids.push_back(f.size() > 1 ? f[1] : "");
      if (truth.mode == GeneratorMode::Irt) {
        if (f.size() != 3) fail("expected 'student<TAB>id<TAB>theta'");
        truth.theta.push_back(number(f[2]));
      } else {
        if (f.size() != 2 + truth.concept_ids.size()) fail("expected one alpha per concept");
        std::vector<double> alpha;
        for (std::size_t i = 2; i < f.size(); ++i) alpha.push_back(number(f[i]));
        truth.alpha.push_back(std::move(alpha));
      }
    } else {
      fail("unknown line kind '" + f[0] + "'");
    }
  }
  if (!have_mode) throw DataError(path.string() + ": missing mode line");
  truth.reindex();
  return truth;
}

void write_generated(const GeneratedData& data, const fs::path& directory) {
  write_corpus(data.corpus, directory);
  write_ground_truth(data.truth, directory / kGroundTruthFile);
}

RareQuestionPlan rare_question_plan(const GroundTruth& truth, const Corpus& corpus, std::size_t train_quota) {
  RareQuestionPlan plan;
  plan.train_quota = train_quota;
  for (const auto& q : truth.questions) {
    if (!q.rare) continue;
    const int index = corpus.question_index(q.id);
    if (index >= 0) plan.questions.push_back(index);
  }
  return plan;
}

}  // namespace dirt
