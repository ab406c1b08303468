#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "dirt/corpus.hpp"
#include "dirt/model.hpp"

namespace dirt {

enum class Activation { Tanh, Identity };

/// Fully connected scalar regressor: two hidden layers, linear output.
/// Weights use the row-vector convention y = x W + b.
struct DnnWeights {
  Tensor w1, b1, w2, b2, w3, b3;
  Activation activation = Activation::Tanh;
};

/// Gate order inside the arrays: input, forget, output, cell.
struct LstmWeights {
  Tensor wx[4];  ///< [d0 x hidden]
  Tensor wh[4];  ///< [hidden x hidden]
  Tensor b[4];   ///< [hidden]
};

struct DirtConfig {
  std::size_t hidden = 50;   ///< LSTM state size
  std::size_t seq_len = 30;  ///< text steps N
  /// Hidden width of the scalar networks; 0 means the concept dimension.
  std::size_t dnn_width = 0;
  Activation activation = Activation::Tanh;
  /// Use 8 * sigmoid(z - 0.5) for discrimination instead of 8 * (sigmoid(z) - 0.5).
  bool literal_discrimination = false;
  /// Fine-tune the word vectors instead of keeping them frozen.
  bool train_embeddings = false;
  /// Keep concept embeddings, the latent-trait weights and the whole
  /// discrimination network non-negative. The latent trait is then
  /// non-decreasing in every proficiency and discrimination lies in [0, 4), so
  /// alpha has a fixed orientation: higher means more likely to answer correctly.
  bool monotone_proficiency = false;
  double alpha_init_scale = 0.1;
  std::uint64_t seed = 0;
};

struct DiagnosisResult {
  double theta = 0.0;
  double a = 0.0;
  double b = 0.0;
  double p = 0.0;
  /// (concept index, proficiency) for the question's concepts, in question order.
  std::vector<std::pair<int, double>> alpha_view;
  /// False when the student contributed no training records.
  bool seen = true;
};

/// Rows of W_k for the question's concepts, in question order.
Tensor embed_concepts(const Question& question, const Tensor& concept_embedding);

/// DNN_theta(sum_i alpha_i k_i); `alpha` is aligned with the rows of `concepts`.
double diagnose_latent_trait(std::span<const double> alpha, const Tensor& concepts, const DnnWeights& net);

/// 8 * (sigmoid(DNN_a(sum_i k_i)) - 0.5).
double diagnose_discrimination(const Tensor& concepts, const DnnWeights& net, bool literal = false);

/// Softmax relevance of word `w` to each concept row.
std::vector<double> attention_weights(std::span<const double> w, const Tensor& concepts);
/// sum_i softmax_i(w . k_i / sqrt(d0)) k_i + w.
std::vector<double> attention_step(std::span<const double> w, const Tensor& concepts);

/// Final hidden state after running the cell over the rows of `inputs` from
/// h0 = c0 = 0.
std::vector<double> lstm_forward(const Tensor& inputs, const LstmWeights& lstm);

/// 8 * (sigmoid(mean(h_N)) - 0.5) over the attention-fed text sequence of length `steps`.
double diagnose_difficulty(const Question& question, const EmbeddingTable& embeddings, const Tensor& concepts,
                           const LstmWeights& lstm, std::size_t steps);

/// Negative log-likelihood of one response, probability clamped by 1e-12.
double response_loss(double probability, int label);

/// DIRT and its ablation without the attention LSTM (ModelKind::DirtNa), which
/// reads difficulty off the mean word vector through a third scalar network.
class DirtModel : public Model {
 public:
  DirtModel(const Corpus& corpus, const DirtConfig& config, ModelKind kind = ModelKind::Dirt);

  ModelKind kind() const override { return kind_; }
  Var batch_loss(Graph& graph, std::span<const ResponseRecord> batch, const ForwardContext& context) override;
  std::vector<double> predict(std::span<const ResponseRecord> records) const override;
  void after_step() override;

  /// Throws std::out_of_range on unknown indices.
  DiagnosisResult diagnose(int student, int question) const;
  std::vector<DiagnosisResult> diagnose(std::span<const ResponseRecord> records) const;

  /// Full proficiency vector of a student.
  std::vector<double> proficiency(int student) const;

  const DirtConfig& config() const { return config_; }
  std::size_t concept_dim() const { return dim_; }
  std::size_t concept_count() const { return concepts_; }

  DnnWeights theta_net() const;
  DnnWeights discrimination_net() const;
  LstmWeights lstm() const;
  const Tensor& concept_embedding() const;
  const Tensor& word_embedding() const;

 private:
  /// Latent trait per record, [records].
  Var theta_path(Graph& graph, std::span<const ResponseRecord> records, const ForwardContext& context,
                 bool differentiable) const;
  /// Discrimination and difficulty per listed question, [questions] each.
  std::pair<Var, Var> question_path(Graph& graph, std::span<const int> questions, const ForwardContext& context,
                                    bool differentiable) const;
  /// (a, b) per listed question, computed in bounded-size chunks.
  std::pair<std::vector<double>, std::vector<double>> question_traits(std::span<const int> questions) const;
  std::vector<double> latent_traits(std::span<const ResponseRecord> records) const;

  ModelKind kind_;
  DirtConfig config_;
  std::size_t dim_ = 0;
  std::size_t concepts_ = 0;
  std::size_t students_ = 0;
  std::vector<std::vector<int>> question_concepts_;
  /// Embedding-table rows of each question's prepared text, seq_len entries.
  std::vector<std::vector<int>> question_words_;
  std::vector<std::size_t> question_lengths_;
  Tensor frozen_words_;
};

}  // namespace dirt
