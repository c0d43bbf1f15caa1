#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "spanie/config.hpp"
#include "spanie/corpus.hpp"
#include "spanie/encoder.hpp"
#include "spanie/nn.hpp"
#include "spanie/scorer.hpp"
#include "spanie/spanspace.hpp"

namespace spanie {

// Everything one document's forward pass produces. Score vectors are
// log-probabilities with the null label at index 0.
struct DocumentScores {
  SpanSpace space;
  Beam coref_beam;
  Beam relation_beam;

  std::vector<nn::Var> span_reps;           // per span position
  std::vector<nn::Var> entity_logprob;      // per span, size |entity labels|
  std::vector<double> mention_relation;     // unary beam-ranking values
  std::vector<double> mention_coref;

  std::vector<std::pair<int, int>> relation_pairs;  // ordered positions
  std::vector<nn::Var> relation_logprob;            // per pair

  // For the k-th coreference beam member, candidate antecedents are the
  // beam members at earlier document positions; entry j + 1 of the
  // distribution corresponds to coref_candidates[k][j].
  std::vector<std::vector<int>> coref_candidates;
  std::vector<nn::Var> coref_logprob;
};

// Optimizer and progress state carried alongside the parameters in a
// checkpoint so training can resume exactly.
struct TrainState {
  long step = 0;
  double best_dev_f1 = -1.0;
  bool has_optimizer = false;
  long adam_steps = 0;
  std::vector<nn::Matrix> adam_m;
  std::vector<nn::Matrix> adam_v;
};

class Model {
 public:
  static Model create(Config cfg, Vocabulary vocab, int context_dim);

  Model(Model&&) = default;
  Model& operator=(Model&&) = default;
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  DocumentScores forward(nn::Graph& g, const Document& doc,
                         const ContextStore* context, bool training = false,
                         std::mt19937_64* rng = nullptr) const;

  nn::ParameterStore& params() { return store_; }
  const nn::ParameterStore& params() const { return store_; }
  const Config& config() const { return cfg_; }
  const Vocabulary& vocabulary() const { return vocab_; }
  const EncoderParams& encoder() const { return enc_; }
  const ScorerParams& scorer() const { return scorer_; }
  int context_dim() const { return enc_.context_dim; }
  int span_dim() const { return enc_.span_dim; }

 private:
  Model() = default;

  Config cfg_;
  Vocabulary vocab_;
  nn::ParameterStore store_;
  EncoderParams enc_;
  ScorerParams scorer_;
};

void save_checkpoint(const std::string& path, const Model& model,
                     const TrainState* state);
Model load_checkpoint(const std::string& path, TrainState* state_out);

}  // namespace spanie
