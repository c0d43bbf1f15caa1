#pragma once

#include <random>
#include <string>
#include <vector>

#include "spanie/config.hpp"
#include "spanie/nn.hpp"

namespace spanie {

// Fully connected stack: ReLU hidden layers followed by a linear output.
// Dropout applies to hidden activations only, and only in training mode.
struct Ffnn {
  std::vector<nn::Parameter*> weights;
  std::vector<nn::Parameter*> biases;

  static Ffnn create(nn::ParameterStore& store, const std::string& name,
                     int input_dim, int hidden_size, int hidden_layers,
                     int output_dim, std::mt19937_64& rng);

  nn::Var apply(nn::Graph& g, nn::Var x, double dropout_rate, bool training,
                std::mt19937_64* rng) const;
};

// Score heads shared across a document. Unary heads read a single span
// representation; pairwise heads read [g_i; g_j; g_i * g_j]. The null
// label of every task is score zero and is not produced by any head.
struct ScorerParams {
  Ffnn entity;            // span_dim -> per-type entity scores
  Ffnn mention_relation;  // span_dim -> scalar, ranks the relation beam
  Ffnn mention_coref;     // span_dim -> scalar, ranks the coreference beam
  Ffnn relation_pair;     // 3*span_dim -> per-type relation scores
  Ffnn coref_pair;        // 3*span_dim -> scalar antecedent compatibility

  double dropout = 0.0;

  static ScorerParams create(nn::ParameterStore& store, const Config& cfg,
                             int span_dim, std::mt19937_64& rng);
};

struct ScoreMode {
  bool training = false;
  std::mt19937_64* rng = nullptr;
};

nn::Var pair_input(nn::Graph& g, nn::Var gi, nn::Var gj);

}  // namespace spanie
