#include "spanie/scorer.hpp"

#include "spanie/types.hpp"

namespace spanie {

using nn::Graph;
using nn::Var;

Ffnn Ffnn::create(nn::ParameterStore& store, const std::string& name,
                  int input_dim, int hidden_size, int hidden_layers,
                  int output_dim, std::mt19937_64& rng) {
  Ffnn f;
  int in = input_dim;
  for (int layer = 0; layer < hidden_layers; ++layer) {
    auto tag = name + ".h" + std::to_string(layer);
    nn::Parameter& w = store.add(tag + ".w", hidden_size, in);
    nn::init_glorot(w, rng);
    nn::Parameter& b = store.add(tag + ".b", hidden_size, 1);
    // small positive offset keeps rectified units from starting dead,
    // which would freeze their gradients at exactly zero
    b.value.setConstant(0.1);
    f.weights.push_back(&w);
    f.biases.push_back(&b);
    in = hidden_size;
  }
  nn::Parameter& w = store.add(name + ".out.w", output_dim, in);
  nn::init_glorot(w, rng);
  nn::Parameter& b = store.add(name + ".out.b", output_dim, 1);
  f.weights.push_back(&w);
  f.biases.push_back(&b);
  return f;
}

Var Ffnn::apply(Graph& g, Var x, double dropout_rate, bool training,
                std::mt19937_64* rng) const {
  if (training && dropout_rate > 0.0 && rng == nullptr) {
    throw Error("training-mode scoring requires an RNG");
  }
  Var h = x;
  const int layers = int(weights.size());
  for (int i = 0; i + 1 < layers; ++i) {
    h = g.relu(g.affine(*weights[i], h, *biases[i]));
    if (training && dropout_rate > 0.0) {
      h = g.dropout(h, dropout_rate, *rng);
    }
  }
  return g.affine(*weights[layers - 1], h, *biases[layers - 1]);
}

ScorerParams ScorerParams::create(nn::ParameterStore& store, const Config& cfg,
                                  int span_dim, std::mt19937_64& rng) {
  ScorerParams s;
  s.dropout = cfg.dropout_ffnn;
  const int hs = cfg.ffnn_size;
  const int hl = cfg.ffnn_layers;
  s.entity = Ffnn::create(store, "scorer.entity", span_dim, hs, hl,
                          kNumEntityTypes - 1, rng);
  s.mention_relation =
      Ffnn::create(store, "scorer.mention_relation", span_dim, hs, hl, 1, rng);
  s.mention_coref =
      Ffnn::create(store, "scorer.mention_coref", span_dim, hs, hl, 1, rng);
  s.relation_pair = Ffnn::create(store, "scorer.relation_pair", 3 * span_dim,
                                 hs, hl, kNumRelationTypes - 1, rng);
  s.coref_pair =
      Ffnn::create(store, "scorer.coref_pair", 3 * span_dim, hs, hl, 1, rng);
  return s;
}

Var pair_input(Graph& g, Var gi, Var gj) {
  return g.concat_rows({gi, gj, g.cmul(gi, gj)});
}

}  // namespace spanie
