#include <doctest.h>

#include <random>

#include "spanie/scorer.hpp"

using namespace spanie;

TEST_CASE("feedforward stacks produce the requested output shape") {
  nn::ParameterStore store;
  std::mt19937_64 rng(31);
  Ffnn net = Ffnn::create(store, "probe", 6, 10, 2, 3, rng);
  CHECK(net.weights.size() == 3);  // two hidden + output
  CHECK(net.weights[0]->value.rows() == 10);
  CHECK(net.weights[0]->value.cols() == 6);
  CHECK(net.weights[1]->value.cols() == 10);
  CHECK(net.weights[2]->value.rows() == 3);

  nn::Graph g;
  nn::Var x = g.constant(nn::Matrix::Random(6, 1));
  nn::Var y = net.apply(g, x, 0.0, false, nullptr);
  CHECK(g.value(y).rows() == 3);
  CHECK(g.value(y).cols() == 1);
}

TEST_CASE("zero hidden layers mean a single linear map") {
  nn::ParameterStore store;
  std::mt19937_64 rng(32);
  Ffnn net = Ffnn::create(store, "linear", 4, 99, 0, 2, rng);
  CHECK(net.weights.size() == 1);
  CHECK(net.weights[0]->value.rows() == 2);
  CHECK(net.weights[0]->value.cols() == 4);
}

TEST_CASE("task heads use the documented label arities") {
  Config cfg;
  cfg.ffnn_size = 7;
  cfg.ffnn_layers = 1;
  nn::ParameterStore store;
  std::mt19937_64 rng(33);
  int span_dim = 12;
  ScorerParams scorer = ScorerParams::create(store, cfg, span_dim, rng);

  // one logit per non-null label; the null score is pinned to zero later
  CHECK(scorer.entity.weights.back()->value.rows() == kNumEntityTypes - 1);
  CHECK(scorer.relation_pair.weights.back()->value.rows() ==
        kNumRelationTypes - 1);
  CHECK(scorer.mention_relation.weights.back()->value.rows() == 1);
  CHECK(scorer.mention_coref.weights.back()->value.rows() == 1);
  CHECK(scorer.coref_pair.weights.back()->value.rows() == 1);

  CHECK(scorer.entity.weights[0]->value.cols() == span_dim);
  CHECK(scorer.relation_pair.weights[0]->value.cols() == 3 * span_dim);
  CHECK(scorer.coref_pair.weights[0]->value.cols() == 3 * span_dim);
}

TEST_CASE("pair input concatenates both ends and their product") {
  nn::Graph g;
  nn::Matrix a(2, 1), b(2, 1);
  a << 1.0, 2.0;
  b << 3.0, 5.0;
  nn::Var pair = pair_input(g, g.constant(a), g.constant(b));
  nn::Matrix expected(6, 1);
  expected << 1.0, 2.0, 3.0, 5.0, 3.0, 10.0;
  CHECK(g.value(pair) == expected);
}

TEST_CASE("mention scorers are shared across their two uses") {
  Config cfg;
  nn::ParameterStore store;
  std::mt19937_64 rng(34);
  ScorerParams scorer = ScorerParams::create(store, cfg, 8, rng);

  // The same parameters score a span whether it appears as anaphor or
  // antecedent, so one network instance must be reused, not cloned.
  nn::Graph g;
  nn::Var x = g.constant(nn::Matrix::Random(8, 1));
  nn::Var s1 = scorer.mention_coref.apply(g, x, 0.0, false, nullptr);
  nn::Var s2 = scorer.mention_coref.apply(g, x, 0.0, false, nullptr);
  CHECK(g.value(s1) == g.value(s2));
  CHECK(scorer.mention_coref.weights[0] ==
        store.find("scorer.mention_coref.h0.w"));
}

TEST_CASE("dropout only fires in training mode") {
  nn::ParameterStore store;
  std::mt19937_64 rng(35);
  Ffnn net = Ffnn::create(store, "drop", 5, 16, 2, 1, rng);
  nn::Matrix x = nn::Matrix::Random(5, 1);

  auto eval_out = [&]() {
    nn::Graph g;
    return g.value(net.apply(g, g.constant(x), 0.9, false, nullptr))(0, 0);
  };
  CHECK(eval_out() == eval_out());

  std::mt19937_64 d1(7), d2(7), d3(8);
  auto train_out = [&](std::mt19937_64& r) {
    nn::Graph g;
    return g.value(net.apply(g, g.constant(x), 0.5, true, &r))(0, 0);
  };
  CHECK(train_out(d1) == train_out(d2));
  CHECK(train_out(d1) != eval_out());
  (void)d3;
}
