#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>

#include "spanie/encoder.hpp"
#include "toy_corpus.hpp"

using namespace spanie;
using spanie::testing::make_doc;

namespace {

Config small_config() {
  Config cfg = spanie::testing::tiny_config();
  return cfg;
}

EncoderParams make_params(nn::ParameterStore& store, const Config& cfg,
                          const Vocabulary& vocab, int context_dim,
                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return EncoderParams::create(store, cfg, vocab, context_dim, rng);
}

}  // namespace

TEST_CASE("vocabulary assigns stable ids with a reserved unknown") {
  std::vector<Document> docs = {
      make_doc("a", {{"bank", "river"}, {"bank", "note"}}),
      make_doc("b", {{"apple"}})};
  Vocabulary vocab = Vocabulary::build(docs);
  CHECK(vocab.num_words() == 5);  // <unk> apple bank note river
  CHECK(vocab.word_id("bank") > 0);
  CHECK(vocab.word_id("unseen") == Vocabulary::kUnkWord);
  CHECK(vocab.words()[0] == "<unk>");

  // distinct sorted characters, plus pad and unknown sentinels
  for (char c : std::string("abeiklnoprtv")) {
    CHECK(vocab.char_id(c) >= 2);
  }
  CHECK(vocab.char_id('z') == Vocabulary::kUnkChar);
  CHECK(vocab.num_chars() == int(vocab.char_set().size()) + 2);

  Vocabulary copy = Vocabulary::from_lists(vocab.words(), vocab.char_set());
  CHECK(copy.word_id("bank") == vocab.word_id("bank"));
  CHECK(copy.char_id('k') == vocab.char_id('k'));
}

TEST_CASE("context store round trips and names missing keys") {
  std::string path = "test_context_tmp.jsonl";
  std::vector<std::vector<std::vector<double>>> doc_embs = {
      {{1.0, 2.0}, {3.0, 4.0}},  // sentence 0: two tokens
      {{5.0, 6.0}}};             // sentence 1: one token
  save_context_store(path, 2, {{"docA", doc_embs}});

  ContextStore store = ContextStore::load(path);
  CHECK(store.dim() == 2);
  CHECK(store.get("docA", 0, 1) == std::vector<double>{3.0, 4.0});
  CHECK(store.get("docA", 1, 0) == std::vector<double>{5.0, 6.0});
  CHECK_THROWS_WITH_AS(store.get("docB", 0, 0), doctest::Contains("docB"),
                       Error);
  CHECK_THROWS_WITH_AS(store.get("docA", 2, 0), doctest::Contains("docA"),
                       Error);
  std::remove(path.c_str());
}

TEST_CASE("context store rejects dimension drift") {
  std::string path = "test_context_bad.jsonl";
  {
    std::ofstream out(path);
    out << "{\"dim\": 3}\n";
    out << "{\"doc_key\": \"d\", \"embeddings\": [[[1.0, 2.0]]]}\n";
  }
  CHECK_THROWS_WITH_AS(ContextStore::load(path),
                       doctest::Contains(path.c_str()), ValidationError);
  std::remove(path.c_str());
}

TEST_CASE("encoder produces one state per token and is deterministic") {
  Config cfg = small_config();
  Document doc = make_doc("d", {{"alpha", "maps", "beta"}, {"it", "too"}});
  Vocabulary vocab = Vocabulary::build({doc});

  auto run = [&](std::uint64_t seed) {
    nn::ParameterStore store;
    EncoderParams params = make_params(store, cfg, vocab, 0, seed);
    nn::Graph g;
    EncodedTokens tokens =
        encode_tokens(g, doc, params, vocab, nullptr, EncodeMode{});
    nn::Matrix all(2 * cfg.hidden_size, tokens.states.size());
    for (std::size_t t = 0; t < tokens.states.size(); ++t) {
      all.col(t) = g.value(tokens.states[t]);
    }
    return all;
  };

  nn::Matrix a = run(11);
  CHECK(a.cols() == 5);
  CHECK(a == run(11));       // same init, same evaluation
  CHECK(a != run(12));       // different init actually changes something

  nn::ParameterStore store;
  EncoderParams params = make_params(store, cfg, vocab, 0, 11);
  nn::Graph g;
  EncodedTokens tokens =
      encode_tokens(g, doc, params, vocab, nullptr, EncodeMode{});
  CHECK(tokens.inputs.size() == 5);
  CHECK(g.value(tokens.inputs[0]).rows() == params.input_dim);
}

TEST_CASE("sentences are encoded independently") {
  Config cfg = small_config();
  Document two = make_doc("d", {{"alpha", "beta"}, {"gamma"}});
  Document swapped = make_doc("d", {{"gamma"}, {"alpha", "beta"}});
  Vocabulary vocab = Vocabulary::build({two});

  nn::ParameterStore store;
  EncoderParams params = make_params(store, cfg, vocab, 0, 4);

  nn::Graph g1;
  EncodedTokens t1 = encode_tokens(g1, two, params, vocab, nullptr, {});
  nn::Graph g2;
  EncodedTokens t2 = encode_tokens(g2, swapped, params, vocab, nullptr, {});

  // "gamma" is a single-token sentence in both layouts; its state cannot
  // depend on the neighboring sentence.
  CHECK(g1.value(t1.states[2]) == g2.value(t2.states[0]));
  CHECK(g1.value(t1.states[0]) == g2.value(t2.states[1]));
}

TEST_CASE("contextual embeddings change the states") {
  Config cfg = small_config();
  Document doc = make_doc("d", {{"alpha", "beta"}});
  Vocabulary vocab = Vocabulary::build({doc});

  std::string path = "test_context_enc.jsonl";
  save_context_store(path, 3, {{"d", {{{0.5, -0.5, 1.0}, {0.0, 2.0, 0.0}}}}});
  ContextStore context = ContextStore::load(path);
  std::remove(path.c_str());

  nn::ParameterStore store;
  EncoderParams params = make_params(store, cfg, vocab, 3, 9);
  CHECK(params.input_dim ==
        cfg.word_dim + 3 + cfg.char_filters);

  nn::Graph g;
  EncodedTokens with =
      encode_tokens(g, doc, params, vocab, &context, EncodeMode{});
  CHECK(g.value(with.inputs[0]).rows() == params.input_dim);
  // inputs stack as [word embedding; character features; context vector]
  CHECK(g.value(with.inputs[0]).block(cfg.word_dim + cfg.char_filters, 0, 3,
                                      1) == Eigen::Vector3d(0.5, -0.5, 1.0));
}

TEST_CASE("span representation has the documented layout") {
  Config cfg = small_config();
  Document doc = make_doc("d", {{"alpha", "maps", "beta"}});
  Vocabulary vocab = Vocabulary::build({doc});

  nn::ParameterStore store;
  EncoderParams params = make_params(store, cfg, vocab, 0, 5);
  CHECK(params.span_dim ==
        4 * cfg.hidden_size + params.value_dim + cfg.width_dim);

  nn::Graph g;
  EncodedTokens tokens = encode_tokens(g, doc, params, vocab, nullptr, {});
  Span span{0, 2, 0};
  nn::Var rep = span_representation(g, span, tokens, params);
  const nn::Matrix& v = g.value(rep);
  CHECK(v.rows() == params.span_dim);
  CHECK(v.cols() == 1);

  // boundary blocks are exactly the token states at the ends
  int h2 = 2 * cfg.hidden_size;
  CHECK(v.topRows(h2) == g.value(tokens.states[0]));
  CHECK(v.block(h2, 0, h2, 1) == g.value(tokens.states[2]));

  // single-token spans put all attention on that token
  nn::Var single = span_representation(g, Span{1, 1, 0}, tokens, params);
  CHECK(g.value(single).block(2 * h2, 0, params.value_dim, 1) ==
        g.value(tokens.states[1]));

  // spans wider than the configured cap have no width embedding
  CHECK_THROWS_AS(
      span_representation(g, Span{0, int(cfg.max_span_width), 0}, tokens,
                          params),
      Error);
}

TEST_CASE("attention over embeddings uses the raw inputs as values") {
  Config cfg = small_config();
  cfg.attention_values = AttentionValues::Embeddings;
  Document doc = make_doc("d", {{"alpha", "beta"}});
  Vocabulary vocab = Vocabulary::build({doc});

  nn::ParameterStore store;
  EncoderParams params = make_params(store, cfg, vocab, 0, 5);
  CHECK(params.value_dim == params.input_dim);

  nn::Graph g;
  EncodedTokens tokens = encode_tokens(g, doc, params, vocab, nullptr, {});
  nn::Var rep = span_representation(g, Span{0, 0, 0}, tokens, params);
  CHECK(g.value(rep).block(4 * cfg.hidden_size, 0, params.value_dim, 1) ==
        g.value(tokens.inputs[0]));
}

TEST_CASE("training mode dropout changes outputs but stays seeded") {
  Config cfg = small_config();
  cfg.dropout_embed = 0.3;
  cfg.dropout_lstm = 0.3;
  Document doc = make_doc("d", {{"alpha", "maps", "beta"}});
  Vocabulary vocab = Vocabulary::build({doc});

  nn::ParameterStore store;
  EncoderParams params = make_params(store, cfg, vocab, 0, 5);

  auto run_training = [&](std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    nn::Graph g;
    EncodedTokens tokens = encode_tokens(g, doc, params, vocab, nullptr,
                                         EncodeMode{true, &rng});
    return nn::Matrix(g.value(tokens.states[1]));
  };
  CHECK(run_training(3) == run_training(3));
  CHECK(run_training(3) != run_training(4));

  nn::Graph g;
  EncodedTokens eval = encode_tokens(g, doc, params, vocab, nullptr, {});
  CHECK(nn::Matrix(g.value(eval.states[1])) != run_training(3));
}
