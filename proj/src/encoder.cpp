#include "spanie/encoder.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

namespace spanie {

using nn::Graph;
using nn::Var;

Vocabulary Vocabulary::build(const std::vector<Document>& docs) {
  std::set<std::string> words;
  std::set<char> chars;
  for (const auto& doc : docs) {
    for (const auto& sent : doc.sentences) {
      for (const auto& tok : sent) {
        words.insert(tok);
        for (char c : tok) chars.insert(c);
      }
    }
  }
  Vocabulary v;
  v.words_.push_back("<unk>");
  v.words_.insert(v.words_.end(), words.begin(), words.end());
  v.chars_.assign(chars.begin(), chars.end());
  v.rebuild_index();
  return v;
}

Vocabulary Vocabulary::from_lists(std::vector<std::string> words,
                                  std::string chars) {
  Vocabulary v;
  v.words_ = std::move(words);
  v.chars_ = std::move(chars);
  v.rebuild_index();
  return v;
}

void Vocabulary::rebuild_index() {
  word_index_.clear();
  for (std::size_t i = 0; i < words_.size(); ++i) word_index_[words_[i]] = int(i);
  char_index_.clear();
  for (std::size_t i = 0; i < chars_.size(); ++i) {
    char_index_[chars_[i]] = int(i) + 2;  // after PAD and UNK
  }
}

int Vocabulary::word_id(const std::string& token) const {
  auto it = word_index_.find(token);
  return it == word_index_.end() ? kUnkWord : it->second;
}

int Vocabulary::char_id(char c) const {
  auto it = char_index_.find(c);
  return it == char_index_.end() ? kUnkChar : it->second;
}

ContextStore ContextStore::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open context embedding store: " + path);
  ContextStore store;
  std::string line;
  int lineno = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!saw_header) {
      if (!j.contains("dim")) {
        throw ParseError(path + ": first record must declare \"dim\"");
      }
      store.dim_ = j.at("dim").get<int>();
      if (store.dim_ < 1) throw ParseError(path + ": dim must be >= 1");
      saw_header = true;
      continue;
    }
    auto key = j.at("doc_key").get<std::string>();
    auto emb = j.at("embeddings")
                   .get<std::vector<std::vector<std::vector<double>>>>();
    for (const auto& sent : emb) {
      for (const auto& vec : sent) {
        if (int(vec.size()) != store.dim_) {
          throw ValidationError(path + ": doc " + key +
                                " has a vector of dimension " +
                                std::to_string(vec.size()) + ", expected " +
                                std::to_string(store.dim_));
        }
      }
    }
    store.store_[key] = std::move(emb);
  }
  if (!saw_header) throw ParseError(path + ": empty store (no header)");
  return store;
}

const std::vector<double>& ContextStore::get(const std::string& doc_key,
                                             int sentence, int token) const {
  auto it = store_.find(doc_key);
  if (it == store_.end()) {
    throw Error("context embedding store has no entry for doc_key \"" +
                doc_key + "\"");
  }
  const auto& sents = it->second;
  if (sentence < 0 || sentence >= int(sents.size()) || token < 0 ||
      token >= int(sents[sentence].size())) {
    throw Error("context embedding store missing key (" + doc_key + ", " +
                std::to_string(sentence) + ", " + std::to_string(token) + ")");
  }
  return sents[sentence][token];
}

void save_context_store(
    const std::string& path, int dim,
    const std::vector<std::pair<std::string,
                                std::vector<std::vector<std::vector<double>>>>>&
        docs) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot write: " + tmp);
    out << nlohmann::json{{"dim", dim}}.dump() << '\n';
    for (const auto& [key, emb] : docs) {
      nlohmann::ordered_json j;
      j["doc_key"] = key;
      j["embeddings"] = emb;
      out << j.dump() << '\n';
    }
  }
  std::filesystem::rename(tmp, path);
}

EncoderParams EncoderParams::create(nn::ParameterStore& store,
                                    const Config& cfg, const Vocabulary& vocab,
                                    int context_dim, std::mt19937_64& rng) {
  EncoderParams p;
  p.hidden = cfg.hidden_size;
  p.context_dim = context_dim;
  p.char_window = cfg.char_window;
  p.char_dim = cfg.char_dim;
  p.attention_values = cfg.attention_values;
  p.dropout_embed = cfg.dropout_embed;
  p.dropout_lstm = cfg.dropout_lstm;
  p.input_dim = cfg.word_dim + context_dim;
  if (cfg.char_dim > 0 && cfg.char_filters > 0) {
    p.input_dim += cfg.char_filters;
  }

  auto glorot = [&](const std::string& name, int rows, int cols) {
    nn::Parameter& q = store.add(name, rows, cols);
    nn::init_glorot(q, rng);
    return &q;
  };
  auto zero_bias = [&](const std::string& name, int rows) {
    return &store.add(name, rows, 1);
  };

  p.word_emb = glorot("encoder.word_emb", cfg.word_dim, vocab.num_words());
  if (cfg.char_dim > 0 && cfg.char_filters > 0) {
    p.char_emb = glorot("encoder.char_emb", cfg.char_dim, vocab.num_chars());
    p.char_w = glorot("encoder.char_conv_w", cfg.char_filters,
                      cfg.char_dim * cfg.char_window);
    p.char_b = zero_bias("encoder.char_conv_b", cfg.char_filters);
  }
  const int h = cfg.hidden_size;
  p.lstm_fw_w = glorot("encoder.lstm_fw_w", 4 * h, p.input_dim + h);
  p.lstm_fw_b = zero_bias("encoder.lstm_fw_b", 4 * h);
  p.lstm_bw_w = glorot("encoder.lstm_bw_w", 4 * h, p.input_dim + h);
  p.lstm_bw_b = zero_bias("encoder.lstm_bw_b", 4 * h);
  p.width_emb = glorot("encoder.width_emb", cfg.width_dim, cfg.max_span_width);
  p.att_w = glorot("encoder.att_w", 1, 2 * h);

  p.value_dim = cfg.attention_values == AttentionValues::States ? 2 * h
                                                                : p.input_dim;
  p.span_dim = 2 * (2 * h) + p.value_dim + cfg.width_dim;
  return p;
}

namespace {

std::vector<int> range_rows(int first, int count) {
  std::vector<int> rows(count);
  for (int i = 0; i < count; ++i) rows[i] = first + i;
  return rows;
}

// Convolution over character embeddings with max pooling. Words shorter
// than the window are padded with the reserved pad character.
Var char_composition(Graph& g, const std::string& word,
                     const EncoderParams& p, const Vocabulary& vocab) {
  const int window = p.char_window;
  std::vector<int> ids;
  for (char c : word) ids.push_back(vocab.char_id(c));
  while (int(ids.size()) < window) ids.push_back(Vocabulary::kPadChar);

  std::vector<Var> position_outputs;
  for (int t = 0; t + window <= int(ids.size()); ++t) {
    std::vector<Var> window_embs;
    for (int k = 0; k < window; ++k) {
      window_embs.push_back(g.lookup(*p.char_emb, ids[t + k]));
    }
    position_outputs.push_back(
        g.affine(*p.char_w, g.concat_rows(window_embs), *p.char_b));
  }
  Var stacked = g.concat_cols(position_outputs);
  return g.row_max(g.relu(stacked));
}

struct LstmDirection {
  nn::Parameter* w;
  nn::Parameter* b;
};

// One recurrent pass over a sentence. recurrent_mask implements
// variational dropout: the same mask multiplies h_{t-1} at every step.
std::vector<Var> lstm_pass(Graph& g, const std::vector<Var>& inputs,
                           const LstmDirection& dir, int hidden, bool reverse,
                           Var recurrent_mask) {
  const int n = int(inputs.size());
  std::vector<Var> states(n);
  Var h = g.zeros(hidden);
  Var c = g.zeros(hidden);
  for (int step = 0; step < n; ++step) {
    int t = reverse ? n - 1 - step : step;
    Var h_in = recurrent_mask.valid() ? g.cmul(h, recurrent_mask) : h;
    Var z = g.affine(*dir.w, g.concat_rows({inputs[t], h_in}), *dir.b);
    Var i = g.sigmoid(g.pick_rows(z, range_rows(0, hidden)));
    Var f = g.sigmoid(g.pick_rows(z, range_rows(hidden, hidden)));
    Var o = g.sigmoid(g.pick_rows(z, range_rows(2 * hidden, hidden)));
    Var u = g.tanh(g.pick_rows(z, range_rows(3 * hidden, hidden)));
    c = g.add(g.cmul(f, c), g.cmul(i, u));
    h = g.cmul(o, g.tanh(c));
    states[t] = h;
  }
  return states;
}

}  // namespace

EncodedTokens encode_tokens(Graph& g, const Document& doc,
                            const EncoderParams& params,
                            const Vocabulary& vocab,
                            const ContextStore* context,
                            const EncodeMode& mode) {
  if (mode.training && mode.rng == nullptr) {
    throw Error("training-mode encoding requires an RNG");
  }
  EncodedTokens out;
  out.states.reserve(doc.num_tokens());
  out.inputs.reserve(doc.num_tokens());

  std::unordered_map<std::string, Var> char_cache;

  for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
    const auto& sent = doc.sentences[s];

    Var fw_mask;  // recurrent masks are shared across time steps
    Var bw_mask;
    if (mode.training && params.dropout_lstm > 0.0) {
      fw_mask = g.dropout_mask(params.hidden, params.dropout_lstm, *mode.rng);
      bw_mask = g.dropout_mask(params.hidden, params.dropout_lstm, *mode.rng);
    }

    std::vector<Var> inputs;
    inputs.reserve(sent.size());
    for (std::size_t t = 0; t < sent.size(); ++t) {
      const std::string& tok = sent[t];
      std::vector<Var> parts;
      parts.push_back(g.lookup(*params.word_emb, vocab.word_id(tok)));
      if (params.char_emb != nullptr) {
        auto it = char_cache.find(tok);
        if (it == char_cache.end()) {
          it = char_cache.emplace(tok, char_composition(g, tok, params, vocab))
                   .first;
        }
        parts.push_back(it->second);
      }
      if (params.context_dim > 0) {
        if (context == nullptr) {
          throw Error("encoder configured with context embeddings but no "
                      "store was provided");
        }
        const auto& vec = context->get(doc.doc_key, int(s), int(t));
        nn::Matrix m(params.context_dim, 1);
        for (int r = 0; r < params.context_dim; ++r) m(r, 0) = vec[r];
        parts.push_back(g.constant(std::move(m)));
      }
      Var x = g.concat_rows(parts);
      if (mode.training && params.dropout_embed > 0.0) {
        x = g.dropout(x, params.dropout_embed, *mode.rng);
      }
      inputs.push_back(x);
    }

    std::vector<Var> fw = lstm_pass(
        g, inputs, LstmDirection{params.lstm_fw_w, params.lstm_fw_b},
        params.hidden, /*reverse=*/false, fw_mask);
    std::vector<Var> bw = lstm_pass(
        g, inputs, LstmDirection{params.lstm_bw_w, params.lstm_bw_b},
        params.hidden, /*reverse=*/true, bw_mask);

    for (std::size_t t = 0; t < sent.size(); ++t) {
      out.states.push_back(g.concat_rows({fw[t], bw[t]}));
      out.inputs.push_back(inputs[t]);
    }
  }
  return out;
}

Var span_representation(Graph& g, const Span& span,
                        const EncodedTokens& tokens,
                        const EncoderParams& params) {
  const int width = span.width();
  if (width > params.width_emb->cols()) {
    throw Error("span wider than the configured maximum width");
  }
  std::vector<Var> state_cols(tokens.states.begin() + span.start,
                              tokens.states.begin() + span.end + 1);
  Var states = g.concat_cols(state_cols);
  Var scores = g.matmul(g.param(*params.att_w), states);  // 1 x width
  Var alpha = g.softmax(g.transpose(scores));             // width x 1

  Var values;
  if (params.attention_values == AttentionValues::States) {
    values = states;
  } else {
    std::vector<Var> value_cols(tokens.inputs.begin() + span.start,
                                tokens.inputs.begin() + span.end + 1);
    values = g.concat_cols(value_cols);
  }
  Var head = g.matmul(values, alpha);

  Var width_feature = g.lookup(*params.width_emb, width - 1);
  return g.concat_rows({tokens.states[span.start], tokens.states[span.end],
                        head, width_feature});
}

}  // namespace spanie
