#pragma once

#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "spanie/config.hpp"
#include "spanie/corpus.hpp"
#include "spanie/nn.hpp"

namespace spanie {

// Token and character inventories frozen at training time. Id 0 is the
// reserved unknown word; character id 0 pads convolution windows.
class Vocabulary {
 public:
  static constexpr int kUnkWord = 0;
  static constexpr int kPadChar = 0;
  static constexpr int kUnkChar = 1;

  static Vocabulary build(const std::vector<Document>& docs);

  int word_id(const std::string& token) const;
  int char_id(char c) const;
  int num_words() const { return int(words_.size()); }
  int num_chars() const { return int(chars_.size()) + 2; }

  const std::vector<std::string>& words() const { return words_; }
  const std::string& char_set() const { return chars_; }

  // Rebuild from serialized lists (checkpoint loading).
  static Vocabulary from_lists(std::vector<std::string> words,
                               std::string chars);

 private:
  std::vector<std::string> words_;  // words_[0] is the UNK sentinel
  std::string chars_;               // sorted distinct characters
  std::unordered_map<std::string, int> word_index_;
  std::unordered_map<char, int> char_index_;

  void rebuild_index();
};

// Optional precomputed per-token contextual embeddings, keyed by
// (doc_key, sentence_index, token_index).
class ContextStore {
 public:
  static ContextStore load(const std::string& path);

  int dim() const { return dim_; }
  bool empty() const { return store_.empty() && dim_ == 0; }

  // Throws Error naming the missing key.
  const std::vector<double>& get(const std::string& doc_key, int sentence,
                                 int token) const;

 private:
  int dim_ = 0;
  std::unordered_map<std::string,
                     std::vector<std::vector<std::vector<double>>>>
      store_;
};

void save_context_store(
    const std::string& path, int dim,
    const std::vector<std::pair<std::string,
                                std::vector<std::vector<std::vector<double>>>>>&
        docs);

// All encoder parameters, registered in a shared ParameterStore.
struct EncoderParams {
  int hidden = 0;
  int input_dim = 0;    // word + char + context
  int context_dim = 0;
  int value_dim = 0;    // dimension of the attention value vectors
  int span_dim = 0;     // dimension of g
  AttentionValues attention_values = AttentionValues::States;

  nn::Parameter* word_emb = nullptr;   // word_dim x |V|
  nn::Parameter* char_emb = nullptr;   // char_dim x |C|
  nn::Parameter* char_w = nullptr;     // filters x (char_dim * window)
  nn::Parameter* char_b = nullptr;     // filters
  nn::Parameter* lstm_fw_w = nullptr;  // 4H x (input + H)
  nn::Parameter* lstm_fw_b = nullptr;
  nn::Parameter* lstm_bw_w = nullptr;
  nn::Parameter* lstm_bw_b = nullptr;
  nn::Parameter* width_emb = nullptr;  // width_dim x W
  nn::Parameter* att_w = nullptr;      // 1 x 2H head-attention projection
  int char_window = 0;
  int char_dim = 0;
  double dropout_embed = 0.0;  // fresh mask per token
  double dropout_lstm = 0.0;   // one recurrent mask per direction

  static EncoderParams create(nn::ParameterStore& store, const Config& cfg,
                              const Vocabulary& vocab, int context_dim,
                              std::mt19937_64& rng);
};

struct EncodeMode {
  bool training = false;
  std::mt19937_64* rng = nullptr;  // required when training
};

struct EncodedTokens {
  std::vector<nn::Var> states;  // one 2H state per token
  std::vector<nn::Var> inputs;  // embedding fed to the LSTM, per token
};

// Runs the bidirectional recurrent encoder over each sentence
// independently. Deterministic outside training mode.
EncodedTokens encode_tokens(nn::Graph& g, const Document& doc,
                            const EncoderParams& params,
                            const Vocabulary& vocab,
                            const ContextStore* context,
                            const EncodeMode& mode);

// g_i = [state(start); state(end); attention-weighted value summary;
// width embedding]. Attention weights are a softmax over a learned
// scalar projection of the span's token states.
nn::Var span_representation(nn::Graph& g, const Span& span,
                            const EncodedTokens& tokens,
                            const EncoderParams& params);

}  // namespace spanie
