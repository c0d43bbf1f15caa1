#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "spanie/types.hpp"

namespace spanie {

enum class AttentionValues { States, Embeddings };

// Every tunable of the system. Flat key = value text files; unknown keys
// are rejected so typos fail fast.
struct Config {
  // model dimensions
  int hidden_size = 200;       // per direction
  int word_dim = 100;
  int char_dim = 8;
  int char_filters = 50;
  int char_window = 3;
  int width_dim = 20;
  int ffnn_size = 150;
  int ffnn_layers = 2;
  int max_span_width = 8;      // W
  AttentionValues attention_values = AttentionValues::States;
  std::string context_embeddings;  // optional per-token embedding store

  // beam ratios (independent of the task weights below)
  double beam_coref = 0.3;
  double beam_relation = 0.4;

  // task weights in the joint objective
  double task_weight_entity = 1.0;
  double task_weight_relation = 1.0;
  double task_weight_coref = 1.0;

  // dropout rates, applied only in training mode
  double dropout_lstm = 0.4;
  double dropout_ffnn = 0.4;
  double dropout_embed = 0.5;

  // optimization
  double learn_rate = 1e-3;
  double lr_decay_rate = 0.999;  // staircase: rate^(step / steps)
  int lr_decay_steps = 100;
  double clip_norm = 5.0;        // 0 disables clipping
  int max_steps = 10000;
  std::uint64_t seed = 1;
  int eval_every = 500;
  std::string checkpoint = "checkpoint.bin";

  // knowledge graph
  int node_threshold = 10;          // k: keep phrases with count > k
  bool count_per_document = false;  // node frequency per doc, not per mention

  // Throws ConfigError when an invariant is violated (beam ratios outside
  // (0,1], no positive task weight, W < 1, bad dimensions).
  void validate() const;

  // Deterministic "key = value" listing of every key; input to the
  // fingerprint and the checkpoint header.
  std::string canonical_text() const;
  std::uint64_t fingerprint() const;
};

Config parse_config_text(const std::string& text,
                         const std::string& source_name);
Config load_config(const std::string& path);

// Applies "key=value" overrides on top of cfg; same key set and
// validation as the file format.
void apply_overrides(Config& cfg,
                     const std::map<std::string, std::string>& overrides);

// Every recognized key in canonical order, for flag registration.
std::vector<std::string> config_keys();

}  // namespace spanie
