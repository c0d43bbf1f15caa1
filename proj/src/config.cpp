#include "spanie/config.hpp"

#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

namespace spanie {

namespace {

std::string trim(const std::string& s) {
  auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

struct Key {
  std::string name;
  std::function<void(Config&, const std::string&)> set;
  std::function<std::string(const Config&)> get;
};

template <typename T>
T parse_number(const std::string& key, const std::string& raw);

template <>
int parse_number<int>(const std::string& key, const std::string& raw) {
  try {
    std::size_t used = 0;
    int v = std::stoi(raw, &used);
    if (used != raw.size()) throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": not an integer: " + raw);
  }
}

template <>
double parse_number<double>(const std::string& key, const std::string& raw) {
  try {
    std::size_t used = 0;
    double v = std::stod(raw, &used);
    if (used != raw.size()) throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": not a number: " + raw);
  }
}

template <>
std::uint64_t parse_number<std::uint64_t>(const std::string& key,
                                          const std::string& raw) {
  try {
    std::size_t used = 0;
    auto v = std::stoull(raw, &used);
    if (used != raw.size()) throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": not an integer: " + raw);
  }
}

bool parse_bool(const std::string& key, const std::string& raw) {
  if (raw == "true" || raw == "1") return true;
  if (raw == "false" || raw == "0") return false;
  throw ConfigError("config key " + key + ": not a boolean: " + raw);
}

std::string format_double(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

#define INT_KEY(field)                                              \
  Key {                                                             \
    #field,                                                         \
        [](Config& c, const std::string& raw) {                     \
          c.field = parse_number<int>(#field, raw);                 \
        },                                                          \
        [](const Config& c) { return std::to_string(c.field); }     \
  }
#define DOUBLE_KEY(field)                                           \
  Key {                                                             \
    #field,                                                         \
        [](Config& c, const std::string& raw) {                     \
          c.field = parse_number<double>(#field, raw);              \
        },                                                          \
        [](const Config& c) { return format_double(c.field); }      \
  }
#define STRING_KEY(field)                                           \
  Key {                                                             \
    #field, [](Config& c, const std::string& raw) { c.field = raw; }, \
        [](const Config& c) { return c.field; }                     \
  }

const std::vector<Key>& key_table() {
  static const std::vector<Key> keys = {
      INT_KEY(hidden_size),
      INT_KEY(word_dim),
      INT_KEY(char_dim),
      INT_KEY(char_filters),
      INT_KEY(char_window),
      INT_KEY(width_dim),
      INT_KEY(ffnn_size),
      INT_KEY(ffnn_layers),
      INT_KEY(max_span_width),
      Key{"attention_values",
          [](Config& c, const std::string& raw) {
            if (raw == "states") {
              c.attention_values = AttentionValues::States;
            } else if (raw == "embeddings") {
              c.attention_values = AttentionValues::Embeddings;
            } else {
              throw ConfigError(
                  "attention_values must be states or embeddings, got " + raw);
            }
          },
          [](const Config& c) {
            return c.attention_values == AttentionValues::States
                       ? std::string("states")
                       : std::string("embeddings");
          }},
      STRING_KEY(context_embeddings),
      DOUBLE_KEY(beam_coref),
      DOUBLE_KEY(beam_relation),
      DOUBLE_KEY(task_weight_entity),
      DOUBLE_KEY(task_weight_relation),
      DOUBLE_KEY(task_weight_coref),
      DOUBLE_KEY(dropout_lstm),
      DOUBLE_KEY(dropout_ffnn),
      DOUBLE_KEY(dropout_embed),
      DOUBLE_KEY(learn_rate),
      DOUBLE_KEY(lr_decay_rate),
      INT_KEY(lr_decay_steps),
      DOUBLE_KEY(clip_norm),
      INT_KEY(max_steps),
      Key{"seed",
          [](Config& c, const std::string& raw) {
            c.seed = parse_number<std::uint64_t>("seed", raw);
          },
          [](const Config& c) { return std::to_string(c.seed); }},
      INT_KEY(eval_every),
      STRING_KEY(checkpoint),
      INT_KEY(node_threshold),
      Key{"count_per_document",
          [](Config& c, const std::string& raw) {
            c.count_per_document = parse_bool("count_per_document", raw);
          },
          [](const Config& c) {
            return std::string(c.count_per_document ? "true" : "false");
          }},
  };
  return keys;
}

void set_key(Config& cfg, const std::string& key, const std::string& value) {
  for (const auto& k : key_table()) {
    if (k.name == key) {
      k.set(cfg, value);
      return;
    }
  }
  throw ConfigError("unknown config key: " + key);
}

}  // namespace

void Config::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (hidden_size < 1) fail("hidden_size must be >= 1");
  if (word_dim < 1) fail("word_dim must be >= 1");
  if (char_dim < 0 || char_filters < 0) fail("char dims must be >= 0");
  if (char_dim > 0 && char_window < 1) fail("char_window must be >= 1");
  if (width_dim < 1) fail("width_dim must be >= 1");
  if (ffnn_size < 1) fail("ffnn_size must be >= 1");
  if (ffnn_layers < 1) fail("ffnn_layers must be >= 1");
  if (max_span_width < 1) fail("max_span_width must be >= 1");
  if (!(beam_coref > 0.0 && beam_coref <= 1.0))
    fail("beam_coref must lie in (0, 1]");
  if (!(beam_relation > 0.0 && beam_relation <= 1.0))
    fail("beam_relation must lie in (0, 1]");
  if (task_weight_entity < 0 || task_weight_relation < 0 ||
      task_weight_coref < 0)
    fail("task weights must be >= 0");
  if (task_weight_entity + task_weight_relation + task_weight_coref <= 0.0)
    fail("at least one task weight must be positive");
  for (double d : {dropout_lstm, dropout_ffnn, dropout_embed}) {
    if (d < 0.0 || d >= 1.0) fail("dropout rates must lie in [0, 1)");
  }
  if (learn_rate <= 0.0) fail("learn_rate must be positive");
  if (!(lr_decay_rate > 0.0 && lr_decay_rate <= 1.0))
    fail("lr_decay_rate must lie in (0, 1]");
  if (lr_decay_steps < 1) fail("lr_decay_steps must be >= 1");
  if (max_steps < 1) fail("max_steps must be >= 1");
  if (eval_every < 1) fail("eval_every must be >= 1");
  if (node_threshold < 0) fail("node_threshold must be >= 0");
}

std::string Config::canonical_text() const {
  std::ostringstream os;
  for (const auto& k : key_table()) {
    os << k.name << " = " << k.get(*this) << "\n";
  }
  return os.str();
}

std::uint64_t Config::fingerprint() const {
  // FNV-1a over the canonical listing.
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : canonical_text()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

Config parse_config_text(const std::string& text,
                         const std::string& source_name) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source_name + ":" + std::to_string(lineno) +
                        ": expected key = value");
    }
    set_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

void apply_overrides(Config& cfg,
                     const std::map<std::string, std::string>& overrides) {
  for (const auto& [key, value] : overrides) set_key(cfg, key, value);
  cfg.validate();
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  out.reserve(key_table().size());
  for (const auto& k : key_table()) out.push_back(k.name);
  return out;
}

}  // namespace spanie
