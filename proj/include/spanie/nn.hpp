#pragma once

#include <deque>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "spanie/types.hpp"

namespace spanie::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Named trainable matrix with a gradient accumulator.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  int rows() const { return int(value.rows()); }
  int cols() const { return int(value.cols()); }
  std::size_t size() const { return std::size_t(value.size()); }
};

// Owns every trainable parameter of a model. Addresses are stable, so
// graph nodes may keep Parameter pointers across construction.
class ParameterStore {
 public:
  Parameter& add(const std::string& name, int rows, int cols);
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  std::size_t count() const { return params_.size(); }
  std::size_t total_entries() const;
  void zero_grads();
  double grad_norm() const;
  Parameter* find(const std::string& name);

 private:
  std::deque<Parameter> params_;
};

void init_glorot(Parameter& p, std::mt19937_64& rng);
void init_uniform(Parameter& p, double limit, std::mt19937_64& rng);

struct Var {
  int index = -1;
  bool valid() const { return index >= 0; }
};

// Tape-based reverse-mode differentiation over Eigen matrices. Values are
// computed eagerly at node creation; backward() replays the tape in
// reverse and accumulates into Parameter::grad for parameter leaves.
// Column vectors are (n x 1) matrices throughout.
class Graph {
 public:
  Var constant(Matrix v);
  Var zeros(int rows) { return constant(Matrix::Zero(rows, 1)); }
  Var param(Parameter& p);
  Var lookup(Parameter& table, int col);  // one embedding column

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var add_n(const std::vector<Var>& xs);
  Var cmul(Var a, Var b);  // elementwise product
  Var scale(Var a, double s);
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var relu(Var a);
  Var concat_rows(const std::vector<Var>& xs);  // stack vertically
  Var concat_cols(const std::vector<Var>& xs);  // stack horizontally
  Var transpose(Var a);
  Var row_max(Var a);          // per-row max over columns -> column vector
  Var softmax(Var a);          // column vector, max-subtracted
  Var log_softmax(Var a);      // column vector, max-subtracted
  Var logsumexp(Var a);        // column vector -> 1x1
  Var pick_rows(Var a, std::vector<int> rows);
  Var affine(Parameter& w, Var x, Parameter& b);  // w*x + b

  // Inverted dropout with a fresh mask; identity when rate == 0.
  Var dropout(Var x, double rate, std::mt19937_64& rng);
  // Mask constant for variational dropout (reused across time steps).
  Var dropout_mask(int rows, double rate, std::mt19937_64& rng);

  const Matrix& value(Var v) const { return values_[v.index]; }
  double scalar(Var v) const;
  std::size_t num_nodes() const { return values_.size(); }

  void backward(Var loss);

 private:
  struct Node {
    std::function<void(Graph&, int)> backprop;  // null for constants
  };

  Var emplace(Matrix value, std::function<void(Graph&, int)> backprop);
  Matrix& grad(int index);

  std::vector<Matrix> values_;
  std::vector<Node> nodes_;
  std::vector<Matrix> grads_;  // allocated lazily during backward

  // One node per parameter (and per looked-up column) per graph, so
  // repeated uses share the same tape entry.
  std::map<std::pair<const Parameter*, int>, Var> leaf_cache_;
};

// Adaptive moment estimation with optional global-norm gradient clipping.
class AdamOptimizer {
 public:
  AdamOptimizer(const ParameterStore& store, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8,
                double clip_norm = 5.0);

  void step(ParameterStore& store, double learn_rate);

  long steps_taken() const { return step_; }
  std::vector<Matrix>& first_moments() { return m_; }
  std::vector<Matrix>& second_moments() { return v_; }
  void set_steps_taken(long t) { step_ = t; }

 private:
  double beta1_, beta2_, eps_, clip_norm_;
  long step_ = 0;
  std::vector<Matrix> m_, v_;
};

}  // namespace spanie::nn
