#include "spanie/nn.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace spanie::nn {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(std::string("nn: ") + what);
}

}  // namespace

Parameter& ParameterStore::add(const std::string& name, int rows, int cols) {
  for (const auto& p : params_) {
    if (p.name == name) throw Error("duplicate parameter name: " + name);
  }
  params_.push_back(Parameter{name, Matrix::Zero(rows, cols),
                              Matrix::Zero(rows, cols)});
  return params_.back();
}

std::size_t ParameterStore::total_entries() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

void ParameterStore::zero_grads() {
  for (auto& p : params_) p.grad.setZero();
}

double ParameterStore::grad_norm() const {
  double sq = 0.0;
  for (const auto& p : params_) sq += p.grad.squaredNorm();
  return std::sqrt(sq);
}

Parameter* ParameterStore::find(const std::string& name) {
  for (auto& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

void init_glorot(Parameter& p, std::mt19937_64& rng) {
  double limit = std::sqrt(6.0 / double(p.rows() + p.cols()));
  init_uniform(p, limit, rng);
}

void init_uniform(Parameter& p, double limit, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (int c = 0; c < p.cols(); ++c) {
    for (int r = 0; r < p.rows(); ++r) p.value(r, c) = dist(rng);
  }
}

Var Graph::emplace(Matrix value, std::function<void(Graph&, int)> backprop) {
  values_.push_back(std::move(value));
  nodes_.push_back(Node{std::move(backprop)});
  return Var{int(values_.size()) - 1};
}

Matrix& Graph::grad(int index) {
  if (grads_[index].size() == 0) {
    grads_[index] = Matrix::Zero(values_[index].rows(), values_[index].cols());
  }
  return grads_[index];
}

double Graph::scalar(Var v) const {
  const Matrix& m = values_[v.index];
  require(m.size() == 1, "scalar() on non-scalar node");
  return m(0, 0);
}

Var Graph::constant(Matrix v) { return emplace(std::move(v), nullptr); }

Var Graph::param(Parameter& p) {
  auto key = std::make_pair(const_cast<const Parameter*>(&p), -1);
  auto it = leaf_cache_.find(key);
  if (it != leaf_cache_.end()) return it->second;
  Var v = emplace(p.value, [&p](Graph& g, int self) {
    p.grad += g.grad(self);
  });
  leaf_cache_[key] = v;
  return v;
}

Var Graph::lookup(Parameter& table, int col) {
  require(col >= 0 && col < table.cols(), "lookup column out of range");
  auto key = std::make_pair(const_cast<const Parameter*>(&table), col);
  auto it = leaf_cache_.find(key);
  if (it != leaf_cache_.end()) return it->second;
  Var v = emplace(table.value.col(col), [&table, col](Graph& g, int self) {
    table.grad.col(col) += g.grad(self);
  });
  leaf_cache_[key] = v;
  return v;
}

Var Graph::matmul(Var a, Var b) {
  const Matrix& A = value(a);
  const Matrix& B = value(b);
  require(A.cols() == B.rows(), "matmul shape mismatch");
  return emplace(A * B, [a, b](Graph& g, int self) {
    const Matrix& d = g.grad(self);
    g.grad(a.index) += d * g.value(b).transpose();
    g.grad(b.index) += g.value(a).transpose() * d;
  });
}

Var Graph::add(Var a, Var b) {
  require(value(a).rows() == value(b).rows() &&
              value(a).cols() == value(b).cols(),
          "add shape mismatch");
  return emplace(value(a) + value(b), [a, b](Graph& g, int self) {
    g.grad(a.index) += g.grad(self);
    g.grad(b.index) += g.grad(self);
  });
}

Var Graph::add_n(const std::vector<Var>& xs) {
  require(!xs.empty(), "add_n of nothing");
  Matrix sum = value(xs[0]);
  for (std::size_t i = 1; i < xs.size(); ++i) {
    require(value(xs[i]).rows() == sum.rows() &&
                value(xs[i]).cols() == sum.cols(),
            "add_n shape mismatch");
    sum += value(xs[i]);
  }
  std::vector<Var> inputs = xs;
  return emplace(std::move(sum), [inputs](Graph& g, int self) {
    for (Var x : inputs) g.grad(x.index) += g.grad(self);
  });
}

Var Graph::cmul(Var a, Var b) {
  require(value(a).rows() == value(b).rows() &&
              value(a).cols() == value(b).cols(),
          "cmul shape mismatch");
  return emplace(value(a).cwiseProduct(value(b)), [a, b](Graph& g, int self) {
    const Matrix& d = g.grad(self);
    g.grad(a.index) += d.cwiseProduct(g.value(b));
    g.grad(b.index) += d.cwiseProduct(g.value(a));
  });
}

Var Graph::scale(Var a, double s) {
  return emplace(value(a) * s, [a, s](Graph& g, int self) {
    g.grad(a.index) += g.grad(self) * s;
  });
}

Var Graph::tanh(Var a) {
  return emplace(value(a).array().tanh().matrix(), [a](Graph& g, int self) {
    const Matrix& y = g.value(Var{self});
    g.grad(a.index) +=
        g.grad(self).cwiseProduct((1.0 - y.array().square()).matrix());
  });
}

Var Graph::sigmoid(Var a) {
  Matrix y = (1.0 / (1.0 + (-value(a).array()).exp())).matrix();
  return emplace(std::move(y), [a](Graph& g, int self) {
    const Matrix& y = g.value(Var{self});
    g.grad(a.index) += g.grad(self).cwiseProduct(
        (y.array() * (1.0 - y.array())).matrix());
  });
}

Var Graph::relu(Var a) {
  return emplace(value(a).cwiseMax(0.0), [a](Graph& g, int self) {
    const Matrix& x = g.value(a);
    g.grad(a.index) += g.grad(self).cwiseProduct(
        (x.array() > 0.0).cast<double>().matrix());
  });
}

Var Graph::concat_rows(const std::vector<Var>& xs) {
  require(!xs.empty(), "concat_rows of nothing");
  int rows = 0;
  int cols = int(value(xs[0]).cols());
  for (Var x : xs) {
    require(int(value(x).cols()) == cols, "concat_rows width mismatch");
    rows += int(value(x).rows());
  }
  Matrix out(rows, cols);
  int at = 0;
  for (Var x : xs) {
    out.middleRows(at, value(x).rows()) = value(x);
    at += int(value(x).rows());
  }
  std::vector<Var> inputs = xs;
  return emplace(std::move(out), [inputs](Graph& g, int self) {
    const Matrix& d = g.grad(self);
    int at = 0;
    for (Var x : inputs) {
      int h = int(g.value(x).rows());
      g.grad(x.index) += d.middleRows(at, h);
      at += h;
    }
  });
}

Var Graph::concat_cols(const std::vector<Var>& xs) {
  require(!xs.empty(), "concat_cols of nothing");
  int rows = int(value(xs[0]).rows());
  int cols = 0;
  for (Var x : xs) {
    require(int(value(x).rows()) == rows, "concat_cols height mismatch");
    cols += int(value(x).cols());
  }
  Matrix out(rows, cols);
  int at = 0;
  for (Var x : xs) {
    out.middleCols(at, value(x).cols()) = value(x);
    at += int(value(x).cols());
  }
  std::vector<Var> inputs = xs;
  return emplace(std::move(out), [inputs](Graph& g, int self) {
    const Matrix& d = g.grad(self);
    int at = 0;
    for (Var x : inputs) {
      int w = int(g.value(x).cols());
      g.grad(x.index) += d.middleCols(at, w);
      at += w;
    }
  });
}

Var Graph::transpose(Var a) {
  return emplace(value(a).transpose(), [a](Graph& g, int self) {
    g.grad(a.index) += g.grad(self).transpose();
  });
}

Var Graph::row_max(Var a) {
  const Matrix& x = value(a);
  Matrix out(x.rows(), 1);
  std::vector<int> argmax(x.rows());
  for (int r = 0; r < x.rows(); ++r) {
    int best = 0;
    for (int c = 1; c < x.cols(); ++c) {
      if (x(r, c) > x(r, best)) best = c;
    }
    argmax[r] = best;
    out(r, 0) = x(r, best);
  }
  return emplace(std::move(out), [a, argmax](Graph& g, int self) {
    const Matrix& d = g.grad(self);
    Matrix& da = g.grad(a.index);
    for (int r = 0; r < d.rows(); ++r) da(r, argmax[r]) += d(r, 0);
  });
}

Var Graph::softmax(Var a) {
  const Matrix& x = value(a);
  require(x.cols() == 1, "softmax expects a column vector");
  double mx = x.maxCoeff();
  Matrix e = (x.array() - mx).exp().matrix();
  Matrix y = e / e.sum();
  return emplace(std::move(y), [a](Graph& g, int self) {
    const Matrix& y = g.value(Var{self});
    const Matrix& d = g.grad(self);
    double dot = (y.array() * d.array()).sum();
    g.grad(a.index) += (y.array() * (d.array() - dot)).matrix();
  });
}

Var Graph::log_softmax(Var a) {
  const Matrix& x = value(a);
  require(x.cols() == 1, "log_softmax expects a column vector");
  double mx = x.maxCoeff();
  double lse = mx + std::log((x.array() - mx).exp().sum());
  Matrix y = (x.array() - lse).matrix();
  return emplace(std::move(y), [a](Graph& g, int self) {
    const Matrix& y = g.value(Var{self});
    const Matrix& d = g.grad(self);
    double total = d.sum();
    g.grad(a.index) += (d.array() - y.array().exp() * total).matrix();
  });
}

Var Graph::logsumexp(Var a) {
  const Matrix& x = value(a);
  require(x.cols() == 1, "logsumexp expects a column vector");
  double mx = x.maxCoeff();
  double lse = mx + std::log((x.array() - mx).exp().sum());
  Matrix out(1, 1);
  out(0, 0) = lse;
  return emplace(std::move(out), [a](Graph& g, int self) {
    const Matrix& x = g.value(a);
    double lse = g.value(Var{self})(0, 0);
    double d = g.grad(self)(0, 0);
    g.grad(a.index) += ((x.array() - lse).exp() * d).matrix();
  });
}

Var Graph::pick_rows(Var a, std::vector<int> rows) {
  const Matrix& x = value(a);
  require(x.cols() == 1, "pick_rows expects a column vector");
  Matrix out(int(rows.size()), 1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] >= 0 && rows[i] < x.rows(), "pick_rows index out of range");
    out(int(i), 0) = x(rows[i], 0);
  }
  return emplace(std::move(out), [a, rows](Graph& g, int self) {
    const Matrix& d = g.grad(self);
    Matrix& da = g.grad(a.index);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      da(rows[i], 0) += d(int(i), 0);
    }
  });
}

Var Graph::affine(Parameter& w, Var x, Parameter& b) {
  return add(matmul(param(w), x), param(b));
}

Var Graph::dropout(Var x, double rate, std::mt19937_64& rng) {
  if (rate <= 0.0) return x;
  Var mask = dropout_mask(int(value(x).rows()), rate, rng);
  return cmul(x, mask);
}

Var Graph::dropout_mask(int rows, double rate, std::mt19937_64& rng) {
  require(rate >= 0.0 && rate < 1.0, "dropout rate must lie in [0, 1)");
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  double keep = 1.0 - rate;
  Matrix mask(rows, 1);
  for (int r = 0; r < rows; ++r) {
    mask(r, 0) = dist(rng) < keep ? 1.0 / keep : 0.0;
  }
  return constant(std::move(mask));
}

void Graph::backward(Var loss) {
  require(loss.valid() && values_[loss.index].size() == 1,
          "backward expects a scalar loss");
  grads_.assign(values_.size(), Matrix());
  grad(loss.index)(0, 0) = 1.0;
  for (int i = loss.index; i >= 0; --i) {
    if (grads_[i].size() == 0) continue;  // node did not influence the loss
    if (nodes_[i].backprop) nodes_[i].backprop(*this, i);
  }
}

AdamOptimizer::AdamOptimizer(const ParameterStore& store, double beta1,
                             double beta2, double eps, double clip_norm)
    : beta1_(beta1), beta2_(beta2), eps_(eps), clip_norm_(clip_norm) {
  for (std::size_t i = 0; i < store.count(); ++i) {
    m_.push_back(Matrix::Zero(store[i].rows(), store[i].cols()));
    v_.push_back(Matrix::Zero(store[i].rows(), store[i].cols()));
  }
}

void AdamOptimizer::step(ParameterStore& store, double learn_rate) {
  if (clip_norm_ > 0.0) {
    double norm = store.grad_norm();
    if (norm > clip_norm_) {
      double factor = clip_norm_ / norm;
      for (std::size_t i = 0; i < store.count(); ++i) {
        store[i].grad *= factor;
      }
    }
  }
  ++step_;
  double correction1 = 1.0 - std::pow(beta1_, double(step_));
  double correction2 = 1.0 - std::pow(beta2_, double(step_));
  for (std::size_t i = 0; i < store.count(); ++i) {
    Parameter& p = store[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p.grad;
    v_[i] = beta2_ * v_[i] +
            (1.0 - beta2_) * p.grad.cwiseProduct(p.grad);
    Matrix mhat = m_[i] / correction1;
    Matrix vhat = v_[i] / correction2;
    p.value -= learn_rate *
               (mhat.array() / (vhat.array().sqrt() + eps_)).matrix();
  }
}

}  // namespace spanie::nn
