#pragma once

// Minimal dense neural-network substrate: GCN layers, a gated recurrent cell
// over weight matrices, softmax cross-entropy, hand-derived reverse-mode
// backward kernels, and plain gradient descent.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ccc/error.hpp"
#include "ccc/graph.hpp"
#include "ccc/matrix.hpp"
#include "ccc/rng.hpp"

namespace ccc {

/// Recurrence parameters for one evolved weight matrix of shape (r x c).
/// Gate products multiply from the left: U, V are (r x r), biases (r x c).
struct GruGates {
  Matrix u_update, v_update, b_update;
  Matrix u_reset, v_reset, b_reset;
  Matrix u_cand, v_cand, b_cand;
};

/// Parameters of one model: stacked GCN layer weights, optional per-layer
/// recurrence gates (history model only), and a linear classifier head.
struct ModelState {
  std::vector<Matrix> gcn_weights;
  std::vector<GruGates> gru;  // empty when weights are not evolved
  Matrix classifier_w;        // (feature_dim x classes)
  std::vector<double> classifier_b;
};

// ---------------------------------------------------------------------------
// Initialization
// ---------------------------------------------------------------------------

/// uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
inline Matrix glorot_init(std::size_t rows, std::size_t cols, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (double& v : m.data) v = rng.uniform(-a, a);
  return m;
}

inline GruGates init_gru_gates(std::size_t rows, std::size_t cols, Rng& rng) {
  GruGates g;
  g.u_update = glorot_init(rows, rows, rng);
  g.v_update = glorot_init(rows, rows, rng);
  g.b_update = Matrix(rows, cols, 0.0);
  g.u_reset = glorot_init(rows, rows, rng);
  g.v_reset = glorot_init(rows, rows, rng);
  g.b_reset = Matrix(rows, cols, 0.0);
  g.u_cand = glorot_init(rows, rows, rng);
  g.v_cand = glorot_init(rows, rows, rng);
  g.b_cand = Matrix(rows, cols, 0.0);
  return g;
}

// ---------------------------------------------------------------------------
// Forward kernels
// ---------------------------------------------------------------------------

/// D^{-1/2} (A + I) D^{-1/2} over index positions 0..n-1.
inline Matrix normalize_adjacency_dense(
    std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) a.at(i, i) = 1.0;
  for (const auto& [i, j] : edges) {
    a.at(i, j) = 1.0;
    a.at(j, i) = 1.0;
  }
  std::vector<double> dinv(n);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < n; ++j) deg += a.at(i, j);
    dinv[i] = 1.0 / std::sqrt(deg);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a.at(i, j) *= dinv[i] * dinv[j];
  return a;
}

/// Normalized adjacency aligned to the snapshot's node order.
inline Matrix normalize_adjacency(const GraphSnapshot& g) {
  const SnapshotIndex idx = build_index(g);
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  edges.reserve(g.edges.size());
  for (const Edge& e : g.edges)
    edges.emplace_back(idx.pos.at(e.lo), idx.pos.at(e.hi));
  return normalize_adjacency_dense(g.num_nodes(), edges);
}

/// Cached intermediates of one two-layer GCN forward pass.
struct GcnCache {
  Matrix s1, p1, h1;  // s1 = A X, p1 = s1 W1, h1 = relu(p1)
  Matrix s2, p2, h;   // s2 = A h1, p2 = s2 W2, h = relu(p2)
};

/// H = ReLU(A_hat * ReLU(A_hat X W1) * W2).
inline Matrix gcn_forward(const Matrix& a_hat, const Matrix& x,
                          const std::vector<Matrix>& weights,
                          GcnCache* cache = nullptr) {
  if (weights.size() != 2)
    throw std::invalid_argument("gcn_forward: expected 2 layer weights");
  GcnCache local;
  GcnCache& c = cache ? *cache : local;
  c.s1 = matmul(a_hat, x);
  c.p1 = matmul(c.s1, weights[0]);
  c.h1 = relu(c.p1);
  c.s2 = matmul(a_hat, c.h1);
  c.p2 = matmul(c.s2, weights[1]);
  c.h = relu(c.p2);
  return c.h;
}

/// Cached intermediates of one gated recurrence step.
struct GruCache {
  Matrix w_prev, input;
  Matrix z, r, cand;  // gate activations
  Matrix w_next;
};

/// Z = sigma(Uz W + Vz I + Bz), R = sigma(Ur W + Vr I + Br),
/// W~ = tanh(Uh (R .* W) + Vh I + Bh), W' = (1-Z) .* W + Z .* W~.
inline Matrix matrix_gru_step(const Matrix& w_prev, const Matrix& input_summary,
                              const GruGates& g, GruCache* cache = nullptr) {
  require(w_prev.same_shape(input_summary), "matrix_gru_step input");
  require(g.u_update.rows == w_prev.rows && g.u_update.cols == w_prev.rows,
          "matrix_gru_step gates");
  require(g.b_update.same_shape(w_prev), "matrix_gru_step bias");

  GruCache local;
  GruCache& c = cache ? *cache : local;
  c.w_prev = w_prev;
  c.input = input_summary;
  c.z = sigmoid(add(add(matmul(g.u_update, w_prev), matmul(g.v_update, input_summary)),
                    g.b_update));
  c.r = sigmoid(add(add(matmul(g.u_reset, w_prev), matmul(g.v_reset, input_summary)),
                    g.b_reset));
  c.cand = tanh_m(add(add(matmul(g.u_cand, hadamard(c.r, w_prev)),
                          matmul(g.v_cand, input_summary)),
                      g.b_cand));
  Matrix keep = hadamard(map(c.z, [](double v) { return 1.0 - v; }), w_prev);
  c.w_next = add(keep, hadamard(c.z, c.cand));
  return c.w_next;
}

/// Column-wise mean of the rows entering a layer, extended cyclically to the
/// target column count and tiled down the target rows.
inline Matrix feature_summary_phi(const std::vector<std::vector<double>>& input_rows,
                                  std::size_t target_rows, std::size_t target_cols) {
  if (input_rows.empty())
    throw ConfigError("feature_summary_phi: empty graph");
  const std::size_t d = input_rows.front().size();
  std::vector<double> mean(d, 0.0);
  for (const auto& row : input_rows)
    for (std::size_t j = 0; j < d; ++j) mean[j] += row[j];
  for (double& v : mean) v /= static_cast<double>(input_rows.size());

  Matrix out(target_rows, target_cols);
  for (std::size_t i = 0; i < target_rows; ++i)
    for (std::size_t j = 0; j < target_cols; ++j) out.at(i, j) = mean[j % d];
  return out;
}

inline Matrix feature_summary_phi(const Matrix& layer_input, std::size_t target_rows,
                                  std::size_t target_cols) {
  if (layer_input.rows == 0)
    throw ConfigError("feature_summary_phi: empty graph");
  std::vector<double> mean = col_mean(layer_input);
  Matrix out(target_rows, target_cols);
  for (std::size_t i = 0; i < target_rows; ++i)
    for (std::size_t j = 0; j < target_cols; ++j) out.at(i, j) = mean[j % mean.size()];
  return out;
}

/// Distributes an upstream gradient on the phi output back to the layer
/// input rows (mean then cyclic tiling are both linear).
inline Matrix feature_summary_phi_backward(const Matrix& d_out,
                                           std::size_t input_rows,
                                           std::size_t input_cols) {
  std::vector<double> d_mean(input_cols, 0.0);
  for (std::size_t i = 0; i < d_out.rows; ++i)
    for (std::size_t j = 0; j < d_out.cols; ++j)
      d_mean[j % input_cols] += d_out.at(i, j);
  Matrix d_in(input_rows, input_cols);
  for (std::size_t i = 0; i < input_rows; ++i)
    for (std::size_t j = 0; j < input_cols; ++j)
      d_in.at(i, j) = d_mean[j] / static_cast<double>(input_rows);
  return d_in;
}

inline Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows, logits.cols);
  for (std::size_t i = 0; i < logits.rows; ++i) {
    double mx = logits.at(i, 0);
    for (std::size_t j = 1; j < logits.cols; ++j) mx = std::max(mx, logits.at(i, j));
    double sum = 0.0;
    for (std::size_t j = 0; j < logits.cols; ++j) {
      p.at(i, j) = std::exp(logits.at(i, j) - mx);
      sum += p.at(i, j);
    }
    for (std::size_t j = 0; j < logits.cols; ++j) p.at(i, j) /= sum;
  }
  return p;
}

struct XentResult {
  double loss = 0.0;
  Matrix grad;  // d loss / d logits
};

/// Mean masked cross-entropy with max-subtraction stabilization.
/// grad = (softmax - onehot) / count on masked rows, zero elsewhere.
inline XentResult softmax_xent(const Matrix& logits, const std::vector<int>& labels,
                               const std::vector<bool>& mask) {
  if (labels.size() != logits.rows || mask.size() != logits.rows)
    throw std::invalid_argument("softmax_xent: label/mask size mismatch");
  std::size_t count = 0;
  for (bool m : mask)
    if (m) ++count;
  if (count == 0) throw ConfigError("no supervised nodes");

  const Matrix p = softmax_rows(logits);
  XentResult res;
  res.grad = Matrix(logits.rows, logits.cols);
  for (std::size_t i = 0; i < logits.rows; ++i) {
    if (!mask[i]) continue;
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= logits.cols)
      throw std::invalid_argument("softmax_xent: label out of range");
    res.loss -= std::log(std::max(p.at(i, static_cast<std::size_t>(y)), 1e-300));
    for (std::size_t j = 0; j < logits.cols; ++j) {
      const double onehot = (static_cast<std::size_t>(y) == j) ? 1.0 : 0.0;
      res.grad.at(i, j) = (p.at(i, j) - onehot) / static_cast<double>(count);
    }
  }
  res.loss /= static_cast<double>(count);
  return res;
}

// ---------------------------------------------------------------------------
// Backward kernels
// ---------------------------------------------------------------------------

struct LinearBackward {
  Matrix d_w;
  std::vector<double> d_b;
  Matrix d_input;
};

/// logits = input W + b (b broadcast over rows).
inline Matrix linear_forward(const Matrix& input, const Matrix& w,
                             const std::vector<double>& b) {
  Matrix out = matmul(input, w);
  for (std::size_t i = 0; i < out.rows; ++i)
    for (std::size_t j = 0; j < out.cols; ++j) out.at(i, j) += b[j];
  return out;
}

inline LinearBackward linear_backward(const Matrix& input, const Matrix& w,
                                      const Matrix& d_logits) {
  LinearBackward res;
  res.d_w = matmul_tn(input, d_logits);
  res.d_b = col_sum(d_logits);
  res.d_input = matmul_nt(d_logits, w);
  return res;
}

struct GcnBackward {
  std::vector<Matrix> d_weights;  // per layer, wrt the weights used forward
  Matrix d_h1;                    // gradient on the layer-1 activation
};

inline GcnBackward gcn_backward(const GcnCache& c, const Matrix& a_hat,
                                const std::vector<Matrix>& weights,
                                const Matrix& d_h,
                                const Matrix* extra_d_h1 = nullptr) {
  GcnBackward res;
  const Matrix d_p2 = relu_grad(c.p2, d_h);
  Matrix d_w2 = matmul_tn(c.s2, d_p2);
  const Matrix d_s2 = matmul_nt(d_p2, weights[1]);
  Matrix d_h1 = matmul_tn(a_hat, d_s2);
  if (extra_d_h1) d_h1 = add(d_h1, *extra_d_h1);
  const Matrix d_p1 = relu_grad(c.p1, d_h1);
  Matrix d_w1 = matmul_tn(c.s1, d_p1);
  res.d_weights.push_back(std::move(d_w1));
  res.d_weights.push_back(std::move(d_w2));
  res.d_h1 = d_h1;
  return res;
}

struct GruBackward {
  GruGates d_gates;
  Matrix d_input;  // gradient on the input summary
};

/// Reverse step for matrix_gru_step. W_prev entering the step is treated as
/// a constant: credit assignment is truncated at snapshot boundaries.
inline GruBackward matrix_gru_backward(const GruCache& c, const GruGates& g,
                                       const Matrix& d_w_next) {
  GruBackward res;
  // w_next = (1 - z) .* w_prev + z .* cand
  Matrix d_z = hadamard(d_w_next, sub(c.cand, c.w_prev));
  Matrix d_cand = hadamard(d_w_next, c.z);

  // cand = tanh(pre_c), pre_c = u_cand (r .* w_prev) + v_cand input + b_cand
  Matrix d_pre_c = hadamard(d_cand, map(c.cand, [](double v) { return 1.0 - v * v; }));
  const Matrix gated_prev = hadamard(c.r, c.w_prev);
  res.d_gates.u_cand = matmul_nt(d_pre_c, gated_prev);
  res.d_gates.v_cand = matmul_nt(d_pre_c, c.input);
  res.d_gates.b_cand = d_pre_c;
  const Matrix d_gated = matmul_tn(g.u_cand, d_pre_c);
  Matrix d_r = hadamard(d_gated, c.w_prev);

  auto sigmoid_back = [](const Matrix& act, const Matrix& up) {
    Matrix out = up;
    for (std::size_t i = 0; i < out.data.size(); ++i)
      out.data[i] *= act.data[i] * (1.0 - act.data[i]);
    return out;
  };
  const Matrix d_pre_z = sigmoid_back(c.z, d_z);
  res.d_gates.u_update = matmul_nt(d_pre_z, c.w_prev);
  res.d_gates.v_update = matmul_nt(d_pre_z, c.input);
  res.d_gates.b_update = d_pre_z;

  const Matrix d_pre_r = sigmoid_back(c.r, d_r);
  res.d_gates.u_reset = matmul_nt(d_pre_r, c.w_prev);
  res.d_gates.v_reset = matmul_nt(d_pre_r, c.input);
  res.d_gates.b_reset = d_pre_r;

  res.d_input = add(add(matmul_tn(g.v_update, d_pre_z), matmul_tn(g.v_reset, d_pre_r)),
                    matmul_tn(g.v_cand, d_pre_c));
  return res;
}

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

struct ModelGrads {
  std::vector<Matrix> gcn_weights;
  std::vector<GruGates> gru;
  Matrix classifier_w;
  std::vector<double> classifier_b;
};

inline void sgd_gates(GruGates& p, const GruGates& g, double lr) {
  axpy_inplace(p.u_update, g.u_update, lr);
  axpy_inplace(p.v_update, g.v_update, lr);
  axpy_inplace(p.b_update, g.b_update, lr);
  axpy_inplace(p.u_reset, g.u_reset, lr);
  axpy_inplace(p.v_reset, g.v_reset, lr);
  axpy_inplace(p.b_reset, g.b_reset, lr);
  axpy_inplace(p.u_cand, g.u_cand, lr);
  axpy_inplace(p.v_cand, g.v_cand, lr);
  axpy_inplace(p.b_cand, g.b_cand, lr);
}

/// p <- p - lr * g for every parameter present in the gradient set.
inline ModelState sgd_step(ModelState state, const ModelGrads& grads, double lr) {
  if (lr <= 0.0) throw ConfigError("sgd_step: lr must be positive");
  for (std::size_t l = 0; l < grads.gcn_weights.size(); ++l)
    axpy_inplace(state.gcn_weights[l], grads.gcn_weights[l], lr);
  for (std::size_t l = 0; l < grads.gru.size(); ++l)
    sgd_gates(state.gru[l], grads.gru[l], lr);
  if (grads.classifier_w.rows > 0)
    axpy_inplace(state.classifier_w, grads.classifier_w, lr);
  for (std::size_t j = 0; j < grads.classifier_b.size(); ++j)
    state.classifier_b[j] -= lr * grads.classifier_b[j];
  return state;
}

inline bool state_finite(const ModelState& s) {
  for (const Matrix& w : s.gcn_weights)
    if (!all_finite(w)) return false;
  for (const GruGates& g : s.gru) {
    for (const Matrix* m : {&g.u_update, &g.v_update, &g.b_update, &g.u_reset,
                            &g.v_reset, &g.b_reset, &g.u_cand, &g.v_cand, &g.b_cand})
      if (!all_finite(*m)) return false;
  }
  if (!all_finite(s.classifier_w)) return false;
  for (double v : s.classifier_b)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace ccc
