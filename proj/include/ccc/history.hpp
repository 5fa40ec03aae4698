#pragma once

// Trains the weight-evolving model over a condensed-graph sequence and
// extracts historical embeddings from the final condensed graph under the
// final evolved parameters.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ccc/condense.hpp"
#include "ccc/error.hpp"
#include "ccc/matrix.hpp"
#include "ccc/nn.hpp"
#include "ccc/rng.hpp"

namespace ccc {

struct HistoryConfig {
  std::size_t epochs = 100;
  double lr = 0.01;
  std::size_t hidden_dim = 32;  // layer-1 width
  std::size_t embed_dim = 32;   // d_h, the historical embedding width
  std::uint64_t seed = 0;
};

struct HistoryArtifacts {
  ModelState final_state;         // evolved weights after the last step
  Matrix historical_embeddings;   // |V(G_C^(last))| x embed_dim
  CondensedGraph condensed_final;
  std::vector<double> epoch_losses;  // mean loss per epoch
};

namespace detail {

/// Condensed edge weights are gated by theta at construction; the model
/// consumes them as a binary adjacency.
inline Matrix condensed_adjacency(const CondensedGraph& gc) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  edges.reserve(gc.weighted_edges.size());
  for (const WeightedEdge& e : gc.weighted_edges) edges.emplace_back(e.i, e.j);
  return normalize_adjacency_dense(gc.num_nodes(), edges);
}

struct EvolvedForward {
  std::vector<GruCache> gru;  // per layer
  GcnCache gcn;
  std::vector<Matrix> evolved;  // weights actually used this step
  Matrix phi1, phi2;
};

/// One recurrence + forward step: evolve W1 with phi of the node features,
/// run layer 1, evolve W2 with phi of the layer-1 activation, run layer 2.
inline EvolvedForward evolve_and_forward(const std::vector<Matrix>& w_prev,
                                         const std::vector<GruGates>& gates,
                                         const Matrix& a_hat, const Matrix& x) {
  EvolvedForward f;
  f.gru.resize(2);
  f.phi1 = feature_summary_phi(x, w_prev[0].rows, w_prev[0].cols);
  Matrix w1 = matrix_gru_step(w_prev[0], f.phi1, gates[0], &f.gru[0]);

  f.gcn.s1 = matmul(a_hat, x);
  f.gcn.p1 = matmul(f.gcn.s1, w1);
  f.gcn.h1 = relu(f.gcn.p1);

  f.phi2 = feature_summary_phi(f.gcn.h1, w_prev[1].rows, w_prev[1].cols);
  Matrix w2 = matrix_gru_step(w_prev[1], f.phi2, gates[1], &f.gru[1]);

  f.gcn.s2 = matmul(a_hat, f.gcn.h1);
  f.gcn.p2 = matmul(f.gcn.s2, w2);
  f.gcn.h = relu(f.gcn.p2);

  f.evolved = {std::move(w1), std::move(w2)};
  return f;
}

}  // namespace detail

/// Trains gate parameters and the classifier over the condensed sequence.
/// Each epoch replays the recurrence from the same initial weights; after
/// the last epoch the recurrence is replayed once more to produce the final
/// evolved parameters and the historical embeddings.
inline HistoryArtifacts train_history(const std::vector<CondensedGraph>& condensed,
                                      const HistoryConfig& cfg) {
  if (condensed.empty()) throw ConfigError("train_history: empty sequence");
  for (std::size_t t = 0; t < condensed.size(); ++t)
    if (condensed[t].num_nodes() == 0)
      throw ConfigError("train_history: degenerate graph at position " +
                        std::to_string(t));

  const std::size_t d = condensed.front().node_features.front().size();
  int max_label = 0;
  for (const CondensedGraph& gc : condensed) {
    if (gc.node_features.front().size() != d)
      throw ConfigError("train_history: feature dim mismatch across sequence");
    for (int y : gc.node_labels) max_label = std::max(max_label, y);
  }
  const std::size_t classes = static_cast<std::size_t>(max_label) + 1;

  Rng rng(derive_seed(cfg.seed, 0x48495354));
  ModelState state;
  state.gcn_weights = {glorot_init(d, cfg.hidden_dim, rng),
                       glorot_init(cfg.hidden_dim, cfg.embed_dim, rng)};
  state.gru = {init_gru_gates(d, cfg.hidden_dim, rng),
               init_gru_gates(cfg.hidden_dim, cfg.embed_dim, rng)};
  state.classifier_w = glorot_init(cfg.embed_dim, classes, rng);
  state.classifier_b.assign(classes, 0.0);

  std::vector<Matrix> a_hats;
  std::vector<Matrix> xs;
  std::vector<std::vector<int>> labels;
  std::vector<std::vector<bool>> masks;
  for (const CondensedGraph& gc : condensed) {
    a_hats.push_back(detail::condensed_adjacency(gc));
    xs.push_back(Matrix::from_rows(gc.node_features));
    labels.push_back(gc.node_labels);
    masks.emplace_back(gc.num_nodes(), true);  // every condensed node is labeled
  }

  HistoryArtifacts art;
  const std::vector<Matrix> w_init = state.gcn_weights;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<Matrix> w_prev = w_init;
    double epoch_loss = 0.0;
    for (std::size_t t = 0; t < condensed.size(); ++t) {
      detail::EvolvedForward f =
          detail::evolve_and_forward(w_prev, state.gru, a_hats[t], xs[t]);
      const Matrix logits = linear_forward(f.gcn.h, state.classifier_w,
                                           state.classifier_b);
      const XentResult xr = softmax_xent(logits, labels[t], masks[t]);
      epoch_loss += xr.loss;

      // Reverse pass: classifier, layer 2, its recurrence (whose input
      // summary feeds back into the layer-1 activation), layer 1, its
      // recurrence. W_prev stays constant.
      const LinearBackward lb =
          linear_backward(f.gcn.h, state.classifier_w, xr.grad);
      const Matrix d_p2 = relu_grad(f.gcn.p2, lb.d_input);
      const Matrix d_w2 = matmul_tn(f.gcn.s2, d_p2);
      const GruBackward gb2 = matrix_gru_backward(f.gru[1], state.gru[1], d_w2);

      const Matrix d_s2 = matmul_nt(d_p2, f.evolved[1]);
      const Matrix d_h1_phi =
          feature_summary_phi_backward(gb2.d_input, f.gcn.h1.rows, f.gcn.h1.cols);
      const Matrix d_h1 = add(matmul_tn(a_hats[t], d_s2), d_h1_phi);
      const Matrix d_p1 = relu_grad(f.gcn.p1, d_h1);
      const Matrix d_w1 = matmul_tn(f.gcn.s1, d_p1);
      const GruBackward gb1 = matrix_gru_backward(f.gru[0], state.gru[0], d_w1);

      ModelGrads grads;
      grads.gru = {gb1.d_gates, gb2.d_gates};
      grads.classifier_w = lb.d_w;
      grads.classifier_b = lb.d_b;
      state = sgd_step(std::move(state), grads, cfg.lr);

      w_prev = f.evolved;
    }
    epoch_loss /= static_cast<double>(condensed.size());
    if (!std::isfinite(epoch_loss))
      throw NumericError("train_history: non-finite loss at epoch " +
                         std::to_string(epoch));
    art.epoch_losses.push_back(epoch_loss);
  }
  if (!state_finite(state)) throw NumericError("train_history: non-finite parameters");

  // Final replay with the trained gates; embeddings come from the last graph.
  std::vector<Matrix> w_prev = w_init;
  Matrix h_final;
  for (std::size_t t = 0; t < condensed.size(); ++t) {
    detail::EvolvedForward f =
        detail::evolve_and_forward(w_prev, state.gru, a_hats[t], xs[t]);
    w_prev = f.evolved;
    if (t + 1 == condensed.size()) h_final = f.gcn.h;
  }
  if (!all_finite(h_final))
    throw NumericError("train_history: non-finite embeddings");

  state.gcn_weights = w_prev;  // the evolved final parameters
  art.final_state = std::move(state);
  art.historical_embeddings = std::move(h_final);
  art.condensed_final = condensed.back();
  return art;
}

/// The stored embeddings; recomputing the forward pass of the final state on
/// the final condensed graph reproduces them exactly.
inline Matrix extract_embeddings(const HistoryArtifacts& art) {
  return art.historical_embeddings;
}

/// Layer-1 summary of a condensed graph's stored features.
inline Matrix feature_summary_phi(const CondensedGraph& gc, std::size_t target_rows,
                                  std::size_t target_cols) {
  return feature_summary_phi(gc.node_features, target_rows, target_cols);
}

}  // namespace ccc
