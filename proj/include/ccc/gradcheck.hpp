#pragma once

// Central-finite-difference verification of every backward kernel, run on
// seeded random instances. Shared by the test suite and the CLI gradcheck
// subcommand.

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ccc/history.hpp"
#include "ccc/matrix.hpp"
#include "ccc/nn.hpp"
#include "ccc/rng.hpp"

namespace ccc {

struct GradCheckOptions {
  std::size_t instances = 20;
  double step = 1e-4;       // central-difference h
  double tolerance = 1e-4;  // max allowed relative error
  double inject_fault = 0.0;  // test hook: perturbs one analytic gradient
  std::uint64_t seed = 99;
};

struct GradCheckOpReport {
  std::string op;
  double max_rel_err = 0.0;
  bool pass = true;
};

struct GradCheckReport {
  std::vector<GradCheckOpReport> ops;
  bool pass = true;

  GradCheckOpReport& op(const std::string& name) {
    for (auto& r : ops)
      if (r.op == name) return r;
    ops.push_back({name, 0.0, true});
    return ops.back();
  }
};

namespace gradcheck_detail {

/// Symmetric relative error with a small absolute floor; finite differences
/// at h = 1e-4 leave several orders of magnitude of headroom below 1e-4.
inline double rel_err(double analytic, double numeric) {
  return std::fabs(analytic - numeric) /
         (std::fabs(analytic) + std::fabs(numeric) + 1e-2);
}

inline void check_matrix(GradCheckReport& rep, const GradCheckOptions& opt,
                         const std::string& op, Matrix& param, const Matrix& analytic,
                         const std::function<double()>& loss, bool fault_target) {
  auto& entry = rep.op(op);
  for (std::size_t i = 0; i < param.data.size(); ++i) {
    const double save = param.data[i];
    param.data[i] = save + opt.step;
    const double up = loss();
    param.data[i] = save - opt.step;
    const double down = loss();
    param.data[i] = save;
    const double numeric = (up - down) / (2.0 * opt.step);
    double a = analytic.data[i];
    if (fault_target && i == 0) a += opt.inject_fault;
    entry.max_rel_err = std::max(entry.max_rel_err, rel_err(a, numeric));
  }
  if (entry.max_rel_err > opt.tolerance) {
    entry.pass = false;
    rep.pass = false;
  }
}

inline void check_vector(GradCheckReport& rep, const GradCheckOptions& opt,
                         const std::string& op, std::vector<double>& param,
                         const std::vector<double>& analytic,
                         const std::function<double()>& loss) {
  auto& entry = rep.op(op);
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double save = param[i];
    param[i] = save + opt.step;
    const double up = loss();
    param[i] = save - opt.step;
    const double down = loss();
    param[i] = save;
    const double numeric = (up - down) / (2.0 * opt.step);
    entry.max_rel_err = std::max(entry.max_rel_err, rel_err(analytic[i], numeric));
  }
  if (entry.max_rel_err > opt.tolerance) {
    entry.pass = false;
    rep.pass = false;
  }
}

inline Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale) {
  Matrix m(r, c);
  for (double& v : m.data) v = rng.uniform(-scale, scale);
  return m;
}

inline Matrix random_adjacency(std::size_t n, Rng& rng) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.coin(0.5)) edges.emplace_back(i, j);
  return normalize_adjacency_dense(n, edges);
}

inline bool away_from_kinks(const Matrix& pre, double margin) {
  for (double v : pre.data)
    if (std::fabs(v) < margin) return false;
  return true;
}

}  // namespace gradcheck_detail

/// One seeded instance of the plain model: two GCN layers and a classifier.
/// Checks softmax, classifier, and GCN weight gradients.
inline void gradcheck_plain_instance(GradCheckReport& rep, const GradCheckOptions& opt,
                                     std::uint64_t seed) {
  using namespace gradcheck_detail;
  const std::size_t n = 5, d = 4, hidden = 6, classes = 3;

  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng rng(derive_seed(seed, attempt));
    Matrix a_hat = random_adjacency(n, rng);
    Matrix x = random_matrix(n, d, rng, 1.0);
    Matrix w1 = random_matrix(d, hidden, rng, 0.8);
    Matrix w2 = random_matrix(hidden, hidden, rng, 0.8);
    Matrix wc = random_matrix(hidden, classes, rng, 0.8);
    std::vector<double> b(classes);
    for (double& v : b) v = rng.uniform(-0.5, 0.5);
    std::vector<int> labels(n);
    for (int& y : labels) y = static_cast<int>(rng.index(classes));
    std::vector<bool> mask(n, true);
    mask[rng.index(n)] = false;  // exercise masking
    std::vector<Matrix> weights = {w1, w2};

    GcnCache cache;
    gcn_forward(a_hat, x, weights, &cache);
    if (!away_from_kinks(cache.p1, 10 * opt.step) ||
        !away_from_kinks(cache.p2, 10 * opt.step))
      continue;  // re-sample so the difference quotient never crosses a kink

    auto loss = [&]() {
      const Matrix h = gcn_forward(a_hat, x, weights);
      const Matrix logits = linear_forward(h, wc, b);
      return softmax_xent(logits, labels, mask).loss;
    };

    GcnCache fwd;
    const Matrix h = gcn_forward(a_hat, x, weights, &fwd);
    const Matrix logits = linear_forward(h, wc, b);
    const XentResult xr = softmax_xent(logits, labels, mask);

    // Direct check of the cross-entropy gradient wrt logits.
    {
      Matrix lg = logits;
      auto logit_loss = [&]() { return softmax_xent(lg, labels, mask).loss; };
      check_matrix(rep, opt, "softmax_xent/logits", lg, xr.grad, logit_loss, false);
    }

    const LinearBackward lb = linear_backward(h, wc, xr.grad);
    const GcnBackward gb = gcn_backward(fwd, a_hat, weights, lb.d_input);

    check_matrix(rep, opt, "classifier/w", wc, lb.d_w, loss,
                 opt.inject_fault != 0.0);
    check_vector(rep, opt, "classifier/b", b, lb.d_b, loss);
    check_matrix(rep, opt, "gcn/w1", weights[0], gb.d_weights[0], loss, false);
    check_matrix(rep, opt, "gcn/w2", weights[1], gb.d_weights[1], loss, false);
    return;
  }
}

/// One seeded instance of the evolving model: recurrence gates on both
/// layers, the phi summary path, and the classifier.
inline void gradcheck_evolved_instance(GradCheckReport& rep,
                                       const GradCheckOptions& opt,
                                       std::uint64_t seed) {
  using namespace gradcheck_detail;
  const std::size_t n = 5, d = 4, hidden = 6, embed = 5, classes = 3;

  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng rng(derive_seed(seed, 0x1000 + attempt));
    Matrix a_hat = random_adjacency(n, rng);
    Matrix x = random_matrix(n, d, rng, 1.0);
    std::vector<Matrix> w_prev = {random_matrix(d, hidden, rng, 0.8),
                                  random_matrix(hidden, embed, rng, 0.8)};
    std::vector<GruGates> gates = {init_gru_gates(d, hidden, rng),
                                   init_gru_gates(hidden, embed, rng)};
    Matrix wc = random_matrix(embed, classes, rng, 0.8);
    std::vector<double> b(classes);
    for (double& v : b) v = rng.uniform(-0.5, 0.5);
    std::vector<int> labels(n);
    for (int& y : labels) y = static_cast<int>(rng.index(classes));
    std::vector<bool> mask(n, true);

    auto forward = [&]() {
      return detail::evolve_and_forward(w_prev, gates, a_hat, x);
    };
    detail::EvolvedForward probe = forward();
    if (!away_from_kinks(probe.gcn.p1, 10 * opt.step) ||
        !away_from_kinks(probe.gcn.p2, 10 * opt.step))
      continue;

    auto loss = [&]() {
      const detail::EvolvedForward f = forward();
      const Matrix logits = linear_forward(f.gcn.h, wc, b);
      return softmax_xent(logits, labels, mask).loss;
    };

    const detail::EvolvedForward f = forward();
    const Matrix logits = linear_forward(f.gcn.h, wc, b);
    const XentResult xr = softmax_xent(logits, labels, mask);
    const LinearBackward lb = linear_backward(f.gcn.h, wc, xr.grad);
    const Matrix d_p2 = relu_grad(f.gcn.p2, lb.d_input);
    const Matrix d_w2 = matmul_tn(f.gcn.s2, d_p2);
    const GruBackward gb2 = matrix_gru_backward(f.gru[1], gates[1], d_w2);
    const Matrix d_s2 = matmul_nt(d_p2, f.evolved[1]);
    const Matrix d_h1_phi =
        feature_summary_phi_backward(gb2.d_input, f.gcn.h1.rows, f.gcn.h1.cols);
    const Matrix d_h1 = add(matmul_tn(a_hat, d_s2), d_h1_phi);
    const Matrix d_p1 = relu_grad(f.gcn.p1, d_h1);
    const Matrix d_w1 = matmul_tn(f.gcn.s1, d_p1);
    const GruBackward gb1 = matrix_gru_backward(f.gru[0], gates[0], d_w1);

    const std::vector<GruBackward> gbs = {gb1, gb2};
    for (std::size_t l = 0; l < 2; ++l) {
      const std::string tag = "gru" + std::to_string(l + 1);
      check_matrix(rep, opt, tag + "/u_update", gates[l].u_update,
                   gbs[l].d_gates.u_update, loss, false);
      check_matrix(rep, opt, tag + "/v_update", gates[l].v_update,
                   gbs[l].d_gates.v_update, loss, false);
      check_matrix(rep, opt, tag + "/b_update", gates[l].b_update,
                   gbs[l].d_gates.b_update, loss, false);
      check_matrix(rep, opt, tag + "/u_reset", gates[l].u_reset,
                   gbs[l].d_gates.u_reset, loss, false);
      check_matrix(rep, opt, tag + "/v_reset", gates[l].v_reset,
                   gbs[l].d_gates.v_reset, loss, false);
      check_matrix(rep, opt, tag + "/b_reset", gates[l].b_reset,
                   gbs[l].d_gates.b_reset, loss, false);
      check_matrix(rep, opt, tag + "/u_cand", gates[l].u_cand,
                   gbs[l].d_gates.u_cand, loss, false);
      check_matrix(rep, opt, tag + "/v_cand", gates[l].v_cand,
                   gbs[l].d_gates.v_cand, loss, false);
      check_matrix(rep, opt, tag + "/b_cand", gates[l].b_cand,
                   gbs[l].d_gates.b_cand, loss, false);
    }
    check_matrix(rep, opt, "evolved_classifier/w", wc, lb.d_w, loss, false);
    check_vector(rep, opt, "evolved_classifier/b", b, lb.d_b, loss);
    return;
  }
}

/// Runs the full finite-difference suite over seeded random instances.
inline GradCheckReport run_gradcheck(const GradCheckOptions& opt = {}) {
  GradCheckReport rep;
  for (std::size_t i = 0; i < opt.instances; ++i) {
    gradcheck_plain_instance(rep, opt, derive_seed(opt.seed, i));
    gradcheck_evolved_instance(rep, opt, derive_seed(opt.seed, i));
  }
  return rep;
}

}  // namespace ccc
