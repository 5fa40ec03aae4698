#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "ccc/gradcheck.hpp"
#include "ccc/graph.hpp"
#include "ccc/nn.hpp"
#include "ccc/rng.hpp"

using namespace ccc;

namespace {

GraphSnapshot tiny_graph(std::size_t n, const std::vector<Edge>& edges) {
  GraphSnapshot g;
  for (std::size_t i = 0; i < n; ++i) {
    g.node_ids.push_back(static_cast<NodeId>(i));
    g.features.push_back({0.0});
    g.labels.push_back(0);
  }
  g.edges = edges;
  return g;
}

// Scalar reference for one gated step, independent of the matrix kernels.
Matrix gru_reference(const Matrix& w, const Matrix& inp, const GruGates& g) {
  const std::size_t r = w.rows, c = w.cols;
  auto mm = [&](const Matrix& a, const Matrix& b) {
    Matrix out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
      for (std::size_t j = 0; j < b.cols; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < a.cols; ++k) acc += a.at(i, k) * b.at(k, j);
        out.at(i, j) = acc;
      }
    return out;
  };
  const Matrix uz = mm(g.u_update, w), vz = mm(g.v_update, inp);
  const Matrix ur = mm(g.u_reset, w), vr = mm(g.v_reset, inp);
  Matrix z(r, c), rt(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      z.at(i, j) = 1.0 / (1.0 + std::exp(-(uz.at(i, j) + vz.at(i, j) +
                                           g.b_update.at(i, j))));
      rt.at(i, j) = 1.0 / (1.0 + std::exp(-(ur.at(i, j) + vr.at(i, j) +
                                            g.b_reset.at(i, j))));
    }
  Matrix gated(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) gated.at(i, j) = rt.at(i, j) * w.at(i, j);
  const Matrix uh = mm(g.u_cand, gated), vh = mm(g.v_cand, inp);
  Matrix out(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      const double cand = std::tanh(uh.at(i, j) + vh.at(i, j) + g.b_cand.at(i, j));
      out.at(i, j) = (1.0 - z.at(i, j)) * w.at(i, j) + z.at(i, j) * cand;
    }
  return out;
}

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double s = 1.0) {
  Matrix m(r, c);
  for (double& v : m.data) v = rng.uniform(-s, s);
  return m;
}

}  // namespace

TEST_CASE("normalize_adjacency of a single node is [1]") {
  const Matrix a = normalize_adjacency(tiny_graph(1, {}));
  REQUIRE(a.rows == 1);
  CHECK(a.at(0, 0) == 1.0);
}

TEST_CASE("normalize_adjacency of one edge is all 0.5") {
  const Matrix a = normalize_adjacency(tiny_graph(2, {{0, 1}}));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      CHECK_THAT(a.at(i, j), Catch::Matchers::WithinAbs(0.5, 1e-12));
}

TEST_CASE("normalize_adjacency is symmetric with unit self-weight for isolates") {
  Rng rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    const std::size_t n = 2 + rng.index(10);
    std::vector<Edge> edges;
    for (std::size_t i = 0; i + 1 < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (rng.coin(0.3))
          edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>(j)});
    const GraphSnapshot g = tiny_graph(n, edges);
    const Matrix a = normalize_adjacency(g);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        CHECK_THAT(a.at(i, j), Catch::Matchers::WithinAbs(a.at(j, i), 1e-14));
    for (NodeId v : g.node_ids)
      if (neighbors(g, v).empty())
        CHECK(a.at(static_cast<std::size_t>(v), static_cast<std::size_t>(v)) == 1.0);
  }
}

TEST_CASE("normalize_adjacency spectral radius stays at most 1") {
  Rng rng(6);
  for (int rep = 0; rep < 10; ++rep) {
    const std::size_t n = 3 + rng.index(8);
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (rng.coin(0.4))
          edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>(j)});
    const Matrix a = normalize_adjacency(tiny_graph(n, edges));
    // Power iteration.
    Matrix v(n, 1, 1.0);
    double lambda = 0.0;
    for (int it = 0; it < 200; ++it) {
      const Matrix av = matmul(a, v);
      double norm = 0.0;
      for (double x : av.data) norm += x * x;
      norm = std::sqrt(norm);
      if (norm == 0.0) break;
      lambda = norm;
      v = scale(av, 1.0 / norm);
    }
    CHECK(lambda <= 1.0 + 1e-9);
  }
}

TEST_CASE("gcn_forward with zero weights is zero") {
  const GraphSnapshot g = tiny_graph(3, {{0, 1}, {1, 2}});
  const Matrix a = normalize_adjacency(g);
  Matrix x(3, 2, 1.0);
  const std::vector<Matrix> w = {Matrix(2, 4, 0.0), Matrix(4, 2, 0.0)};
  const Matrix h = gcn_forward(a, x, w);
  CHECK(max_abs(h) == 0.0);
}

TEST_CASE("gcn_forward on a single node composes the two layers") {
  const Matrix a(1, 1, 1.0);
  Matrix x(1, 2);
  x.at(0, 0) = 0.5;
  x.at(0, 1) = -2.0;
  Matrix w1(2, 2, 0.0);
  w1.at(0, 0) = 1.0;
  w1.at(1, 1) = 1.0;
  Matrix w2 = w1;
  const Matrix h = gcn_forward(a, x, {w1, w2});
  CHECK(h.at(0, 0) == 0.5);  // relu(relu(x))
  CHECK(h.at(0, 1) == 0.0);  // negative clipped by the first relu
}

TEST_CASE("gcn_forward matches an independently scripted dense multiply") {
  // 3-node path with small fixed weights, multiplied out by hand here with
  // scalar loops only.
  const GraphSnapshot g = tiny_graph(3, {{0, 1}, {1, 2}});
  const Matrix a = normalize_adjacency(g);
  Matrix x(3, 2);
  const double xv[3][2] = {{1.0, 2.0}, {-1.0, 0.5}, {0.25, -0.75}};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) x.at(i, j) = xv[i][j];
  Matrix w1(2, 3), w2(3, 2);
  const double w1v[2][3] = {{0.2, -0.1, 0.5}, {0.3, 0.4, -0.2}};
  const double w2v[3][2] = {{0.7, 0.1}, {-0.6, 0.2}, {0.05, -0.3}};
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j) w1.at(i, j) = w1v[i][j];
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) w2.at(i, j) = w2v[i][j];

  auto mm = [](const std::vector<std::vector<double>>& p,
               const std::vector<std::vector<double>>& q) {
    std::vector<std::vector<double>> out(p.size(),
                                         std::vector<double>(q[0].size(), 0.0));
    for (std::size_t i = 0; i < p.size(); ++i)
      for (std::size_t j = 0; j < q[0].size(); ++j)
        for (std::size_t k = 0; k < q.size(); ++k) out[i][j] += p[i][k] * q[k][j];
    return out;
  };
  auto rl = [](std::vector<std::vector<double>> m) {
    for (auto& row : m)
      for (double& v : row) v = v > 0.0 ? v : 0.0;
    return m;
  };
  std::vector<std::vector<double>> am(3, std::vector<double>(3));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) am[i][j] = a.at(i, j);
  std::vector<std::vector<double>> xm(xv[0], xv[0] + 2);
  xm = {{1.0, 2.0}, {-1.0, 0.5}, {0.25, -0.75}};
  std::vector<std::vector<double>> w1m = {{0.2, -0.1, 0.5}, {0.3, 0.4, -0.2}};
  std::vector<std::vector<double>> w2m = {{0.7, 0.1}, {-0.6, 0.2}, {0.05, -0.3}};
  const auto expect = rl(mm(mm(am, rl(mm(mm(am, xm), w1m))), w2m));

  const Matrix h = gcn_forward(a, x, {w1, w2});
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      CHECK_THAT(h.at(i, j), Catch::Matchers::WithinAbs(expect[i][j], 1e-9));
}

TEST_CASE("matrix_gru_step with all zeros keeps a zero state") {
  const std::size_t r = 3, c = 4;
  GruGates g;
  g.u_update = Matrix(r, r);
  g.v_update = Matrix(r, r);
  g.b_update = Matrix(r, c);
  g.u_reset = g.u_update;
  g.v_reset = g.v_update;
  g.b_reset = g.b_update;
  g.u_cand = g.u_update;
  g.v_cand = g.v_update;
  g.b_cand = g.b_update;
  GruCache cache;
  const Matrix next = matrix_gru_step(Matrix(r, c), Matrix(r, c), g, &cache);
  for (double v : cache.z.data) CHECK(v == 0.5);
  CHECK(max_abs(cache.cand) == 0.0);
  CHECK(max_abs(next) == 0.0);
}

TEST_CASE("matrix_gru_step with a saturated-closed update gate keeps W") {
  Rng rng(8);
  const std::size_t r = 3, c = 3;
  GruGates g;
  g.u_update = Matrix(r, r);
  g.v_update = Matrix(r, r);
  g.b_update = Matrix(r, c, -40.0);  // Z ~ 0
  g.u_reset = random_matrix(r, r, rng);
  g.v_reset = random_matrix(r, r, rng);
  g.b_reset = random_matrix(r, c, rng);
  g.u_cand = random_matrix(r, r, rng);
  g.v_cand = random_matrix(r, r, rng);
  g.b_cand = random_matrix(r, c, rng);
  const Matrix w = random_matrix(r, c, rng);
  const Matrix next = matrix_gru_step(w, random_matrix(r, c, rng), g);
  CHECK(max_abs(sub(next, w)) < 1e-6);
}

TEST_CASE("matrix_gru_step matches the scalar reference") {
  Rng rng(17);
  for (int rep = 0; rep < 10; ++rep) {
    const std::size_t r = 1 + rng.index(5), c = 1 + rng.index(5);
    GruGates g;
    g.u_update = random_matrix(r, r, rng);
    g.v_update = random_matrix(r, r, rng);
    g.b_update = random_matrix(r, c, rng);
    g.u_reset = random_matrix(r, r, rng);
    g.v_reset = random_matrix(r, r, rng);
    g.b_reset = random_matrix(r, c, rng);
    g.u_cand = random_matrix(r, r, rng);
    g.v_cand = random_matrix(r, r, rng);
    g.b_cand = random_matrix(r, c, rng);
    const Matrix w = random_matrix(r, c, rng);
    const Matrix inp = random_matrix(r, c, rng);
    const Matrix fast = matrix_gru_step(w, inp, g);
    const Matrix ref = gru_reference(w, inp, g);
    CHECK(max_abs(sub(fast, ref)) < 1e-9);
  }
}

TEST_CASE("matrix_gru_step output is bounded by gate convexity") {
  Rng rng(23);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t r = 2 + rng.index(4), c = 2 + rng.index(4);
    GruGates g = init_gru_gates(r, c, rng);
    const Matrix w = random_matrix(r, c, rng, 2.0);
    const Matrix next = matrix_gru_step(w, random_matrix(r, c, rng), g);
    CHECK(max_abs(next) <= std::max(max_abs(w), 1.0) + 1.0);
  }
}

TEST_CASE("matrix_gru_step rejects shape mismatches") {
  Rng rng(1);
  GruGates g = init_gru_gates(2, 3, rng);
  CHECK_THROWS(matrix_gru_step(Matrix(2, 3), Matrix(3, 2), g));
}

TEST_CASE("feature_summary_phi tiles the column mean") {
  // mean of (0,2) and (2,0) is (1,1).
  const Matrix out = feature_summary_phi(
      std::vector<std::vector<double>>{{0.0, 2.0}, {2.0, 0.0}}, 2, 2);
  for (double v : out.data) CHECK_THAT(v, Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("feature_summary_phi of equal rows reproduces the row") {
  const std::vector<std::vector<double>> rows = {{3.0, -1.0}, {3.0, -1.0}};
  const Matrix out = feature_summary_phi(rows, 4, 2);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(out.at(i, 0) == 3.0);
    CHECK(out.at(i, 1) == -1.0);
  }
}

TEST_CASE("feature_summary_phi of a single node tiles that node") {
  const Matrix out = feature_summary_phi(std::vector<std::vector<double>>{{5.0}}, 3, 2);
  for (double v : out.data) CHECK(v == 5.0);  // cyclic extension of a 1-vector
}

TEST_CASE("softmax_xent of uniform logits is ln C") {
  const std::size_t classes = 4;
  Matrix logits(3, classes, 0.7);
  const XentResult r = softmax_xent(logits, {0, 1, 2}, {true, true, true});
  CHECK_THAT(r.loss, Catch::Matchers::WithinAbs(std::log(4.0), 1e-12));
}

TEST_CASE("softmax_xent saturates toward zero loss on a huge correct margin") {
  Matrix logits(1, 3, 0.0);
  logits.at(0, 1) = 60.0;
  const XentResult r = softmax_xent(logits, {1}, {true});
  CHECK(r.loss < 1e-12);
}

TEST_CASE("softmax_xent rejects an empty mask") {
  CHECK_THROWS_WITH(softmax_xent(Matrix(2, 2), {0, 1}, {false, false}),
                    Catch::Matchers::ContainsSubstring("no supervised nodes"));
}

TEST_CASE("softmax rows sum to one") {
  Rng rng(3);
  Matrix logits = random_matrix(6, 5, rng, 8.0);
  const Matrix p = softmax_rows(logits);
  for (std::size_t i = 0; i < p.rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < p.cols; ++j) s += p.at(i, j);
    CHECK_THAT(s, Catch::Matchers::WithinAbs(1.0, 1e-12));
  }
}

TEST_CASE("relu subgradient at exactly zero is zero") {
  Matrix pre(1, 3);
  pre.at(0, 0) = 0.0;
  pre.at(0, 1) = 2.0;
  pre.at(0, 2) = -1.0;
  Matrix up(1, 3, 1.0);
  const Matrix g = relu_grad(pre, up);
  CHECK(g.at(0, 0) == 0.0);
  CHECK(g.at(0, 1) == 1.0);
  CHECK(g.at(0, 2) == 0.0);
}

TEST_CASE("sgd_step applies p <- p - lr*g") {
  ModelState s;
  s.gcn_weights = {Matrix(1, 1, 1.0)};
  s.classifier_w = Matrix(1, 1, 1.0);
  s.classifier_b = {1.0};
  ModelGrads g;
  g.gcn_weights = {Matrix(1, 1, 0.25)};
  g.classifier_w = Matrix(1, 1, 0.0);
  g.classifier_b = {0.0};
  const ModelState out = sgd_step(s, g, 1.0);
  CHECK(out.gcn_weights[0].at(0, 0) == 0.75);
  CHECK(out.classifier_w.at(0, 0) == 1.0);
}

TEST_CASE("sgd_step with zero grads leaves the state unchanged") {
  Rng rng(19);
  ModelState s;
  s.gcn_weights = {random_matrix(2, 3, rng)};
  s.classifier_w = random_matrix(3, 2, rng);
  s.classifier_b = {0.1, -0.2};
  ModelGrads g;
  g.gcn_weights = {Matrix(2, 3, 0.0)};
  g.classifier_w = Matrix(3, 2, 0.0);
  g.classifier_b = {0.0, 0.0};
  const ModelState out = sgd_step(s, g, 0.5);
  CHECK(max_abs(sub(out.gcn_weights[0], s.gcn_weights[0])) == 0.0);
  CHECK(max_abs(sub(out.classifier_w, s.classifier_w)) == 0.0);
}

TEST_CASE("gradient descent on a quadratic decreases monotonically") {
  // f(p) = 0.5 p^2, closed form p_k = p_0 (1 - lr)^k.
  ModelState s;
  s.gcn_weights = {Matrix(1, 1, 2.0)};
  s.classifier_w = Matrix(0, 0);
  double prev = 0.5 * 4.0;
  for (int k = 1; k <= 20; ++k) {
    ModelGrads g;
    g.gcn_weights = {s.gcn_weights[0]};  // grad of 0.5 p^2 is p
    s = sgd_step(std::move(s), g, 0.1);
    const double p = s.gcn_weights[0].at(0, 0);
    const double f = 0.5 * p * p;
    CHECK(f < prev);
    CHECK_THAT(p, Catch::Matchers::WithinAbs(2.0 * std::pow(0.9, k), 1e-12));
    prev = f;
  }
}

TEST_CASE("finite differences confirm every backward kernel") {
  GradCheckOptions opt;
  opt.instances = 4;  // the acceptance suite runs the full 20
  opt.seed = 1234;
  const GradCheckReport rep = run_gradcheck(opt);
  for (const auto& op : rep.ops) {
    INFO(op.op << " max rel err " << op.max_rel_err);
    CHECK(op.pass);
  }
  CHECK(rep.pass);
}

TEST_CASE("gradcheck detects an injected gradient fault") {
  GradCheckOptions opt;
  opt.instances = 1;
  opt.inject_fault = 0.05;
  const GradCheckReport rep = run_gradcheck(opt);
  CHECK_FALSE(rep.pass);
}

TEST_CASE("zero upstream gradient produces zero parameter gradients") {
  Rng rng(29);
  const Matrix h = random_matrix(4, 3, rng);
  const Matrix w = random_matrix(3, 2, rng);
  const LinearBackward lb = linear_backward(h, w, Matrix(4, 2, 0.0));
  CHECK(max_abs(lb.d_w) == 0.0);
  CHECK(max_abs(lb.d_input) == 0.0);
  for (double v : lb.d_b) CHECK(v == 0.0);
}
