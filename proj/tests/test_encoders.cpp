/*
 * Copyright 2026 The strec Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "strec/encoders.hpp"
#include "strec/rng.hpp"

using namespace strec;

namespace {

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1e-6, std::abs(a), std::abs(b)});
}

Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (Index i = 0; i < t.numel(); ++i) t[i] = scale * rng.normal();
  return t;
}

using ParamList = std::vector<std::pair<std::string, Tensor>>;
using BuildFn = std::function<Var(Graph&, std::map<std::string, Var>&)>;

double eval_loss(const ParamList& params, const BuildFn& build) {
  Graph g;
  std::map<std::string, Var> vars;
  for (const auto& [name, value] : params) vars[name] = g.parameter(name, value);
  return build(g, vars).value().value();
}

// Tape gradients versus central differences for every named parameter.
void check_encoder_grads(const ParamList& params, const BuildFn& build) {
  Graph g;
  std::map<std::string, Var> vars;
  for (const auto& [name, value] : params) vars[name] = g.parameter(name, value);
  g.backward(build(g, vars));

  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor fd = finite_difference_gradient(
        [&](const Tensor& probe) {
          ParamList probed = params;
          probed[i].second = probe;
          return eval_loss(probed, build);
        },
        params[i].second, 1e-5);
    const Tensor& analytic = g.grad(params[i].first);
    for (Index j = 0; j < fd.numel(); ++j) {
      INFO(params[i].first, " coordinate ", j, ": tape ", analytic[j], " vs fd ", fd[j]);
      CHECK(rel_err(analytic[j], fd[j]) < 1e-4);
    }
  }
}

// Scalar-loop attention oracle for a single sample; a deliberately
// different evaluation path from the tensorized implementation.
std::vector<double> target_attention_oracle(const std::vector<double>& e_i, const std::vector<std::vector<double>>& e_b,
                                            const std::vector<double>& mask, const Tensor& wq, const Tensor& wk,
                                            const Tensor& wv, int heads) {
  const int d_i = static_cast<int>(e_i.size());
  const int len = static_cast<int>(e_b.size());
  const int d = static_cast<int>(wq.dim(1));
  const int dh = d / heads;

  std::vector<double> q(d, 0.0);
  for (int j = 0; j < d; ++j) {
    for (int a = 0; a < d_i; ++a) q[j] += e_i[a] * wq.at({a, j});
  }
  std::vector<std::vector<double>> k(len, std::vector<double>(d, 0.0)), v = k;
  for (int l = 0; l < len; ++l) {
    for (int j = 0; j < d; ++j) {
      for (int a = 0; a < d; ++a) {
        k[l][j] += e_b[l][a] * wk.at({a, j});
        v[l][j] += e_b[l][a] * wv.at({a, j});
      }
    }
  }

  std::vector<double> out(d, 0.0);
  bool any = false;
  for (double m : mask) any = any || m == 1.0;
  if (!any) return out;

  for (int h = 0; h < heads; ++h) {
    std::vector<double> weights(len, 0.0);
    double denom = 0.0;
    for (int l = 0; l < len; ++l) {
      if (mask[l] != 1.0) continue;
      double score = 0.0;
      for (int j = 0; j < dh; ++j) score += q[h * dh + j] * k[l][h * dh + j];
      weights[l] = std::exp(score / std::sqrt(static_cast<double>(dh)));
      denom += weights[l];
    }
    for (int l = 0; l < len; ++l) {
      if (mask[l] != 1.0) continue;
      for (int j = 0; j < dh; ++j) out[h * dh + j] += (weights[l] / denom) * v[l][h * dh + j];
    }
  }
  return out;
}

}  // namespace

TEST_CASE("target attention on a single valid event is its value projection") {
  Rng rng(11);
  const Index d_i = 3, d = 4;
  Graph g;
  MhtaParams p{g.parameter("wq", random_tensor({d_i, d}, rng)), g.parameter("wk", random_tensor({d, d}, rng)),
               g.parameter("wv", random_tensor({d, d}, rng)), 2};
  Tensor eb = random_tensor({1, 2, d}, rng);
  Tensor mask = Tensor::from({1, 2}, {1, 0});

  Var s1 = mhta(g.constant(random_tensor({1, d_i}, rng)), g.constant(eb), mask, p);
  Var s2 = mhta(g.constant(random_tensor({1, d_i}, rng)), g.constant(eb), mask, p);

  // independent of the query
  for (Index j = 0; j < d; ++j) CHECK(s1.value()[j] == doctest::Approx(s2.value()[j]).epsilon(1e-12));

  // equals e_b[0] * W_V
  Var expect = matmul(slice_last(reshape(g.constant(eb), {2, d}), 0, d), p.w_v);
  for (Index j = 0; j < d; ++j) {
    CHECK(s1.value()[j] == doctest::Approx(expect.value().at({0, j})).epsilon(1e-10));
  }
}

TEST_CASE("two identical events collapse to the single-event output") {
  Rng rng(12);
  const Index d_i = 2, d = 4;
  Graph g;
  MhtaParams p{g.parameter("wq", random_tensor({d_i, d}, rng)), g.parameter("wk", random_tensor({d, d}, rng)),
               g.parameter("wv", random_tensor({d, d}, rng)), 2};
  Tensor event = random_tensor({d}, rng);
  Tensor pair = Tensor::zeros({1, 2, d});
  Tensor single = Tensor::zeros({1, 1, d});
  for (Index j = 0; j < d; ++j) {
    pair.at({0, 0, j}) = pair.at({0, 1, j}) = event[j];
    single.at({0, 0, j}) = event[j];
  }
  Tensor query = random_tensor({1, d_i}, rng);

  Var both = mhta(g.constant(query), g.constant(pair), Tensor::from({1, 2}, {1, 1}), p);
  Var one = mhta(g.constant(query), g.constant(single), Tensor::from({1, 1}, {1}), p);
  for (Index j = 0; j < d; ++j) CHECK(both.value()[j] == doctest::Approx(one.value()[j]).epsilon(1e-12));
}

TEST_CASE("target attention matches the scalar oracle on a fixed instance") {
  const Tensor wq = Tensor::from({2, 4}, {0.5, -0.2, 0.1, 0.7, -0.3, 0.4, 0.6, -0.1});
  const Tensor wk = Tensor::from({4, 4}, {0.2, -0.1, 0.3, 0.05, 0.4, 0.1, -0.2, 0.3,
                                          -0.5, 0.2, 0.1, 0.6, 0.3, -0.4, 0.2, 0.1});
  const Tensor wv = Tensor::from({4, 4}, {0.1, 0.2, -0.3, 0.4, -0.2, 0.5, 0.1, -0.1,
                                          0.3, -0.2, 0.4, 0.2, 0.6, 0.1, -0.5, 0.3});
  const std::vector<double> e_i = {0.8, -0.6};
  const std::vector<std::vector<double>> e_b = {{0.3, -0.2, 0.5, 0.1}, {-0.4, 0.6, 0.2, -0.3}};

  Graph g;
  MhtaParams p{g.constant(wq), g.constant(wk), g.constant(wv), 2};
  Tensor eb = Tensor::zeros({1, 2, 4});
  for (Index l = 0; l < 2; ++l) {
    for (Index j = 0; j < 4; ++j) eb.at({0, l, j}) = e_b[static_cast<std::size_t>(l)][static_cast<std::size_t>(j)];
  }
  AttentionTrace trace;
  Var s = mhta(g.constant(Tensor::from({1, 2}, {0.8, -0.6})), g.constant(eb), Tensor::from({1, 2}, {1, 1}), p,
               &trace);
  const std::vector<double> want = target_attention_oracle(e_i, e_b, {1, 1}, wq, wk, wv, 2);
  for (Index j = 0; j < 4; ++j) CHECK(std::abs(s.value()[j] - want[static_cast<std::size_t>(j)]) < 1e-10);
  REQUIRE(trace.head_probs.size() == 2);
  for (const Tensor& probs : trace.head_probs) {
    CHECK(std::abs(probs.data().sum() - 1.0) < 1e-10);
  }
}

TEST_CASE("attention rows normalize over valid positions and masked rows vanish") {
  Rng rng(77);
  const Index batch = 5, len = 6, d = 8, d_i = 4;
  for (int round = 0; round < 20; ++round) {
    Graph g;
    MhtaParams p{g.parameter("wq", random_tensor({d_i, d}, rng)), g.parameter("wk", random_tensor({d, d}, rng)),
                 g.parameter("wv", random_tensor({d, d}, rng)), 4};
    Tensor mask = Tensor::zeros({batch, len});
    for (Index b = 0; b < batch; ++b) {
      for (Index l = 0; l < len; ++l) mask.at({b, l}) = rng.uniform() < 0.6 ? 1.0 : 0.0;
    }
    // force one fully-masked row
    for (Index l = 0; l < len; ++l) mask.at({0, l}) = 0.0;

    AttentionTrace trace;
    Var s = mhta(g.constant(random_tensor({batch, d_i}, rng)), g.constant(random_tensor({batch, len, d}, rng)),
                 mask, p, &trace);

    for (const Tensor& probs : trace.head_probs) {
      for (Index b = 0; b < batch; ++b) {
        bool any = false;
        for (Index l = 0; l < len; ++l) any = any || mask.at({b, l}) == 1.0;
        if (!any) continue;
        double valid_sum = 0.0;
        for (Index l = 0; l < len; ++l) {
          const double w = probs.at({b, 0, l});
          if (mask.at({b, l}) == 1.0) {
            valid_sum += w;
          } else {
            CHECK(w == 0.0);
          }
        }
        CHECK(std::abs(valid_sum - 1.0) < 1e-10);
      }
    }
    for (Index j = 0; j < d; ++j) CHECK(s.value().at({0, j}) == 0.0);
  }
}

TEST_CASE("target attention is a set function over events") {
  Rng rng(88);
  const Index d_i = 3, d = 6;
  Graph g;
  MhtaParams p{g.parameter("wq", random_tensor({d_i, d}, rng)), g.parameter("wk", random_tensor({d, d}, rng)),
               g.parameter("wv", random_tensor({d, d}, rng)), 3};
  Tensor eb = random_tensor({1, 4, d}, rng);
  Tensor query = random_tensor({1, d_i}, rng);
  Tensor mask = Tensor::from({1, 4}, {1, 1, 0, 1});

  Tensor perm_eb = Tensor::zeros({1, 4, d});
  const Index order[4] = {3, 0, 2, 1};
  Tensor perm_mask = Tensor::zeros({1, 4});
  for (Index l = 0; l < 4; ++l) {
    perm_mask.at({0, l}) = mask.at({0, order[l]});
    for (Index j = 0; j < d; ++j) perm_eb.at({0, l, j}) = eb.at({0, order[l], j});
  }

  Var a = mhta(g.constant(query), g.constant(eb), mask, p);
  Var b = mhta(g.constant(query), g.constant(perm_eb), perm_mask, p);
  for (Index j = 0; j < d; ++j) CHECK(a.value()[j] == doctest::Approx(b.value()[j]).epsilon(1e-12));
}

TEST_CASE("mean pooling") {
  Rng rng(21);
  Graph g;
  SUBCASE("single valid event passes through") {
    Tensor eb = random_tensor({1, 3, 4}, rng);
    Var m = mean_pool(g.constant(eb), Tensor::from({1, 3}, {0, 1, 0}));
    for (Index j = 0; j < 4; ++j) CHECK(m.value()[j] == doctest::Approx(eb.at({0, 1, j})).epsilon(1e-12));
  }
  SUBCASE("opposite events cancel") {
    Tensor eb = Tensor::zeros({1, 2, 3});
    for (Index j = 0; j < 3; ++j) {
      eb.at({0, 0, j}) = 1.0 + j;
      eb.at({0, 1, j}) = -(1.0 + j);
    }
    Var m = mean_pool(g.constant(eb), Tensor::from({1, 2}, {1, 1}));
    for (Index j = 0; j < 3; ++j) CHECK(m.value()[j] == 0.0);
  }
  SUBCASE("three events average to their arithmetic mean") {
    Tensor eb = random_tensor({1, 3, 5}, rng);
    Var m = mean_pool(g.constant(eb), Tensor::from({1, 3}, {1, 1, 1}));
    for (Index j = 0; j < 5; ++j) {
      const double want = (eb.at({0, 0, j}) + eb.at({0, 1, j}) + eb.at({0, 2, j})) / 3.0;
      CHECK(std::abs(m.value()[j] - want) < 1e-12);
    }
  }
}

TEST_CASE("self attention single position is value projection plus residual") {
  Rng rng(31);
  const Index d = 4;
  Graph g;
  MhtaParams p{g.parameter("wq", random_tensor({d, d}, rng)), g.parameter("wk", random_tensor({d, d}, rng)),
               g.parameter("wv", random_tensor({d, d}, rng)), 2};
  Tensor eb = random_tensor({1, 1, d}, rng);
  Var out = self_attention_encode(g.constant(eb), Tensor::from({1, 1}, {1}), p);
  Var vproj = matmul(reshape(g.constant(eb), {1, d}), p.w_v);
  for (Index j = 0; j < d; ++j) {
    CHECK(out.value().at({0, 0, j}) ==
          doctest::Approx(vproj.value().at({0, j}) + eb.at({0, 0, j})).epsilon(1e-10));
  }
}

TEST_CASE("self attention is permutation equivariant without position encoding") {
  Rng rng(32);
  const Index len = 4, d = 6;
  Graph g;
  MhtaParams p{g.parameter("wq", random_tensor({d, d}, rng)), g.parameter("wk", random_tensor({d, d}, rng)),
               g.parameter("wv", random_tensor({d, d}, rng)), 2};
  Tensor eb = random_tensor({1, len, d}, rng);
  Tensor mask = Tensor::full({1, len}, 1.0);

  const Index order[4] = {2, 0, 3, 1};
  Tensor perm = Tensor::zeros({1, len, d});
  for (Index l = 0; l < len; ++l) {
    for (Index j = 0; j < d; ++j) perm.at({0, l, j}) = eb.at({0, order[l], j});
  }

  Var a = self_attention_encode(g.constant(eb), mask, p);
  Var b = self_attention_encode(g.constant(perm), mask, p);
  for (Index l = 0; l < len; ++l) {
    for (Index j = 0; j < d; ++j) {
      CHECK(b.value().at({0, l, j}) == doctest::Approx(a.value().at({0, order[l], j})).epsilon(1e-12));
    }
  }
}

TEST_CASE("self attention matches a scalar oracle and zeroes masked rows") {
  Rng rng(33);
  const Index len = 3, d = 4;
  const int heads = 2, dh = 2;
  Tensor wq = random_tensor({d, d}, rng), wk = random_tensor({d, d}, rng), wv = random_tensor({d, d}, rng);
  Tensor eb = random_tensor({1, len, d}, rng);
  Tensor mask = Tensor::from({1, 3}, {1, 1, 0});

  Graph g;
  MhtaParams p{g.constant(wq), g.constant(wk), g.constant(wv), heads};
  AttentionTrace trace;
  Var out = self_attention_encode(g.constant(eb), mask, p, &trace);

  // scalar re-evaluation
  auto proj = [&](const Tensor& w, Index l, Index j) {
    double s = 0.0;
    for (Index a = 0; a < d; ++a) s += eb.at({0, l, a}) * w.at({a, j});
    return s;
  };
  for (Index q = 0; q < 2; ++q) {  // valid rows only
    for (int h = 0; h < heads; ++h) {
      double denom = 0.0;
      std::vector<double> w(2, 0.0);
      for (Index key = 0; key < 2; ++key) {
        double score = 0.0;
        for (int j = 0; j < dh; ++j) score += proj(wq, q, h * dh + j) * proj(wk, key, h * dh + j);
        w[static_cast<std::size_t>(key)] = std::exp(score / std::sqrt(2.0));
        denom += w[static_cast<std::size_t>(key)];
      }
      for (int j = 0; j < dh; ++j) {
        double want = eb.at({0, q, h * dh + j});  // residual
        for (Index key = 0; key < 2; ++key) {
          want += (w[static_cast<std::size_t>(key)] / denom) * proj(wv, key, h * dh + j);
        }
        CHECK(std::abs(out.value().at({0, q, h * dh + j}) - want) < 1e-10);
      }
    }
  }
  for (Index j = 0; j < d; ++j) CHECK(out.value().at({0, 2, j}) == 0.0);
  REQUIRE(trace.head_probs.size() == 2);
  for (const Tensor& probs : trace.head_probs) {
    for (Index q = 0; q < 2; ++q) {
      CHECK(std::abs(probs.at({0, q, 0}) + probs.at({0, q, 1}) - 1.0) < 1e-10);
      CHECK(probs.at({0, q, 2}) == 0.0);
    }
  }
}

TEST_CASE("gru follows the gate recurrence") {
  SUBCASE("zero weights and inputs give a zero state") {
    Graph g;
    GruParams p{g.constant(Tensor::zeros({3, 2})), g.constant(Tensor::zeros({2, 2})), g.constant(Tensor::zeros({2})),
                g.constant(Tensor::zeros({3, 2})), g.constant(Tensor::zeros({2, 2})), g.constant(Tensor::zeros({2})),
                g.constant(Tensor::zeros({3, 2})), g.constant(Tensor::zeros({2, 2})), g.constant(Tensor::zeros({2}))};
    Var h = gru_encode(g.constant(Tensor::zeros({2, 4, 3})), Tensor::full({2, 4}, 1.0), p);
    CHECK(h.value().data().isZero());
  }
  SUBCASE("empty sequences give a zero state") {
    Rng rng(41);
    Graph g;
    GruParams p{g.parameter("wz", random_tensor({3, 2}, rng)), g.parameter("uz", random_tensor({2, 2}, rng)),
                g.parameter("bz", random_tensor({2}, rng)),    g.parameter("wr", random_tensor({3, 2}, rng)),
                g.parameter("ur", random_tensor({2, 2}, rng)), g.parameter("br", random_tensor({2}, rng)),
                g.parameter("wh", random_tensor({3, 2}, rng)), g.parameter("uh", random_tensor({2, 2}, rng)),
                g.parameter("bh", random_tensor({2}, rng))};
    Var h = gru_encode(g.constant(random_tensor({1, 4, 3}, rng)), Tensor::zeros({1, 4}), p);
    CHECK(h.value().data().isZero());
  }
  SUBCASE("two steps match the unrolled recurrence") {
    Rng rng(42);
    const Index d = 2, dh = 2;
    Tensor wz = random_tensor({d, dh}, rng), uz = random_tensor({dh, dh}, rng), bz = random_tensor({dh}, rng);
    Tensor wr = random_tensor({d, dh}, rng), ur = random_tensor({dh, dh}, rng), br = random_tensor({dh}, rng);
    Tensor wh = random_tensor({d, dh}, rng), uh = random_tensor({dh, dh}, rng), bh = random_tensor({dh}, rng);
    Tensor eb = random_tensor({1, 2, d}, rng);

    Graph g;
    GruParams p{g.constant(wz), g.constant(uz), g.constant(bz), g.constant(wr), g.constant(ur),
                g.constant(br), g.constant(wh), g.constant(uh), g.constant(bh)};
    Var out = gru_encode(g.constant(eb), Tensor::full({1, 2}, 1.0), p);

    auto sig = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
    std::vector<double> h(static_cast<std::size_t>(dh), 0.0);
    for (Index t = 0; t < 2; ++t) {
      std::vector<double> z(2), r(2), cand(2), next(2);
      for (Index j = 0; j < dh; ++j) {
        double az = bz[j], ar = br[j];
        for (Index a = 0; a < d; ++a) {
          az += eb.at({0, t, a}) * wz.at({a, j});
          ar += eb.at({0, t, a}) * wr.at({a, j});
        }
        for (Index a = 0; a < dh; ++a) {
          az += h[static_cast<std::size_t>(a)] * uz.at({a, j});
          ar += h[static_cast<std::size_t>(a)] * ur.at({a, j});
        }
        z[static_cast<std::size_t>(j)] = sig(az);
        r[static_cast<std::size_t>(j)] = sig(ar);
      }
      for (Index j = 0; j < dh; ++j) {
        double ah = bh[j];
        for (Index a = 0; a < d; ++a) ah += eb.at({0, t, a}) * wh.at({a, j});
        for (Index a = 0; a < dh; ++a) {
          ah += r[static_cast<std::size_t>(a)] * h[static_cast<std::size_t>(a)] * uh.at({a, j});
        }
        cand[static_cast<std::size_t>(j)] = std::tanh(ah);
      }
      for (Index j = 0; j < dh; ++j) {
        const std::size_t js = static_cast<std::size_t>(j);
        next[js] = (1.0 - z[js]) * h[js] + z[js] * cand[js];
      }
      h = next;
    }
    for (Index j = 0; j < dh; ++j) CHECK(std::abs(out.value()[j] - h[static_cast<std::size_t>(j)]) < 1e-12);
  }
  SUBCASE("event order changes the state") {
    Rng rng(43);
    Graph g;
    GruParams p{g.parameter("wz", random_tensor({3, 4}, rng)), g.parameter("uz", random_tensor({4, 4}, rng)),
                g.parameter("bz", random_tensor({4}, rng)),    g.parameter("wr", random_tensor({3, 4}, rng)),
                g.parameter("ur", random_tensor({4, 4}, rng)), g.parameter("br", random_tensor({4}, rng)),
                g.parameter("wh", random_tensor({3, 4}, rng)), g.parameter("uh", random_tensor({4, 4}, rng)),
                g.parameter("bh", random_tensor({4}, rng))};
    Tensor eb = random_tensor({1, 2, 3}, rng);
    Tensor swapped = Tensor::zeros({1, 2, 3});
    for (Index j = 0; j < 3; ++j) {
      swapped.at({0, 0, j}) = eb.at({0, 1, j});
      swapped.at({0, 1, j}) = eb.at({0, 0, j});
    }
    Var a = gru_encode(g.constant(eb), Tensor::full({1, 2}, 1.0), p);
    Var b = gru_encode(g.constant(swapped), Tensor::full({1, 2}, 1.0), p);
    CHECK((a.value().data() - b.value().data()).norm() > 1e-3);
  }
}

TEST_CASE("encoder gradients match finite differences") {
  Rng rng(55);
  const Index batch = 2, len = 3, d = 4, d_i = 3, dh = 2;
  const Tensor eb = random_tensor({batch, len, d}, rng);
  const Tensor query = random_tensor({batch, d_i}, rng);
  const Tensor mask = Tensor::from({2, 3}, {1, 1, 0, 1, 1, 1});
  const Tensor probe_weights = random_tensor({batch, d}, rng);
  const Tensor probe_seq = random_tensor({batch, len, d}, rng);
  const Tensor probe_h = random_tensor({batch, dh}, rng);

  SUBCASE("target attention") {
    ParamList params = {{"wq", random_tensor({d_i, d}, rng)},
                        {"wk", random_tensor({d, d}, rng)},
                        {"wv", random_tensor({d, d}, rng)}};
    check_encoder_grads(params, [&](Graph& g, std::map<std::string, Var>& v) {
      MhtaParams p{v["wq"], v["wk"], v["wv"], 2};
      return sum(mul(mhta(g.constant(query), g.constant(eb), mask, p), g.constant(probe_weights)));
    });
  }
  SUBCASE("self attention") {
    ParamList params = {{"wq", random_tensor({d, d}, rng)},
                        {"wk", random_tensor({d, d}, rng)},
                        {"wv", random_tensor({d, d}, rng)}};
    check_encoder_grads(params, [&](Graph& g, std::map<std::string, Var>& v) {
      MhtaParams p{v["wq"], v["wk"], v["wv"], 2};
      return sum(mul(self_attention_encode(g.constant(eb), mask, p), g.constant(probe_seq)));
    });
  }
  SUBCASE("gru") {
    ParamList params = {{"wz", random_tensor({d, dh}, rng)}, {"uz", random_tensor({dh, dh}, rng)},
                        {"bz", random_tensor({dh}, rng)},    {"wr", random_tensor({d, dh}, rng)},
                        {"ur", random_tensor({dh, dh}, rng)}, {"br", random_tensor({dh}, rng)},
                        {"wh", random_tensor({d, dh}, rng)}, {"uh", random_tensor({dh, dh}, rng)},
                        {"bh", random_tensor({dh}, rng)}};
    check_encoder_grads(params, [&](Graph& g, std::map<std::string, Var>& v) {
      GruParams p{v["wz"], v["uz"], v["bz"], v["wr"], v["ur"], v["br"], v["wh"], v["uh"], v["bh"]};
      return sum(mul(gru_encode(g.constant(eb), mask, p), g.constant(probe_h)));
    });
  }
}

TEST_CASE("position encoding is the standard sinusoid table") {
  Tensor pe = position_encoding(3, 4);
  CHECK(pe.shape() == Shape{3, 4});
  CHECK(pe.at({0, 0}) == 0.0);
  CHECK(pe.at({0, 1}) == 1.0);
  CHECK(pe.at({0, 2}) == 0.0);
  CHECK(pe.at({0, 3}) == 1.0);
  CHECK(pe.at({1, 0}) == doctest::Approx(std::sin(1.0)).epsilon(1e-12));
  CHECK(pe.at({1, 1}) == doctest::Approx(std::cos(1.0)).epsilon(1e-12));
  CHECK(pe.at({1, 2}) == doctest::Approx(std::sin(0.01)).epsilon(1e-12));
  CHECK(pe.at({1, 3}) == doctest::Approx(std::cos(0.01)).epsilon(1e-12));
  CHECK(pe.at({2, 0}) == doctest::Approx(std::sin(2.0)).epsilon(1e-12));
  for (Index i = 0; i < pe.numel(); ++i) {
    CHECK(pe[i] <= 1.0);
    CHECK(pe[i] >= -1.0);
  }
  CHECK_THROWS_AS(position_encoding(0, 4), std::invalid_argument);
}

TEST_CASE("encoder parameter validation") {
  Rng rng(66);
  Graph g;
  Tensor eb = random_tensor({1, 2, 4}, rng);
  Tensor mask = Tensor::full({1, 2}, 1.0);

  MhtaParams bad_heads{g.constant(random_tensor({2, 4}, rng)), g.constant(random_tensor({4, 4}, rng)),
                       g.constant(random_tensor({4, 4}, rng)), 3};
  CHECK_THROWS_AS(mhta(g.constant(random_tensor({1, 2}, rng)), g.constant(eb), mask, bad_heads),
                  std::invalid_argument);

  MhtaParams bad_q{g.constant(random_tensor({3, 4}, rng)), g.constant(random_tensor({4, 4}, rng)),
                   g.constant(random_tensor({4, 4}, rng)), 2};
  CHECK_THROWS_AS(mhta(g.constant(random_tensor({1, 2}, rng)), g.constant(eb), mask, bad_q),
                  std::invalid_argument);

  MhtaParams bad_k{g.constant(random_tensor({2, 4}, rng)), g.constant(random_tensor({4, 3}, rng)),
                   g.constant(random_tensor({4, 4}, rng)), 2};
  CHECK_THROWS_AS(mhta(g.constant(random_tensor({1, 2}, rng)), g.constant(eb), mask, bad_k),
                  std::invalid_argument);

  CHECK_THROWS_AS(mhta(g.constant(random_tensor({1, 2}, rng)), g.constant(eb),
                       Tensor::full({1, 2}, 0.5), bad_q),
                  std::invalid_argument);

  GruParams bad_gru{g.constant(random_tensor({4, 2}, rng)), g.constant(random_tensor({3, 2}, rng)),
                    g.constant(random_tensor({2}, rng)),    g.constant(random_tensor({4, 2}, rng)),
                    g.constant(random_tensor({2, 2}, rng)), g.constant(random_tensor({2}, rng)),
                    g.constant(random_tensor({4, 2}, rng)), g.constant(random_tensor({2, 2}, rng)),
                    g.constant(random_tensor({2}, rng))};
  CHECK_THROWS_AS(gru_encode(g.constant(eb), mask, bad_gru), std::invalid_argument);
}
