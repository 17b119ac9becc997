#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "ssgn/error.hpp"
#include "ssgn/rng.hpp"
#include "ssgn/tensor.hpp"

using ssgn::make_row;
using ssgn::make_tensor;
using ssgn::TensorPtr;

namespace {

TensorPtr random_leaf(ssgn::Rng& rng, int rows, int cols, double scale = 1.0) {
  std::vector<double> v(static_cast<size_t>(rows) * cols);
  for (auto& x : v) x = rng.uniform(-scale, scale);
  return make_tensor(rows, cols, v, true);
}

// Central finite differences for every element of every leaf against the
// gradients produced by one backward() pass over build().
void check_grads(const std::vector<TensorPtr>& leaves,
                 const std::function<TensorPtr()>& build, double tol = 1e-6) {
  const TensorPtr root = build();
  REQUIRE(root->rows == 1);
  REQUIRE(root->cols == 1);
  for (const auto& l : leaves) {
    l->ensure_grad();
    l->zero_grad();
  }
  ssgn::backward(root);
  const double eps = 1e-5;
  for (const auto& l : leaves) {
    for (size_t i = 0; i < l->size(); ++i) {
      const double saved = l->values[i];
      l->values[i] = saved + eps;
      const double up = build()->values[0];
      l->values[i] = saved - eps;
      const double dn = build()->values[0];
      l->values[i] = saved;
      const double numeric = (up - dn) / (2.0 * eps);
      const double analytic = l->grad[i];
      const double err = std::abs(numeric - analytic) /
                         std::max({std::abs(numeric), std::abs(analytic), 1.0});
      CHECK(err < tol);
    }
  }
}

}  // namespace

TEST_CASE("linear hand cases") {
  const auto x = make_row({1, 2});
  const auto W = make_tensor(2, 2, {1, 1, 0, 1});
  const auto b = make_row({0, 0});
  const auto y = ssgn::linear(x, W, b);
  CHECK(y->values == std::vector<double>{3, 2});

  const auto eye = make_tensor(2, 2, {1, 0, 0, 1});
  const auto same = ssgn::linear(x, eye, nullptr);
  CHECK(same->values == x->values);

  const auto shifted = ssgn::linear(x, eye, make_row({10, 20}));
  CHECK(shifted->values == std::vector<double>{11, 22});
}

TEST_CASE("matmul and elementwise hand cases") {
  const auto a = make_tensor(2, 3, {1, 2, 3, 4, 5, 6});
  const auto b = make_tensor(3, 2, {7, 8, 9, 10, 11, 12});
  const auto c = ssgn::matmul(a, b);
  CHECK(c->values == std::vector<double>{58, 64, 139, 154});

  const auto t = ssgn::transpose(a);
  CHECK(t->rows == 3);
  CHECK(t->values == std::vector<double>{1, 4, 2, 5, 3, 6});

  CHECK(ssgn::add(a, a)->values == std::vector<double>{2, 4, 6, 8, 10, 12});
  CHECK(ssgn::sub(a, a)->values == std::vector<double>(6, 0.0));
  CHECK(ssgn::mul(a, a)->values == std::vector<double>{1, 4, 9, 16, 25, 36});
  CHECK(ssgn::scale(a, -2)->values == std::vector<double>{-2, -4, -6, -8, -10, -12});
  CHECK(ssgn::sum_all(a)->values[0] == 21);
  CHECK(ssgn::mean_all(a)->values[0] == 3.5);
  CHECK(ssgn::reshape(a, 3, 2)->values == a->values);
  CHECK(ssgn::add_row(a, make_row({10, 20, 30}))->values ==
        std::vector<double>{11, 22, 33, 14, 25, 36});
}

TEST_CASE("masked_softmax contract") {
  const auto uniform = ssgn::masked_softmax(make_row({3, 3, 3, 3}), {1, 1, 1, 1});
  for (const double v : uniform->values) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));

  const auto partial = ssgn::masked_softmax(make_row({0, 0, 0}), {1, 0, 1});
  CHECK(partial->values[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(partial->values[1] == 0.0);
  CHECK(partial->values[2] == doctest::Approx(0.5).epsilon(1e-12));

  const auto isolated = ssgn::masked_softmax(make_row({1, 2, 3}), {0, 0, 0});
  CHECK(isolated->values == std::vector<double>{0, 0, 0});

  ssgn::Rng rng(5);
  const auto logits = random_leaf(rng, 4, 6, 5.0);
  std::vector<char> mask(24);
  for (auto& m : mask) m = rng.uniform(0, 1) < 0.6;
  for (int j = 0; j < 6; ++j) mask[18 + j] = 0;  // force one all-false row
  const auto out = ssgn::masked_softmax(logits, mask);
  for (int i = 0; i < 4; ++i) {
    double row_sum = 0.0;
    bool any = false;
    for (int j = 0; j < 6; ++j) {
      const double v = out->at(i, j);
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      if (!mask[i * 6 + j]) CHECK(v == 0.0);
      row_sum += v;
      any = any || mask[i * 6 + j];
    }
    CHECK(row_sum == doctest::Approx(any ? 1.0 : 0.0).epsilon(1e-6));
  }

  // large logits stay finite
  const auto big = ssgn::masked_softmax(make_row({1000, 999, -1000}), {1, 1, 1});
  for (const double v : big->values) CHECK(std::isfinite(v));
  CHECK(big->values[0] > big->values[1]);
}

TEST_CASE("gradients match finite differences per op") {
  ssgn::Rng rng(31337);
  const auto x = random_leaf(rng, 3, 4);
  const auto y = random_leaf(rng, 3, 4);
  const auto W = random_leaf(rng, 5, 4);
  const auto b = random_leaf(rng, 1, 5);
  const auto m = random_leaf(rng, 4, 3);

  check_grads({x, y}, [&] { return ssgn::mean_all(ssgn::mul(ssgn::add(x, y), ssgn::sub(x, y))); });
  check_grads({x, m}, [&] { return ssgn::sum_all(ssgn::matmul(x, m)); });
  check_grads({x, W, b}, [&] { return ssgn::mean_all(ssgn::linear(x, W, b)); });
  check_grads({x}, [&] { return ssgn::mean_all(ssgn::tanh_op(ssgn::scale(x, 2.0))); });
  check_grads({x}, [&] { return ssgn::mean_all(ssgn::sigmoid(x)); });
  check_grads({x}, [&] { return ssgn::mean_all(ssgn::gelu(x)); }, 1e-5);
  check_grads({x}, [&] { return ssgn::mean_all(ssgn::softplus(ssgn::scale(x, 3.0))); });
  check_grads({x}, [&] { return ssgn::sum_all(ssgn::transpose(ssgn::reshape(x, 4, 3))); });
  check_grads({x}, [&] { return ssgn::mean_all(ssgn::slice_cols(ssgn::slice_rows(x, 1, 3), 1, 4)); });
  check_grads({x, y}, [&] {
    return ssgn::mean_all(ssgn::mul(ssgn::concat_rows({x, y}), ssgn::concat_rows({y, x})));
  });
  check_grads({x, y}, [&] {
    return ssgn::mean_all(ssgn::mul(ssgn::concat_cols({x, y}), ssgn::concat_cols({y, x})));
  });
  check_grads({x}, [&] { return ssgn::mean_all(ssgn::add_row(x, make_row({1, 2, 3, 4}))); });

  const auto gain = random_leaf(rng, 1, 4);
  const auto bias = random_leaf(rng, 1, 4);
  check_grads({x, gain, bias}, [&] {
    return ssgn::mean_all(ssgn::mul(ssgn::layer_norm(x, gain, bias), y));
  }, 1e-5);

  std::vector<char> mask = {1, 0, 1, 1, 1, 1, 0, 1, 0, 0, 0, 0};
  check_grads({x}, [&] {
    return ssgn::mean_all(ssgn::mul(ssgn::masked_softmax(x, mask), y));
  }, 1e-5);

  const auto table = random_leaf(rng, 6, 4);
  const std::vector<int> ids = {2, 0, 2};  // duplicate id: scatter-add path
  check_grads({table}, [&] {
    return ssgn::mean_all(ssgn::mul(ssgn::embedding_rows(table, ids), x));
  });

  const auto A = random_leaf(rng, 3, 4);
  const auto P = random_leaf(rng, 12, 5);
  check_grads({A, P}, [&] {
    return ssgn::sum_all(ssgn::pairwise_weighted_sum(A, P));
  });
}

TEST_CASE("pairwise_weighted_sum matches its loop definition") {
  ssgn::Rng rng(71);
  const auto A = random_leaf(rng, 3, 4);
  const auto P = random_leaf(rng, 12, 5);
  const auto out = ssgn::pairwise_weighted_sum(A, P);
  REQUIRE(out->rows == 3);
  REQUIRE(out->cols == 5);
  for (int i = 0; i < 3; ++i) {
    for (int d = 0; d < 5; ++d) {
      double want = 0.0;
      for (int j = 0; j < 4; ++j) want += A->at(i, j) * P->at(i * 4 + j, d);
      CHECK(out->at(i, d) == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("shape violations raise ShapeError") {
  const auto a = make_tensor(2, 3, {1, 2, 3, 4, 5, 6});
  const auto b = make_tensor(2, 2, {1, 2, 3, 4});
  CHECK_THROWS_AS(ssgn::matmul(a, b), ssgn::ShapeError);
  CHECK_THROWS_AS(ssgn::add(a, b), ssgn::ShapeError);
  CHECK_THROWS_AS(ssgn::mul(a, b), ssgn::ShapeError);
  CHECK_THROWS_AS(ssgn::reshape(a, 4, 2), ssgn::ShapeError);
  CHECK_THROWS_AS(ssgn::add_row(a, make_row({1, 2})), ssgn::ShapeError);
  CHECK_THROWS_AS(ssgn::linear(a, b, nullptr), ssgn::ShapeError);
  CHECK_THROWS_AS(ssgn::linear(b, a, make_row({1})), ssgn::ShapeError);
  CHECK_THROWS_AS(ssgn::masked_softmax(a, {1, 1}), ssgn::ShapeError);
  CHECK_THROWS_AS(ssgn::concat_rows({a, b}), ssgn::ShapeError);
  CHECK_THROWS_AS(ssgn::concat_cols({a, make_tensor(3, 3, true)}), ssgn::ShapeError);
  CHECK_THROWS_AS(ssgn::slice_rows(a, 0, 3), ssgn::ShapeError);
  CHECK_THROWS_AS(ssgn::slice_cols(a, 2, 1), ssgn::ShapeError);
  CHECK_THROWS_AS(ssgn::embedding_rows(a, {2}), ssgn::ShapeError);
  CHECK_THROWS_AS(ssgn::layer_norm(a, make_row({1, 1}), make_row({0, 0, 0})),
                  ssgn::ShapeError);
  CHECK_THROWS_AS(ssgn::pairwise_weighted_sum(a, make_tensor(5, 2, true)),
                  ssgn::ShapeError);
  CHECK_THROWS_AS(ssgn::backward(a), ssgn::ShapeError);
}

TEST_CASE("forward and backward are deterministic") {
  auto run = [] {
    ssgn::Rng rng(12345);
    const auto x = random_leaf(rng, 4, 4);
    const auto W = random_leaf(rng, 4, 4);
    const auto loss = ssgn::mean_all(
        ssgn::softplus(ssgn::matmul(ssgn::tanh_op(ssgn::linear(x, W, nullptr)), x)));
    x->ensure_grad();
    W->ensure_grad();
    ssgn::backward(loss);
    std::vector<double> out = loss->values;
    out.insert(out.end(), x->grad.begin(), x->grad.end());
    out.insert(out.end(), W->grad.begin(), W->grad.end());
    return out;
  };
  CHECK(run() == run());
}
