#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "biagree/model.hpp"
#include "biagree/tape.hpp"

using namespace biagree;

namespace {

Array random_array(std::vector<int> shape, Rng& rng) {
  Array a = Array::zeros(std::move(shape));
  for (int i = 0; i < a.size(); ++i) a[i] = 2 * uniform01(rng) - 1;
  return a;
}

}  // namespace

TEST_CASE("primitive forward values") {
  Tape t;
  int a = t.leaf(Array::scalar(2));
  int b = t.leaf(Array::scalar(3));
  CHECK(t.value(t.add(a, b)).as_scalar() == 5);

  int z = t.leaf(Array::zeros({3}));
  const Array& sm = t.value(t.softmax(z));
  for (int i = 0; i < 3; ++i) CHECK(sm[i] == doctest::Approx(1.0 / 3));

  Rng rng(7);
  int m1 = t.leaf(random_array({2, 3}, rng));
  int m2 = t.leaf(random_array({3, 4}, rng));
  CHECK(t.value(t.matmul(m1, m2)).shape() == std::vector<int>{2, 4});
}

TEST_CASE("shape mismatch raises a descriptive error") {
  Tape t;
  int a = t.leaf(Array::zeros({2}));
  int b = t.leaf(Array::zeros({3}));
  CHECK_THROWS_WITH_AS(t.add(a, b),
                       "shape mismatch in add: (2) vs (3)",
                       std::invalid_argument);
  int m = t.leaf(Array::zeros({2, 3}));
  CHECK_THROWS_AS(t.matmul(m, a), std::invalid_argument);  // (2,3) x (2)
}

TEST_CASE("backward: product rule") {
  ParamStore store;
  store.add("x", Array::scalar(2));
  store.add("y", Array::scalar(3));
  Tape t;
  int root = t.mul(t.param(store, "x"), t.param(store, "y"));
  GradMap g = t.backward(root, store);
  CHECK(g.at("x").as_scalar() == 3);
  CHECK(g.at("y").as_scalar() == 2);
}

TEST_CASE("backward: sum of softmax has exactly zero gradient") {
  ParamStore store;
  Rng rng(3);
  store.add("z", random_array({5}, rng));
  Tape t;
  int root = t.sum(t.softmax(t.param(store, "z")));
  GradMap g = t.backward(root, store);
  for (int i = 0; i < 5; ++i)
    CHECK(std::abs(g.at("z")[i]) < 1e-15);
}

TEST_CASE("backward: non-scalar root is an error") {
  ParamStore store;
  Tape t;
  int v = t.leaf(Array::zeros({3}));
  CHECK_THROWS_AS(t.backward(v, store), std::invalid_argument);
}

TEST_CASE("adjoints accumulate additively on reused nodes") {
  // f = x + x*x; df/dx = 1 + 2x
  ParamStore store;
  store.add("x", Array::scalar(1.5));
  Tape t;
  int x = t.param(store, "x");
  int root = t.add(x, t.mul(x, x));
  GradMap g = t.backward(root, store);
  CHECK(g.at("x").as_scalar() == doctest::Approx(1 + 2 * 1.5).epsilon(1e-12));
}

TEST_CASE("finite_diff_check: linear and quadratic cases") {
  ParamStore store;
  store.add("p", Array::scalar(1.0));

  auto linear = [](const ParamStore& p) { return 3.0 * p.at("p").as_scalar(); };
  Tape t;
  int root = t.scale_const(t.param(store, "p"), 3.0);
  GradMap g = t.backward(root, store);
  CHECK(finite_diff_check(linear, store, g, 1e-4) < 1e-9);

  auto quad = [](const ParamStore& p) {
    double v = p.at("p").as_scalar();
    return v * v;
  };
  Tape t2;
  int p = t2.param(store, "p");
  GradMap g2 = t2.backward(t2.mul(p, p), store);
  CHECK(finite_diff_check(quad, store, g2, 1e-4) < 1e-7);
}

TEST_CASE("finite_diff_check rejects non-positive step") {
  ParamStore store;
  store.add("p", Array::scalar(1.0));
  GradMap g(store);
  auto fn = [](const ParamStore&) { return 0.0; };
  CHECK_THROWS_AS(finite_diff_check(fn, store, g, 0.0), std::invalid_argument);
}

namespace {

// A small random composition touching every primitive; returns a scalar node.
int random_composition(Tape& t, const ParamStore& store) {
  int m = t.param(store, "m");       // (3,4)
  int v = t.param(store, "v");       // (4)
  int w = t.param(store, "w");       // (3)
  int b = t.param(store, "b");       // (3)
  int h = t.tanh_(t.matmul(m, v));                       // (3)
  int s = t.sigmoid_(t.add(t.mul(h, w), b));             // (3)
  int e = t.embed_row(m, 1);                             // (4)
  int c = t.concat(s, e);                                // (7)
  int sm = t.softmax(c);
  int picked = t.log_(t.pick(sm, 2));
  return t.add(t.sum(t.mul(sm, c)), t.scale(picked, t.pick(s, 0)));
}

}  // namespace

TEST_CASE("random compositions match central finite differences") {
  Rng rng(11);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    ParamStore store;
    store.add("m", random_array({3, 4}, rng));
    store.add("v", random_array({4}, rng));
    store.add("w", random_array({3}, rng));
    store.add("b", random_array({3}, rng));

    Tape t;
    GradMap g = t.backward(random_composition(t, store), store);
    auto fn = [](const ParamStore& p) {
      Tape t2;
      return t2.value(random_composition(t2, p)).as_scalar();
    };
    worst = std::max(worst, finite_diff_check(fn, store, g, 1e-5));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("softmax rows are positive and sum to 1") {
  Rng rng(5);
  Tape t;
  int z = t.leaf(random_array({4, 6}, rng));
  const Array& s = t.value(t.softmax(z));
  for (int r = 0; r < 4; ++r) {
    double sum = 0;
    for (int c = 0; c < 6; ++c) {
      CHECK(s[r * 6 + c] > 0);
      sum += s[r * 6 + c];
    }
    CHECK(std::abs(sum - 1) < 1e-12);
  }
}

TEST_CASE("parameter names are unique") {
  ParamStore store;
  store.add("p", Array::scalar(0));
  CHECK_THROWS_AS(store.add("p", Array::scalar(1)), std::invalid_argument);
}
