#include <doctest.h>

#include <cmath>

#include "a2v/optim.h"
#include "test_util.h"

using namespace a2v;

TEST_CASE("cosine schedule endpoints and midpoint") {
  OptimConfig config;
  config.lr_peak = 2e-3;
  config.warmup_steps = 100;
  config.total_steps = 500;
  CHECK(cosine_lr(0, config) == 0.0);
  CHECK(cosine_lr(100, config) == doctest::Approx(2e-3).epsilon(1e-12));
  CHECK(cosine_lr(50, config) == doctest::Approx(1e-3).epsilon(1e-12));
  // Midpoint of the decay phase: cos(pi/2) = 0 -> lr_peak / 2.
  CHECK(cosine_lr(300, config) == doctest::Approx(1e-3).epsilon(1e-12));
  CHECK(cosine_lr(500, config) == doctest::Approx(0.0));
  CHECK(cosine_lr(501, config) == 0.0);
}

TEST_CASE("decoupled decay shrinks parameters exactly when gradients are zero") {
  ParamSet set;
  Rng rng(1);
  auto var = set.add("w", testutil::random_tensor({4, 4}, rng));
  const Tensor before = var.value();
  set.zero_grad();
  AdamState state;
  OptimConfig config;
  config.weight_decay = 0.01;
  const double lr = 0.5;  // fixed positive schedule value
  adamw_step(state, {&set}, config, lr, {});
  for (size_t i = 0; i < before.v.size(); ++i) {
    CHECK(var.value().v[i] ==
          doctest::Approx(before.v[i] * (1.0 - 0.01 * lr)).epsilon(1e-12));
  }
}

TEST_CASE("zero learning rate makes the update a no-op") {
  ParamSet set;
  Rng rng(2);
  auto var = set.add("w", testutil::random_tensor({3, 3}, rng));
  const Tensor before = var.value();
  var.grad();
  for (auto& g : var.grad().v) g = rng.normal();  // nonzero gradients
  AdamState state;
  OptimConfig config;
  config.weight_decay = 0.01;
  adamw_step(state, {&set}, config, 0.0, {});
  CHECK(var.value().v == before.v);
}

TEST_CASE("no-decay suffixes exempt parameters from weight decay") {
  ParamSet set;
  auto decayed = set.add("conv.w", Tensor({2}, 1.0));
  auto exempt = set.add("sinc.pswish.alpha", Tensor({2}, 2.0));
  set.zero_grad();
  AdamState state;
  OptimConfig config;
  config.weight_decay = 0.1;
  adamw_step(state, {&set}, config, 1.0, {"pswish.alpha", "pswish.beta"});
  CHECK(decayed.value().at(0) == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(exempt.value().at(0) == 2.0);
}

TEST_CASE("adam moves against the gradient") {
  ParamSet set;
  auto var = set.add("w", Tensor({1}, 0.0));
  AdamState state;
  OptimConfig config;
  config.weight_decay = 0.0;
  for (int step = 0; step < 10; ++step) {
    set.zero_grad();
    var.grad().at(0) = 2.0 * var.value().at(0) - 8.0;  // d/dw (w-4)^2
    adamw_step(state, {&set}, config, 0.3, {});
  }
  CHECK(var.value().at(0) > 0.5);  // moving toward 4
}

TEST_CASE("global norm clipping") {
  ParamSet set;
  auto a = set.add("a", Tensor({2}, 0.0));
  auto b = set.add("b", Tensor({2}, 0.0));
  a.grad().at(0) = 3.0;
  a.grad().at(1) = 0.0;
  b.grad().at(0) = 0.0;
  b.grad().at(1) = 4.0;
  std::vector<ParamSet*> sets{&set};
  const double norm = clip_global_norm(sets, 1.0);
  CHECK(norm == doctest::Approx(5.0).epsilon(1e-12));
  double post = 0.0;
  for (auto& [name, var] : set.items) {
    for (double g : var.grad().v) post += g * g;
  }
  CHECK(std::sqrt(post) <= 1.0 + 1e-12);

  // Below the threshold nothing changes.
  a.grad().at(0) = 0.1;
  b.grad().at(1) = 0.1;
  clip_global_norm(sets, 1.0);
  CHECK(a.grad().at(0) == 0.1);
}
