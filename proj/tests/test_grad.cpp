#include <doctest.h>

#include <cmath>
#include <numeric>

#include "bidplan/grad/adam.hpp"
#include "bidplan/grad/causal.hpp"
#include "bidplan/grad/checkpoint.hpp"
#include "bidplan/grad/networks.hpp"
#include "bidplan/training.hpp"
#include "support.hpp"

using namespace bidplan;

namespace {

std::vector<double> random_vector(std::size_t n, Rng& rng, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * standard_normal(rng);
  return v;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

// Checks parameter and input gradients of <upstream, f(x)> against central differences.
void check_function_gradients(DiffFunction& f, Rng& rng, double input_scale = 1.0) {
  std::vector<double> x = random_vector(static_cast<std::size_t>(f.input_dim()), rng, input_scale);
  const std::vector<double> up = random_vector(static_cast<std::size_t>(f.output_dim()), rng);
  const Gradients g = f.backward(x, up);
  auto value = [&] { return dot(up, f.forward(x)); };
  const std::vector<double> num_params = test::numeric_gradient(f.params().values, value);
  CHECK(test::relative_error(g.params.values, num_params) <= 1e-4);
  const std::vector<double> num_input = test::numeric_gradient(x, value);
  CHECK(test::relative_error(g.input, num_input) <= 1e-4);
}

}  // namespace

TEST_SUITE("gradcore") {
  TEST_CASE("identity affine layer returns its input") {
    DenseNet f({3, 3}, Activation::identity);
    auto w = f.params().group("dense.w1");
    for (int i = 0; i < 3; ++i) w[static_cast<std::size_t>(i * 3 + i)] = 1.0;
    const std::vector<double> x{0.3, -1.2, 4.0};
    CHECK(f.forward(x) == x);
  }

  TEST_CASE("zero parameters give zero output and zero input gradient") {
    DenseNet f({3, 4, 2}, Activation::tanh);
    const std::vector<double> x{0.3, -1.2, 4.0};
    for (double y : f.forward(x)) CHECK(y == 0.0);
    const Gradients g = f.backward(x, std::vector<double>{1.0, -2.0});
    for (double v : g.input) CHECK(v == 0.0);
  }

  TEST_CASE("two-layer network matches manual arithmetic") {
    DenseNet f({2, 2, 1}, Activation::tanh);
    auto set = [&](const char* name, std::vector<double> v) {
      auto g = f.params().group(name);
      std::copy(v.begin(), v.end(), g.begin());
    };
    set("dense.w1", {0.5, -1.0, 0.25, 2.0});
    set("dense.b1", {0.1, -0.2});
    set("dense.w2", {1.5, -0.5});
    set("dense.b2", {0.3});
    const double h1 = std::tanh(0.5 * 1.0 - 1.0 * 0.5 + 0.1);
    const double h2 = std::tanh(0.25 * 1.0 + 2.0 * 0.5 - 0.2);
    CHECK(f.forward(std::vector<double>{1.0, 0.5})[0] ==
          doctest::Approx(1.5 * h1 - 0.5 * h2 + 0.3).epsilon(1e-15));
  }

  TEST_CASE("affine input gradient is the transposed weight applied to upstream") {
    DenseNet f({3, 2}, Activation::identity);
    Rng rng = make_rng(1, Stream::planner);
    f.init(rng);
    const std::vector<double> up{0.7, -1.3};
    const Gradients g = f.backward(std::vector<double>{1.0, 2.0, 3.0}, up);
    const auto w = f.params().group("dense.w1");
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(g.input[j] == doctest::Approx(w[j] * up[0] + w[3 + j] * up[1]).epsilon(1e-14));
    }
  }

  TEST_CASE("dense network gradients match finite differences") {
    Rng rng = make_rng(2, Stream::planner);
    DenseNet tanh_net({5, 8, 6, 3}, Activation::tanh);
    tanh_net.init(rng);
    check_function_gradients(tanh_net, rng);
    DenseNet softplus_net({4, 7, 1}, Activation::tanh, OutputTransform::softplus);
    softplus_net.init(rng);
    check_function_gradients(softplus_net, rng);
  }

  TEST_CASE("step-pooled network gradients match finite differences") {
    Rng rng = make_rng(3, Stream::planner);
    StepPooledNet net(6, 7, {8, 5}, Activation::tanh);
    net.init(rng);
    check_function_gradients(net, rng);
  }

  TEST_CASE("teacher-forced causal nets match finite differences") {
    Rng rng = make_rng(4, Stream::planner);
    for (CausalKind kind : {CausalKind::window, CausalKind::attention}) {
      CAPTURE(to_string(kind));
      auto net = make_causal_net(test::small_net(6, kind));
      net->init(rng, 1.0);
      TeacherForcedFunction f(*net);
      std::vector<double> x =
          random_vector(static_cast<std::size_t>(f.input_dim()), rng, 0.8);
      const std::vector<double> up = random_vector(6, rng);
      const Gradients g = f.backward(x, up);
      auto value = [&] { return dot(up, f.forward(x)); };
      CHECK(test::relative_error(g.params.values, test::numeric_gradient(f.params().values, value)) <=
            1e-4);
      const std::vector<double> num_input = test::numeric_gradient(x, value);
      // Only the cost entries carry an input gradient.
      for (std::size_t i = 6; i < x.size(); ++i) CHECK(g.input[i] == 0.0);
      CHECK(test::relative_error(std::vector<double>(g.input.begin(), g.input.begin() + 6),
                                 std::vector<double>(num_input.begin(), num_input.begin() + 6)) <=
            1e-4);
    }
  }

  TEST_CASE("causal means never read the current or later costs") {
    Rng rng = make_rng(5, Stream::planner);
    for (CausalKind kind : {CausalKind::window, CausalKind::attention}) {
      auto net = make_causal_net(test::small_net(8, kind));
      net->init(rng, 1.0);
      const std::vector<double> feature{0.2, 0.4, 0.6, 0.8};
      std::vector<double> prefix = random_vector(8, rng);
      for (int t = 1; t <= 8; ++t) {
        const double before = net->mean_at(t, prefix, 0.7, feature);
        std::vector<double> changed = prefix;
        for (std::size_t j = static_cast<std::size_t>(t - 1); j < changed.size(); ++j) changed[j] += 3.0;
        CHECK(net->mean_at(t, changed, 0.7, feature) == before);
      }
    }
  }

  TEST_CASE("adam leaves parameters unchanged on a zero gradient") {
    ParamVector p;
    p.add("w", 3);
    p.values = {1.0, -2.0, 3.0};
    Adam adam(AdamConfig{}, 3);
    adam.step(p, p.zeros_like());
    CHECK(p.values == std::vector<double>{1.0, -2.0, 3.0});
  }

  TEST_CASE("adam descends a quadratic") {
    ParamVector p;
    p.add("w", 1);
    p.values = {1.0};
    Adam adam(AdamConfig{0.1}, 1);
    ParamVector g = p.zeros_like();
    g.values[0] = 2.0 * p.values[0];
    adam.step(p, g);
    CHECK(p.values[0] * p.values[0] < 1.0);

    // f(x, y) = (x - 1)^2 + 10 (y + 2)^2, minimizer (1, -2).
    ParamVector q;
    q.add("xy", 2);
    Adam opt(AdamConfig{0.2}, 2);
    const int steps = 200;
    for (int s = 0; s < steps; ++s) {
      ParamVector grad = q.zeros_like();
      grad.values = {2.0 * (q.values[0] - 1.0), 20.0 * (q.values[1] + 2.0)};
      opt.set_learning_rate(cosine_learning_rate(0.2, 0.0, s, steps));
      opt.step(q, grad);
    }
    CHECK(std::abs(q.values[0] - 1.0) <= 1e-3);
    CHECK(std::abs(q.values[1] + 2.0) <= 1e-3);
  }

  TEST_CASE("adam rejects non-finite gradients without moving") {
    ParamVector p;
    p.add("w", 2);
    p.values = {0.5, 0.5};
    Adam adam(AdamConfig{}, 2);
    ParamVector g = p.zeros_like();
    g.values = {1.0, std::nan("")};
    CHECK_THROWS_AS(adam.step(p, g), NonFiniteGradient);
    CHECK(p.values == std::vector<double>{0.5, 0.5});
    CHECK(adam.steps() == 0);
  }

  TEST_CASE("gradient clipping bounds the first step") {
    ParamVector p;
    p.add("w", 2);
    AdamConfig c;
    c.learning_rate = 1.0;
    c.clip_norm = 1.0;
    Adam adam(c, 2);
    ParamVector g = p.zeros_like();
    g.values = {300.0, 400.0};
    adam.step(p, g);
    // Adam's first step has magnitude lr per coordinate regardless of scale.
    CHECK(p.values[0] == doctest::Approx(-1.0).epsilon(1e-6));
    CHECK(p.values[1] == doctest::Approx(-1.0).epsilon(1e-6));
  }

  TEST_CASE("parameter layout is validated") {
    ParamVector p;
    p.add("a", 2);
    p.add("b", 3);
    CHECK_NOTHROW(p.validate());
    CHECK(p.slice("b").offset == 2u);
    CHECK_THROWS(p.slice("c"));
    CHECK(p.zeros_like().same_layout(p));
  }

  TEST_CASE("checkpoints round-trip exactly") {
    test::TempDir dir("ckpt");
    Rng rng = make_rng(6, Stream::planner);
    DenseNet f({3, 5, 2}, Activation::tanh);
    f.init(rng);
    f.params().values[0] = 1.0 / 3.0;
    Checkpoint ck{f.params(), {{"model", "dense"}, {"hidden", ints_text({5})}}};
    save_checkpoint(ck, dir.path() / "f.ckpt");
    const Checkpoint back = load_checkpoint(dir.path() / "f.ckpt");
    CHECK(back.params.values == f.params().values);
    CHECK(back.params.same_layout(f.params()));
    CHECK(meta_value(back, "model") == "dense");
    CHECK(meta_ints(back, "hidden") == std::vector<int>{5});
    CHECK_THROWS(meta_value(back, "absent"));
  }

  TEST_CASE("cosine schedule runs from base to floor") {
    CHECK(cosine_learning_rate(1.0, 0.1, 0, 100) == doctest::Approx(1.0));
    CHECK(cosine_learning_rate(1.0, 0.1, 100, 101) == doctest::Approx(0.1));
    CHECK(cosine_learning_rate(1.0, 0.1, 50, 101) == doctest::Approx(0.55));
    CHECK(cosine_learning_rate(1.0, 0.1, 500, 101) == doctest::Approx(0.1));
  }
}
