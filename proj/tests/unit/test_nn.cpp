#include <doctest.h>

#include "jndlc/core/error.hpp"
#include "jndlc/core/nn.hpp"
#include "test_support.hpp"

using namespace jndlc;
using namespace jndlc::nn;

namespace {

// Checks input and parameter gradients of `layer` for the scalar
// dot(layer(x), r).
void check_layer(Layer& layer, const Tensor& x, std::uint64_t seed) {
  const Tensor y = layer.forward(x);
  const Tensor r = test::random_tensor(y.shape(), seed, -1.0, 1.0);
  auto params = layer.parameters();
  std::vector<Tensor> pg;
  for (auto& p : params) pg.emplace_back(p.value->shape());
  const Tensor gx = layer.backward(x, r, pg);

  auto f = [&](const Tensor& xx) { return dot(layer.forward(xx), r); };
  const auto gc = test::check_gradient(f, x, gx);
  CHECK(gc.coord_rel < 1e-6);
  CHECK(gc.dir_rel < 1e-6);

  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& w = *params[k].value;
    const Tensor w0 = w;
    auto fw = [&](const Tensor& ww) {
      w = ww;
      const double v = dot(layer.forward(x), r);
      w = w0;
      return v;
    };
    const auto gp = test::check_gradient(fw, w0, pg[k]);
    INFO(layer.kind() << " parameter " << params[k].name);
    CHECK(gp.coord_rel < 1e-6);
    CHECK(gp.dir_rel < 1e-6);
  }
}

void randomize(Layer& layer, std::uint64_t seed, double lo, double hi) {
  std::uint64_t s = seed;
  for (auto& p : layer.parameters()) *p.value = test::random_tensor(p.value->shape(), ++s, lo, hi);
}

}  // namespace

TEST_SUITE("nn") {
  TEST_CASE("conv output geometry") {
    Conv2d c(3, 4, 5, 2, 2);
    CHECK(c.output_shape({2, 3, 16, 12}) == Shape{2, 4, 8, 6});
    ConvTranspose2d d(4, 3, 5, 2, 2, 1);
    CHECK(d.output_shape({2, 4, 8, 6}) == Shape{2, 3, 16, 12});
  }

  TEST_CASE("conv matches a direct sum") {
    Conv2d c(2, 1, 3, 1, 1);
    randomize(c, 1, -1, 1);
    const Tensor x = test::random_tensor({1, 2, 5, 5}, 9);
    const Tensor y = c.forward(x);
    const Tensor& w = *c.parameters()[0].value;
    const Tensor& b = *c.parameters()[1].value;
    for (int oy = 0; oy < 5; ++oy) {
      for (int ox = 0; ox < 5; ++ox) {
        double acc = b[0];
        for (int ci = 0; ci < 2; ++ci) {
          for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
              const int iy = oy + ky - 1, ix = ox + kx - 1;
              if (iy < 0 || ix < 0 || iy >= 5 || ix >= 5) continue;
              acc += w.at(0, ci, ky, kx) * x.at(0, ci, iy, ix);
            }
          }
        }
        CHECK(y.at(0, 0, oy, ox) == doctest::Approx(acc).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("transposed conv is the adjoint of conv") {
    Conv2d c(3, 4, 5, 2, 2);
    ConvTranspose2d d(4, 3, 5, 2, 2, 1);
    randomize(c, 3, -1, 1);
    *d.parameters()[0].value = *c.parameters()[0].value;  // [out=4, in=3] is [in, out] for the transpose
    d.parameters()[1].value->fill(0.0);
    c.parameters()[1].value->fill(0.0);
    const Tensor x = test::random_tensor({1, 3, 8, 8}, 4);
    const Tensor u = test::random_tensor({1, 4, 4, 4}, 5);
    CHECK(dot(c.forward(x), u) == doctest::Approx(dot(x, d.forward(u))).epsilon(1e-12));
  }

  TEST_CASE("layer gradients match finite differences") {
    const Tensor x = test::random_tensor({2, 3, 8, 8}, 11, -1, 1);
    SUBCASE("conv") {
      Conv2d c(3, 4, 5, 2, 2);
      randomize(c, 1, -0.3, 0.3);
      check_layer(c, x, 21);
    }
    SUBCASE("transposed conv") {
      ConvTranspose2d d(3, 2, 5, 2, 2, 1);
      randomize(d, 2, -0.3, 0.3);
      check_layer(d, x, 22);
    }
    SUBCASE("gdn") {
      Gdn g(3, false);
      randomize(g, 3, 0.1, 1.0);
      check_layer(g, x, 23);
    }
    SUBCASE("igdn") {
      Gdn g(3, true);
      randomize(g, 4, 0.1, 1.0);
      check_layer(g, x, 24);
    }
    SUBCASE("leaky relu") {
      LeakyRelu l(0.1);
      check_layer(l, x, 25);
    }
    SUBCASE("avg pool") {
      AvgPool2 p;
      check_layer(p, test::random_tensor({1, 2, 7, 6}, 12), 26);
    }
  }

  TEST_CASE("gdn projection enforces constraints") {
    Gdn g(2, false);
    auto ps = g.parameters();
    ps[0].value->fill(-1.0);
    ps[1].value->fill(-0.5);
    g.project();
    for (double v : ps[0].value->values()) CHECK(v >= Gdn::kBetaMin);
    for (double v : ps[1].value->values()) CHECK(v >= 0.0);
  }

  TEST_CASE("gdn and igdn invert each other for identity gamma") {
    Gdn g(3, false), ig(3, true);
    const Tensor x = test::random_tensor({1, 3, 4, 4}, 5, -0.1, 0.1);
    const Tensor rt = ig.forward(g.forward(x));
    double err = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) err = std::max(err, std::abs(rt[i] - x[i]));
    CHECK(err < 1e-3);
  }

  TEST_CASE("sequential deep copies and accumulates gradients") {
    Sequential net;
    net.add(std::make_unique<Conv2d>(3, 2, 3, 1, 1));
    net.add(std::make_unique<LeakyRelu>(0.0));
    init_uniform_fan_in(net, 5);
    Sequential copy = net;
    copy.parameters("n")[0].value->fill(0.0);
    CHECK(net.parameters("n")[0].value->values()[0] != 0.0);
    CHECK(net.parameters("n")[0].name == "n.0.weight");

    const Tensor x = test::random_tensor({1, 3, 4, 4}, 6);
    std::vector<Tensor> acts;
    const Tensor y = net.forward(x, acts);
    net.zero_grad();
    net.backward(acts, y, true);
    const Tensor g1 = *net.gradients()[0];
    net.backward(acts, y, true);
    const Tensor g2 = *net.gradients()[0];
    for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g2[i] == doctest::Approx(2 * g1[i]));
    net.zero_grad();
    for (double v : net.gradients()[0]->values()) CHECK(v == 0.0);
  }

  TEST_CASE("fan-in initialization is seeded") {
    Sequential a, b;
    for (auto* n : {&a, &b}) n->add(std::make_unique<Conv2d>(3, 4, 5, 2, 2));
    init_uniform_fan_in(a, 1);
    init_uniform_fan_in(b, 1);
    CHECK(*a.parameters("x")[0].value == *b.parameters("x")[0].value);
    const double bound = 1.0 / std::sqrt(3.0 * 25.0);
    for (double v : a.parameters("x")[0].value->values()) CHECK(std::abs(v) <= bound);
  }
}
