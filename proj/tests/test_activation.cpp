#include "rfrecon/activation.hpp"
#include "rfrecon/errors.hpp"
#include "rfrecon/numkit.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace rfrecon;

TEST(Activation, Values) {
  EXPECT_EQ(Activation::relu().value(-2.0), 0.0);
  EXPECT_EQ(Activation::relu().value(5.0), 5.0);
  EXPECT_EQ(Activation::identity().value(-3.5), -3.5);
  EXPECT_DOUBLE_EQ(Activation::tanh().value(0.7), std::tanh(0.7));
  EXPECT_DOUBLE_EQ(Activation::relu_plus_tanh().value(-0.4), std::tanh(-0.4));
  EXPECT_DOUBLE_EQ(Activation::relu_plus_tanh().value(1.5), 1.5 + std::tanh(1.5));
}

TEST(Activation, ReluDerivativeAtZeroIsZero) {
  EXPECT_EQ(Activation::relu().derivative(0.0), 0.0);
  EXPECT_EQ(Activation::relu().derivative(1e-300), 1.0);
}

TEST(Activation, DerivativeMatchesCentralDifference) {
  RngStream rng(12);
  const double h = 1e-6;
  for (const auto &act : {Activation::identity(), Activation::relu(), Activation::tanh(),
                          Activation::relu_plus_tanh()}) {
    int checked = 0;
    while (checked < 1000) {
      const double z = -5.0 + 10.0 * rng.uniform();
      if (!act.kinks().empty() && std::abs(z) < 1e-3)
        continue;
      const double fd = (act.value(z + h) - act.value(z - h)) / (2.0 * h);
      ASSERT_NEAR(act.derivative(z), fd, 1e-6) << act.name() << " at " << z;
      ++checked;
    }
  }
}

TEST(Activation, SpanApplyMatchesScalar) {
  for (const auto &act : {Activation::relu(), Activation::tanh(), Activation::relu_plus_tanh()}) {
    std::vector<double> z = {-2.0, -0.1, 0.0, 0.3, 4.0};
    std::vector<double> v = z, dv = z;
    act.apply(v);
    act.apply_derivative(dv);
    for (std::size_t i = 0; i < z.size(); ++i) {
      EXPECT_EQ(v[i], act.value(z[i]));
      EXPECT_EQ(dv[i], act.derivative(z[i]));
    }
  }
}

TEST(Activation, NamesAndIds) {
  EXPECT_EQ(Activation::from_name("relu+tanh").kind(), ActivationKind::relu_plus_tanh);
  EXPECT_EQ(Activation::from_name("relu_plus_tanh").kind(), ActivationKind::relu_plus_tanh);
  EXPECT_EQ(Activation::from_id(2).name(), "tanh");
  EXPECT_THROW(Activation::from_name("gelu"), PreconditionError);
  EXPECT_THROW(Activation::from_id(9), PreconditionError);
  for (const auto &act : {Activation::identity(), Activation::relu(), Activation::tanh(),
                          Activation::relu_plus_tanh()})
    EXPECT_EQ(Activation::from_id(act.id()).name(), act.name());
}

TEST(Activation, Parity) {
  EXPECT_TRUE(Activation::tanh().is_odd());
  EXPECT_TRUE(Activation::identity().is_odd());
  EXPECT_FALSE(Activation::relu().is_odd());
  EXPECT_FALSE(Activation::relu_plus_tanh().is_odd());
}

TEST(Activation, Custom) {
  const Activation sq = Activation::custom(
      "square", [](double z) { return z * z; }, [](double z) { return 2 * z; });
  EXPECT_EQ(sq.kind(), ActivationKind::custom);
  EXPECT_EQ(sq.value(3.0), 9.0);
  std::vector<double> z = {1.0, -2.0};
  sq.apply_derivative(z);
  EXPECT_EQ(z[1], -4.0);
}
