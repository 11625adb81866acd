#include "rfrecon/activation.hpp"

#include "rfrecon/errors.hpp"

#include <cmath>

namespace rfrecon {

Activation Activation::identity() { return {ActivationKind::identity, "identity"}; }

Activation Activation::relu() {
  Activation a{ActivationKind::relu, "relu"};
  a.kinks_ = {0.0};
  return a;
}

Activation Activation::tanh() { return {ActivationKind::tanh, "tanh"}; }

Activation Activation::relu_plus_tanh() {
  Activation a{ActivationKind::relu_plus_tanh, "relu+tanh"};
  a.kinks_ = {0.0};
  return a;
}

Activation Activation::custom(std::string name, ScalarFn value, ScalarFn derivative,
                              std::vector<double> kinks) {
  if (!value || !derivative)
    throw PreconditionError("Activation::custom: value and derivative are required");
  Activation a{ActivationKind::custom, std::move(name)};
  a.value_ = std::move(value);
  a.derivative_ = std::move(derivative);
  a.kinks_ = std::move(kinks);
  return a;
}

Activation Activation::from_name(std::string_view name) {
  if (name == "relu")
    return relu();
  if (name == "tanh")
    return tanh();
  if (name == "identity" || name == "linear")
    return identity();
  if (name == "relu+tanh" || name == "relu_plus_tanh")
    return relu_plus_tanh();
  throw PreconditionError("unknown activation '" + std::string(name) +
                          "' (expected relu, tanh, relu+tanh or identity)");
}

Activation Activation::from_id(std::uint16_t id) {
  switch (static_cast<ActivationKind>(id)) {
  case ActivationKind::identity:
    return identity();
  case ActivationKind::relu:
    return relu();
  case ActivationKind::tanh:
    return tanh();
  case ActivationKind::relu_plus_tanh:
    return relu_plus_tanh();
  default:
    throw PreconditionError("no built-in activation with id " + std::to_string(id));
  }
}

double Activation::value(double z) const {
  switch (kind_) {
  case ActivationKind::identity:
    return z;
  case ActivationKind::relu:
    return z > 0.0 ? z : 0.0;
  case ActivationKind::tanh:
    return std::tanh(z);
  case ActivationKind::relu_plus_tanh:
    return (z > 0.0 ? z : 0.0) + std::tanh(z);
  case ActivationKind::custom:
    break;
  }
  return value_(z);
}

double Activation::derivative(double z) const {
  switch (kind_) {
  case ActivationKind::identity:
    return 1.0;
  case ActivationKind::relu:
    return z > 0.0 ? 1.0 : 0.0;
  case ActivationKind::tanh: {
    const double t = std::tanh(z);
    return 1.0 - t * t;
  }
  case ActivationKind::relu_plus_tanh: {
    const double t = std::tanh(z);
    return (z > 0.0 ? 1.0 : 0.0) + 1.0 - t * t;
  }
  case ActivationKind::custom:
    break;
  }
  return derivative_(z);
}

void Activation::apply(std::span<double> z) const {
  switch (kind_) {
  case ActivationKind::identity:
    return;
  case ActivationKind::relu:
    for (double &v : z)
      v = v > 0.0 ? v : 0.0;
    return;
  case ActivationKind::tanh:
    for (double &v : z)
      v = std::tanh(v);
    return;
  default:
    for (double &v : z)
      v = value(v);
  }
}

void Activation::apply_derivative(std::span<double> z) const {
  switch (kind_) {
  case ActivationKind::identity:
    for (double &v : z)
      v = 1.0;
    return;
  case ActivationKind::relu:
    for (double &v : z)
      v = v > 0.0 ? 1.0 : 0.0;
    return;
  default:
    for (double &v : z)
      v = derivative(v);
  }
}

bool Activation::is_odd() const {
  return kind_ == ActivationKind::tanh || kind_ == ActivationKind::identity;
}

} // namespace rfrecon
