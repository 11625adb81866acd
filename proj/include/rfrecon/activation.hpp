#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rfrecon {

enum class ActivationKind : std::uint16_t {
  identity = 0,
  relu = 1,
  tanh = 2,
  relu_plus_tanh = 3,
  custom = 255,
};

/// Pointwise nonlinearity with its derivative. Built-in kinds evaluate with a
/// switch outside the inner loop; `custom` dispatches through std::function
/// and cannot be persisted.
class Activation {
public:
  using ScalarFn = std::function<double(double)>;

  static Activation identity();
  static Activation relu();
  static Activation tanh();
  static Activation relu_plus_tanh();
  /// `kinks` lists the points where the value is not differentiable; the
  /// Hermite quadrature splits there.
  static Activation custom(std::string name, ScalarFn value, ScalarFn derivative,
                           std::vector<double> kinks = {});

  /// Accepts relu, tanh, identity, relu+tanh (also relu_plus_tanh).
  static Activation from_name(std::string_view name);
  static Activation from_id(std::uint16_t id);

  ActivationKind kind() const { return kind_; }
  std::uint16_t id() const { return static_cast<std::uint16_t>(kind_); }
  const std::string &name() const { return name_; }
  const std::vector<double> &kinks() const { return kinks_; }

  double value(double z) const;
  /// relu'(0) is taken as 0.
  double derivative(double z) const;

  void apply(std::span<double> z) const;
  /// Overwrites z with derivative(z).
  void apply_derivative(std::span<double> z) const;

  /// True when the activation is an odd function (tanh, identity).
  bool is_odd() const;

private:
  Activation(ActivationKind kind, std::string name) : kind_(kind), name_(std::move(name)) {}

  ActivationKind kind_;
  std::string name_;
  ScalarFn value_;
  ScalarFn derivative_;
  std::vector<double> kinks_;
};

} // namespace rfrecon
