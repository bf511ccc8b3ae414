#pragma once

#include "oscilab/common.hpp"

#include <functional>
#include <limits>
#include <memory>

namespace oscilab {

/// A scalar function on a planar region with its gradient. Doubling indices
/// and critical-point detection only see this interface, so closed forms and
/// finite element solutions go through the same code.
class PlanarField {
 public:
  virtual ~PlanarField() = default;

  virtual double value(const Vec2& x) const = 0;
  virtual Vec2 gradient(const Vec2& x) const = 0;

  /// Value at base + d. Wrappers forward base and d separately so that a
  /// translated copy, sampled around a translated center, repeats the exact
  /// same floating-point operations.
  virtual double value_offset(const Vec2& base, const Vec2& d) const { return value(base + d); }
  virtual Vec2 gradient_offset(const Vec2& base, const Vec2& d) const { return gradient(base + d); }

  virtual bool contains_disk(const Vec2& center, double r) const = 0;

  /// Mesh spacing for finite element fields, 0 for closed forms.
  virtual double mesh_size() const { return 0.0; }
  /// Oscillation period scale epsilon, 0 when the field does not oscillate.
  virtual double oscillation_scale() const { return 0.0; }

  /// Area mean of u^2 over B(center, r). Default: Gauss-Legendre in the
  /// radius times the trapezoid rule in the angle.
  virtual double disk_mean_square(const Vec2& center, double r) const;
};

/// Closed-form field on R^2 (or on a disk when `radius` is finite).
class ClosedFormField : public PlanarField {
 public:
  using Value = std::function<double(const Vec2&)>;
  using Gradient = std::function<Vec2(const Vec2&)>;

  ClosedFormField(Value value, Gradient gradient, double radius = std::numeric_limits<double>::infinity())
      : value_(std::move(value)), gradient_(std::move(gradient)), radius_(radius) {}

  double value(const Vec2& x) const override { return value_(x); }
  Vec2 gradient(const Vec2& x) const override { return gradient_(x); }
  bool contains_disk(const Vec2& center, double r) const override {
    return center.norm() + r <= radius_;
  }

 private:
  Value value_;
  Gradient gradient_;
  double radius_;
};

/// x -> u(x - shift).
class TranslatedField : public PlanarField {
 public:
  TranslatedField(std::shared_ptr<const PlanarField> inner, const Vec2& shift)
      : inner_(std::move(inner)), shift_(shift) {}

  double value(const Vec2& x) const override { return inner_->value(x - shift_); }
  Vec2 gradient(const Vec2& x) const override { return inner_->gradient(x - shift_); }
  double value_offset(const Vec2& base, const Vec2& d) const override {
    return inner_->value_offset(base - shift_, d);
  }
  Vec2 gradient_offset(const Vec2& base, const Vec2& d) const override {
    return inner_->gradient_offset(base - shift_, d);
  }
  bool contains_disk(const Vec2& center, double r) const override {
    return inner_->contains_disk(center - shift_, r);
  }
  double mesh_size() const override { return inner_->mesh_size(); }
  double oscillation_scale() const override { return inner_->oscillation_scale(); }
  double disk_mean_square(const Vec2& center, double r) const override {
    return inner_->disk_mean_square(center - shift_, r);
  }

 private:
  std::shared_ptr<const PlanarField> inner_;
  Vec2 shift_;
};

/// x -> u(theta x): the dilation used by the scaling-invariance checks.
class DilatedField : public PlanarField {
 public:
  DilatedField(std::shared_ptr<const PlanarField> inner, double theta);

  double value(const Vec2& x) const override { return inner_->value(theta_ * x); }
  Vec2 gradient(const Vec2& x) const override { return theta_ * inner_->gradient(theta_ * x); }
  bool contains_disk(const Vec2& center, double r) const override {
    return inner_->contains_disk(theta_ * center, theta_ * r);
  }
  double mesh_size() const override { return inner_->mesh_size() / theta_; }
  double oscillation_scale() const override { return inner_->oscillation_scale() / theta_; }

 private:
  std::shared_ptr<const PlanarField> inner_;
  double theta_;
};

/// r^ell (a cos(ell t) + b sin(ell t)) on the whole plane.
std::shared_ptr<ClosedFormField> harmonic_polynomial(int ell, double a = 1.0, double b = 0.0);

}  // namespace oscilab
