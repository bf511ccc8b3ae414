#include "oscilab/field.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <complex>

namespace oscilab {

double PlanarField::disk_mean_square(const Vec2& center, double r) const {
  if (!contains_disk(center, r)) throw GeometryError("disk mean square: ball leaves the domain");
  constexpr int kAngles = 512;
  auto ring = [&](double rho) {
    double sum = 0.0;
    for (int k = 0; k < kAngles; ++k) {
      const double th = kTwoPi * k / kAngles;
      const double v = value_offset(center, Vec2(rho * std::cos(th), rho * std::sin(th)));
      sum += v * v;
    }
    return rho * sum / kAngles;
  };
  const double integral = boost::math::quadrature::gauss<double, 40>::integrate(ring, 0.0, r);
  return 2.0 * integral / (r * r);
}

DilatedField::DilatedField(std::shared_ptr<const PlanarField> inner, double theta)
    : inner_(std::move(inner)), theta_(theta) {
  if (!(theta > 0.0)) throw ConfigError("dilation factor must be positive");
}

std::shared_ptr<ClosedFormField> harmonic_polynomial(int ell, double a, double b) {
  if (ell < 0) throw ConfigError("harmonic polynomial degree must be >= 0");
  using C = std::complex<double>;
  const C coef(a, -b);
  auto power = [](const Vec2& x, int k) {
    C z(x.x(), x.y());
    C out(1.0, 0.0);
    for (int i = 0; i < k; ++i) out *= z;
    return out;
  };
  auto value = [=](const Vec2& x) { return (coef * power(x, ell)).real(); };
  auto gradient = [=](const Vec2& x) {
    if (ell == 0) return Vec2(0.0, 0.0);
    const C d = static_cast<double>(ell) * coef * power(x, ell - 1);
    return Vec2(d.real(), -d.imag());
  };
  return std::make_shared<ClosedFormField>(value, gradient);
}

}  // namespace oscilab
