#include "oscilab/coeff.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>

namespace oscilab {
namespace {

constexpr double kLambdaFloor = 0.05;
constexpr int kProjectionSide = 256;
constexpr double kSafety = 0.95;

double sigma_max(const Mat2& m) {
  Eigen::JacobiSVD<Mat2> svd(m);
  return svd.singularValues()(0);
}

double sigma_min(const Mat2& m) {
  Eigen::JacobiSVD<Mat2> svd(m);
  return svd.singularValues()(1);
}

Mat2 sym2(double a11, double a12, double a22) {
  Mat2 m;
  m << a11, a12, a12, a22;
  return m;
}

std::size_t fourier_modes(const std::vector<double>& p) { return (p.size() - 3) / 8; }

Mat2 evaluate(Family family, const std::vector<double>& p, const Vec2& s) {
  switch (family) {
    case Family::Constant:
      return sym2(p[0], p[1], p[2]);
    case Family::Laminate: {
      const double a = p[0] + p[1] * std::sin(kTwoPi * s.x());
      return a * Mat2::Identity();
    }
    case Family::SeparableScalar: {
      const double a = p[0] + p[1] * std::sin(kTwoPi * s.x()) * std::sin(kTwoPi * s.y());
      return a * Mat2::Identity();
    }
    case Family::RotatingAnisotropic: {
      const double phi = p[2] * (std::sin(kTwoPi * s.x()) + std::cos(kTwoPi * s.y()));
      const double c = std::cos(phi);
      const double sn = std::sin(phi);
      Mat2 rot;
      rot << c, -sn, sn, c;
      return rot * Eigen::Vector2d(p[0], p[1]).asDiagonal() * rot.transpose();
    }
    case Family::FourierGeneral: {
      Mat2 a = sym2(p[0], p[1], p[2]);
      for (std::size_t m = 0; m < fourier_modes(p); ++m) {
        const double* q = p.data() + 3 + 8 * m;
        const double phase = kTwoPi * (q[0] * s.x() + q[1] * s.y());
        a += std::cos(phase) * sym2(q[2], q[3], q[4]) + std::sin(phase) * sym2(q[5], q[6], q[7]);
      }
      return a;
    }
  }
  throw ConfigError("unknown coefficient family");
}

std::vector<double> scale_oscillation(Family family, std::vector<double> p, double t) {
  switch (family) {
    case Family::Constant:
      break;
    case Family::Laminate:
    case Family::SeparableScalar:
      p[1] *= t;
      break;
    case Family::RotatingAnisotropic:
      p[2] *= t;
      break;
    case Family::FourierGeneral:
      for (std::size_t m = 0; m < fourier_modes(p); ++m) {
        for (int k = 2; k < 8; ++k) p[3 + 8 * m + k] *= t;
      }
      break;
  }
  return p;
}

struct EigenRange {
  double lo = 0.0;
  double hi = 0.0;
};

EigenRange sample_range(Family family, const std::vector<double>& p, int side) {
  EigenRange r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (int j = 0; j < side; ++j) {
    for (int i = 0; i < side; ++i) {
      const Vec2 s(static_cast<double>(i) / side, static_cast<double>(j) / side);
      const Vec2 ev = sym_eigenvalues(evaluate(family, p, s));
      r.lo = std::min(r.lo, ev(0));
      r.hi = std::max(r.hi, ev(1));
    }
  }
  return r;
}

bool admissible(const EigenRange& r, double lambda) { return r.lo >= lambda && r.hi <= 1.0 / lambda; }

// Frobenius Lipschitz constant of the base family with respect to physical y,
// given the inverse lattice matrix (rows are grad_y s1, grad_y s2).
double closed_form_lipschitz(Family family, const std::vector<double>& p, const Mat2& binv) {
  const double smax = sigma_max(binv);
  switch (family) {
    case Family::Constant:
      return 0.0;
    case Family::Laminate:
      return std::sqrt(2.0) * kTwoPi * std::abs(p[1]) * binv.row(0).norm();
    case Family::SeparableScalar:
      return std::sqrt(2.0) * kTwoPi * std::abs(p[1]) * smax;
    case Family::RotatingAnisotropic:
      return std::sqrt(2.0) * std::abs(p[0] - p[1]) * kTwoPi * std::abs(p[2]) * std::sqrt(2.0) *
             smax;
    case Family::FourierGeneral: {
      double m = 0.0;
      for (std::size_t k = 0; k < fourier_modes(p); ++k) {
        const double* q = p.data() + 3 + 8 * k;
        const Vec2 wave = binv.transpose() * Vec2(q[0], q[1]);
        const double c = sym2(q[2], q[3], q[4]).norm();
        const double s = sym2(q[5], q[6], q[7]).norm();
        m += kTwoPi * wave.norm() * std::sqrt(c * c + s * s);
      }
      return m;
    }
  }
  return 0.0;
}

std::vector<double> canonical_params(const FamilySpec& spec) {
  const auto& p = spec.params;
  for (double v : p) {
    if (!std::isfinite(v)) throw ConfigError("coefficient parameters must be finite");
  }
  auto need = [&](std::size_t n) {
    if (p.size() != n) {
      throw ConfigError(std::string(family_name(spec.family)) + " expects " + std::to_string(n) +
                        " parameters, got " + std::to_string(p.size()));
    }
  };
  switch (spec.family) {
    case Family::Constant:
      if (p.size() == 1) return {p[0], 0.0, p[0]};
      if (p.size() == 2) return {p[0], 0.0, p[1]};
      need(3);
      return p;
    case Family::Laminate:
    case Family::SeparableScalar:
      need(2);
      return p;
    case Family::RotatingAnisotropic:
      need(3);
      return p;
    case Family::FourierGeneral:
      if (p.size() < 3 || (p.size() - 3) % 8 != 0) {
        throw ConfigError("fourier-general expects 3 + 8k parameters");
      }
      for (std::size_t m = 0; m < fourier_modes(p); ++m) {
        for (int k = 0; k < 2; ++k) {
          const double w = p[3 + 8 * m + k];
          if (w != std::round(w)) throw ConfigError("fourier-general wave numbers must be integers");
        }
      }
      return p;
  }
  return p;
}

}  // namespace

std::string_view family_name(Family f) {
  switch (f) {
    case Family::Constant:
      return "constant";
    case Family::Laminate:
      return "laminate";
    case Family::SeparableScalar:
      return "separable-scalar";
    case Family::RotatingAnisotropic:
      return "rotating-anisotropic";
    case Family::FourierGeneral:
      return "fourier-general";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  for (Family f : {Family::Constant, Family::Laminate, Family::SeparableScalar,
                   Family::RotatingAnisotropic, Family::FourierGeneral}) {
    if (family_name(f) == name) return f;
  }
  throw ConfigError("unknown coefficient family '" + std::string(name) + "'");
}

Mat2 LatticeBasis::matrix() const {
  Mat2 b;
  b.col(0) = b1;
  b.col(1) = b2;
  return b;
}

double LatticeBasis::cell_area() const { return std::abs(matrix().determinant()); }

void LatticeBasis::validate() const {
  if (!b1.allFinite() || !b2.allFinite()) throw ConfigError("lattice basis must be finite");
  const double scale = b1.norm() * b2.norm();
  if (scale == 0.0 || cell_area() <= 1e-10 * scale) {
    throw ConfigError("degenerate lattice basis (det[b1 b2] = 0)");
  }
}

Vec2 sym_eigenvalues(const Mat2& m) {
  const double a = m(0, 0);
  const double d = m(1, 1);
  const double b = 0.5 * (m(0, 1) + m(1, 0));
  const double mean = 0.5 * (a + d);
  const double rad = std::hypot(0.5 * (a - d), b);
  return {mean - rad, mean + rad};
}

Mat2 CoefficientField::base(const Vec2& s) const { return evaluate(family_, params_, s); }

Mat2 CoefficientField::at_lattice(const Vec2& s) const {
  return congruence_ * base(s) * congruence_.transpose();
}

Mat2 CoefficientField::operator()(const Vec2& y) const { return at_lattice(lattice_inverse_ * y); }

bool CoefficientField::normalized() const {
  if (normalized_flag_) return true;
  if (family_ != Family::Constant) return false;
  const Mat2 a = at_lattice(Vec2::Zero());
  return ((a + a.transpose()) * 0.5 - Mat2::Identity()).norm() <= 1e-12;
}

CoefficientField CoefficientField::pushed_forward(const Mat2& P, bool marks_normalized) const {
  if (std::abs(P.determinant()) < 1e-14) throw GeometryError("singular change of variables");
  const Mat2 pinv = P.inverse();
  CoefficientField out = *this;
  out.lattice_.b1 = pinv * lattice_.b1;
  out.lattice_.b2 = pinv * lattice_.b2;
  out.lattice_inverse_ = out.lattice_.matrix().inverse();
  out.congruence_ = pinv * congruence_;
  const double qmin = sigma_min(pinv);
  const double qmax = sigma_max(pinv);
  out.eig_lower_ = eig_lower_ * qmin * qmin;
  out.eig_upper_ = eig_upper_ * qmax * qmax;
  out.lipschitz_ = lipschitz_ * qmax * qmax * sigma_max(P);
  out.normalized_flag_ = marks_normalized;
  return out;
}

std::string CoefficientField::fingerprint() const {
  std::ostringstream os;
  os << family_name(family_);
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, " %a", v);
    os << buf;
  };
  os << " p";
  for (double v : params_) put(v);
  os << " l";
  for (double v : {lattice_.b1.x(), lattice_.b1.y(), lattice_.b2.x(), lattice_.b2.y()}) put(v);
  os << " q";
  for (int i = 0; i < 4; ++i) put(congruence_(i % 2, i / 2));
  return os.str();
}

CoefficientField build_family(const FamilySpec& spec) {
  spec.lattice.validate();
  if (!(spec.lambda_target >= kLambdaFloor && spec.lambda_target <= 1.0)) {
    throw ConfigError("lambda target must lie in [0.05, 1]");
  }
  CoefficientField field;
  field.family_ = spec.family;
  field.lattice_ = spec.lattice;
  field.lattice_inverse_ = spec.lattice.matrix().inverse();

  std::vector<double> p = canonical_params(spec);
  const double lambda = spec.lambda_target;

  // Fourier fields are certified from samples widened by the Lipschitz bound
  // times the covering radius of the sample grid; the other families have
  // exact closed-form extremes, so their samples only steer the projection.
  const LatticeBasis& l = spec.lattice;
  const double cover = 0.5 * std::max((l.b1 + l.b2).norm(), (l.b1 - l.b2).norm()) / kProjectionSide;
  auto certified = [&](const std::vector<double>& q) {
    EigenRange r = sample_range(spec.family, q, kProjectionSide);
    if (spec.family == Family::FourierGeneral) {
      const double widen = closed_form_lipschitz(spec.family, q, field.lattice_inverse_) * cover;
      r.lo -= widen;
      r.hi += widen;
    }
    return r;
  };

  // Amplitude projection: keep the mean part, shrink the oscillation until the
  // eigenvalues sit inside [lambda, 1/lambda].
  if (spec.family != Family::Constant) {
    const EigenRange mean_range = sample_range(spec.family, scale_oscillation(spec.family, p, 0.0), 1);
    if (!admissible(mean_range, lambda)) {
      throw ConfigError("mean coefficient violates ellipticity; cannot project to lambda >= " +
                        std::to_string(lambda));
    }
    if (!admissible(certified(p), lambda)) {
      double lo = 0.0;
      double hi = 1.0;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (admissible(certified(scale_oscillation(spec.family, p, mid)), lambda)) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      field.projection_factor_ = kSafety * lo;
      p = scale_oscillation(spec.family, p, field.projection_factor_);
    }
  }
  field.params_ = p;
  field.lipschitz_ = closed_form_lipschitz(spec.family, p, field.lattice_inverse_);

  switch (spec.family) {
    case Family::Constant: {
      const Vec2 ev = sym_eigenvalues(sym2(p[0], p[1], p[2]));
      field.eig_lower_ = ev(0);
      field.eig_upper_ = ev(1);
      break;
    }
    case Family::Laminate:
    case Family::SeparableScalar:
      field.eig_lower_ = p[0] - std::abs(p[1]);
      field.eig_upper_ = p[0] + std::abs(p[1]);
      break;
    case Family::RotatingAnisotropic:
      field.eig_lower_ = std::min(p[0], p[1]);
      field.eig_upper_ = std::max(p[0], p[1]);
      break;
    case Family::FourierGeneral: {
      const EigenRange r = certified(p);
      field.eig_lower_ = r.lo;
      field.eig_upper_ = r.hi;
      break;
    }
  }
  if (!(field.eig_lower_ > 0.0) || field.lambda_decl() < kLambdaFloor) {
    throw ConfigError("coefficient field cannot be certified with ellipticity lambda >= 0.05");
  }
  return field;
}

EllipticityEstimate validate_ellipticity(const CoefficientField& field, int n_samples) {
  if (n_samples < 256) throw ConfigError("validate_ellipticity needs at least 16^2 samples");
  const int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_samples))));
  EllipticityEstimate est{std::numeric_limits<double>::infinity(), 0.0, false};
  for (int j = 0; j < side; ++j) {
    for (int i = 0; i < side; ++i) {
      const Vec2 s(static_cast<double>(i) / side, static_cast<double>(j) / side);
      const Vec2 ev = sym_eigenvalues(field.at_lattice(s));
      est.lambda_est = std::min(est.lambda_est, ev(0));
      est.Lambda_est = std::max(est.Lambda_est, ev(1));
    }
  }
  est.passes = est.lambda_est >= 0.9 * field.lambda_decl();
  return est;
}

double estimate_lipschitz(const CoefficientField& field, int n_samples) {
  if (n_samples < 1024) throw ConfigError("estimate_lipschitz needs at least 32^2 samples");
  const int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_samples))));
  const Mat2 b = field.lattice().matrix();
  auto point = [&](int i, int j) {
    return Vec2(b * Vec2(static_cast<double>(i) / side, static_cast<double>(j) / side));
  };
  double m = 0.0;
  for (int j = 0; j < side; ++j) {
    for (int i = 0; i < side; ++i) {
      const Vec2 y = point(i, j);
      const Mat2 a = field(y);
      for (const auto& [di, dj] : {std::pair{1, 0}, std::pair{0, 1}, std::pair{1, 1}}) {
        const Vec2 z = point(i + di, j + dj);
        m = std::max(m, (field(z) - a).norm() / (z - y).norm());
      }
    }
  }
  return m;
}

double check_periodicity(const CoefficientField& field, const LatticeBasis& lattice,
                         int n_samples) {
  if (!((lattice.b1 - field.lattice().b1).norm() <= 1e-14 &&
        (lattice.b2 - field.lattice().b2).norm() <= 1e-14)) {
    throw ConfigError("lattice does not match the field's lattice");
  }
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> coord(-3.0, 3.0);
  double worst = 0.0;
  for (int k = 0; k < n_samples; ++k) {
    const Vec2 y(coord(rng), coord(rng));
    const Mat2 a = field(y);
    worst = std::max(worst, (field(y + lattice.b1) - a).norm());
    worst = std::max(worst, (field(y + lattice.b2) - a).norm());
  }
  return worst;
}

std::vector<FamilySpec> builtin_families() {
  auto make = [](Family f, std::vector<double> p) {
    FamilySpec s;
    s.family = f;
    s.params = std::move(p);
    return s;
  };
  return {
      make(Family::Constant, {1.5, 0.3, 0.8}),
      make(Family::Laminate, {2.0, 1.0}),
      make(Family::SeparableScalar, {2.0, 0.5}),
      make(Family::RotatingAnisotropic, {1.0, 2.0, 0.5}),
      make(Family::FourierGeneral, {2.0, 0.3, 1.5,                        //
                                    1, 0, 0.5, 0.1, 0.2, 0.0, 0.0, 0.0,   //
                                    0, 1, 0.0, 0.0, 0.0, 0.2, 0.0, 0.4,   //
                                    1, 1, 0.1, 0.1, 0.1, 0.05, 0.0, -0.05}),
  };
}

}  // namespace oscilab
